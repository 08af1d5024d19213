#include "supermem/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include "supermem/rng.hpp"

namespace supermem {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

}  // namespace

RegularityConstants constants_for(double lambda, int n, double logN, double t0,
                                  const FixedPointTable& table, double C_cfg) {
  if (t0 <= 0.0) throw std::invalid_argument("t0 must be > 0");
  if (C_cfg <= 0.0) throw std::invalid_argument("C_cfg must be > 0");
  RegularityConstants c;
  c.lambda = lambda;
  c.n = n;
  c.logN = logN;
  c.t0 = t0;
  c.C_cfg = C_cfg;
  c.d = cutoff_d_log(table, logN);

  double la_d = table.log_a_at(c.d);
  double inv_alpha = 1.0 / table.alpha;
  double logC = std::log(C_cfg);

  c.log_Lambda = logN + std::log1p(lambda);
  c.log_B = n * std::log(2.0) + (-0.5 + n * inv_alpha) * la_d;
  c.log_tau =
      std::log(4.0) - logN - std::log(lambda) - 2.0 * std::log1p(-lambda);
  c.log_J = -logN - 0.5 * la_d;
  c.log_J1b = logC - logN + (-0.5 + (n - 1) * inv_alpha) * la_d;
  c.log_Jmu = std::log(2.0 * n) - logN;
  c.K = C_cfg;
  c.log_Jbar = lse(c.log_J, std::log(4.0) + c.log_tau + c.log_B);
  c.log_A = logC - logN - (1.0 - n * inv_alpha) * la_d;
  c.log_Abar = logC + C_cfg * std::log(logN) - logN;
  c.log_nu = logN + std::log(lambda);
  c.ordering_ok = c.log_Abar <= c.log_A &&
                  c.log_A <= c.log_Lambda + 2.0 * c.log_Jbar;
  return c;
}

double default_log_eps(double logN) {
  double loglog = std::log(logN);
  return 0.5 * (loglog * loglog - logN);  // log sqrt(phi(N)/N)
}

namespace {

// Cached per-depth sup over the grid of each coordinate of the limit path
// from the zero start; the path itself does not depend on N.
struct TubeData {
  std::vector<double> x_sup;  // sup_t x_k(t), k = 1..depth
  bool dominated = true;      // x_k(t) <= a_k held numerically
};

const TubeData& tube_data(double lambda, int n, int depth, double t0,
                          const FixedPointTable& table) {
  static std::map<std::tuple<double, int, int, double>, TubeData> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto key = std::make_tuple(lambda, n, depth, t0);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  TubeData td;
  td.x_sup.assign(depth, 0.0);
  OdePath path =
      integrate(FluidVector(std::vector<double>(depth, 0.0)), lambda, n, t0, 1e-9);
  for (const auto& xv : path.x)
    for (int k = 1; k <= depth; ++k)
      td.x_sup[k - 1] = std::max(td.x_sup[k - 1], xv.at(k));
  for (int k = 1; k <= depth; ++k)
    if (td.x_sup[k - 1] > table.a_at(k) * (1.0 + 1e-6) + 1e-12)
      td.dominated = false;
  return cache.emplace(key, std::move(td)).first->second;
}

bool tube_condition(const RegularityConstants& c, const FixedPointTable& table,
                    double log_eps) {
  // Deepest coordinate whose fixed-point value is comfortably representable;
  // beyond it the path is dominated by a_k anyway, and the check continues
  // in log domain.
  int d_eff = 0;
  for (int k = 1; k <= c.d; ++k) {
    if (table.log_a_at(k) < std::log(1e-250)) break;
    d_eff = k;
  }
  if (d_eff == 0) return false;
  const TubeData& td = tube_data(c.lambda, c.n, d_eff, c.t0, table);
  if (!td.dominated) return false;

  double log2e = std::log(2.0) + log_eps;
  for (int k = 1; k <= c.d; ++k) {
    double la_k = table.log_a_at(k);
    double ball = log2e + 0.5 * la_k;  // log of 2 eps sqrt(a_k)
    double reach;
    if (k <= d_eff) {
      double xs = td.x_sup[k - 1];
      reach = lse(xs > 0.0 ? std::log(xs) : kNegInf, ball);
    } else {
      reach = lse(la_k, ball);  // path bounded by a_k
    }
    if (!(reach <= std::log(2.0) + la_k)) return false;
    if (k == 1 && !(reach <= std::log((1.0 + c.lambda) / 2.0))) return false;
  }
  return true;
}

}  // namespace

HypothesisReport check_hypotheses(const RegularityConstants& c,
                                  const FixedPointTable& table,
                                  double log_eps, double X0_log_dev) {
  HypothesisReport r;
  double lt0 = std::log(c.t0);
  r.log_eps = log_eps;
  r.log_delta = log_eps - c.K * c.t0 - std::log(7.0);
  r.log_dbb = r.log_delta;
  r.log_dgg = r.log_delta - std::log(2.0) - c.log_tau - c.log_B;

  r.j_le_eps = c.log_J <= log_eps;
  r.initial_dev = X0_log_dev <= r.log_delta;
  // delta(beta,b) <= delta and 2 tau B delta(gamma,g) <= delta hold with
  // equality by the choice of the two thresholds.
  r.corrector_small = std::log(2.0) + c.log_tau + c.log_B <= r.log_delta;
  r.corrector_regular =
      std::log(2.0) + c.log_Lambda + lt0 +
          lse(c.log_tau + c.log_J1b,
              c.log_nu + 2.0 * c.log_tau + c.log_B + c.log_Jmu) <=
      r.log_delta;
  r.gaussian_regime =
      r.log_delta <= c.log_Lambda + c.log_Jbar + lt0 - std::log(4.0);
  r.tube = tube_condition(c, table, log_eps);
  r.fle_ok = r.j_le_eps && r.initial_dev && r.corrector_small &&
             r.corrector_regular && r.gaussian_regime && r.tube;

  r.djbar_le_At0 =
      r.log_delta + c.log_Jbar <= c.log_A + lt0 - std::log(4.0);
  r.djbar_le_Abart0 =
      r.log_delta + c.log_Jbar <= c.log_Abar + lt0 - std::log(4.0);
  double lmax = std::max({c.log_tau - lt0, c.log_tau + r.log_dgg - lt0,
                          c.log_Lambda + c.log_nu + 2.0 * c.log_tau + c.log_Jmu});
  double mid = c.log_Abar - c.log_A - std::log(20.0);
  r.sandwich = lmax <= mid && mid <= c.log_Lambda + c.log_tau;
  r.flet_ok = r.fle_ok && c.ordering_ok && r.djbar_le_At0 &&
              r.djbar_le_Abart0 && r.sandwich;

  r.exponent_refined = std::exp(2.0 * r.log_delta - std::log(4.0) -
                                c.log_Abar - lt0);
  r.exponent_qv = std::exp(2.0 * (c.log_Abar - c.log_A) + lt0 -
                           std::log(6400.0) - c.log_Lambda - 2.0 * c.log_tau);
  return r;
}

std::optional<ProbabilityBounds> error_probability(
    const RegularityConstants& c, const HypothesisReport& r) {
  if (!r.fle_ok) return std::nullopt;
  ProbabilityBounds p;
  double lt0 = std::log(c.t0);
  double l2d = std::log(2.0 * c.d);
  auto clip = [](double log_bound, double& lin, bool& vacuous) {
    if (log_bound >= 0.0) {
      lin = 1.0;
      vacuous = true;
    } else {
      lin = std::exp(log_bound);
      vacuous = false;
    }
  };

  double E_fle = std::exp(2.0 * r.log_delta - std::log(4.0) - c.log_Lambda -
                          2.0 * c.log_Jbar - lt0);
  p.log_fle = l2d - E_fle;
  clip(p.log_fle, p.fle, p.fle_vacuous);

  if (r.djbar_le_At0) {
    double E_flea =
        std::exp(2.0 * r.log_delta - std::log(4.0) - c.log_A - lt0);
    p.log_flea = l2d - E_flea;
    clip(p.log_flea, p.flea, p.flea_vacuous);
  }
  if (r.flet_ok) {
    p.log_fleab = lse(l2d - r.exponent_refined, l2d - r.exponent_qv);
    clip(p.log_fleab, p.fleab, p.fleab_vacuous);
  }
  return p;
}

std::optional<int> scan_N0(double lambda, int n, double t0, double C_cfg,
                           int j_lo, int j_hi) {
  if (j_lo < 2 || j_hi < j_lo) throw std::invalid_argument("bad scan range");
  FixedPointTable table = fixed_point(lambda, n, 60);
  int first_ok = -1;
  for (int j = j_lo; j <= j_hi; ++j) {
    double logN = j * std::log(2.0);
    bool ok;
    try {
      RegularityConstants c = constants_for(lambda, n, logN, t0, table, C_cfg);
      double log_eps = default_log_eps(logN);
      double x0_dev = -logN - 0.5 * std::log(lambda);
      HypothesisReport r = check_hypotheses(c, table, log_eps, x0_dev);
      ok = r.flet_ok && r.exponent_refined >= logN && r.exponent_qv >= logN;
    } catch (const std::invalid_argument&) {
      ok = false;  // N too small for a cutoff depth
    }
    if (ok && first_ok < 0) first_ok = j;
    if (!ok) first_ok = -1;  // must hold for the whole tail of the grid
  }
  if (first_ok < 0) return std::nullopt;
  return first_ok;
}

double solve_theta(double delta, double eps, double J) {
  if (delta <= 0.0 || eps <= 0.0 || J < 0.0)
    throw std::invalid_argument("solve_theta: need delta, eps > 0 and J >= 0");
  double target = std::log(delta) - std::log(eps);
  if (J == 0.0) return delta / eps;
  // log theta + theta J is increasing; root lies in (0, delta/eps]
  double lo = 0.0, hi = delta / eps;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    double v = std::log(mid) + mid * J;
    (v < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double emi_bound(double delta, double eps, double J) {
  double theta = solve_theta(delta, eps, J);
  return std::exp(-delta * delta / (2.0 * eps * std::exp(theta * J)));
}

EmiCheck emi_empirical(const BirthDeathSpec& spec, double delta, double eps,
                       long reps, std::uint64_t seed) {
  long m = spec.states();
  if (m < 2 || m > 100) throw std::invalid_argument("chain must have 2..100 states");
  if ((long)spec.birth.size() != m || (long)spec.death.size() != m)
    throw std::invalid_argument("rate vectors must match the state count");
  if (spec.x0 < 0 || spec.x0 >= m) throw std::invalid_argument("bad x0");

  std::vector<double> qphi(m, 0.0), alpha(m, 0.0);
  double J = 0.0;
  for (long i = 0; i < m; ++i) {
    if (i + 1 < m && spec.birth[i] > 0.0) {
      double dphi = spec.phi[i + 1] - spec.phi[i];
      qphi[i] += spec.birth[i] * dphi;
      alpha[i] += spec.birth[i] * dphi * dphi;
      J = std::max(J, std::abs(dphi));
    }
    if (i > 0 && spec.death[i] > 0.0) {
      double dphi = spec.phi[i - 1] - spec.phi[i];
      qphi[i] += spec.death[i] * dphi;
      alpha[i] += spec.death[i] * dphi * dphi;
      J = std::max(J, std::abs(dphi));
    }
  }

  EmiCheck out;
  out.reps = reps;
  out.bound = emi_bound(delta, eps, J);
  for (long r = 0; r < reps; ++r) {
    Rng rng(replica_seed(seed, r));
    long x = spec.x0;
    double t = 0.0, M = 0.0, int_alpha = 0.0, sup_M = 0.0;
    while (true) {
      double up = (x + 1 < m) ? spec.birth[x] : 0.0;
      double down = (x > 0) ? spec.death[x] : 0.0;
      double total = up + down;
      double dt = (total > 0.0) ? rng.exponential(total)
                                : std::numeric_limits<double>::infinity();
      double hold = std::min(dt, spec.horizon - t);
      // between jumps M drifts at rate -Qphi(x); linear, so endpoints suffice
      M -= qphi[x] * hold;
      int_alpha += alpha[x] * hold;
      sup_M = std::max(sup_M, M);
      t += hold;
      if (t >= spec.horizon || total == 0.0) break;
      if (rng.uniform() < up / total) {
        M += spec.phi[x + 1] - spec.phi[x];
        ++x;
      } else {
        M += spec.phi[x - 1] - spec.phi[x];
        --x;
      }
      sup_M = std::max(sup_M, M);
    }
    if (sup_M >= delta && int_alpha <= eps) ++out.hits;
  }
  out.empirical = (double)out.hits / reps;
  double z = 3.0, nr = (double)reps, p = out.empirical;
  double center = p + z * z / (2 * nr);
  double half = z * std::sqrt(p * (1 - p) / nr + z * z / (4 * nr * nr));
  out.wilson_upper = (center + half) / (1 + z * z / nr);
  out.wilson_lower = std::max(0.0, (center - half) / (1 + z * z / nr));
  return out;
}

void write_report_text(const RegularityConstants& c, const HypothesisReport& r,
                       const std::optional<ProbabilityBounds>& p,
                       std::ostream& out) {
  auto kv = [&](const char* k, double v) { out << k << " = " << v << "\n"; };
  auto kb = [&](const char* k, bool v) {
    out << k << " = " << (v ? "true" : "false") << "\n";
  };
  kv("lambda", c.lambda);
  out << "n = " << c.n << "\n";
  kv("logN", c.logN);
  kv("t0", c.t0);
  kv("C_cfg", c.C_cfg);
  out << "d = " << c.d << "\n";
  kv("log_Lambda", c.log_Lambda);
  kv("log_B", c.log_B);
  kv("log_tau", c.log_tau);
  kv("log_J", c.log_J);
  kv("log_J1b", c.log_J1b);
  kv("log_Jmu", c.log_Jmu);
  kv("K", c.K);
  kv("log_Jbar", c.log_Jbar);
  kv("log_A", c.log_A);
  kv("log_Abar", c.log_Abar);
  kb("ordering_ok", c.ordering_ok);
  kv("log_eps", r.log_eps);
  kv("log_delta", r.log_delta);
  kv("log_delta_gamma_g", r.log_dgg);
  kb("j_le_eps", r.j_le_eps);
  kb("initial_dev", r.initial_dev);
  kb("corrector_small", r.corrector_small);
  kb("corrector_regular", r.corrector_regular);
  kb("gaussian_regime", r.gaussian_regime);
  kb("tube", r.tube);
  kb("fle_ok", r.fle_ok);
  kb("djbar_le_At0", r.djbar_le_At0);
  kb("djbar_le_Abart0", r.djbar_le_Abart0);
  kb("sandwich", r.sandwich);
  kb("flet_ok", r.flet_ok);
  kv("exponent_refined", r.exponent_refined);
  kv("exponent_qv", r.exponent_qv);
  if (p) {
    kv("bound_fle", p->fle);
    kb("bound_fle_vacuous", p->fle_vacuous);
    kv("bound_flea", p->flea);
    kb("bound_flea_vacuous", p->flea_vacuous);
    kv("bound_fleab", p->fleab);
    kb("bound_fleab_vacuous", p->fleab_vacuous);
    kv("log_bound_fleab", p->log_fleab);
  } else {
    out << "bounds = refused (hypotheses unsatisfied)\n";
  }
}

}  // namespace supermem
