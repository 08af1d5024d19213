// Acceptance checks: one verdict line per criterion.  argv[1] is the path to
// the command-line binary (used for the determinism criterion).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "supermem/bounds.hpp"
#include "supermem/fast.hpp"
#include "supermem/fluid.hpp"
#include "supermem/harness.hpp"
#include "supermem/model.hpp"
#include "supermem/simulator.hpp"

using namespace supermem;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void require(bool cond, const std::string& why) {
    if (!cond) fail(why);
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

FluidVector random_profile(std::mt19937_64& gen, int d) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> v(d);
  for (int k = 0; k < d; ++k) v[k] = uni(gen);
  std::sort(v.rbegin(), v.rend());
  return FluidVector(std::move(v));
}

// --- criterion 1: fixed point hand values -------------------------------

Verdict criterion1() {
  Verdict v;
  FixedPointTable t1 = fixed_point(0.5, 1, 10);
  v.require(std::abs(t1.a_at(1) - 0.5) <= 1e-12, "a_1");
  v.require(std::abs(t1.a_at(2) - 0.25) <= 1e-12, "a_2");
  v.require(std::abs(t1.a_at(3) - 1.0 / 24) <= 1e-12, "a_3");
  FixedPointTable t2 = fixed_point(0.5, 2, 10);
  v.require(std::abs(t2.a_at(2) - 0.0625) <= 1e-12, "n=2 a_2");
  return v;
}

// --- criterion 2: doubly exponential decay exponent ---------------------

Verdict criterion2() {
  Verdict v;
  for (int n : {1, 2})
    for (double lam : {0.3, 0.5, 0.9}) {
      FixedPointTable t = fixed_point(lam, n, 30);
      int kstar = 0;
      for (int k = 1; k <= 28; ++k)
        if (std::abs(t.log_a_at(k)) < 1e3) kstar = k;
      double ratio = t.log_a_at(kstar + 1) / t.log_a_at(kstar);
      v.require(std::abs(ratio - t.alpha) / t.alpha <= 0.02,
                "ratio off at lam=" + fmt(lam) + " n=" + fmt(n));
      double first5 = 0.0, last = 0.0;
      for (int k = 1; k <= kstar; ++k) {
        double r = std::abs(t.log_a_at(k + 1) - t.alpha * t.log_a_at(k));
        if (k <= 5) first5 = std::max(first5, r);
        last = r;
      }
      v.require(last <= 2.0 * first5,
                "residual growth at lam=" + fmt(lam) + " n=" + fmt(n));
    }
  return v;
}

// --- criterion 3: mu-product vs stationary solve ------------------------

Verdict criterion3() {
  Verdict v;
  std::mt19937_64 gen(202);
  for (int rep = 0; rep < 100; ++rep) {
    int n = 1 + rep % 3;
    int d = 1 + rep % 8;
    FluidVector x = random_profile(gen, d);
    FastGenerator g = generator(x, ModelParams{0.4, n, 50});
    auto pi = stationary(g);
    for (long k = 0; k <= d; ++k) {
      double tail = 0.0;
      if (k == 0) {
        tail = 1.0;
      } else {
        for (long y = std::max((long)k, g.y_min); y <= g.y_max; ++y)
          tail += pi[y - g.y_min];
      }
      if (std::abs(tail - mu_product(x, n, k)) > 1e-10) {
        v.fail("tail mismatch rep=" + fmt(rep) + " k=" + fmt(k));
        return v;
      }
    }
  }
  return v;
}

// --- criterion 4: corrector MC vs solve, CTB, CE ------------------------

Verdict criterion4() {
  Verdict v;
  const double lam = 0.5;
  const long N = 300;
  const double tau = 4.0 / (N * lam * (1.0 - lam) * (1.0 - lam));
  const double nu = N * lam;
  std::mt19937_64 gen(404);
  int points = 0;
  for (int n : {1, 2, 3}) {
    FixedPointTable t = fixed_point(lam, n, 10);
    FluidVector base = t.prefix(3);
    std::vector<double> pert(3);
    for (int k = 0; k < 3; ++k) pert[k] = std::min(1.0, base.at(k + 1) * 1.15);
    std::sort(pert.rbegin(), pert.rend());
    FluidVector xp(pert);
    for (const FluidVector& x : {base, xp}) {
      ModelParams params{lam, n, N};
      FastGenerator g = generator(x, params);
      for (int j : {1, 2}) {
        auto fy = [&](long y) { return drift_b(x, y, lam, n)[j - 1]; };
        std::vector<double> f(g.states());
        double fnorm = 0.0;
        for (long y = g.y_min; y <= g.y_max; ++y) {
          f[y - g.y_min] = fy(y);
          fnorm = std::max(fnorm, std::abs(f[y - g.y_min]));
        }
        auto chi = corrector_exact(f, g);
        double chinorm = 0.0;
        for (double c : chi) chinorm = std::max(chinorm, std::abs(c));
        v.require(chinorm <= 2.0 * tau * fnorm + 1e-12,
                  "CTB violated n=" + fmt(n) + " j=" + fmt(j));
        for (long y : {g.y_min + 1, g.y_min + 2}) {
          if (points >= 20) continue;
          auto mc = corrector_mc(
              [&](long z) { return fy(std::min(z, g.y_max)); }, x, y, params,
              10000, 555 + points);
          v.require(mc.censored == 0, "censored MC runs");
          v.require(std::abs(mc.value - chi[y - g.y_min]) <=
                        3.0 * mc.std_err + 1e-9,
                    "MC/solve mismatch n=" + fmt(n) + " j=" + fmt(j) +
                        " y=" + fmt(y));
          ++points;
        }
      }
    }
    // CE continuity between the two profiles, f = first drift component
    {
      FastGenerator ga = generator(base, ModelParams{lam, n, N});
      FastGenerator gb = generator(xp, ModelParams{lam, n, N});
      std::vector<double> fa(ga.states()), fb(gb.states());
      double fnorm = 0.0, fdiff = 0.0;
      for (long y = ga.y_min; y <= ga.y_max; ++y) {
        fa[y - ga.y_min] = drift_b(base, y, lam, n)[0];
        fb[y - gb.y_min] = drift_b(xp, y, lam, n)[0];
        fnorm = std::max(fnorm, std::abs(fa[y - ga.y_min]));
        fdiff = std::max(fdiff,
                         std::abs(fa[y - ga.y_min] - fb[y - gb.y_min]));
      }
      auto ca = corrector_exact(fa, ga);
      auto cb = corrector_exact(fb, gb);
      double lhs = 0.0;
      for (size_t i = 0; i < ca.size(); ++i)
        lhs = std::max(lhs, std::abs(ca[i] - cb[i]));
      double tv = tv_bound(base, xp, n).exact;
      double rhs = 2.0 * tau * fdiff + 2.0 * nu * tau * tau * fnorm * tv;
      v.require(lhs <= rhs + 1e-12, "CE violated n=" + fmt(n));
    }
  }
  v.require(points == 20, "grid size " + fmt(points));
  return v;
}

// --- criterion 5: mean coupling time below tau --------------------------

Verdict criterion5() {
  Verdict v;
  for (double lam : {0.3, 0.5, 0.7})
    for (long N : {1000L, 10000L})
      for (int n : {1, 2}) {
        FixedPointTable t = fixed_point(lam, n, 10);
        FluidVector x = t.prefix(3);
        ModelParams params{lam, n, N};
        double tau = 4.0 / (N * lam * (1.0 - lam) * (1.0 - lam));
        long ymin = fast_min_state(n);
        for (long y = ymin; y <= 3; ++y)
          for (long yb = ymin; yb <= 3; ++yb) {
            auto est = coupling_time_mc(x, y, yb, params, 1500,
                                        17 + 31 * y + 7 * yb + N + (long)(10 * lam));
            if (est.censored != 0 ||
                est.mean > tau + 3.0 * est.std_err) {
              v.fail("lam=" + fmt(lam) + " N=" + fmt((double)N) +
                     " n=" + fmt(n) + " y=" + fmt(y) + " yb=" + fmt(yb));
              return v;
            }
          }
      }
  return v;
}

// --- criterion 6: averaged drift equals the fluid field -----------------

Verdict criterion6() {
  Verdict v;
  std::mt19937_64 gen(606);
  for (int rep = 0; rep < 100; ++rep) {
    int n = 1 + rep % 3;
    int d = 1 + rep % 6;
    FluidVector x = random_profile(gen, d);
    auto bar = drift_bar_b(x, 0.5, n);
    auto u = u_field(x, 0.5, n);
    for (int k = 0; k < d; ++k)
      if (std::abs(bar[k] - u[k]) > 1e-10) {
        v.fail("mismatch rep=" + fmt(rep) + " k=" + fmt(k + 1));
        return v;
      }
  }
  return v;
}

// --- criterion 7: monotone coupling never breaks the order --------------

Verdict criterion7() {
  Verdict v;
  const long N = 50;
  std::mt19937_64 gen(707);
  std::uniform_int_distribution<long> lvl(0, 3);
  for (int n : {1, 2}) {
    long runs = 0;
    std::uint64_t seed = 9000 + 100 * n;
    while (runs < 1000) {
      SortedLengths lo, hi;
      lo.y.resize(N);
      hi.y.resize(N);
      for (long i = 0; i < N; ++i) {
        lo.y[i] = lvl(gen);
        hi.y[i] = lo.y[i] + lvl(gen) % 3;
      }
      std::sort(lo.y.begin() + 1, lo.y.end());
      std::sort(hi.y.begin() + 1, hi.y.end());
      if (lo.y[0] > hi.y[0]) std::swap(lo.y[0], hi.y[0]);
      if (!SortedLengths::leq(lo, hi)) continue;
      auto res = coupled_simulate(lo, hi, ModelParams{0.5, n, N}, 5.0,
                                  seed + runs);
      if (!res.ordered) {
        v.fail("order broken n=" + fmt(n) + " run=" + fmt((double)runs) +
               " t=" + fmt(res.violation_time));
        return v;
      }
      ++runs;
    }
  }
  return v;
}

// --- criterion 8: limit dynamics properties -----------------------------

Verdict criterion8() {
  Verdict v;
  const double t0 = 10.0, tol = 1e-9;
  for (int n : {1, 2}) {
    double lam = 0.5;
    FixedPointTable t = fixed_point(lam, n, 16);
    int d = 10;
    OdePath p = integrate(FluidVector(std::vector<double>(d, 0.0)), lam, n, t0, tol);
    v.require(p.max_clamp < tol, "clamp " + fmt(p.max_clamp) + " n=" + fmt(n));
    for (const auto& x : p.x)
      for (int k = 1; k <= d; ++k)
        if (x.at(k) > t.a_at(k) + 1e-9) {
          v.fail("domination n=" + fmt(n));
          break;
        }
    OdePath q = integrate(FluidVector(std::vector<double>(d - 1, 0.0)), lam, n, t0, tol);
    for (double s : {1.0, 2.5, 5.0, 10.0}) {
      FluidVector a = q.eval(s), b = p.eval(s);
      for (int k = 1; k <= d - 1; ++k)
        if (a.at(k) > b.at(k) + 1e-7) {
          v.fail("truncation order n=" + fmt(n));
          break;
        }
    }
    double mass = 0.0;
    for (int k = 1; k <= d; ++k) mass += p.x.back().at(k);
    double residual = mass - lam * t0 + p.int_x1 + lam * p.int_outflow;
    v.require(std::abs(residual) < 1e-8,
              "mass residual " + fmt(residual) + " n=" + fmt(n));
    for (int j = 1; j <= 3; ++j) {
      std::vector<double> w(d);
      for (int k = 1; k <= d; ++k) w[k - 1] = t.a_at(std::max(0L, (long)k - j));
      FluidVector aj(w);
      auto u = u_field(aj, lam, n);
      for (int k = 1; k <= d - 1; ++k) {
        double corr = (k == j) ? aj.at(j) - aj.at(j + 1) : 0.0;
        if (std::abs(u[k - 1] + corr) >= 1e-12) {
          v.fail("shifted fixed point j=" + fmt(j) + " k=" + fmt(k) +
                 " n=" + fmt(n));
          break;
        }
      }
    }
  }
  return v;
}

// --- criteria 9 and 10 share one experiment -----------------------------

ExperimentResult& convergence_experiment() {
  static ExperimentResult res = [] {
    ExperimentConfig cfg;
    cfg.lambda = 0.7;
    cfg.n = 2;
    cfg.N_list = {100, 1000, 10000};
    cfg.t0 = 5.0;
    cfg.replicas = 20;
    cfg.seed = 99;
    cfg.threads = 4;
    return run_experiment(cfg);
  }();
  return res;
}

Verdict criterion9() {
  Verdict v;
  const ExperimentResult& res = convergence_experiment();
  v.require(res.slope >= -0.65 && res.slope <= -0.35,
            "slope " + fmt(res.slope));
  for (size_t i = 1; i < res.per_N.size(); ++i)
    v.require(res.per_N[i].exceed_freq <= res.per_N[i - 1].exceed_freq + 1e-12,
              "exceedance not monotone");
  v.require(res.per_N.back().exceed_freq <= 0.2,
            "exceedance " + fmt(res.per_N.back().exceed_freq));
  return v;
}

Verdict criterion10() {
  Verdict v;
  const ExperimentResult& res = convergence_experiment();
  v.require(res.per_N.back().mrc_freq >= 0.95,
            "mrc " + fmt(res.per_N.back().mrc_freq));
  for (const auto& s : res.per_N)
    for (size_t j = 1; j < s.mrb_freq.size(); ++j)
      v.require(s.mrb_freq[j] <= s.mrb_freq[j - 1] + 1e-12,
                "mrb not monotone in R at N=" + fmt((double)s.N));
  double cmin = 1e300, cmax = 0.0;
  for (const auto& s : res.per_N) {
    // the fit is exact by construction; the substance is C's stability
    double bound = s.fitted_C * std::exp(s.fitted_C * 5.0) * s.N * s.tilde_a;
    v.require(s.mean_A_d <= bound * (1.0 + 1e-9) + 1e-9,
              "A_d above fit at N=" + fmt((double)s.N));
    if (s.mean_A_d > 0) {
      cmin = std::min(cmin, s.fitted_C);
      cmax = std::max(cmax, s.fitted_C);
    }
  }
  v.require(cmax > 0.0 && cmax / cmin <= 5.0,
            "fitted C unstable [" + fmt(cmin) + ", " + fmt(cmax) + "]");
  return v;
}

// --- criterion 11: exact rates vs idealized rates -----------------------

Verdict criterion11() {
  Verdict v;
  const long N = 10;
  const double lam = 0.5;
  for (int n : {1, 2}) {
    ModelParams params{lam, n, N};
    FixedPointTable t = fixed_point(lam, n, 10);
    int d = cutoff_d(t, (double)N);
    Rng rng(1100 + n);
    MicroState s = MicroState::one_in_memory(N);
    long checked = 0, steps = 0;
    while (checked < 1000 && steps < 200000) {
      ++steps;
      long busy = 0;
      for (size_t l = 1; l < s.hist.size(); ++l) busy += s.hist[l];
      double pa = (N * lam) / (N * lam + busy);
      if (rng.uniform() < pa) {
        auto draws = draw_arrival_sample(s, params, rng);
        apply_arrival(s, draws, rng);
      } else if (busy > 0) {
        apply_departure(s, rng);
      }
      TailVector z = tail_from_hist(s, N);
      // keep only states whose whole tail sits in the localization set:
      // z_1 <= (1+lambda)/2 and z_k <= 2 a_k at every level
      bool in_set = z.empty() || z[0] <= (1.0 + lam) / 2.0;
      for (size_t k = 0; k < z.size() && in_set; ++k)
        if (z[k] > 2.0 * t.a_at(k + 1) + 1e-12) in_set = false;
      if (!in_set) continue;
      std::vector<double> xv(d);
      for (int k = 0; k < d; ++k) xv[k] = (k < (int)z.size()) ? z[k] : 0.0;
      FluidVector x(xv);
      auto gamma = exact_fast_rates(s, params);
      auto dist = jump_distribution(x, n, s.mem_len);
      std::map<long, double> g;
      for (auto [yp, p] : dist)
        if (yp != s.mem_len) g[yp] = N * lam * p;
      double total = 0.0;
      for (auto [yp, r] : gamma)
        total += std::abs(r - (g.count(yp) ? g[yp] : 0.0));
      for (auto [yp, r] : g)
        if (!gamma.count(yp)) total += r;
      double zd1 = (d < (int)z.size()) ? z[d] : 0.0;
      double bound = 1.0 + lam * n + N * lam * n * zd1;
      if (total > bound + 1e-9) {
        v.fail("n=" + fmt(n) + " state " + fmt((double)checked) + ": sum " +
               fmt(total) + " > " + fmt(bound));
        return v;
      }
      ++checked;
    }
    v.require(checked == 1000, "only " + fmt((double)checked) + " states");
  }
  return v;
}

// --- criterion 12: empirical martingale inequality ----------------------

Verdict criterion12() {
  Verdict v;
  const long reps = 100000;
  std::uint64_t seed = 1200;
  // coarse chain: unit rates, unit jumps of phi
  BirthDeathSpec coarse;
  coarse.birth.assign(11, 1.0);
  coarse.death.assign(11, 1.0);
  for (int i = 0; i <= 10; ++i) coarse.phi.push_back((double)i);
  coarse.x0 = 5;
  coarse.horizon = 1.0;
  // diffusive chain: fast small jumps
  BirthDeathSpec fine;
  fine.birth.assign(41, 50.0);
  fine.death.assign(41, 50.0);
  for (int i = 0; i <= 40; ++i) fine.phi.push_back(0.1 * i);
  fine.x0 = 20;
  fine.horizon = 1.0;

  auto run = [&](const BirthDeathSpec& spec, double delta, double eps) {
    EmiCheck chk = emi_empirical(spec, delta, eps, reps, seed++);
    if (chk.wilson_upper > chk.bound) {
      v.fail("delta=" + fmt(delta) + " eps=" + fmt(eps) + ": upper " +
             fmt(chk.wilson_upper) + " > bound " + fmt(chk.bound));
    }
  };
  for (double delta : {0.8, 1.2, 2.0})
    for (double eps : {2.5, 4.0, 8.0}) run(coarse, delta, eps);
  for (double delta : {0.8, 1.2, 2.0})
    for (double eps : {1.2, 2.0, 4.0}) run(fine, delta, eps);
  return v;
}

// --- criterion 13: finite dyadic threshold ------------------------------

Verdict criterion13() {
  Verdict v;
  auto start = std::chrono::steady_clock::now();
  auto j0 = scan_N0(0.5, 1, 1.0, 4.0, 8, 2048);
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  v.require(j0.has_value(), "no threshold on the grid");
  v.require(secs < 5.0, "too slow: " + fmt(secs) + "s");
  if (j0) {
    FixedPointTable table = fixed_point(0.5, 1, 60);
    double logN = *j0 * std::log(2.0);
    RegularityConstants c = constants_for(0.5, 1, logN, 1.0, table, 4.0);
    HypothesisReport r = check_hypotheses(c, table, default_log_eps(logN),
                                          -logN - 0.5 * std::log(0.5));
    v.require(r.flet_ok, "hypotheses fail at the threshold");
    v.require(r.exponent_refined >= logN && r.exponent_qv >= logN,
              "exponents below log N at the threshold");
  }
  return v;
}

// --- criterion 14: byte-identical re-runs through the CLI ---------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict criterion14(const std::string& cli) {
  Verdict v;
  namespace fs = std::filesystem;
  fs::path base = fs::temp_directory_path() / "supermem_accept";
  fs::remove_all(base);
  fs::create_directories(base);
  fs::path cfg = base / "cfg.txt";
  {
    std::ofstream out(cfg);
    out << "lambda = 0.6\nn = 2\nN_list = 100, 200\nt0 = 0.5\n"
        << "replicas = 3\nseed = 77\n";
  }
  const char* cmds[] = {"fixed-point", "ode",  "simulate", "corrector",
                        "converge",    "tails"};
  for (const char* cmd : cmds) {
    fs::path da = base / (std::string(cmd) + "_a");
    fs::path db = base / (std::string(cmd) + "_b");
    for (const fs::path& dir : {da, db}) {
      std::string line = "\"" + cli + "\" --config \"" + cfg.string() +
                         "\" --out \"" + dir.string() + "\" " + cmd +
                         " > /dev/null 2>&1";
      if (std::system(line.c_str()) != 0) {
        v.fail(std::string(cmd) + " failed");
        return v;
      }
    }
    std::vector<fs::path> fa;
    for (const auto& e : fs::directory_iterator(da)) fa.push_back(e.path());
    std::sort(fa.begin(), fa.end());
    v.require(!fa.empty(), std::string(cmd) + " wrote nothing");
    for (const auto& pa : fa) {
      fs::path pb = db / pa.filename();
      if (!fs::exists(pb) || slurp(pa) != slurp(pb)) {
        v.fail(std::string(cmd) + ": " + pa.filename().string() + " differs");
        break;
      }
    }
  }
  fs::remove_all(base);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <cli-binary>\n");
    return 2;
  }
  std::string cli = argv[1];
  std::vector<std::pair<int, std::function<Verdict()>>> items = {
      {1, criterion1},
      {2, criterion2},
      {3, criterion3},
      {4, criterion4},
      {5, criterion5},
      {6, criterion6},
      {7, criterion7},
      {8, criterion8},
      {9, criterion9},
      {10, criterion10},
      {11, criterion11},
      {12, criterion12},
      {13, criterion13},
      {14, [&cli] { return criterion14(cli); }},
  };
  bool all_ok = true;
  for (auto& [num, fn] : items) {
    auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    if (v.ok) {
      std::printf("criterion %d: PASS (%.1fs)\n", num, secs);
    } else {
      std::printf("criterion %d: FAIL (%.1fs) %s\n", num, secs,
                  v.detail.c_str());
      all_ok = false;
    }
    std::fflush(stdout);
  }
  return all_ok ? 0 : 1;
}
