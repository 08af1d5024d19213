#include "supermem/fast.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace supermem {

namespace {

constexpr long kEventCap = 10'000'000;

long f_branch(long y, long m, long p) {
  if (y <= m - 1) return y + 1;
  if (y <= p) return y;
  return p;
}

}  // namespace

long F_map(long y, const std::vector<long>& V, int n) {
  if ((int)V.size() != n) throw std::invalid_argument("V must have n entries");
  std::vector<long> s(V);
  std::sort(s.begin(), s.end());
  long m = s[0];
  long p = (n == 1) ? m + 1 : std::min(m + 1, s[1]);
  return f_branch(y, m, p);
}

std::vector<long> sample_V(const FluidVector& x, int n, Rng& rng) {
  std::vector<long> v(n, 0);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    long k = 0;
    while (u < x.at(k + 1)) ++k;
    v[i] = k;
  }
  return v;
}

std::map<long, double> jump_distribution(const FluidVector& x, int n, long y) {
  std::map<long, double> dist;
  long d = x.dim();
  if (n == 1) {
    for (long m = 0; m <= d; ++m) {
      double pm = x.at(m) - x.at(m + 1);
      if (pm <= 0.0) continue;
      dist[f_branch(y, m, m + 1)] += pm;
    }
    return dist;
  }
  // Joint cdf of (M, V_(2)): for j <= k the event {M >= j, V_(2) >= k}
  // splits into "all >= k" and "exactly one in [j,k), rest >= k".
  auto G = [&](long j, long k) {
    double xj = x.at(j), xk = x.at(k);
    if (j > k) return std::pow(xj, n);
    return std::pow(xk, n) + n * (xj - xk) * std::pow(xk, n - 1);
  };
  for (long m = 0; m <= d; ++m) {
    for (long s = m; s <= d; ++s) {
      double pmf = G(m, s) - G(m + 1, s) - G(m, s + 1) + G(m + 1, s + 1);
      if (pmf < 0.0) {
        if (pmf < -1e-12) throw std::logic_error("negative (M,V2) mass");
        pmf = 0.0;
      }
      if (pmf == 0.0) continue;
      dist[f_branch(y, m, std::min(m + 1, s))] += pmf;
    }
  }
  return dist;
}

FastGenerator generator(const FluidVector& x, const ModelParams& params) {
  FastGenerator gen;
  gen.n = params.n;
  gen.nu = (double)params.N * params.lambda;
  gen.y_min = fast_min_state(params.n);
  gen.y_max = std::max<long>(x.dim(), gen.y_min);
  gen.x = x;
  long m = gen.states();
  gen.rates.assign(m, std::vector<double>(m, 0.0));
  for (long y = gen.y_min; y <= gen.y_max; ++y) {
    for (auto [yp, prob] : jump_distribution(x, params.n, y)) {
      if (yp == y) continue;
      if (yp < gen.y_min || yp > gen.y_max)
        throw std::logic_error("fast chain left its closed class");
      gen.rates[y - gen.y_min][yp - gen.y_min] = gen.nu * prob;
    }
  }
  return gen;
}

std::vector<double> stationary(const FastGenerator& gen) {
  long m = gen.states();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  for (long i = 0; i < m; ++i) {
    double row = 0.0;
    for (long j = 0; j < m; ++j)
      if (j != i) {
        A(j, i) = gen.rates[i][j];  // transposed: columns index "from"
        row += gen.rates[i][j];
      }
    A(i, i) = -row;
  }
  // replace the last balance equation with normalization
  A.row(m - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs(m - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible())
    throw std::runtime_error("stationary: singular generator system");
  Eigen::VectorXd pi = lu.solve(rhs);
  return std::vector<double>(pi.data(), pi.data() + m);
}

double mu_product(const FluidVector& x, int n, long k) {
  return mu_of(x, n, k);
}

namespace {

struct Welford {
  long count = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double v) {
    ++count;
    double d = v - mean;
    mean += d / count;
    m2 += d * (v - mean);
  }
  double std_err() const {
    if (count < 2) return 0.0;
    return std::sqrt(m2 / (count - 1) / count);
  }
};

}  // namespace

McStat coupling_time_mc(const FluidVector& x, long y, long ybar,
                        const ModelParams& params, long reps,
                        std::uint64_t seed) {
  double nu = (double)params.N * params.lambda;
  McStat out;
  Welford w;
  for (long r = 0; r < reps; ++r) {
    Rng rng(replica_seed(seed, r));
    long z = y, zb = ybar;
    double t = 0.0;
    long steps = 0;
    while (z != zb && steps < kEventCap) {
      t += rng.exponential(nu);
      auto v = sample_V(x, params.n, rng);
      z = F_map(z, v, params.n);
      zb = F_map(zb, v, params.n);
      ++steps;
    }
    if (z != zb) ++out.censored;
    w.add(t);
  }
  out.mean = w.mean;
  out.std_err = w.std_err();
  out.reps = reps;
  return out;
}

CorrectorEstimate corrector_mc(const std::function<double(long)>& f,
                               const FluidVector& x, long y,
                               const ModelParams& params, long reps,
                               std::uint64_t seed) {
  double nu = (double)params.N * params.lambda;
  long ybar = fast_min_state(params.n);
  CorrectorEstimate out;
  out.ref_state = ybar;
  Welford w;
  for (long r = 0; r < reps; ++r) {
    Rng rng(replica_seed(seed, r));
    long z = y, zb = ybar;
    double acc = 0.0;
    long steps = 0;
    while (z != zb && steps < kEventCap) {
      double dt = rng.exponential(nu);
      acc += (f(zb) - f(z)) * dt;
      auto v = sample_V(x, params.n, rng);
      z = F_map(z, v, params.n);
      zb = F_map(zb, v, params.n);
      ++steps;
    }
    if (z != zb) ++out.censored;
    w.add(acc);
  }
  out.value = w.mean;
  out.std_err = w.std_err();
  out.reps = reps;
  return out;
}

std::vector<double> corrector_exact(const std::vector<double>& f,
                                    const FastGenerator& gen) {
  long m = gen.states();
  if ((long)f.size() != m)
    throw std::invalid_argument("corrector_exact: f size mismatch");
  auto pi = stationary(gen);
  double fbar = 0.0;
  for (long i = 0; i < m; ++i) fbar += pi[i] * f[i];

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 1, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  for (long i = 0; i < m; ++i) {
    double row = 0.0;
    for (long j = 0; j < m; ++j)
      if (j != i) {
        A(i, j) = gen.rates[i][j];
        row += gen.rates[i][j];
      }
    A(i, i) = -row;
    rhs(i) = f[i] - fbar;
  }
  A(m, 0) = 1.0;  // chi(min I) = 0
  // scale the balance rows so the residual check is rate-independent
  double scale = std::max(1.0, gen.nu);
  A.topRows(m) /= scale;
  rhs.head(m) /= scale;
  Eigen::VectorXd chi = A.colPivHouseholderQr().solve(rhs);
  double resid = (A * chi - rhs).lpNorm<Eigen::Infinity>();
  if (resid > 1e-10)
    throw std::runtime_error("corrector_exact: inconsistent system");
  return std::vector<double>(chi.data(), chi.data() + m);
}

std::vector<double> drift_b(const FluidVector& x, long y, double lambda,
                            int n) {
  int d = x.dim();
  std::vector<double> b(d);
  for (int k = 1; k <= d; ++k) {
    double in = (y >= k - 1) ? lambda * std::pow(x.at(k - 1), n) : 0.0;
    double out = (y >= k) ? lambda * std::pow(x.at(k), n) : 0.0;
    double xk1 = (k < d) ? x.at(k + 1) : 0.0;
    b[k - 1] = in - out - (x.at(k) - xk1);
  }
  return b;
}

std::vector<double> drift_bar_b(const FluidVector& x, double lambda, int n) {
  // pi_x-average of drift_b; an independent route to u_field
  ModelParams p{lambda, n, 1};
  FastGenerator gen = generator(x, p);
  auto pi = stationary(gen);
  std::vector<double> bar(x.dim(), 0.0);
  for (long y = gen.y_min; y <= gen.y_max; ++y) {
    auto b = drift_b(x, y, lambda, n);
    for (int k = 0; k < x.dim(); ++k) bar[k] += pi[y - gen.y_min] * b[k];
  }
  return bar;
}

TvResult tv_bound(const FluidVector& x, const FluidVector& xp, int n) {
  long d = std::max(x.dim(), xp.dim());
  TvResult r{0.0, 0.0};
  for (long k = 1; k <= d; ++k) r.bound += std::abs(x.at(k) - xp.at(k));
  r.bound *= 2.0 * n;

  double tuples = std::pow((double)(d + 1), n);
  if (tuples > 2e6) throw std::invalid_argument("tv_bound: support too large");
  auto pmf = [&](const FluidVector& v, long k) { return v.at(k) - v.at(k + 1); };
  std::vector<long> idx(n, 0);
  double tv = 0.0;
  while (true) {
    double p = 1.0, q = 1.0;
    for (int i = 0; i < n; ++i) {
      p *= pmf(x, idx[i]);
      q *= pmf(xp, idx[i]);
    }
    tv += std::abs(p - q);
    int i = 0;
    for (; i < n; ++i) {
      if (++idx[i] <= d) break;
      idx[i] = 0;
    }
    if (i == n) break;
  }
  r.exact = 0.5 * tv;
  if (r.exact > r.bound + 1e-12)
    throw std::logic_error("tv_bound: 2n-sum bound violated");
  return r;
}

}  // namespace supermem
