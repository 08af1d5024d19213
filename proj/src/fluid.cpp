#include "supermem/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace supermem {

double p_factor(const FluidVector& z, int n, long k) {
  double zk = z.at(k);
  double zkm = z.at(k - 1);
  return n * (zkm - zk) * std::pow(zk, n - 1);
}

double mu_of(const FluidVector& z, int n, long k) {
  double mu = 1.0;
  for (long j = 1; j <= k; ++j) {
    double num = std::pow(z.at(j), n);
    double denom = 1.0 - p_factor(z, n, j);
    if (num == 0.0 && denom == 0.0)
      continue;  // 0/0 factor counts as 1 (reachable only when n = 1)
    mu *= num / denom;
  }
  return mu;
}

std::vector<double> u_field(const FluidVector& x, double lambda, int n) {
  int d = x.dim();
  std::vector<double> u(d, 0.0);
  // inflow_k = lambda x_{k-1}^n mu(x,k-1), built incrementally.
  double mu = 1.0;
  double inflow = lambda;  // k = 1 term: lambda * 1 * mu(x,0)
  for (int k = 1; k <= d; ++k) {
    double num = std::pow(x.at(k), n);
    double denom = 1.0 - p_factor(x, n, k);
    double factor = (num == 0.0 && denom == 0.0) ? 1.0 : num / denom;
    mu *= factor;
    double outflow = lambda * std::pow(x.at(k), n) * mu;
    double xk1 = (k < d) ? x.at(k + 1) : 0.0;
    u[k - 1] = inflow - outflow - (x.at(k) - xk1);
    inflow = outflow;
  }
  return u;
}

FluidVector OdePath::eval(double s) const {
  if (t.empty()) throw std::logic_error("empty path");
  if (s <= t.front()) return x.front();
  if (s >= t.back()) return x.back();
  auto it = std::lower_bound(t.begin(), t.end(), s);
  size_t hi = it - t.begin();
  size_t lo = hi - 1;
  double w = (s - t[lo]) / (t[hi] - t[lo]);
  FluidVector out = x[lo];
  for (int k = 0; k < out.dim(); ++k)
    out.x[k] = (1.0 - w) * x[lo].x[k] + w * x[hi].x[k];
  return out;
}

namespace {

// One pass of fixed-step RK4 over [0, t0] with projection back onto D(d).
OdePath run_rk4(const FluidVector& x0, double lambda, int n, double t0,
                long steps) {
  int d = x0.dim();
  OdePath path;
  path.step = t0 / steps;
  path.t.reserve(steps + 1);
  path.x.reserve(steps + 1);
  path.t.push_back(0.0);
  path.x.push_back(x0);

  FluidVector x = x0;
  double h = path.step;
  auto outflow_of = [&](const FluidVector& v) {
    return std::pow(v.at(d), n) * mu_of(v, n, d);
  };
  for (long i = 0; i < steps; ++i) {
    std::vector<double> k1 = u_field(x, lambda, n);
    FluidVector x1 = x, x2 = x, x3 = x, x4 = x;
    for (int j = 0; j < d; ++j) x2.x[j] = x.x[j] + 0.5 * h * k1[j];
    std::vector<double> k2 = u_field(x2, lambda, n);
    for (int j = 0; j < d; ++j) x3.x[j] = x.x[j] + 0.5 * h * k2[j];
    std::vector<double> k3 = u_field(x3, lambda, n);
    for (int j = 0; j < d; ++j) x4.x[j] = x.x[j] + h * k3[j];
    std::vector<double> k4 = u_field(x4, lambda, n);
    for (int j = 0; j < d; ++j)
      x.x[j] += h / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);

    // Same RK4 stages drive the mass-balance quadratures, keeping their
    // error at the same fourth order as the path itself.
    path.int_x1 += h / 6.0 * (x1.at(1) + 2.0 * (x2.at(1) + x3.at(1)) + x4.at(1));
    path.int_outflow += h / 6.0 * (outflow_of(x1) + 2.0 * (outflow_of(x2) +
                                   outflow_of(x3)) + outflow_of(x4));

    // clamp to [0,1] and restore monotonicity
    double prev = 1.0;
    for (int j = 0; j < d; ++j) {
      double v = std::min(1.0, std::max(0.0, x.x[j]));
      v = std::min(v, prev);
      path.max_clamp = std::max(path.max_clamp, std::abs(v - x.x[j]));
      x.x[j] = v;
      prev = v;
    }
    path.t.push_back((i + 1) * h);
    path.x.push_back(x);
  }
  return path;
}

}  // namespace

OdePath integrate(const FluidVector& x0, double lambda, int n, double t0,
                  double tol) {
  if (t0 < 0.0) throw std::invalid_argument("t0 must be >= 0");
  if (!x0.in_domain(1e-12)) throw std::invalid_argument("x0 not in D(d)");
  if (t0 == 0.0) {
    OdePath path;
    path.t.push_back(0.0);
    path.x.push_back(x0);
    return path;
  }
  long steps = std::max<long>(16, (long)std::ceil(t0 / 0.05));
  OdePath coarse = run_rk4(x0, lambda, n, t0, steps);
  for (int refine = 0; refine < 24; ++refine) {
    OdePath fine = run_rk4(x0, lambda, n, t0, steps * 2);
    double diff = 0.0;
    for (size_t i = 0; i < coarse.x.size(); ++i)
      for (int j = 0; j < x0.dim(); ++j)
        diff = std::max(diff, std::abs(fine.x[2 * i].x[j] - coarse.x[i].x[j]));
    if (diff < tol) return fine;
    coarse = std::move(fine);
    steps *= 2;
  }
  throw std::runtime_error("ODE step refinement did not converge");
}

double FixedPointTable::a_at(long k) const {
  if (k <= 0) return 1.0;
  if (k >= (long)a.size()) return 0.0;
  return a[k];
}

double FixedPointTable::log_a_at(long k) const {
  if (k <= 0) return 0.0;
  if (k >= (long)log_a.size())
    throw std::out_of_range("fixed point table too short");
  return log_a[k];
}

FluidVector FixedPointTable::prefix(int d) const {
  std::vector<double> v(d);
  for (int k = 1; k <= d; ++k) v[k - 1] = a_at(k);
  return FluidVector(std::move(v));
}

double alpha_of(int n) {
  return n + 0.5 + std::sqrt((double)n * n + 0.25);
}

double rho_of(double lambda, int n) {
  if (n == 1) return 4.0 / (1.0 - lambda);
  return std::pow(2.0, n) / (1.0 - std::exp(-0.5));
}

FixedPointTable fixed_point(double lambda, int n, int K) {
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("lambda must be in (0,1)");
  FixedPointTable t;
  t.lambda = lambda;
  t.n = n;
  t.alpha = alpha_of(n);
  t.kappa = 0.5 / t.alpha;
  t.rho = rho_of(lambda, n);
  t.log_a.resize(K + 1);
  t.a.resize(K + 1);
  t.log_a[0] = 0.0;
  t.a[0] = 1.0;
  double log_mu = 0.0;  // log mu(a, k), accumulated
  double log_lambda = std::log(lambda);
  for (int k = 0; k < K; ++k) {
    t.log_a[k + 1] = log_lambda + n * t.log_a[k] + log_mu;
    t.a[k + 1] = std::exp(t.log_a[k + 1]);
    // extend log mu(a,k) -> log mu(a,k+1) using linear-domain p (tiny a_j
    // make p vanish, which is exact enough in the log recursion)
    double p = n * (t.a[k] - t.a[k + 1]) * std::pow(t.a[k + 1], n - 1);
    log_mu += n * t.log_a[k + 1] - std::log1p(-p);
  }
  return t;
}

int cutoff_d_log(const FixedPointTable& table, double logN) {
  double threshold = (table.kappa - 1.0) * logN;  // log of N^{kappa-1}
  if (!(table.log_a_at(1) > threshold))
    throw std::invalid_argument("N too small for a depth-1 cutoff");
  for (long k = 2; k < (long)table.log_a.size(); ++k)
    if (!(table.log_a[k] > threshold)) return (int)k - 1;
  throw std::logic_error("fixed point table too short for cutoff_d");
}

int cutoff_d(const FixedPointTable& table, double N) {
  return cutoff_d_log(table, std::log(N));
}

double tilde_a(const FixedPointTable& table, double N, int d) {
  return std::pow(table.a_at(d), table.n) / N +
         std::pow(table.rho, d) * table.a_at(d + 1);
}

void write_fixed_point_csv(const FixedPointTable& table, std::ostream& out) {
  out << "k,log10_a,a\n";
  char buf[64];
  for (long k = 0; k < (long)table.log_a.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", table.log_a[k] / std::log(10.0));
    out << k << ',' << buf << ',';
    if (k > 0 && table.a[k] == 0.0) {
      out << "underflow";
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", table.a[k]);
      out << buf;
    }
    out << '\n';
  }
}

void write_ode_csv(const OdePath& path, std::ostream& out) {
  int d = path.x.empty() ? 0 : path.x.front().dim();
  out << "t";
  for (int k = 1; k <= d; ++k) out << ",x" << k;
  out << '\n';
  char buf[64];
  for (size_t i = 0; i < path.t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", path.t[i]);
    out << buf;
    for (int k = 0; k < d; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", path.x[i].x[k]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace supermem
