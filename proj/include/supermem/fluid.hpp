#pragma once

#include <iosfwd>
#include <vector>

#include "supermem/model.hpp"

namespace supermem {

// Limit dynamics on the truncated simplex D(d): mu-products, the averaged
// vector field u^(d), an invariance-preserving RK4 integrator, and the fixed
// point a_k in log domain together with its decay exponent and cutoff d(N).

// p_{k-1}(z) = n (z_{k-1} - z_k) z_k^{n-1}, with z_0 = 1.
double p_factor(const FluidVector& z, int n, long k);

// mu(z,k) = prod_{j<=k} z_j^n / (1 - p_{j-1}(z)); mu(z,0) = 1.  A factor
// with numerator 0 and denominator 0 counts as 1 (reachable only for n=1).
double mu_of(const FluidVector& z, int n, long k);

// u_k(x) = lambda x_{k-1}^n mu(x,k-1) - lambda x_k^n mu(x,k) - (x_k - x_{k+1})
// for k < d; u_d drops the x_{d+1} term.
std::vector<double> u_field(const FluidVector& x, double lambda, int n);

struct OdePath {
  std::vector<double> t;
  std::vector<FluidVector> x;
  double step = 0.0;
  double max_clamp = 0.0;   // largest projection applied to stay in D(d)
  double int_x1 = 0.0;      // integral of x_1 over [0, t0]
  double int_outflow = 0.0; // integral of x_d^n mu(x,d) over [0, t0]

  // Componentwise linear interpolation; s clamped to [t.front(), t.back()].
  FluidVector eval(double s) const;
};

// Fixed-step RK4 with global step-halving until two refinements agree to
// tol in sup norm over the shared grid.  After each step the state is
// clamped to [0,1] and re-projected to be non-increasing.
OdePath integrate(const FluidVector& x0, double lambda, int n, double t0,
                  double tol = 1e-10);

struct FixedPointTable {
  double lambda;
  int n;
  std::vector<double> log_a;  // natural logs, log_a[0] = 0
  std::vector<double> a;      // exp(log_a); underflows to 0 for large k
  double alpha;               // doubly exponential decay exponent
  double kappa;               // 1/(2 alpha)
  double rho;

  // Fixed point values at a given index, with a_k = 0 beyond the table.
  double a_at(long k) const;
  double log_a_at(long k) const;
  FluidVector prefix(int d) const;
};

double alpha_of(int n);
double rho_of(double lambda, int n);

// Log-domain recursion log a_{k+1} = log lambda + n log a_k + log mu(a,k),
// computed incrementally for k = 0..K.
FixedPointTable fixed_point(double lambda, int n, int K);

// Largest k with log N + log a_k > kappa log N, N given as log N.  Throws if
// even k = 1 fails ("N too small").
int cutoff_d_log(const FixedPointTable& table, double logN);
int cutoff_d(const FixedPointTable& table, double N);

// tilde a_{d+1} = a_d^n / N + rho^d a_{d+1}.
double tilde_a(const FixedPointTable& table, double N, int d);

void write_fixed_point_csv(const FixedPointTable& table, std::ostream& out);
void write_ode_csv(const OdePath& path, std::ostream& out);

}  // namespace supermem
