#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "supermem/fluid.hpp"
#include "supermem/model.hpp"
#include "supermem/rng.hpp"

namespace supermem {

// The idealized fast chain of the memory length: memory map F, sample law,
// generator, local equilibrium, coupling-time and corrector machinery.

// Smallest state of the fast chain's index set I: 1 for n = 1, else 0.
inline long fast_min_state(int n) { return n == 1 ? 1 : 0; }

// Memory length after an arrival given the sampled lengths V:
//   y+1 if y <= M-1;  y if M <= y <= P;  P if y >= P+1,
// with M = min V and P = M+1 (n = 1) or (M+1) ^ V_(2).
long F_map(long y, const std::vector<long>& V, int n);

// n independent coordinates with P(V_i >= k) = x_k, by inverse transform.
std::vector<long> sample_V(const FluidVector& x, int n, Rng& rng);

// Exact law of F(y, V(x)) as a map y' -> probability (y' = y included).
std::map<long, double> jump_distribution(const FluidVector& x, int n, long y);

struct FastGenerator {
  int n;
  double nu;       // driving rate N lambda
  long y_min;      // fast_min_state(n)
  long y_max;      // d for n >= 2, max(d,1) for n = 1
  FluidVector x;
  // rates[y - y_min][y' - y_min], off-diagonal entries only; diagonal 0.
  std::vector<std::vector<double>> rates;

  long states() const { return y_max - y_min + 1; }
};

FastGenerator generator(const FluidVector& x, const ModelParams& params);

// Equilibrium pi_x on {y_min..y_max}: solves pi G = 0, sum pi = 1.
std::vector<double> stationary(const FastGenerator& gen);

// mu(x,k) as a pi_x tail; identical formula to the fluid-side mu_of.
double mu_product(const FluidVector& x, int n, long k);

struct McStat {
  double mean = 0.0;
  double std_err = 0.0;
  long reps = 0;
  long censored = 0;  // reps that hit the event cap (failure if > 0)
};

// Monte Carlo mean coupling time of the shared-clock, shared-sample pair
// started from (y, ybar).  Caps each rep at 1e7 events.
McStat coupling_time_mc(const FluidVector& x, long y, long ybar,
                        const ModelParams& params, long reps,
                        std::uint64_t seed);

struct CorrectorEstimate {
  double value = 0.0;
  double std_err = 0.0;
  long reps = 0;
  long ref_state = 0;
  long censored = 0;
};

// chi(x,y) = E int_0^{Tc} (f(Ybar_t) - f(Y_t)) dt with ybar = min I; the
// coupled-run estimate of the anchored solution of G chi = f - fbar.
CorrectorEstimate corrector_mc(const std::function<double(long)>& f,
                               const FluidVector& x, long y,
                               const ModelParams& params, long reps,
                               std::uint64_t seed);

// Linear-solve corrector: G chi = f - fbar with chi(min I) = 0.  Returns
// chi over the generator's state range.  Throws if the residual exceeds
// 1e-10 (signals an inconsistent fbar or rate table).
std::vector<double> corrector_exact(const std::vector<double>& f,
                                    const FastGenerator& gen);

// b_k(x,y) = lambda x_{k-1}^n 1{y>=k-1} - lambda x_k^n 1{y>=k} - (x_k - x_{k+1}).
std::vector<double> drift_b(const FluidVector& x, long y, double lambda, int n);

// pi_x-average of drift_b; closed form equals u_field.
std::vector<double> drift_bar_b(const FluidVector& x, double lambda, int n);

struct TvResult {
  double exact;  // total variation between the product sample laws
  double bound;  // 2 n sum_k |x_k - x'_k|
};

// Exact TV by product-measure enumeration over {0..d}^n; throws if the
// 2n-sum bound is violated (it never should be).
TvResult tv_bound(const FluidVector& x, const FluidVector& xp, int n);

}  // namespace supermem
