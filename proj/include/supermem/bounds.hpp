#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "supermem/fluid.hpp"
#include "supermem/model.hpp"

namespace supermem {

// Regularity constants and hypothesis verdicts for the fluid-limit error
// theorems.  N enters only through log N: the interesting regime starts far
// beyond what a double can hold in linear domain, so every N-dependent
// quantity is kept as a natural log.

struct RegularityConstants {
  double lambda = 0.0;
  int n = 1;
  double logN = 0.0;
  double t0 = 0.0;
  double C_cfg = 4.0;  // stand-in for the anonymous C(lambda, n) constants
  int d = 0;           // cutoff depth at this N

  // natural logs of the constants themselves
  double log_Lambda = 0.0;  // N (1 + lambda)
  double log_B = 0.0;       // 2^n a_d^{-1/2 + n/alpha}
  double log_tau = 0.0;     // 4 / (N lambda (1-lambda)^2)
  double log_J = 0.0;       // N^{-1} a_d^{-1/2}
  double log_J1b = 0.0;     // C N^{-1} a_d^{-1/2 + (n-1)/alpha}
  double log_Jmu = 0.0;     // 2n / N
  double K = 0.0;           // Lipschitz constant of bar b: C_cfg
  double log_Jbar = 0.0;    // J + 4 tau B
  double log_A = 0.0;       // C / (N a_d^{1 - n/alpha})
  double log_Abar = 0.0;    // C (log N)^C / N
  double log_nu = 0.0;      // driving rate N lambda

  bool ordering_ok = false;  // Abar <= A <= Lambda Jbar^2
};

RegularityConstants constants_for(double lambda, int n, double logN, double t0,
                                  const FixedPointTable& table, double C_cfg);

// log of the default deviation scale eps = sqrt(phi(N)/N) with
// phi(N) = exp((log log N)^2).
double default_log_eps(double logN);

struct HypothesisReport {
  double log_eps = 0.0;
  double log_delta = 0.0;    // delta = eps e^{-K t0} / 7
  double log_dbb = 0.0;      // delta(beta, b) = delta
  double log_dgg = 0.0;      // delta(gamma, g) = delta / (2 tau B)

  // Hypotheses of the first-level error bound, in order.
  bool j_le_eps = false;
  bool initial_dev = false;        // ||X0 - x0|| <= delta
  bool corrector_small = false;    // 2 tau B <= delta
  bool corrector_regular = false;  // 2 Lambda t0 (tau J1(b) + nu tau^2 B J(mu)) <= delta
  bool gaussian_regime = false;    // delta <= Lambda Jbar t0 / 4
  bool tube = false;               // 2eps-ball around the limit path stays in U
  bool fle_ok = false;             // all of the above

  bool djbar_le_At0 = false;       // delta Jbar <= A t0 / 4
  bool djbar_le_Abart0 = false;    // delta Jbar <= Abar t0 / 4
  bool sandwich = false;           // max{tau, tau d(g,g), Lambda t0 nu tau^2 J(mu)}/t0
                                   //   <= Abar/(20 A) <= Lambda tau
  bool flet_ok = false;

  // exponents of the two refined error terms (log of the exponent itself
  // would lose the sign; these are the exponents E in 2d e^{-E})
  double exponent_refined = 0.0;   // delta^2 / (4 Abar t0)
  double exponent_qv = 0.0;        // (Abar/A)^2 t0 / (6400 Lambda tau^2)
};

// X0_log_dev: log of ||X0 - x0|| in the sigma-scaled norm; the canonical
// start (one customer in the memory queue, fluid start 0) has
// log((1/N)/sqrt(a_1)) = -logN - (log lambda)/2.
HypothesisReport check_hypotheses(const RegularityConstants& c,
                                  const FixedPointTable& table,
                                  double log_eps, double X0_log_dev);

struct ProbabilityBounds {
  double fle = 1.0;    // 2d exp(-delta^2 / (4 Lambda Jbar^2 t0)), clipped
  double flea = 1.0;   // 2d exp(-delta^2 / (4 A t0)), clipped
  double fleab = 1.0;  // refined two-term bound, clipped
  double log_fle = 0.0;
  double log_flea = 0.0;
  double log_fleab = 0.0;
  bool fle_vacuous = true;
  bool flea_vacuous = true;
  bool fleab_vacuous = true;
};

// Refuses (nullopt) when the hypothesis set backing a bound is unsatisfied.
std::optional<ProbabilityBounds> error_probability(
    const RegularityConstants& c, const HypothesisReport& r);

// Least exponent j on the dyadic grid N = 2^j, j in [j_lo, j_hi], such that
// for every grid point >= j all FLE/FLET hypotheses hold and both refined
// exponents exceed log N.  Returns nullopt if no such point exists on the
// grid.  ODE tube work is cached per depth d internally.
std::optional<int> scan_N0(double lambda, int n, double t0, double C_cfg,
                           int j_lo, int j_hi);

// theta solving theta e^{theta J} = delta/eps, by bisection on [0, delta/eps].
double solve_theta(double delta, double eps, double J);

// exp(-delta^2 / (2 eps e^{theta J})).
double emi_bound(double delta, double eps, double J);

// Small birth-death chain for the empirical martingale-inequality check:
// states 0..m with birth rates birth[i] (i < m) and death rates death[i]
// (i >= 1); phi is a function on states.
struct BirthDeathSpec {
  std::vector<double> birth;
  std::vector<double> death;
  std::vector<double> phi;
  long x0 = 0;
  double horizon = 1.0;

  long states() const { return (long)phi.size(); }
};

struct EmiCheck {
  double empirical = 0.0;     // frequency of {sup M >= delta, int alpha <= eps}
  double wilson_lower = 0.0;  // one-sided Wilson lower limit at z = 3; the
                              // inequality counts as violated only when even
                              // this limit exceeds the bound
  double wilson_upper = 0.0;
  double bound = 0.0;         // martingale-inequality bound, J = max jump of phi
  long hits = 0;
  long reps = 0;
};

EmiCheck emi_empirical(const BirthDeathSpec& spec, double delta, double eps,
                       long reps, std::uint64_t seed);

void write_report_text(const RegularityConstants& c, const HypothesisReport& r,
                       const std::optional<ProbabilityBounds>& p,
                       std::ostream& out);

}  // namespace supermem
