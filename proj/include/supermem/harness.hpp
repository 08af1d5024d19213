#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "supermem/fluid.hpp"
#include "supermem/model.hpp"

namespace supermem {

// Experiment orchestration: config ingestion, deterministic replica fan-out,
// the deviation statistic D* against the limit path, tail-event frequencies,
// and CSV/JSON emission.

struct ExperimentConfig {
  double lambda = 0.5;
  int n = 1;
  std::vector<long> N_list;
  double t0 = 1.0;
  long replicas = 20;
  std::uint64_t seed = 1;
  std::optional<int> d_override;
  double tol = 1e-10;
  std::string phi = "loglog2";  // eps = sqrt(phi(N)/N), phi = exp((loglogN)^2)
  std::string out_dir = "out";
  std::vector<double> R_list = {2, 5, 10, 20};
  double C_cfg = 4.0;
  int threads = 1;
  bool timing = false;  // wall_ms column; off keeps outputs byte-identical
  int kmax = 60;        // fixed-point table length

  void validate() const;  // throws std::invalid_argument naming the field
};

// Flat `key = value` lines, `#` comments; unknown keys rejected with their
// line number.  load_config additionally requires the file to exist.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

struct ReplicaResult {
  long replica = 0;
  std::uint64_t seed = 0;
  double d_star = 0.0;
  std::vector<bool> mrb;  // one flag per R in R_list
  bool mrc = false;       // Z^{d+2} stayed 0 throughout
  long A_d = 0;
  double wall_ms = 0.0;
};

struct NSummary {
  long N = 0;
  int d = 0;
  double tilde_a = 0.0;
  double eps = 0.0;        // sqrt(phi(N)/N)
  double trunc_err = 0.0;  // t0 * a_{d+1}, the depth-truncation scale
  std::vector<ReplicaResult> replicas;
  double median_D = 0.0;
  double exceed_freq = 0.0;
  std::vector<double> mrb_freq;
  double mrc_freq = 0.0;
  double mean_A_d = 0.0;
  double fitted_C = 0.0;  // least C with mean A_d <= C e^{C t0} N tilde_a
};

struct ExperimentResult {
  std::vector<NSummary> per_N;
  double slope = 0.0;  // log median D* regressed on log N
};

// Shared engine behind the converge and tails subcommands: per N, the ODE
// reference path is solved once at depth d(N) and replicas fan out with
// derived seeds.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

void emit(const ExperimentConfig& cfg, const ExperimentResult& res,
          const std::string& dir);

double median_of(std::vector<double> v);

}  // namespace supermem
