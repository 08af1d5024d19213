#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

#include "supermem/model.hpp"
#include "supermem/rng.hpp"

namespace supermem {

// One tagged sample slot: the memory queue, or a non-memory queue identified
// by (len, idx) with idx < count of non-memory queues of that length.  The
// index resolves identity collisions between slots exactly.
struct Draw {
  bool memory = false;
  long len = 0;
  long idx = 0;
};

struct EventRecord {
  double time = 0.0;
  enum Kind { Arrival, Departure } kind = Arrival;
  long joined_len = 0;  // pre-arrival length of the joined queue (arrivals)
  long mem_len_after = 0;
};

struct GridSample {
  double t = 0.0;
  std::vector<double> z;      // tail prefix z_1..z_{d_record}
  long mem_len = 0;
  std::vector<long> arrivals; // A_1..A_{d_record} so far
};

struct Trajectory {
  ModelParams params;
  std::uint64_t seed = 0;
  std::vector<EventRecord> events;
  std::vector<GridSample> samples;
  MicroState final_state;
  long total_arrivals = 0;
  long total_departures = 0;
  long max_len_seen = 0;
  // exact running suprema of the tail counts N z_k, k = 1..d_record
  std::vector<long> sup_count_ge;
};

struct SimOptions {
  double horizon = 1.0;
  int d_record = 4;
  double grid_per_unit = 200.0;
  bool record_events = true;
};

std::vector<Draw> draw_arrival_sample(const MicroState& s,
                                      const ModelParams& params, Rng& rng);

// Applies one arrival: the customer joins a uniformly chosen minimum-length
// instance among {memory} + draws, then the memory pointer moves to a
// shortest queue among {previous memory, sampled queues} at post-arrival
// lengths, previous memory kept on ties.  Returns the joined queue's
// pre-arrival length.
long apply_arrival(MicroState& s, const std::vector<Draw>& draws, Rng& rng);

// A uniformly chosen busy queue loses one customer; returns its pre-departure
// length.  Throws if all queues are empty.
long apply_departure(MicroState& s, Rng& rng);

Trajectory simulate(const ModelParams& params, const MicroState& init,
                    const SimOptions& opts, std::uint64_t seed);

void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

struct CoupledResult {
  bool ordered = true;
  long events = 0;
  double violation_time = 0.0;  // meaningful only when !ordered
};

// Both copies driven by the identical marked Poisson process of rate
// N(1+lambda); componentwise ordering is checked after every event.
CoupledResult coupled_simulate(const SortedLengths& xi,
                               const SortedLengths& xi_prime,
                               const ModelParams& params, double horizon,
                               std::uint64_t seed);

// Exact jump rates of the memory length at state s, including tie branches,
// identity collisions, and the memory-in-sample event; the memory queue's
// own departure contributes rate 1 to y -> y-1.  Off-diagonal entries only.
// Guard: (max_len + 2)^n * N <= 1e7.
std::map<long, double> exact_fast_rates(const MicroState& s,
                                        const ModelParams& params);

}  // namespace supermem
