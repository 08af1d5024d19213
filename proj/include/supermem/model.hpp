#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace supermem {

// The (lambda, n, N) triple indexing every experiment.
struct ModelParams {
  double lambda = 0.5;  // per-queue arrival intensity, in (0,1)
  int n = 1;            // sample size
  long N = 1;           // number of queues

  // Throws std::invalid_argument on a bad field.
  void validate() const;
};

// Exact simulator state: occupancy histogram plus the memory-queue length.
// hist[len] = number of queues of length exactly len; queue identities are
// exchangeable except for the memory queue.
struct MicroState {
  std::vector<long> hist;
  long mem_len = 0;

  long total_queues() const;
  long total_customers() const;
  long count_at(long len) const { return len < (long)hist.size() ? hist[len] : 0; }
  long max_len() const;
  void add_queue(long len);
  void move_queue(long from, long to);

  // All-empty system of N queues.
  static MicroState empty(long N);
  // Canonical start state: one customer in the memory queue, rest empty.
  static MicroState one_in_memory(long N);
};

// Every violated invariant of s as a valid state of an N-queue system.
std::vector<std::string> validate(const MicroState& s, long N);

// z_k = fraction of queues of length >= k, k = 1..max_len.  Stored only up
// to the largest nonempty length; indices beyond that read as 0.
using TailVector = std::vector<double>;
TailVector tail_from_hist(const MicroState& s, long N);

// A point of the truncated simplex D(d): 1 >= x_1 >= ... >= x_d >= 0, with
// the conventions x_0 = 1 and x_{d+1} = 0.
struct FluidVector {
  std::vector<double> x;

  FluidVector() = default;
  explicit FluidVector(std::vector<double> v) : x(std::move(v)) {}

  int dim() const { return (int)x.size(); }
  double at(long k) const {
    if (k <= 0) return 1.0;
    if (k > (long)x.size()) return 0.0;
    return x[k - 1];
  }
  bool in_domain(double tol = 0.0) const;
};

// Identity-resolved state for the microscopic coupling: y[0] is the memory
// queue, y[1..N-1] the rest in non-decreasing order.
struct SortedLengths {
  std::vector<long> y;

  long size() const { return (long)y.size(); }
  MicroState to_micro() const;
  // Componentwise partial order.
  static bool leq(const SortedLengths& a, const SortedLengths& b);
};

}  // namespace supermem
