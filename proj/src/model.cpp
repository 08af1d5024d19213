#include "supermem/model.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace supermem {

void ModelParams::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("lambda must be in (0,1)");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (N < 1) throw std::invalid_argument("N must be >= 1");
}

long MicroState::total_queues() const {
  return std::accumulate(hist.begin(), hist.end(), 0L);
}

long MicroState::total_customers() const {
  long c = 0;
  for (long len = 0; len < (long)hist.size(); ++len) c += len * hist[len];
  return c;
}

long MicroState::max_len() const {
  for (long len = (long)hist.size() - 1; len >= 0; --len)
    if (hist[len] > 0) return len;
  return 0;
}

void MicroState::add_queue(long len) {
  if (len >= (long)hist.size()) hist.resize(len + 1, 0);
  ++hist[len];
}

void MicroState::move_queue(long from, long to) {
  if (from >= (long)hist.size() || hist[from] <= 0)
    throw std::logic_error("move_queue: no queue at source length");
  --hist[from];
  if (to >= (long)hist.size()) hist.resize(to + 1, 0);
  ++hist[to];
}

MicroState MicroState::empty(long N) {
  MicroState s;
  s.hist.assign(1, N);
  s.mem_len = 0;
  return s;
}

MicroState MicroState::one_in_memory(long N) {
  MicroState s;
  s.hist.assign(2, 0);
  s.hist[0] = N - 1;
  s.hist[1] = 1;
  s.mem_len = 1;
  return s;
}

std::vector<std::string> validate(const MicroState& s, long N) {
  std::vector<std::string> v;
  for (long c : s.hist)
    if (c < 0) {
      v.push_back("negative count");
      break;
    }
  if (s.total_queues() != N) v.push_back("count != N");
  if (s.mem_len < 0) v.push_back("negative memory length");
  if (s.count_at(s.mem_len) < 1) v.push_back("memory queue absent");
  return v;
}

TailVector tail_from_hist(const MicroState& s, long N) {
  long top = s.max_len();
  TailVector z(top, 0.0);
  long ge = 0;
  for (long k = top; k >= 1; --k) {
    ge += s.count_at(k);
    z[k - 1] = (double)ge / (double)N;
  }
  return z;
}

bool FluidVector::in_domain(double tol) const {
  double prev = 1.0;
  for (double v : x) {
    if (v < -tol || v > prev + tol) return false;
    prev = v;
  }
  return true;
}

MicroState SortedLengths::to_micro() const {
  MicroState s;
  for (long len : y) s.add_queue(len);
  s.mem_len = y.empty() ? 0 : y[0];
  return s;
}

bool SortedLengths::leq(const SortedLengths& a, const SortedLengths& b) {
  if (a.y.size() != b.y.size()) return false;
  for (size_t i = 0; i < a.y.size(); ++i)
    if (a.y[i] > b.y[i]) return false;
  return true;
}

}  // namespace supermem
