#include "supermem/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <stdexcept>

namespace supermem {

std::vector<Draw> draw_arrival_sample(const MicroState& s,
                                      const ModelParams& params, Rng& rng) {
  std::vector<Draw> draws(params.n);
  for (int i = 0; i < params.n; ++i) {
    long u = (long)rng.below(params.N);
    if (u == 0) {
      draws[i].memory = true;
      continue;
    }
    // u - 1 indexes the non-memory queues, grouped by length
    long r = u - 1;
    for (long len = 0;; ++len) {
      long c = s.count_at(len) - (len == s.mem_len ? 1 : 0);
      if (r < c) {
        draws[i].len = len;
        draws[i].idx = r;
        break;
      }
      r -= c;
    }
  }
  return draws;
}

long apply_arrival(MicroState& s, const std::vector<Draw>& draws, Rng& rng) {
  long y = s.mem_len;
  long mstar = y;
  for (const Draw& d : draws)
    if (!d.memory) mstar = std::min(mstar, d.len);

  // instance slots attaining the minimum: the memory itself plus draws
  long cnt = (y == mstar) ? 1 : 0;
  for (const Draw& d : draws) {
    long v = d.memory ? y : d.len;
    if (v == mstar) ++cnt;
  }
  long pick = (long)rng.below(cnt);

  bool joined_memory = false;
  long joined_idx = -1;
  if (y == mstar && pick == 0) {
    joined_memory = true;
  } else {
    long skip = pick - ((y == mstar) ? 1 : 0);
    for (const Draw& d : draws) {
      long v = d.memory ? y : d.len;
      if (v != mstar) continue;
      if (skip-- == 0) {
        joined_memory = d.memory;
        joined_idx = d.idx;
        break;
      }
    }
  }

  long joined_len;
  if (joined_memory) {
    joined_len = y;
    s.move_queue(y, y + 1);
    s.mem_len = y + 1;
  } else {
    joined_len = mstar;
    s.move_queue(mstar, mstar + 1);
  }

  // memory switch: shortest among {previous memory, sampled queues} at
  // post-arrival lengths, previous memory kept on ties
  long mem_post = s.mem_len;
  long best = mem_post;
  for (const Draw& d : draws) {
    if (d.memory) continue;  // the memory queue itself, already a candidate
    long post = d.len;
    if (!joined_memory && d.len == mstar && d.idx == joined_idx) post += 1;
    best = std::min(best, post);
  }
  if (best < mem_post) s.mem_len = best;
  return joined_len;
}

long apply_departure(MicroState& s, Rng& rng) {
  long N = s.total_queues();
  long busy = N - s.count_at(0);
  if (busy == 0) throw std::runtime_error("departure from an empty system");
  long u = (long)rng.below(busy);
  if (s.mem_len >= 1) {
    if (u == 0) {
      long len = s.mem_len;
      s.move_queue(len, len - 1);
      s.mem_len = len - 1;
      return len;
    }
    --u;
  }
  for (long len = 1;; ++len) {
    long c = s.count_at(len) - (len == s.mem_len ? 1 : 0);
    if (u < c) {
      s.move_queue(len, len - 1);
      return len;
    }
    u -= c;
  }
}

Trajectory simulate(const ModelParams& params, const MicroState& init,
                    const SimOptions& opts, std::uint64_t seed) {
  params.validate();
  if (opts.horizon < 0.0) throw std::invalid_argument("horizon must be >= 0");
  auto bad = validate(init, params.N);
  if (!bad.empty()) throw std::invalid_argument("invalid initial state: " + bad[0]);

  Trajectory traj;
  traj.params = params;
  traj.seed = seed;
  Rng rng(seed);

  MicroState s = init;
  int dr = opts.d_record;
  std::vector<long> A(dr, 0);
  std::vector<long> cnt_ge(dr, 0);
  for (int k = 1; k <= dr; ++k)
    for (long len = k; len <= s.max_len(); ++len) cnt_ge[k - 1] += s.count_at(len);
  traj.sup_count_ge = cnt_ge;
  traj.max_len_seen = s.max_len();

  double arrival_rate = (double)params.N * params.lambda;
  double grid_dt = 1.0 / opts.grid_per_unit;
  long next_grid = 0;

  auto emit_until = [&](double limit) {
    while (true) {
      double tg = next_grid * grid_dt;
      if (tg > limit + 1e-15) break;
      GridSample g;
      g.t = tg;
      g.z.resize(dr);
      for (int k = 0; k < dr; ++k) g.z[k] = (double)cnt_ge[k] / params.N;
      g.mem_len = s.mem_len;
      g.arrivals = A;
      traj.samples.push_back(std::move(g));
      ++next_grid;
    }
  };

  double t = 0.0;
  while (true) {
    long busy = params.N - s.count_at(0);
    double total = arrival_rate + busy;
    double dt = rng.exponential(total);
    double tn = t + dt;
    emit_until(std::min(tn, opts.horizon));
    if (tn > opts.horizon) break;
    t = tn;

    EventRecord ev;
    ev.time = t;
    if (rng.uniform() < arrival_rate / total) {
      auto draws = draw_arrival_sample(s, params, rng);
      long joined = apply_arrival(s, draws, rng);
      ev.kind = EventRecord::Arrival;
      ev.joined_len = joined;
      ++traj.total_arrivals;
      for (int k = 1; k <= std::min<long>(joined, dr); ++k) ++A[k - 1];
      if (joined + 1 <= dr) {
        ++cnt_ge[joined];
        traj.sup_count_ge[joined] =
            std::max(traj.sup_count_ge[joined], cnt_ge[joined]);
      }
      traj.max_len_seen = std::max(traj.max_len_seen, joined + 1);
    } else {
      long from = apply_departure(s, rng);
      ev.kind = EventRecord::Departure;
      ++traj.total_departures;
      if (from <= dr) --cnt_ge[from - 1];
    }
    ev.mem_len_after = s.mem_len;
    if (opts.record_events) traj.events.push_back(ev);
  }

  traj.final_state = s;
  return traj;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  int dr = traj.samples.empty() ? 0 : (int)traj.samples.front().z.size();
  out << "t";
  for (int k = 1; k <= dr; ++k) out << ",z" << k;
  out << ",y";
  for (int k = 1; k <= dr; ++k) out << ",A" << k;
  out << '\n';
  char buf[64];
  for (const auto& g : traj.samples) {
    std::snprintf(buf, sizeof buf, "%.17g", g.t);
    out << buf;
    for (double z : g.z) {
      std::snprintf(buf, sizeof buf, "%.17g", z);
      out << ',' << buf;
    }
    out << ',' << g.mem_len;
    for (long a : g.arrivals) out << ',' << a;
    out << '\n';
  }
}

namespace {

void depart_mark(std::vector<long>& y, long J) {
  y[J] = std::max<long>(0, y[J] - 1);
  std::sort(y.begin() + 1, y.end());
}

void arrive_mark(std::vector<long>& y, const std::vector<long>& Js) {
  std::set<long> sel{0};
  sel.insert(Js.begin(), Js.end());
  std::vector<long> w;
  w.reserve(sel.size());
  for (long i : sel) w.push_back(y[i]);
  std::sort(w.begin(), w.end());
  w[0] += 1;
  std::sort(w.begin(), w.end());
  std::vector<long> rest;
  rest.reserve(y.size() - sel.size() + w.size() - 1);
  for (long i = 0; i < (long)y.size(); ++i)
    if (!sel.count(i)) rest.push_back(y[i]);
  rest.insert(rest.end(), w.begin() + 1, w.end());
  std::sort(rest.begin(), rest.end());
  y[0] = w[0];
  std::copy(rest.begin(), rest.end(), y.begin() + 1);
}

}  // namespace

CoupledResult coupled_simulate(const SortedLengths& xi,
                               const SortedLengths& xi_prime,
                               const ModelParams& params, double horizon,
                               std::uint64_t seed) {
  if (xi.size() != params.N || xi_prime.size() != params.N)
    throw std::invalid_argument("coupled_simulate: state size != N");
  if (!SortedLengths::leq(xi, xi_prime))
    throw std::invalid_argument("coupled_simulate: initial states not ordered");

  std::vector<long> lo = xi.y, hi = xi_prime.y;
  Rng rng(seed);
  double rate = params.N * (1.0 + params.lambda);
  double p_depart = 1.0 / (1.0 + params.lambda);

  CoupledResult res;
  double t = 0.0;
  while (true) {
    t += rng.exponential(rate);
    if (t > horizon) break;
    if (rng.uniform() < p_depart) {
      long J = (long)rng.below(params.N);
      depart_mark(lo, J);
      depart_mark(hi, J);
    } else {
      std::vector<long> Js(params.n);
      for (int i = 0; i < params.n; ++i) Js[i] = (long)rng.below(params.N);
      arrive_mark(lo, Js);
      arrive_mark(hi, Js);
    }
    ++res.events;
    for (long i = 0; i < params.N; ++i)
      if (lo[i] > hi[i]) {
        res.ordered = false;
        res.violation_time = t;
        return res;
      }
  }
  return res;
}

namespace {

struct RateEnum {
  const MicroState& s;
  const ModelParams& params;
  long y;
  std::map<long, double>& dist;
  std::vector<long> qlen;       // lengths of distinct sampled non-memory queues
  std::vector<long> slot_tag;   // -1 = memory, else index into qlen
  std::vector<long> used;       // distinct identities used, per length

  void leaf(double prob) {
    long mstar = y;
    for (long q : qlen) mstar = std::min(mstar, q);
    long cnt = 0;
    long mem_slots = (y == mstar) ? 1 : 0;
    for (long tag : slot_tag) {
      long v = tag < 0 ? y : qlen[tag];
      if (v == mstar) {
        ++cnt;
        if (tag < 0) ++mem_slots;
      }
    }
    cnt += (y == mstar) ? 1 : 0;  // the memory instance itself

    auto settle = [&](bool join_mem, long joined_q, double weight) {
      long mem_post = join_mem ? y + 1 : y;
      long best = mem_post;
      for (long q = 0; q < (long)qlen.size(); ++q)
        best = std::min(best, qlen[q] + (q == joined_q ? 1 : 0));
      dist[best] += prob * weight;
    };

    if (y == mstar && mem_slots > 0)
      settle(true, -1, (double)mem_slots / cnt);
    // per distinct identity at the minimum, weighted by its slot count
    for (long q = 0; q < (long)qlen.size(); ++q) {
      if (qlen[q] != mstar) continue;
      long slots = 0;
      for (long tag : slot_tag)
        if (tag == q) ++slots;
      if (slots > 0) settle(false, q, (double)slots / cnt);
    }
  }

  void recurse(int slot, double prob) {
    if (slot == params.n) {
      leaf(prob);
      return;
    }
    double invN = 1.0 / params.N;
    // the memory queue
    slot_tag.push_back(-1);
    recurse(slot + 1, prob * invN);
    slot_tag.pop_back();
    // a repeat of an already-sampled identity
    for (long q = 0; q < (long)qlen.size(); ++q) {
      slot_tag.push_back(q);
      recurse(slot + 1, prob * invN);
      slot_tag.pop_back();
    }
    // a fresh non-memory queue of each length
    for (long len = 0; len < (long)used.size(); ++len) {
      long avail = s.count_at(len) - (len == s.mem_len ? 1 : 0) - used[len];
      if (avail <= 0) continue;
      qlen.push_back(len);
      slot_tag.push_back((long)qlen.size() - 1);
      ++used[len];
      recurse(slot + 1, prob * avail * invN);
      --used[len];
      slot_tag.pop_back();
      qlen.pop_back();
    }
  }
};

}  // namespace

std::map<long, double> exact_fast_rates(const MicroState& s,
                                        const ModelParams& params) {
  auto bad = validate(s, params.N);
  if (!bad.empty()) throw std::invalid_argument("invalid state: " + bad[0]);
  double work = std::pow((double)(s.max_len() + 2), params.n) * params.N;
  if (work > 1e7)
    throw std::invalid_argument("exact_fast_rates: enumeration guard exceeded");

  std::map<long, double> arrival;
  RateEnum en{s, params, s.mem_len, arrival, {}, {}, {}};
  en.used.assign(s.max_len() + 1, 0);
  en.recurse(0, 1.0);

  std::map<long, double> rates;
  double nu = (double)params.N * params.lambda;
  for (auto [yp, prob] : arrival)
    if (yp != s.mem_len && prob > 0.0) rates[yp] += nu * prob;
  if (s.mem_len >= 1) rates[s.mem_len - 1] += 1.0;
  return rates;
}

}  // namespace supermem
