#include "supermem/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "supermem/bounds.hpp"
#include "supermem/rng.hpp"
#include "supermem/simulator.hpp"

namespace supermem {

void ExperimentConfig::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("lambda must be in (0,1)");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (N_list.empty()) throw std::invalid_argument("N_list must be non-empty");
  for (size_t i = 0; i < N_list.size(); ++i) {
    if (N_list[i] < 1) throw std::invalid_argument("N_list entries must be >= 1");
    if (i > 0 && N_list[i] <= N_list[i - 1])
      throw std::invalid_argument("N_list must be ascending");
  }
  if (t0 < 0.0) throw std::invalid_argument("t0 must be >= 0");
  if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
  if (d_override && *d_override < 1)
    throw std::invalid_argument("d must be >= 1");
  if (tol <= 0.0) throw std::invalid_argument("tol must be > 0");
  if (phi != "loglog2")
    throw std::invalid_argument("phi must be \"loglog2\"");
  for (size_t i = 0; i < R_list.size(); ++i) {
    if (R_list[i] <= 0.0) throw std::invalid_argument("R_list entries must be > 0");
    if (i > 0 && R_list[i] <= R_list[i - 1])
      throw std::invalid_argument("R_list must be ascending");
  }
  if (C_cfg <= 0.0) throw std::invalid_argument("C_cfg must be > 0");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (kmax < 2) throw std::invalid_argument("kmax must be >= 2");
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <typename T>
std::vector<T> parse_list(const std::string& v, int line) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      if constexpr (std::is_integral_v<T>)
        out.push_back((T)std::stoll(item));
      else
        out.push_back((T)std::stod(item));
    } catch (...) {
      throw std::invalid_argument("config line " + std::to_string(line) +
                                  ": bad list entry '" + item + "'");
    }
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  bool have_N = false;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "lambda") cfg.lambda = std::stod(val);
      else if (key == "n") cfg.n = std::stoi(val);
      else if (key == "N") { cfg.N_list = {std::stol(val)}; have_N = true; }
      else if (key == "N_list") { cfg.N_list = parse_list<long>(val, lineno); have_N = true; }
      else if (key == "t0") cfg.t0 = std::stod(val);
      else if (key == "replicas") cfg.replicas = std::stol(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "d") cfg.d_override = std::stoi(val);
      else if (key == "tol") cfg.tol = std::stod(val);
      else if (key == "phi") cfg.phi = val;
      else if (key == "out") cfg.out_dir = val;
      else if (key == "R_list") cfg.R_list = parse_list<double>(val, lineno);
      else if (key == "C_cfg") cfg.C_cfg = std::stod(val);
      else if (key == "threads") cfg.threads = std::stoi(val);
      else if (key == "timing") cfg.timing = (val == "on" || val == "true" || val == "1");
      else if (key == "kmax") cfg.kmax = std::stoi(val);
      else
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": unknown key '" + key + "'");
    } catch (const std::invalid_argument& e) {
      std::string msg = e.what();
      if (msg.rfind("config line", 0) == 0) throw;
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": bad value for '" + key + "'");
    }
  }
  if (!have_N) cfg.N_list = {1000};
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  return parse_config(in);
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

namespace {

// Least C >= 0 with C e^{C t0} = ratio; 0 when ratio <= 0.
double fit_growth_constant(double ratio, double t0) {
  if (ratio <= 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (hi * std::exp(hi * t0) < ratio) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (mid * std::exp(mid * t0) < ratio ? lo : hi) = mid;
  }
  return hi;
}

NSummary run_for_N(const ExperimentConfig& cfg, long N,
                   const FixedPointTable& table) {
  NSummary s;
  s.N = N;
  s.d = cfg.d_override ? *cfg.d_override : cutoff_d(table, (double)N);
  s.tilde_a = tilde_a(table, (double)N, s.d);
  s.eps = std::exp(default_log_eps(std::log((double)N)));
  s.trunc_err = cfg.t0 * table.a_at(s.d + 1);

  OdePath path = cfg.t0 > 0.0
                     ? integrate(FluidVector(std::vector<double>(s.d, 0.0)),
                                 cfg.lambda, cfg.n, cfg.t0, cfg.tol)
                     : OdePath{{0.0}, {FluidVector(std::vector<double>(s.d, 0.0))},
                               0.0, 0.0, 0.0, 0.0};

  ModelParams params{cfg.lambda, cfg.n, N};
  std::uint64_t base = mix64(cfg.seed ^ (std::uint64_t)N);
  s.replicas.resize(cfg.replicas);

  auto worker = [&](int tid) {
    for (long i = tid; i < cfg.replicas; i += cfg.threads) {
      auto t_start = std::chrono::steady_clock::now();
      ReplicaResult r;
      r.replica = i;
      r.seed = replica_seed(base, i);
      SimOptions opts;
      opts.horizon = cfg.t0;
      opts.d_record = s.d + 2;
      opts.record_events = false;
      Trajectory traj = simulate(params, MicroState::one_in_memory(N), opts, r.seed);

      double dstar = 0.0;
      for (const auto& g : traj.samples) {
        FluidVector x = path.eval(g.t);
        for (int k = 1; k <= s.d; ++k) {
          double dev = std::abs(g.z[k - 1] - x.at(k)) / std::sqrt(table.a_at(k));
          dstar = std::max(dstar, dev);
        }
      }
      r.d_star = dstar;
      double sup_zd1 = (double)traj.sup_count_ge[s.d] / N;  // tail d+1
      for (double R : cfg.R_list) r.mrb.push_back(sup_zd1 >= R * s.tilde_a);
      r.mrc = traj.sup_count_ge[s.d + 1] == 0;  // tail d+2 never positive
      r.A_d = traj.samples.empty() ? 0 : traj.samples.back().arrivals[s.d - 1];
      if (cfg.timing) {
        auto t_end = std::chrono::steady_clock::now();
        r.wall_ms = std::chrono::duration<double, std::milli>(t_end - t_start).count();
      }
      s.replicas[i] = std::move(r);
    }
  };
  if (cfg.threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < cfg.threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  std::vector<double> dstars;
  s.mrb_freq.assign(cfg.R_list.size(), 0.0);
  double mean_Ad = 0.0;
  long exceed = 0, mrc = 0;
  for (const auto& r : s.replicas) {
    dstars.push_back(r.d_star);
    if (r.d_star >= s.eps) ++exceed;
    for (size_t j = 0; j < cfg.R_list.size(); ++j)
      if (r.mrb[j]) s.mrb_freq[j] += 1.0;
    if (r.mrc) ++mrc;
    mean_Ad += (double)r.A_d;
  }
  s.median_D = median_of(dstars);
  s.exceed_freq = (double)exceed / cfg.replicas;
  for (auto& f : s.mrb_freq) f /= cfg.replicas;
  s.mrc_freq = (double)mrc / cfg.replicas;
  s.mean_A_d = mean_Ad / cfg.replicas;
  s.fitted_C = fit_growth_constant(s.mean_A_d / (N * s.tilde_a), cfg.t0);
  return s;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  FixedPointTable table = fixed_point(cfg.lambda, cfg.n, cfg.kmax);
  ExperimentResult res;
  for (long N : cfg.N_list) res.per_N.push_back(run_for_N(cfg, N, table));

  // least-squares slope of log median D* against log N
  if (res.per_N.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long m = (long)res.per_N.size();
    for (const auto& s : res.per_N) {
      double x = std::log((double)s.N), y = std::log(s.median_D);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    res.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return res;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void emit(const ExperimentConfig& cfg, const ExperimentResult& res,
          const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  nlohmann::ordered_json manifest;
  manifest["version"] = "supermem 0.1.0";
  manifest["lambda"] = cfg.lambda;
  manifest["n"] = cfg.n;
  manifest["N_list"] = cfg.N_list;
  manifest["t0"] = cfg.t0;
  manifest["replicas"] = cfg.replicas;
  manifest["seed"] = cfg.seed;
  if (cfg.d_override) manifest["d"] = *cfg.d_override;
  manifest["tol"] = cfg.tol;
  manifest["phi"] = cfg.phi;
  manifest["R_list"] = cfg.R_list;
  manifest["C_cfg"] = cfg.C_cfg;
  manifest["kmax"] = cfg.kmax;
  nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
  for (const auto& s : res.per_N)
    seeds[std::to_string(s.N)] = mix64(cfg.seed ^ (std::uint64_t)s.N);
  manifest["replica_seed_base"] = seeds;
  manifest["slope"] = res.slope;
  {
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest.json in " + dir);
    out << manifest.dump(2) << "\n";
  }

  for (const auto& s : res.per_N) {
    std::ofstream out(fs::path(dir) / ("summary_N" + std::to_string(s.N) + ".csv"));
    if (!out) throw std::runtime_error("cannot write summary csv in " + dir);
    out << "replica,seed,D_star,mrb_flag,mrc_flag,A_d,wall_ms\n";
    for (const auto& r : s.replicas) {
      out << r.replica << ',' << r.seed << ',' << fmt(r.d_star) << ','
          << (r.mrb.empty() ? 0 : (int)r.mrb[0]) << ',' << (int)r.mrc << ','
          << r.A_d << ',' << fmt(r.wall_ms) << '\n';
    }
  }

  {
    std::ofstream out(fs::path(dir) / "plotdata.csv");
    if (!out) throw std::runtime_error("cannot write plotdata.csv in " + dir);
    out << "N,median_D,exceed_freq\n";
    for (const auto& s : res.per_N)
      out << s.N << ',' << fmt(s.median_D) << ',' << fmt(s.exceed_freq) << '\n';
  }

  {
    std::ofstream out(fs::path(dir) / "tails.csv");
    if (!out) throw std::runtime_error("cannot write tails.csv in " + dir);
    out << "N,R,mrb_freq,mrc_freq,mean_A_d,fitted_C\n";
    for (const auto& s : res.per_N)
      for (size_t j = 0; j < cfg.R_list.size(); ++j)
        out << s.N << ',' << fmt(cfg.R_list[j]) << ',' << fmt(s.mrb_freq[j])
            << ',' << fmt(s.mrc_freq) << ',' << fmt(s.mean_A_d) << ','
            << fmt(s.fitted_C) << '\n';
  }
}

}  // namespace supermem
