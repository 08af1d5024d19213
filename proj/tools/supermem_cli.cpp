// Command-line front end: fixed-point, ode, simulate, corrector, bounds,
// converge, tails.  Exit codes: 0 ok, 1 validation error, 2 runtime error,
// 3 acceptance-check failure (subcommands run with --check).

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "supermem/bounds.hpp"
#include "supermem/fast.hpp"
#include "supermem/fluid.hpp"
#include "supermem/harness.hpp"
#include "supermem/model.hpp"
#include "supermem/rng.hpp"
#include "supermem/simulator.hpp"

namespace fs = std::filesystem;
using namespace supermem;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Cli {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;

  ExperimentConfig load() const {
    ExperimentConfig cfg =
        config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (out) cfg.out_dir = *out;
    if (threads) cfg.threads = *threads;
    cfg.validate();
    return cfg;
  }
};

std::ofstream open_out(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / name);
  if (!out) throw std::runtime_error("cannot write " + name + " in " + dir);
  return out;
}

void cmd_fixed_point(const Cli& cli) {
  ExperimentConfig cfg = cli.load();
  FixedPointTable table = fixed_point(cfg.lambda, cfg.n, cfg.kmax);
  auto out = open_out(cfg.out_dir, "fixedpoint.csv");
  write_fixed_point_csv(table, out);
  std::cout << "alpha = " << table.alpha << "\nkappa = " << table.kappa
            << "\nrho = " << table.rho << "\n";
  for (long N : cfg.N_list) {
    int d = cutoff_d(table, (double)N);
    std::cout << "N = " << N << ": d = " << d
              << ", tilde_a = " << tilde_a(table, (double)N, d) << "\n";
  }
}

void cmd_ode(const Cli& cli) {
  ExperimentConfig cfg = cli.load();
  FixedPointTable table = fixed_point(cfg.lambda, cfg.n, cfg.kmax);
  int d = cfg.d_override ? *cfg.d_override
                         : cutoff_d(table, (double)cfg.N_list.front());
  OdePath path = integrate(FluidVector(std::vector<double>(d, 0.0)),
                           cfg.lambda, cfg.n, cfg.t0, cfg.tol);
  auto out = open_out(cfg.out_dir, "ode.csv");
  write_ode_csv(path, out);
  // mass balance: m(x(t)) - m(x0) = lambda t - int x_1 - lambda int x_d^n mu
  double m_end = 0.0;
  for (int k = 1; k <= d; ++k) m_end += path.x.back().at(k);
  double residual = m_end - cfg.lambda * cfg.t0 + path.int_x1 +
                    cfg.lambda * path.int_outflow;
  std::cout << "d = " << d << ", steps = " << path.t.size() - 1
            << ", max_clamp = " << path.max_clamp
            << ", mass_residual = " << residual << "\n";
}

void cmd_simulate(const Cli& cli) {
  ExperimentConfig cfg = cli.load();
  FixedPointTable table = fixed_point(cfg.lambda, cfg.n, cfg.kmax);
  long N = cfg.N_list.front();
  int d = cfg.d_override ? *cfg.d_override : cutoff_d(table, (double)N);
  ModelParams params{cfg.lambda, cfg.n, N};
  SimOptions opts;
  opts.horizon = cfg.t0;
  opts.d_record = d + 2;
  opts.record_events = false;
  Trajectory traj =
      simulate(params, MicroState::one_in_memory(N), opts, cfg.seed);
  auto out = open_out(cfg.out_dir, "trajectory.csv");
  write_trajectory_csv(traj, out);
  std::cout << "arrivals = " << traj.total_arrivals
            << ", departures = " << traj.total_departures
            << ", max_len = " << traj.max_len_seen
            << ", final_mem_len = " << traj.final_state.mem_len << "\n";
}

void cmd_corrector(const Cli& cli) {
  ExperimentConfig cfg = cli.load();
  FixedPointTable table = fixed_point(cfg.lambda, cfg.n, cfg.kmax);
  long N = cfg.N_list.front();
  int d = cfg.d_override ? *cfg.d_override : cutoff_d(table, (double)N);
  FluidVector x = table.prefix(d);
  ModelParams params{cfg.lambda, cfg.n, N};
  FastGenerator gen = generator(x, params);

  auto out = open_out(cfg.out_dir, "corrector.csv");
  out << "k,y,chi\n";
  double tau = 4.0 / (N * cfg.lambda * (1.0 - cfg.lambda) * (1.0 - cfg.lambda));
  char buf[64];
  for (int k = 1; k <= d; ++k) {
    std::vector<double> f(gen.states());
    double fmax = 0.0;
    for (long y = gen.y_min; y <= gen.y_max; ++y) {
      f[y - gen.y_min] = drift_b(x, y, cfg.lambda, cfg.n)[k - 1];
      fmax = std::max(fmax, std::abs(f[y - gen.y_min]));
    }
    auto chi = corrector_exact(f, gen);
    for (long y = gen.y_min; y <= gen.y_max; ++y) {
      std::snprintf(buf, sizeof buf, "%.17g", chi[y - gen.y_min]);
      out << k << ',' << y << ',' << buf << '\n';
    }
    double chimax = 0.0;
    for (double c : chi) chimax = std::max(chimax, std::abs(c));
    std::cout << "k = " << k << ": max|chi| = " << chimax
              << ", 2 tau ||f|| = " << 2.0 * tau * fmax << "\n";
  }

  // Monte Carlo cross-check for the first component at y = y_min + 1
  if (gen.states() > 1) {
    std::vector<double> f(gen.states());
    for (long y = gen.y_min; y <= gen.y_max; ++y)
      f[y - gen.y_min] = drift_b(x, y, cfg.lambda, cfg.n)[0];
    auto chi = corrector_exact(f, gen);
    auto fn = [&](long y) {
      return drift_b(x, y, cfg.lambda, cfg.n)[0];
    };
    auto mc = corrector_mc(fn, x, gen.y_min + 1, params, 2000, cfg.seed);
    std::cout << "mc check (k=1, y=" << gen.y_min + 1 << "): mc = " << mc.value
              << " +- " << mc.std_err << ", exact = " << chi[1] << "\n";
  }
}

void cmd_bounds(const Cli& cli, std::optional<double> logn,
                std::optional<int> scan_lo, std::optional<int> scan_hi) {
  ExperimentConfig cfg = cli.load();
  FixedPointTable table = fixed_point(cfg.lambda, cfg.n, cfg.kmax);

  if (scan_lo && scan_hi) {
    auto n0 = scan_N0(cfg.lambda, cfg.n, cfg.t0, cfg.C_cfg, *scan_lo, *scan_hi);
    if (n0)
      std::cout << "N0 = 2^" << *n0 << " (log10 N0 = "
                << *n0 * std::log10(2.0) << ")\n";
    else
      std::cout << "no N0 on the scanned grid\n";
    return;
  }

  std::vector<double> logNs;
  if (logn) logNs.push_back(*logn);
  else
    for (long N : cfg.N_list) logNs.push_back(std::log((double)N));

  auto txt = open_out(cfg.out_dir, "bounds.txt");
  nlohmann::ordered_json all = nlohmann::ordered_json::array();
  for (double L : logNs) {
    RegularityConstants c =
        constants_for(cfg.lambda, cfg.n, L, cfg.t0, table, cfg.C_cfg);
    double log_eps = default_log_eps(L);
    double x0_dev = -L - 0.5 * std::log(cfg.lambda);
    HypothesisReport r = check_hypotheses(c, table, log_eps, x0_dev);
    auto p = error_probability(c, r);
    txt << "# logN = " << L << "\n";
    write_report_text(c, r, p, txt);
    txt << "\n";
    nlohmann::ordered_json j;
    j["logN"] = L;
    j["d"] = c.d;
    j["fle_ok"] = r.fle_ok;
    j["flet_ok"] = r.flet_ok;
    j["exponent_refined"] = r.exponent_refined;
    j["exponent_qv"] = r.exponent_qv;
    if (p) {
      j["bound_fle"] = p->fle;
      j["bound_flea"] = p->flea;
      j["bound_fleab"] = p->fleab;
    }
    all.push_back(j);
    std::cout << "logN = " << L << ": fle_ok = " << (r.fle_ok ? "true" : "false")
              << ", flet_ok = " << (r.flet_ok ? "true" : "false") << "\n";
  }
  auto js = open_out(cfg.out_dir, "bounds.json");
  js << all.dump(2) << "\n";
}

void cmd_converge(const Cli& cli, bool check) {
  ExperimentConfig cfg = cli.load();
  ExperimentResult res = run_experiment(cfg);
  emit(cfg, res, cfg.out_dir);
  std::cout << "slope = " << res.slope << "\n";
  for (const auto& s : res.per_N)
    std::cout << "N = " << s.N << ": d = " << s.d << ", median D* = "
              << s.median_D << ", exceed_freq = " << s.exceed_freq << "\n";
  if (check) {
    if (res.per_N.size() < 2)
      throw CheckFailure("converge --check needs at least two N values");
    if (!(res.slope >= -0.65 && res.slope <= -0.35))
      throw CheckFailure("slope " + std::to_string(res.slope) +
                         " outside [-0.65, -0.35]");
    for (size_t i = 1; i < res.per_N.size(); ++i)
      if (res.per_N[i].exceed_freq > res.per_N[i - 1].exceed_freq)
        throw CheckFailure("exceedance frequency not non-increasing in N");
    if (res.per_N.back().exceed_freq > 0.2)
      throw CheckFailure("exceedance frequency above 0.2 at the largest N");
  }
}

void cmd_tails(const Cli& cli, bool check) {
  ExperimentConfig cfg = cli.load();
  ExperimentResult res = run_experiment(cfg);
  emit(cfg, res, cfg.out_dir);
  for (const auto& s : res.per_N) {
    std::cout << "N = " << s.N << ": mrc_freq = " << s.mrc_freq
              << ", mean A_d = " << s.mean_A_d << ", fitted C = " << s.fitted_C
              << ", mrb_freq =";
    for (double f : s.mrb_freq) std::cout << ' ' << f;
    std::cout << "\n";
  }
  if (check) {
    const auto& last = res.per_N.back();
    if (last.mrc_freq < 0.95)
      throw CheckFailure("MRC frequency below 0.95 at the largest N");
    for (const auto& s : res.per_N)
      for (size_t j = 1; j < s.mrb_freq.size(); ++j)
        if (s.mrb_freq[j] > s.mrb_freq[j - 1])
          throw CheckFailure("MRB frequency not non-increasing in R");
    double cmin = 1e300, cmax = 0.0;
    for (const auto& s : res.per_N) {
      cmin = std::min(cmin, s.fitted_C);
      cmax = std::max(cmax, s.fitted_C);
    }
    if (cmin > 0.0 && cmax / cmin > 5.0)
      throw CheckFailure("fitted growth constant unstable across N");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"supermarket model with memory: simulator and fluid-limit toolkit"};
  app.require_subcommand(1);

  Cli cli;
  app.add_option("--config", cli.config_path, "config file (key = value lines)");
  std::uint64_t seed_val = 0;
  auto* seed_opt = app.add_option("--seed", seed_val, "base seed override");
  std::string out_val;
  auto* out_opt = app.add_option("--out", out_val, "output directory override");
  int threads_val = 1;
  auto* threads_opt = app.add_option("--threads", threads_val, "worker threads");

  auto* sc_fp = app.add_subcommand("fixed-point", "fixed point table and cutoff depth");
  auto* sc_ode = app.add_subcommand("ode", "integrate the truncated limit dynamics");
  auto* sc_sim = app.add_subcommand("simulate", "one exact trajectory");
  auto* sc_cor = app.add_subcommand("corrector", "fast-chain correctors at the fixed point");
  auto* sc_bnd = app.add_subcommand("bounds", "regularity constants and error bounds");
  double logn_val = 0.0;
  auto* logn_opt = sc_bnd->add_option("--logn", logn_val, "evaluate at log N (log domain)");
  std::pair<int, int> scan{0, 0};
  auto* scan_opt = sc_bnd->add_option("--scan", scan,
                                      "dyadic N0 scan over exponents LO HI");
  auto* sc_cnv = app.add_subcommand("converge", "deviation statistic across N");
  bool check_cnv = false;
  sc_cnv->add_flag("--check", check_cnv, "fail (exit 3) unless acceptance thresholds hold");
  auto* sc_tls = app.add_subcommand("tails", "tail-event frequencies across N");
  bool check_tls = false;
  sc_tls->add_flag("--check", check_tls, "fail (exit 3) unless acceptance thresholds hold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*seed_opt) cli.seed = seed_val;
  if (*out_opt) cli.out = out_val;
  if (*threads_opt) cli.threads = threads_val;

  try {
    if (sc_fp->parsed()) cmd_fixed_point(cli);
    else if (sc_ode->parsed()) cmd_ode(cli);
    else if (sc_sim->parsed()) cmd_simulate(cli);
    else if (sc_cor->parsed()) cmd_corrector(cli);
    else if (sc_bnd->parsed())
      cmd_bounds(cli,
                 *logn_opt ? std::optional<double>(logn_val) : std::nullopt,
                 *scan_opt ? std::optional<int>(scan.first) : std::nullopt,
                 *scan_opt ? std::optional<int>(scan.second) : std::nullopt);
    else if (sc_cnv->parsed()) cmd_converge(cli, check_cnv);
    else if (sc_tls->parsed()) cmd_tails(cli, check_tls);
  } catch (const CheckFailure& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
