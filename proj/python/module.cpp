#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "supermem/bounds.hpp"
#include "supermem/fast.hpp"
#include "supermem/fluid.hpp"
#include "supermem/model.hpp"
#include "supermem/simulator.hpp"

namespace py = pybind11;
using namespace supermem;

PYBIND11_MODULE(_core, m) {
  m.doc() = "supermarket model with memory: exact simulator and fluid-limit toolkit";

  py::class_<FixedPointTable>(m, "FixedPointTable")
      .def_readonly("lambda_", &FixedPointTable::lambda)
      .def_readonly("n", &FixedPointTable::n)
      .def_readonly("log_a", &FixedPointTable::log_a)
      .def_readonly("a", &FixedPointTable::a)
      .def_readonly("alpha", &FixedPointTable::alpha)
      .def_readonly("kappa", &FixedPointTable::kappa)
      .def_readonly("rho", &FixedPointTable::rho)
      .def("a_at", &FixedPointTable::a_at)
      .def("prefix", [](const FixedPointTable& t, int d) {
        return t.prefix(d).x;
      });

  m.def("fixed_point", &fixed_point, py::arg("lam"), py::arg("n"),
        py::arg("kmax") = 60);
  m.def("alpha_of", &alpha_of);
  m.def("rho_of", &rho_of);
  m.def("cutoff_d", [](const FixedPointTable& t, double N) {
    return cutoff_d(t, N);
  });
  m.def("tilde_a", [](const FixedPointTable& t, double N, int d) {
    return tilde_a(t, N, d);
  });

  m.def("mu_of", [](const std::vector<double>& z, int n, long k) {
    return mu_of(FluidVector(z), n, k);
  });
  m.def("u_field", [](const std::vector<double>& x, double lam, int n) {
    return u_field(FluidVector(x), lam, n);
  });
  m.def(
      "integrate",
      [](const std::vector<double>& x0, double lam, int n, double t0,
         double tol) {
        OdePath p = integrate(FluidVector(x0), lam, n, t0, tol);
        std::vector<std::vector<double>> xs;
        for (const auto& v : p.x) xs.push_back(v.x);
        return py::make_tuple(p.t, xs);
      },
      py::arg("x0"), py::arg("lam"), py::arg("n"), py::arg("t0"),
      py::arg("tol") = 1e-10);

  m.def("jump_distribution", [](const std::vector<double>& x, int n, long y) {
    return jump_distribution(FluidVector(x), n, y);
  });
  m.def("stationary", [](const std::vector<double>& x, double lam, int n, long N) {
    return stationary(generator(FluidVector(x), ModelParams{lam, n, N}));
  });
  m.def("corrector_exact",
        [](const std::vector<double>& f, const std::vector<double>& x,
           double lam, int n, long N) {
          return corrector_exact(f, generator(FluidVector(x), ModelParams{lam, n, N}));
        });
  m.def("tv_bound", [](const std::vector<double>& x,
                       const std::vector<double>& xp, int n) {
    TvResult r = tv_bound(FluidVector(x), FluidVector(xp), n);
    return py::make_tuple(r.exact, r.bound);
  });

  m.def(
      "simulate",
      [](double lam, int n, long N, double t0, int d_record,
         std::uint64_t seed) {
        SimOptions opts;
        opts.horizon = t0;
        opts.d_record = d_record;
        opts.record_events = false;
        Trajectory traj = simulate(ModelParams{lam, n, N},
                                   MicroState::one_in_memory(N), opts, seed);
        py::dict out;
        out["arrivals"] = traj.total_arrivals;
        out["departures"] = traj.total_departures;
        out["max_len"] = traj.max_len_seen;
        out["final_mem_len"] = traj.final_state.mem_len;
        std::vector<double> t;
        std::vector<std::vector<double>> z;
        for (const auto& g : traj.samples) {
          t.push_back(g.t);
          z.push_back(g.z);
        }
        out["t"] = t;
        out["z"] = z;
        return out;
      },
      py::arg("lam"), py::arg("n"), py::arg("N"), py::arg("t0"),
      py::arg("d_record") = 4, py::arg("seed") = 1);

  m.def("hypothesis_report",
        [](double lam, int n, double logN, double t0, double C_cfg) {
          FixedPointTable table = fixed_point(lam, n, 60);
          RegularityConstants c = constants_for(lam, n, logN, t0, table, C_cfg);
          HypothesisReport r = check_hypotheses(
              c, table, default_log_eps(logN), -logN - 0.5 * std::log(lam));
          auto p = error_probability(c, r);
          std::ostringstream os;
          write_report_text(c, r, p, os);
          return os.str();
        },
        py::arg("lam"), py::arg("n"), py::arg("logN"), py::arg("t0") = 1.0,
        py::arg("C_cfg") = 4.0);
}
