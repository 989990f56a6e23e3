#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "vortctl/io.hpp"
#include "vortctl/steering.hpp"

namespace py = pybind11;
using namespace vortctl;
using lattice::ModeIndex;
using lattice::ModeSet;
using spectral::Complex;
using spectral::SpectralState;
using Pair = std::pair<int, int>;

namespace {

ModeIndex to_mode(Pair p) { return {p.first, p.second}; }
Pair from_mode(ModeIndex k) { return {k.kx, k.ky}; }

ModeSet to_set(const std::vector<Pair>& v) {
  ModeSet s;
  for (const auto& p : v) s.insert(to_mode(p));
  return s;
}

std::vector<Pair> from_set(const ModeSet& s) {
  std::vector<Pair> out;
  for (const auto& k : s) out.push_back(from_mode(k));
  return out;
}

nlohmann::json to_json(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::object from_json(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

forcing::ForcingProgram to_program(const py::object& o) { return io::program_from_json(to_json(o)); }

py::dict chain_dict(const lattice::SaturationChain& c) {
  py::list levels;
  for (const auto& l : c.levels) levels.append(from_set(l));
  py::dict d;
  d["levels"] = levels;
  d["status"] = lattice::to_string(c.status);
  d["radius"] = c.radius;
  d["covered_radius"] = c.covered_radius;
  d["pruned"] = c.pruned;
  return d;
}

lattice::SaturationChain chain_of(const std::vector<Pair>& k1, int radius, int max_levels) {
  return lattice::saturation_chain(to_set(k1), radius, max_levels);
}

py::dict report_dict(const steering::EndpointReport& r) {
  py::dict d = from_json(io::report_to_json(r, ""));
  d.attr("pop")("program_ref");
  d["program"] = from_json(io::program_to_json(r.program));
  d["final_state"] = r.final_state;
  return d;
}

steering::SteeringConfig steering_config(const py::dict& kw) {
  steering::SteeringConfig c;
  for (const auto& [key, value] : kw) {
    const auto k = key.cast<std::string>();
    if (k == "tau") c.tau = value.cast<double>();
    else if (k == "gamma") c.gamma = value.cast<double>();
    else if (k == "R") c.R = value.cast<double>();
    else if (k == "omega") c.omega = value.cast<double>();
    else if (k == "correction_tau") c.correction_tau = value.cast<double>();
    else if (k == "max_fp_iters") c.max_fp_iters = value.cast<int>();
    else if (k == "fp_tol") c.fp_tol = value.cast<double>();
    else if (k == "chatter_windows") c.chatter_windows = value.cast<int>();
    else if (k == "level_omegas") c.level_omegas = value.cast<std::vector<double>>();
    else if (k == "threads") c.threads = value.cast<int>();
    else if (k == "dt_base") c.integrator.dt_base = value.cast<double>();
    else throw py::key_error("unknown steering option '" + k + "'");
  }
  return c;
}

integrator::IntegratorConfig integrator_config(double dt_base, int record_stride) {
  integrator::IntegratorConfig c;
  c.dt_base = dt_base;
  c.record_stride = record_stride;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral Galerkin vorticity simulator and steering engine";

  static py::exception<Error> error_type(m, "VortctlError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(std::string(to_string(e.code())) + ": " + e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<SpectralState>(m, "SpectralState")
      .def(py::init<int>(), py::arg("resolution") = 1)
      .def_property_readonly("resolution", &SpectralState::resolution)
      .def("coeff", [](const SpectralState& s, Pair k) { return s.coeff(to_mode(k)); })
      .def("set", [](SpectralState& s, Pair k, Complex v) { s.set(to_mode(k), v); })
      .def("modes", [](const SpectralState& s) { return from_set(s.basis().modes()); })
      .def("to_dict",
           [](const SpectralState& s) {
             py::dict d;
             for (std::size_t i = 0; i < s.size(); ++i) d[py::cast(from_mode(s.basis().mode(i)))] = s.data()[i];
             return d;
           })
      .def("to_json", [](const SpectralState& s) { return from_json(io::state_to_json(s)); })
      .def_static("from_json", [](const py::object& o) { return io::state_from_json(to_json(o)); })
      .def("__add__", [](const SpectralState& a, const SpectralState& b) { return a + b; })
      .def("__sub__", [](const SpectralState& a, const SpectralState& b) { return a - b; })
      .def("__rmul__", [](const SpectralState& a, double s) { return s * a; })
      .def("__eq__", [](const SpectralState& a, const SpectralState& b) { return a == b; })
      .def("copy", [](const SpectralState& s) { return s; });

  m.def("next_level", [](const std::vector<Pair>& k) { return from_set(lattice::next_level(to_set(k))); });
  m.def("saturation_chain", [](const std::vector<Pair>& k1, int radius, int max_levels) {
    return chain_dict(chain_of(k1, radius, max_levels));
  }, py::arg("k1"), py::arg("radius"), py::arg("max_levels") = 20);
  m.def("is_saturating_symmetric", [](const std::vector<Pair>& k) { return lattice::is_saturating_symmetric(to_set(k)); });
  m.def("find_generating_pair", [](Pair k, const std::vector<Pair>& set) {
    const auto [a, b] = lattice::find_generating_pair(to_mode(k), to_set(set));
    return std::pair{from_mode(a), from_mode(b)};
  });

  m.def("random_decaying_state", &spectral::random_decaying_state, py::arg("resolution"), py::arg("amplitude"),
        py::arg("seed"), py::arg("decay") = 3.0);
  m.def("energy", &spectral::energy);
  m.def("enstrophy", &spectral::enstrophy);
  m.def("inner", &spectral::inner);
  m.def("sobolev_norm", [](const SpectralState& s, int order) { return spectral::sobolev_norm(s, {order}); },
        py::arg("state"), py::arg("order") = 0);
  m.def("nonlinear_term", &spectral::nonlinear_term);
  m.def("vector_field", [](const SpectralState& s, double nu) { return spectral::vector_field(s, {nu}); },
        py::arg("state"), py::arg("nu") = 0.0);
  m.def("project", [](const SpectralState& s, const std::vector<Pair>& set) { return spectral::project(s, to_set(set)); });

  m.def("simulate",
        [](const SpectralState& s0, const py::object& program, double nu, double dt_base, int record_stride) {
          const auto tr = integrator::integrate(s0, {nu}, to_program(program), integrator_config(dt_base, record_stride));
          return std::pair{tr.times, tr.states};
        },
        py::arg("state0"), py::arg("program"), py::arg("nu") = 0.0, py::arg("dt_base") = 1e-3,
        py::arg("record_stride") = 1, "Returns (times, states) along the run.");
  m.def("free_run",
        [](const SpectralState& s0, double T, double nu, double dt_base) {
          return integrator::free_run(s0, {nu}, T, integrator_config(dt_base, 1));
        },
        py::arg("state0"), py::arg("T"), py::arg("nu") = 0.0, py::arg("dt_base") = 1e-3);

  m.def("relaxation_distance", [](const py::object& f, const py::object& g, int grid) {
    return forcing::relaxation_distance(to_program(f), to_program(g), grid);
  }, py::arg("f"), py::arg("g"), py::arg("grid") = 256);
  m.def("chattering_approximation", [](const py::object& v, double A, int L) {
    return from_json(io::program_to_json(forcing::chattering_approximation(to_program(v), A, L)));
  });
  m.def("random_hull_program", [](const std::vector<Pair>& support, double A, double T, int pieces, std::uint64_t seed) {
    return from_json(io::program_to_json(forcing::random_hull_program(to_set(support), A, T, pieces, seed)));
  });
  m.def("cascade_program", [](const py::object& ext, const std::vector<Pair>& k_prev, double omega) {
    return from_json(io::program_to_json(steering::cascade_program(to_program(ext), to_set(k_prev), omega)));
  });

  m.def("steer_to_target",
        [](const std::vector<double>& target, const std::vector<Pair>& k1, const std::vector<Pair>& k_obs,
           const SpectralState& s0, double nu, int chain_radius, const py::kwargs& kw) {
          const auto chain = chain_of(k1, chain_radius, 20);
          try {
            return report_dict(steering::steer_to_target(target, chain, to_set(k_obs), s0, {nu}, steering_config(kw)));
          } catch (const steering::SteeringFailure& f) {
            return report_dict(f.report());
          }
        },
        py::arg("target"), py::arg("k1"), py::arg("k_obs"), py::arg("state0"), py::arg("nu") = 0.0,
        py::arg("chain_radius") = 10, "Steering report; `converged` is False when the iteration budget ran out.");
  m.def("coverage_check",
        [](const std::vector<Pair>& k1, const std::vector<Pair>& k_obs, double R, int density, const SpectralState& s0,
           double nu, const py::kwargs& kw) {
          auto cfg = steering_config(kw);
          const auto c = steering::coverage_check(chain_of(k1, 10, 20), to_set(k_obs), R, density, s0, {nu}, cfg);
          py::dict d;
          d["fraction"] = c.fraction;
          d["targets"] = c.targets;
          d["errors"] = c.errors;
          d["iterations"] = c.iterations;
          d["converged"] = c.converged;
          return d;
        },
        py::arg("k1"), py::arg("k_obs"), py::arg("R"), py::arg("grid_density"), py::arg("state0"), py::arg("nu") = 0.0);
  m.def("averaging_experiment",
        [](Pair k, Pair mm, Pair nn, double A, const std::vector<double>& omegas, double T, const SpectralState& s0,
           double nu) {
          const auto r = steering::averaging_experiment(to_mode(k), {to_mode(mm), to_mode(nn)}, A, omegas, T, s0, {nu});
          py::dict d;
          d["omegas"] = r.omegas;
          d["deviations"] = r.deviations;
          d["reference_sup"] = r.reference_sup;
          return d;
        },
        py::arg("k"), py::arg("m"), py::arg("n"), py::arg("A"), py::arg("omegas"), py::arg("T"), py::arg("state0"),
        py::arg("nu") = 0.0);
  m.def("l1_grid", &steering::l1_grid);

  m.def("run_experiment",
        [](const std::string& experiment, const py::object& config, const std::string& base_dir) {
          std::ostringstream out, err;
          const int rc = cli::run(experiment, to_json(config), base_dir, out, err);
          return py::make_tuple(rc, out.str(), err.str());
        },
        py::arg("experiment"), py::arg("config"), py::arg("base_dir") = ".",
        "Runs a CLI experiment in-process; returns (exit_status, stdout, stderr).");
}
