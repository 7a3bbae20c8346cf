// Python bindings. Structured values (configs, controllers, reports) cross the boundary
// as JSON text; the Python package turns them into dicts. Arrays use numpy via Eigen.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "densyn/config.hpp"
#include "densyn/synthesis.hpp"

namespace py = pybind11;
using namespace densyn;

namespace {

nlohmann::json parse(const std::string& text) { return nlohmann::json::parse(text); }

RunConfig config_from(const std::string& text) { return run_config_from_json(parse(text)); }

struct PySnapshot {
  std::string label;
  double dt;
  Matrix X;
  Matrix Y;
};

SnapshotSet to_set(const PySnapshot& s) {
  SnapshotSet r;
  r.label = InputLabel::parse(s.label);
  r.dt = s.dt;
  r.X = s.X;
  r.Y = s.Y;
  return r;
}

std::vector<PySnapshot> collect(const std::string& config) {
  const RunConfig cfg = config_from(config);
  std::vector<PySnapshot> out;
  for (const auto& label : cfg.labels()) {
    const SnapshotSet s = collect_snapshots(cfg.model(), label, cfg.sample);
    out.push_back({label.name(), s.dt, s.X, s.Y});
  }
  return out;
}

std::string synthesize_json(const std::string& config, const std::vector<PySnapshot>& snapshots) {
  const RunConfig cfg = config_from(config);
  std::vector<SnapshotSet> sets;
  for (const auto& s : snapshots) sets.push_back(to_set(s));
  SynthesisOptions o;
  o.fit = cfg.fit;
  o.solver = cfg.solver;
  SynthesisResult r;
  {
    py::gil_scoped_release release;
    r = synthesize(sets, build_basis(cfg.n, cfg.basis_degree), cfg.synthesis, o);
  }
  nlohmann::json j;
  j["controller"] = to_json(r.controller);
  j["sdp"] = {{"status", sdp::to_string(r.solution.status)},
              {"iterations", r.solution.iterations},
              {"primal_objective", r.solution.primal_objective}};
  j["certificate_degree"] = r.certificate_degree;
  j["gram_block_sizes"] = r.gram_block_sizes;
  j["certificate"] = to_json(certificate_diagnostics(r.controller, r.generators, cfg.synthesis, cfg.sample.box,
                                                     cfg.certificate_samples));
  return j.dump();
}

std::string validate_json(const std::string& config, const std::string& controller, bool open) {
  const RunConfig cfg = config_from(config);
  const SystemModel model = cfg.model();
  ValidationReport rep;
  if (open) {
    rep = validate([&] { return open_loop(model.m); }, model, cfg.validation);
  } else {
    const Controller ctrl = controller_from_json(parse(controller));
    rep = validate([&] { return feedback_law(ctrl, cfg.validation.guard); }, model, cfg.validation);
  }
  return to_json(rep).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Data-driven density-function controller synthesis (C++ core)";

  static py::exception<StageError> stage_error(m, "StageError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<GuardViolation> guard_error(m, "GuardViolation", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const StageError& e) {
      py::set_error(stage_error, (to_string(e.stage) + " stage: " + e.what()).c_str());
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const GuardViolation& e) {
      py::set_error(guard_error, e.what());
    }
  });

  m.def("basis_size", &basis_size, py::arg("n"), py::arg("q"));
  m.def(
      "eval_basis", [](int n, int q, const Vector& x) { return eval_basis(*build_basis(n, q), x); }, py::arg("n"),
      py::arg("q"), py::arg("x"));
  m.def(
      "basis_exponents",
      [](int n, int q) {
        std::vector<std::vector<int>> out;
        for (const auto& mi : build_basis(n, q)->indices()) out.push_back(mi.exponents);
        return out;
      },
      py::arg("n"), py::arg("q"));

  m.def(
      "preset_json", [](const std::string& name) { return to_json(preset(name)).dump(); }, py::arg("name"));
  m.def("preset_names", &preset_names);
  m.def(
      "normalize_config_json", [](const std::string& text) { return to_json(config_from(text)).dump(); },
      py::arg("config"));

  py::class_<PySnapshot>(m, "Snapshots")
      .def(py::init<std::string, double, Matrix, Matrix>(), py::arg("label"), py::arg("dt"), py::arg("X"), py::arg("Y"))
      .def_readonly("label", &PySnapshot::label)
      .def_readonly("dt", &PySnapshot::dt)
      .def_readonly("X", &PySnapshot::X)
      .def_readonly("Y", &PySnapshot::Y)
      .def("__repr__", [](const PySnapshot& s) {
        return "<Snapshots " + s.label + ": " + std::to_string(s.X.cols()) + " pairs>";
      });

  m.def("collect", &collect, py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("synthesize_json", &synthesize_json, py::arg("config"), py::arg("snapshots"));

  m.def(
      "drift_generator",
      [](const PySnapshot& s, int q) { return drift_generator(fit_koopman(to_set(s), build_basis(static_cast<int>(s.X.rows()), q))); },
      py::arg("snapshots"), py::arg("q"));
  m.def(
      "divergence_estimate",
      [](const Matrix& L, int n, int q) { return divergence_estimate(L, build_basis(n, q)).coeffs(); }, py::arg("L"),
      py::arg("n"), py::arg("q"));

  m.def(
      "eval_control",
      [](const std::string& controller, const Vector& x) { return eval_control(controller_from_json(parse(controller)), x); },
      py::arg("controller"), py::arg("x"));
  m.def("validate_json", &validate_json, py::arg("config"), py::arg("controller"), py::arg("open_loop") = false,
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "simulate",
      [](const std::string& system, const std::string& controller, const Vector& x0, double dt, double t_final) {
        const SystemModel model = make_benchmark(system);
        FeedbackLaw law = open_loop(model.m);
        if (!controller.empty()) law = feedback_law(controller_from_json(parse(controller)));
        const Trajectory t = simulate(model, law, x0, dt, t_final);
        Matrix states(static_cast<Eigen::Index>(t.x.size()), model.n);
        for (std::size_t k = 0; k < t.x.size(); ++k) states.row(static_cast<Eigen::Index>(k)) = t.x[k].transpose();
        return py::make_tuple(t.t, states, to_string(t.status));
      },
      py::arg("system"), py::arg("controller"), py::arg("x0"), py::arg("dt") = 0.01, py::arg("t_final") = 30.0);

  m.def(
      "solve_sdp_json", [](const std::string& problem) { return to_json(sdp::solve(sdp::problem_from_json(parse(problem)))).dump(); },
      py::arg("problem"));
}
