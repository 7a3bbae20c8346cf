#include "densyn/config.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <set>

namespace densyn {

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(ConfigError::Kind::general, where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError(ConfigError::Kind::general, "unknown key '" + key + "' in " + where);
  }
}

std::set<std::string> keys_of(const nlohmann::json& j) {
  std::set<std::string> keys;
  for (const auto& [key, value] : j.items()) keys.insert(key);
  return keys;
}

nlohmann::json solver_to_json(const sdp::SolverParams& p) {
  return {{"tol", p.tol},
          {"max_iter", p.max_iter},
          {"stall_factor", p.stall_factor},
          {"stall_iterations", p.stall_iterations}};
}

sdp::SolverParams solver_from_json(const nlohmann::json& j) {
  sdp::SolverParams p;
  p.tol = j.value("tol", p.tol);
  p.max_iter = j.value("max_iter", p.max_iter);
  p.stall_factor = j.value("stall_factor", p.stall_factor);
  p.stall_iterations = j.value("stall_iterations", p.stall_iterations);
  return p;
}

nlohmann::json fit_to_json(const FitOptions& f) {
  return {{"ridge", f.ridge}, {"sv_cutoff", f.sv_cutoff}, {"scale_monomials", f.scale_monomials}};
}

FitOptions fit_from_json(const nlohmann::json& j) {
  FitOptions f;
  f.ridge = j.value("ridge", f.ridge);
  f.sv_cutoff = j.value("sv_cutoff", f.sv_cutoff);
  f.scale_monomials = j.value("scale_monomials", f.scale_monomials);
  return f;
}

std::vector<std::pair<double, double>> cube(int n, double lo, double hi) {
  return std::vector<std::pair<double, double>>(static_cast<std::size_t>(n), {lo, hi});
}

// Settings shared by every preset: noise handling for the learned stability polynomial.
SynthesisSpec base_spec(int alpha, int m, int deg_c) {
  SynthesisSpec s;
  s.alpha = alpha;
  s.deg_c.assign(static_cast<std::size_t>(m), deg_c);
  s.c_min_degree = 1;
  s.fix_a_to_one = true;
  s.margin_eps = 1e-6;
  s.margin_power = 1;
  s.clean_tol = 1e-2;
  s.certificate_degree = -1;
  s.certificate_min_degree = 2;
  return s;
}

}  // namespace

SystemModel RunConfig::model() const {
  if (is_external()) throw ConfigError(ConfigError::Kind::general, "external systems have no bundled model");
  if (system == "rigid_body") return rigid_body(Eigen::Vector3d(inertia[0], inertia[1], inertia[2]));
  return make_benchmark(system);
}

std::vector<InputLabel> RunConfig::labels() const {
  std::vector<InputLabel> out{InputLabel::zero()};
  for (int j = 0; j < m; ++j) out.push_back(InputLabel::unit(j));
  return out;
}

void RunConfig::validate() {
  using K = ConfigError::Kind;
  if (is_external()) {
    if (n < 1 || m < 1) throw ConfigError(K::general, "external system needs positive n and m");
    for (const auto& label : labels()) {
      if (!snapshot_files.contains(label.name())) {
        throw ConfigError(K::data, "external system: no snapshot file for label '" + label.name() + "'");
      }
    }
  } else {
    if (inertia.size() != 3 || std::any_of(inertia.begin(), inertia.end(), [](double v) { return !(v > 0.0); })) {
      throw ConfigError(K::general, "inertia must list three positive values");
    }
    SystemModel mdl;
    try {
      mdl = model();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(K::general, e.what());
    }
    n = mdl.n;
    m = mdl.m;
    try {
      sample.validate(n);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(K::data, e.what());
    }
  }
  if (basis_degree < 1) throw ConfigError(K::general, "basis_degree must be at least 1");
  try {
    synthesis.validate(n, m);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(K::general, e.what());
  }
  const int deg_b = synthesis.b.actual_degree();
  int required = (synthesis.fix_a_to_one ? 0 : synthesis.deg_a) + deg_b;
  for (int d : synthesis.deg_c) required = std::max(required, d + deg_b);
  if (basis_degree < required) {
    throw ConfigError(K::degree, "basis degree q = " + std::to_string(basis_degree) +
                                     " is insufficient: deg(Ψ) ≥ max(deg(ab), deg(bc_j)) needs q ≥ " +
                                     std::to_string(required));
  }
  if (fit.ridge < 0.0 || !(fit.sv_cutoff >= 0.0)) throw ConfigError(K::general, "fit: ridge and sv_cutoff must be nonnegative");
  if (!(solver.tol > 0.0) || solver.max_iter < 1) throw ConfigError(K::general, "solver: tol must be positive, max_iter >= 1");
  try {
    validation.validate(n);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(K::general, e.what());
  }
  if (certificate_samples < 0) throw ConfigError(K::general, "certificate_samples must be nonnegative");
  if (output_dir.empty()) throw ConfigError(K::general, "output_dir must not be empty");
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j{{"system", c.system},
                   {"basis_degree", c.basis_degree},
                   {"sampling", to_json(c.sample)},
                   {"synthesis", to_json(c.synthesis)},
                   {"fit", fit_to_json(c.fit)},
                   {"solver", solver_to_json(c.solver)},
                   {"validation", to_json(c.validation)},
                   {"certificate_samples", c.certificate_samples},
                   {"output_dir", c.output_dir}};
  if (c.is_external()) {
    j["snapshot_files"] = c.snapshot_files;
    j["n"] = c.n;
    j["m"] = c.m;
  }
  if (c.system == "rigid_body") j["inertia"] = c.inertia;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"system", "snapshot_files", "n", "m", "inertia", "basis_degree", "sampling", "synthesis", "fit",
                       "solver", "validation", "certificate_samples", "output_dir"},
                      "run config");
  RunConfig c;
  try {
    c.system = j.value("system", c.system);
    if (j.contains("snapshot_files")) c.snapshot_files = j.at("snapshot_files").get<std::map<std::string, std::string>>();
    c.n = j.value("n", c.n);
    c.m = j.value("m", c.m);
    if (j.contains("inertia")) c.inertia = j.at("inertia").get<std::vector<double>>();
    c.basis_degree = j.value("basis_degree", c.basis_degree);
    if (j.contains("sampling")) {
      reject_unknown_keys(j.at("sampling"), keys_of(to_json(SampleConfig{})), "sampling");
      c.sample = sample_config_from_json(j.at("sampling"));
    }
    if (j.contains("synthesis")) {
      auto allowed = keys_of(to_json(SynthesisSpec{}));
      allowed.insert("b");
      reject_unknown_keys(j.at("synthesis"), allowed, "synthesis");
      c.synthesis = synthesis_spec_from_json(j.at("synthesis"));
    }
    if (j.contains("fit")) {
      reject_unknown_keys(j.at("fit"), keys_of(fit_to_json(FitOptions{})), "fit");
      c.fit = fit_from_json(j.at("fit"));
    }
    if (j.contains("solver")) {
      reject_unknown_keys(j.at("solver"), keys_of(solver_to_json(sdp::SolverParams{})), "solver");
      c.solver = solver_from_json(j.at("solver"));
    }
    if (j.contains("validation")) {
      reject_unknown_keys(j.at("validation"), keys_of(to_json(ValidationConfig{})), "validation");
      c.validation = validation_config_from_json(j.at("validation"));
    }
    c.certificate_samples = j.value("certificate_samples", c.certificate_samples);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(ConfigError::Kind::general, std::string("malformed run config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ConfigError::Kind::general, e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(ConfigError::Kind::general, "cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(ConfigError::Kind::general, path + ": " + e.what());
  }
  return run_config_from_json(j);
}

std::vector<std::string> preset_names() { return {"vdp", "pendulum", "lorenz", "rigid_body"}; }

RunConfig preset(const std::string& name) {
  constexpr double pi = std::numbers::pi;
  RunConfig c;
  c.system = name;
  c.output_dir = "runs/" + name;
  c.sample.n_init = 10000;
  c.sample.seed = 1;
  c.sample.horizon = 1;
  c.validation.n_trials = 100;
  c.validation.eps_norm = 0.05;
  c.validation.seed = 7;
  c.validation.dt = 0.01;
  if (name == "vdp") {
    c.basis_degree = 6;
    c.sample.dt = 0.01;
    c.sample.box = cube(2, -5.0, 5.0);
    c.synthesis = base_spec(6, 1, 4);
    c.validation.box = cube(2, -3.0, 3.0);
    c.validation.t_final = 30.0;
  } else if (name == "pendulum") {
    c.basis_degree = 5;
    c.sample.dt = 1e-3;
    c.sample.box = cube(2, -pi, pi);
    // Blow-up filtering keeps every sample; box-exit would drop a few pairs at the edge.
    c.sample.filter = SampleFilter::blowup;
    c.synthesis = base_spec(4, 1, 3);
    c.validation.box = cube(2, -pi / 2, pi / 2);
    c.validation.t_final = 30.0;
  } else if (name == "lorenz") {
    c.basis_degree = 5;
    c.sample.dt = 1e-3;
    c.sample.box = cube(3, -5.0, 5.0);
    c.synthesis = base_spec(4, 1, 3);
    c.validation.box = cube(3, -5.0, 5.0);
    c.validation.t_final = 10.0;
  } else if (name == "rigid_body") {
    c.basis_degree = 5;
    c.sample.dt = 1e-3;
    c.sample.box = cube(6, -3.0, 3.0);
    c.synthesis = base_spec(4, 3, 3);
    // b = |w + p|^2 + |p|^2 with state (w, p).
    PolyVec b(build_basis(6, 2));
    for (int i = 0; i < 3; ++i) {
      std::vector<int> e(6, 0);
      e[static_cast<std::size_t>(i)] = 2;
      b.coeffs()[static_cast<Eigen::Index>(b.basis().rank(e))] = 1.0;
      e.assign(6, 0);
      e[static_cast<std::size_t>(i + 3)] = 2;
      b.coeffs()[static_cast<Eigen::Index>(b.basis().rank(e))] = 2.0;
      e.assign(6, 0);
      e[static_cast<std::size_t>(i)] = 1;
      e[static_cast<std::size_t>(i + 3)] = 1;
      b.coeffs()[static_cast<Eigen::Index>(b.basis().rank(e))] = 2.0;
    }
    c.synthesis.b = b;
    c.validation.box = cube(6, -1.0, 1.0);
    c.validation.t_final = 30.0;
  } else {
    throw ConfigError(ConfigError::Kind::general, "unknown preset '" + name + "' (vdp, pendulum, lorenz, rigid_body)");
  }
  c.validate();
  return c;
}

}  // namespace densyn
