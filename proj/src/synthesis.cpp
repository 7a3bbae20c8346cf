#include "densyn/synthesis.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "densyn/parallel.hpp"

namespace densyn {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vector uniform_point(const std::vector<std::pair<double, double>>& box, std::uint64_t seed) {
  Vector x(static_cast<Eigen::Index>(box.size()));
  for (std::size_t k = 0; k < box.size(); ++k) {
    const auto [lo, hi] = box[k];
    x[static_cast<Eigen::Index>(k)] = lo + (hi - lo) * unit_uniform(sub_seed(seed, k));
  }
  return x;
}

nlohmann::json box_to_json(const std::vector<std::pair<double, double>>& box) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [lo, hi] : box) j.push_back({lo, hi});
  return j;
}

std::vector<std::pair<double, double>> box_from_json(const nlohmann::json& j) {
  std::vector<std::pair<double, double>> box;
  for (const auto& e : j) box.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
  return box;
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

nlohmann::json to_json(const Controller& ctrl) {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : ctrl.c) cs.push_back(to_json(c));
  return {{"a", to_json(ctrl.a)},     {"c", cs},
          {"alpha", ctrl.alpha},      {"b", to_json(ctrl.b)},
          {"guard_eta", ctrl.guard_eta}, {"provenance", ctrl.provenance}};
}

Controller controller_from_json(const nlohmann::json& j) {
  Controller ctrl;
  ctrl.a = poly_from_json(j.at("a"));
  for (const auto& c : j.at("c")) ctrl.c.push_back(poly_from_json(c));
  ctrl.alpha = j.at("alpha").get<int>();
  ctrl.b = poly_from_json(j.at("b"));
  ctrl.guard_eta = j.value("guard_eta", 1e-9);
  ctrl.provenance = j.value("provenance", nlohmann::json::object());
  for (const auto& c : ctrl.c) {
    if (c.dim() != ctrl.a.dim()) throw std::invalid_argument("controller: a and c live in different state dimensions");
  }
  return ctrl;
}

Vector eval_control(const Controller& ctrl, const Vector& x) {
  if (x.size() != ctrl.n()) throw std::invalid_argument("eval_control: state has the wrong dimension");
  if (!x.allFinite()) throw std::invalid_argument("eval_control: non-finite state");
  const double av = ctrl.a(x);
  if (!(std::abs(av) >= ctrl.guard_eta)) {
    std::ostringstream os;
    os << "eval_control: |a(x)| = " << std::abs(av) << " below guard " << ctrl.guard_eta << " at x = ["
       << x.transpose() << "]";
    throw GuardViolation(os.str(), x, av);
  }
  Vector u(ctrl.m());
  for (int j = 0; j < ctrl.m(); ++j) u[j] = ctrl.c[static_cast<std::size_t>(j)](x) / av;
  return u;
}

FeedbackLaw feedback_law(const Controller& ctrl, GuardMode mode) {
  if (mode == GuardMode::abort) {
    return [ctrl](const Vector& x) { return eval_control(ctrl, x); };
  }
  auto last = std::make_shared<Vector>(Vector::Zero(ctrl.m()));
  return [ctrl, last](const Vector& x) {
    try {
      *last = eval_control(ctrl, x);
    } catch (const GuardViolation&) {
    }
    return *last;
  };
}

FeedbackLaw open_loop(int m) {
  return [m](const Vector&) { return Vector::Zero(m).eval(); };
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::data: return "data";
    case Stage::fit: return "fit";
    case Stage::sos: return "sos";
    case Stage::sdp: return "sdp";
  }
  return "unknown";
}

nlohmann::json to_json(const CertificateReport& r) {
  return {{"samples", r.samples},
          {"tolerance", r.tolerance},
          {"min_value", r.min_value},
          {"violation_fraction", r.violation_fraction},
          {"raw_min_value", r.raw_min_value},
          {"raw_violation_fraction", r.raw_violation_fraction}};
}

std::string snapshot_digest(const SnapshotSet& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::string label = s.label.name();
  hash_bytes(h, label.data(), label.size());
  hash_bytes(h, &s.dt, sizeof s.dt);
  const Eigen::Index rows = s.X.rows(), cols = s.X.cols();
  hash_bytes(h, &rows, sizeof rows);
  hash_bytes(h, &cols, sizeof cols);
  hash_bytes(h, s.X.data(), sizeof(double) * static_cast<std::size_t>(s.X.size()));
  hash_bytes(h, s.Y.data(), sizeof(double) * static_cast<std::size_t>(s.Y.size()));
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

SynthesisResult synthesize_from_generators(const GeneratorSet& gen, const SynthesisSpec& spec_in,
                                           const SynthesisOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  SynthesisResult res;
  res.generators = gen;
  SynthesisSpec spec = spec_in;

  CompiledSdp compiled;
  try {
    spec.validate(gen.n(), gen.m());
    res.certificate_degree =
        spec.certificate_degree < 0 ? automatic_certificate_degree(gen, spec) : spec.certificate_degree;
    res.program = build_program(gen, spec);
    compiled = compile_sdp(res.program);
  } catch (const SdpFailure& e) {
    // A coefficient no decision can reach makes the program infeasible before solving.
    throw StageError(Stage::sdp, e.what());
  } catch (const SosError& e) {
    throw StageError(Stage::sos, e.what());
  } catch (const std::invalid_argument& e) {
    throw StageError(Stage::sos, e.what());
  }
  res.gram_block_sizes = compiled.problem.block_sizes;
  res.equality_rows = compiled.problem.num_constraints();

  res.solution = sdp::solve(compiled.problem, opts.solver);
  if (res.solution.status == sdp::Status::optimal) collapse_split(compiled, res.solution);
  DecisionVector dv;
  try {
    dv = extract_solution(res.program, compiled, res.solution, opts.snap_tol);
  } catch (const SdpFailure& e) {
    std::ostringstream os;
    os << e.what() << "; primal residual " << e.primal_residual << ", dual residual " << e.dual_residual
       << ", gap " << e.duality_gap;
    throw StageError(Stage::sdp, os.str());
  }

  Controller& ctrl = res.controller;
  ctrl.a = dv.a;
  ctrl.c = dv.c;
  ctrl.alpha = spec.alpha;
  ctrl.b = spec.b;
  ctrl.provenance = {{"spec", to_json(spec)},
                     {"basis_degree", gen.basis->degree()},
                     {"dt", gen.dt},
                     {"certificate_degree", res.certificate_degree},
                     {"sdp",
                      {{"status", sdp::to_string(res.solution.status)},
                       {"iterations", res.solution.iterations},
                       {"objective", res.solution.primal_objective}}}};
  res.wall_seconds = seconds_since(t0);
  return res;
}

SynthesisResult synthesize(const std::vector<SnapshotSet>& snapshots, const BasisPtr& basis, const SynthesisSpec& spec,
                           const SynthesisOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const SnapshotSet* zero = nullptr;
  int m = 0;
  for (const auto& s : snapshots) {
    if (s.label.is_zero()) {
      if (zero) throw StageError(Stage::data, "snapshot label 'zero' appears more than once");
      zero = &s;
    } else {
      m = std::max(m, s.label.channel + 1);
    }
  }
  if (!zero) throw StageError(Stage::data, "missing snapshot set for label 'zero'");
  std::vector<const SnapshotSet*> ordered(static_cast<std::size_t>(m), nullptr);
  for (const auto& s : snapshots) {
    if (s.label.is_zero()) continue;
    auto& slot = ordered[static_cast<std::size_t>(s.label.channel)];
    if (slot) throw StageError(Stage::data, "snapshot label '" + s.label.name() + "' appears more than once");
    slot = &s;
  }
  for (int j = 0; j < m; ++j) {
    if (!ordered[static_cast<std::size_t>(j)]) {
      throw StageError(Stage::data, "missing snapshot set for label '" + InputLabel::unit(j).name() + "'");
    }
  }
  if (m == 0) throw StageError(Stage::data, "no step-input snapshot sets (labels e1..em) were given");
  if (static_cast<int>(spec.deg_c.size()) != m) {
    throw StageError(Stage::data, "snapshot sets cover " + std::to_string(m) + " input channels but the spec has " +
                                      std::to_string(spec.deg_c.size()));
  }
  ordered.insert(ordered.begin(), zero);
  for (const auto* s : ordered) {
    if (s->n() != basis->dim()) {
      throw StageError(Stage::data, "snapshot set '" + s->label.name() + "' has state dimension " +
                                        std::to_string(s->n()) + ", basis expects " + std::to_string(basis->dim()));
    }
    if (s->dt != zero->dt) throw StageError(Stage::data, "snapshot sets use different sampling steps dt");
    if (static_cast<std::size_t>(s->T()) < basis->size()) {
      throw StageError(Stage::data, "snapshot set '" + s->label.name() + "' has " + std::to_string(s->T()) +
                                        " pairs, fewer than the " + std::to_string(basis->size()) + " basis functions");
    }
  }

  std::vector<KoopmanFit> fits(ordered.size());
  std::vector<std::string> errors(ordered.size());
  parallel_for(ordered.size(), [&](std::size_t i) {
    try {
      fits[i] = fit_koopman(*ordered[i], basis, opts.fit);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors) {
    if (!e.empty()) throw StageError(Stage::fit, e);
  }
  GeneratorSet gen;
  try {
    gen = build_generators(fits[0], std::vector<KoopmanFit>(fits.begin() + 1, fits.end()));
  } catch (const std::exception& e) {
    throw StageError(Stage::fit, e.what());
  }
  if (!gen.L0.allFinite()) throw StageError(Stage::fit, "drift generator has non-finite entries");

  SynthesisResult res = synthesize_from_generators(gen, spec, opts);
  nlohmann::json data = nlohmann::json::array();
  for (const auto* s : ordered) {
    data.push_back({{"label", s->label.name()}, {"pairs", s->T()}, {"digest", snapshot_digest(*s)}});
  }
  res.controller.provenance["data"] = data;
  res.controller.provenance["fit_residuals"] = gen.fit_residuals;
  res.wall_seconds = seconds_since(t0);
  return res;
}

Vector decisions_from_controller(const DecisionLayout& layout, const Controller& ctrl) {
  if (ctrl.m() != layout.m || ctrl.n() != layout.n) {
    throw std::invalid_argument("decisions_from_controller: controller does not match the decision layout");
  }
  Vector d(layout.size());
  Eigen::Index pos = 0;
  if (!layout.a_fixed) {
    for (std::size_t k : layout.a_free) d[pos++] = ctrl.a.coeff(std::span<const int>((*layout.a_basis)[k].exponents));
  }
  for (int j = 0; j < layout.m; ++j) {
    const auto& cb = *layout.c_bases[static_cast<std::size_t>(j)];
    for (std::size_t k : layout.c_free[static_cast<std::size_t>(j)]) {
      d[pos++] = ctrl.c[static_cast<std::size_t>(j)].coeff(std::span<const int>(cb[k].exponents));
    }
  }
  return d;
}

CertificateReport certificate_diagnostics(const Controller& ctrl, const GeneratorSet& gen, const SynthesisSpec& spec_in,
                                          const std::vector<std::pair<double, double>>& box, int samples,
                                          std::uint64_t seed, double tolerance) {
  SynthesisSpec spec = spec_in;
  spec.validate(gen.n(), gen.m());
  if (static_cast<int>(box.size()) != gen.n()) throw std::invalid_argument("certificate_diagnostics: box dimension mismatch");
  const DecisionLayout layout = make_layout(gen.n(), gen.m(), spec);
  const Vector d = decisions_from_controller(layout, ctrl);
  const PolyVec certified = assemble_stability_map(gen, spec).apply(d);
  const PolyVec raw = assemble_raw_stability_map(gen, spec).apply(d);

  CertificateReport r;
  r.samples = samples;
  r.tolerance = tolerance;
  r.min_value = std::numeric_limits<double>::infinity();
  r.raw_min_value = r.min_value;
  int bad = 0, raw_bad = 0;
  for (int i = 0; i < samples; ++i) {
    const Vector x = uniform_point(box, sub_seed(seed, static_cast<std::uint64_t>(i)));
    const double v = certified(x);
    const double w = raw(x);
    r.min_value = std::min(r.min_value, v);
    r.raw_min_value = std::min(r.raw_min_value, w);
    bad += v < -tolerance;
    raw_bad += w < -tolerance;
  }
  if (samples > 0) {
    r.violation_fraction = static_cast<double>(bad) / samples;
    r.raw_violation_fraction = static_cast<double>(raw_bad) / samples;
  }
  return r;
}

void ValidationConfig::validate(int n) const {
  if (n_trials < 0) throw std::invalid_argument("validation: n_trials must be nonnegative");
  if (static_cast<int>(box.size()) != n) throw std::invalid_argument("validation: box must have one interval per state");
  for (const auto& [lo, hi] : box) {
    if (!(lo <= hi)) throw std::invalid_argument("validation: box lower bound exceeds upper bound");
  }
  if (!(t_final > 0.0)) throw std::invalid_argument("validation: t_final must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("validation: dt must be positive");
  if (!(eps_norm > 0.0)) throw std::invalid_argument("validation: eps_norm must be positive");
  if (!(blowup_bound > 0.0)) throw std::invalid_argument("validation: blowup_bound must be positive");
}

nlohmann::json to_json(const ValidationConfig& v) {
  return {{"n_trials", v.n_trials},
          {"box", box_to_json(v.box)},
          {"t_final", v.t_final},
          {"dt", v.dt},
          {"eps_norm", v.eps_norm},
          {"seed", v.seed},
          {"blowup_bound", v.blowup_bound},
          {"guard", v.guard == GuardMode::abort ? "abort" : "hold_last"}};
}

ValidationConfig validation_config_from_json(const nlohmann::json& j) {
  ValidationConfig v;
  v.n_trials = j.value("n_trials", v.n_trials);
  if (j.contains("box")) v.box = box_from_json(j.at("box"));
  v.t_final = j.value("t_final", v.t_final);
  v.dt = j.value("dt", v.dt);
  v.eps_norm = j.value("eps_norm", v.eps_norm);
  v.seed = j.value("seed", v.seed);
  v.blowup_bound = j.value("blowup_bound", v.blowup_bound);
  const std::string guard = j.value("guard", std::string("abort"));
  if (guard == "abort") {
    v.guard = GuardMode::abort;
  } else if (guard == "hold_last") {
    v.guard = GuardMode::hold_last;
  } else {
    throw std::invalid_argument("validation: guard must be 'abort' or 'hold_last', got '" + guard + "'");
  }
  return v;
}

Vector trial_initial_state(const ValidationConfig& cfg, int i) {
  return uniform_point(cfg.box, sub_seed(cfg.seed, static_cast<std::uint64_t>(i)));
}

ValidationReport validate(const std::function<FeedbackLaw()>& make_law, const SystemModel& model,
                          const ValidationConfig& cfg, std::vector<Trajectory>* trajectories) {
  cfg.validate(model.n);
  const auto t0 = std::chrono::steady_clock::now();
  ValidationReport r;
  r.n_trials = cfg.n_trials;
  r.eps_norm = cfg.eps_norm;
  r.t_final = cfg.t_final;
  std::ostringstream crit;
  crit << "|x(" << cfg.t_final << ")| < " << cfg.eps_norm;
  r.criterion = crit.str();
  r.trials.resize(static_cast<std::size_t>(cfg.n_trials));
  if (trajectories) trajectories->assign(static_cast<std::size_t>(cfg.n_trials), Trajectory{});

  parallel_for(static_cast<std::size_t>(cfg.n_trials), [&](std::size_t i) {
    TrialOutcome& out = r.trials[i];
    out.x0 = trial_initial_state(cfg, static_cast<int>(i));
    Trajectory traj = simulate(model, make_law(), out.x0, cfg.dt, cfg.t_final, cfg.blowup_bound);
    out.status = traj.status;
    out.message = traj.message;
    out.final_norm = traj.final_state().norm();
    out.converged = traj.status == Trajectory::Status::completed && out.final_norm < cfg.eps_norm;
    if (trajectories) (*trajectories)[i] = std::move(traj);
  });

  for (const auto& t : r.trials) {
    r.converged_count += t.converged;
    r.divergence_count += t.status == Trajectory::Status::blowup || t.status == Trajectory::Status::non_finite;
    r.guard_failures += t.status == Trajectory::Status::controller_error;
  }
  r.wall_seconds = seconds_since(t0);
  return r;
}

ValidationReport validate(const Controller& ctrl, const SystemModel& model, const ValidationConfig& cfg) {
  if (ctrl.n() != model.n || ctrl.m() != model.m) {
    throw std::invalid_argument("validate: controller dimensions do not match the model");
  }
  return validate([&] { return feedback_law(ctrl, cfg.guard); }, model, cfg);
}

nlohmann::json to_json(const ValidationReport& r) {
  nlohmann::json norms = nlohmann::json::array();
  for (const auto& t : r.trials) norms.push_back(t.final_norm);
  return {{"n_trials", r.n_trials},
          {"converged_count", r.converged_count},
          {"converged_fraction", r.converged_fraction()},
          {"divergence_count", r.divergence_count},
          {"guard_failures", r.guard_failures},
          {"criterion", {{"eps_norm", r.eps_norm}, {"t_final", r.t_final}, {"text", r.criterion}}},
          {"final_norms", norms},
          {"wall_seconds", r.wall_seconds}};
}

void write_validation_csv(const std::string& path, const ValidationReport& r) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "trial,converged,final_norm,status";
  const Eigen::Index n = r.trials.empty() ? 0 : r.trials.front().x0.size();
  for (Eigen::Index k = 0; k < n; ++k) f << ",x0_" << k + 1;
  f << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < r.trials.size(); ++i) {
    const auto& t = r.trials[i];
    f << i << ',' << (t.converged ? 1 : 0) << ',' << t.final_norm << ',' << to_string(t.status);
    for (Eigen::Index k = 0; k < t.x0.size(); ++k) f << ',' << t.x0[k];
    f << '\n';
  }
}

Matrix closed_loop_jacobian(const SystemModel& model, const FeedbackLaw& law, const Vector& x, double h) {
  auto f = [&](const Vector& z) { return model.rhs(z, law(z)); };
  Matrix J(model.n, model.n);
  for (int k = 0; k < model.n; ++k) {
    Vector xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    J.col(k) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

double spectral_abscissa(const Matrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("spectral_abscissa: matrix must be square");
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

}  // namespace densyn
