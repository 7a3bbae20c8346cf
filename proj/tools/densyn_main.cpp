// Batch front end: collect -> synthesize -> simulate -> report, one output directory per run.
//
// Exit codes: 0 success, 1 usage or general error, 2 data, 3 fit, 4 SOS or degree rule,
// 5 SDP infeasible or not solved.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include "densyn/config.hpp"
#include "densyn/parallel.hpp"
#include "densyn/synthesis.hpp"

namespace fs = std::filesystem;
using namespace densyn;

namespace {

enum Exit { ok = 0, general = 1, data = 2, fit = 3, sos = 4, sdp_fail = 5 };

bool g_verbose = false;

void log(const std::string& msg) {
  if (g_verbose) std::cerr << "[densyn] " << msg << '\n';
}

struct CliError : std::runtime_error {
  CliError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

int exit_code(Stage s) {
  switch (s) {
    case Stage::data: return data;
    case Stage::fit: return fit;
    case Stage::sos: return sos;
    case Stage::sdp: return sdp_fail;
  }
  return general;
}

int exit_code(ConfigError::Kind k) {
  switch (k) {
    case ConfigError::Kind::data: return data;
    case ConfigError::Kind::degree: return sos;
    default: return general;
  }
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream f(p);
  if (!f) throw CliError(general, "cannot write " + p.string());
  f << j.dump(2) << '\n';
}

std::optional<nlohmann::json> read_json(const fs::path& p) {
  std::ifstream f(p);
  if (!f) return std::nullopt;
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Exclusive ownership of an output directory for the lifetime of one command.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".densyn.lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw CliError(general, "output directory " + dir.string() + " is locked by another run (remove " +
                                  path_.string() + " if no run is active)");
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    if (::write(fd_, pid.data(), pid.size()) < 0) log("could not record pid in lock file");
  }
  ~DirLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg;
  if (g.config.rfind("preset:", 0) == 0) {
    cfg = preset(g.config.substr(7));
  } else if (!g.config.empty()) {
    cfg = load_run_config(g.config);
  } else if (!g.out.empty() && fs::exists(fs::path(g.out) / "config.json")) {
    cfg = load_run_config((fs::path(g.out) / "config.json").string());
  } else {
    throw CliError(general, "no configuration: pass --config <file> or --config preset:<name>");
  }
  if (!g.out.empty()) cfg.output_dir = g.out;
  if (g.seed) {
    cfg.sample.seed = *g.seed;
    cfg.validation.seed = *g.seed;
  }
  cfg.validate();
  return cfg;
}

fs::path prepare_dir(const RunConfig& cfg) {
  fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  return dir;
}

fs::path snapshot_path(const RunConfig& cfg, const fs::path& dir, const InputLabel& label) {
  if (cfg.is_external()) return cfg.snapshot_files.at(label.name());
  return dir / "snapshots" / (label.name() + ".csv");
}

int cmd_collect(const RunConfig& cfg) {
  if (cfg.is_external()) throw CliError(general, "collect needs a bundled benchmark system, not external data");
  const fs::path dir = prepare_dir(cfg);
  DirLock lock(dir);
  fs::create_directories(dir / "snapshots");
  write_json(dir / "config.json", to_json(cfg));
  const SystemModel model = cfg.model();
  const std::size_t Q = basis_size(cfg.n, cfg.basis_degree);
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& label : cfg.labels()) {
    SnapshotSet s;
    try {
      s = collect_snapshots(model, label, cfg.sample, Q);
    } catch (const InsufficientData& e) {
      throw CliError(data, std::string(e.what()) + " (the basis has " + std::to_string(Q) + " functions)");
    }
    if (static_cast<std::size_t>(s.T()) < 2 * Q) {
      std::cerr << "warning: label " << label.name() << " kept " << s.T() << " pairs for " << Q
                << " basis functions; the regression is barely determined\n";
    }
    const fs::path csv = snapshot_path(cfg, dir, label);
    write_snapshot_csv(csv.string(), s);
    write_json(fs::path(csv).replace_extension(".json"),
               {{"label", label.name()},
                {"system", cfg.system},
                {"pairs", s.T()},
                {"digest", snapshot_digest(s)},
                {"sampling", to_json(cfg.sample)},
                {"created_utc", utc_now()}});
    summary.push_back({{"label", label.name()}, {"pairs", s.T()}, {"file", csv.filename().string()}});
    log("collected " + std::to_string(s.T()) + " pairs for label " + label.name());
    std::cout << label.name() << ": " << s.T() << " pairs -> " << csv.string() << '\n';
  }
  write_json(dir / "collect.json", {{"system", cfg.system}, {"labels", summary}});
  return ok;
}

int cmd_synthesize(const RunConfig& cfg) {
  const fs::path dir = prepare_dir(cfg);
  DirLock lock(dir);
  write_json(dir / "config.json", to_json(cfg));
  std::vector<SnapshotSet> snaps;
  for (const auto& label : cfg.labels()) {
    const fs::path p = snapshot_path(cfg, dir, label);
    if (!fs::exists(p)) throw CliError(data, "missing snapshot file for label '" + label.name() + "': " + p.string());
    try {
      snaps.push_back(read_snapshot_csv(p.string()));
    } catch (const std::exception& e) {
      throw CliError(data, "cannot read snapshot file " + p.string() + ": " + e.what());
    }
    if (!(snaps.back().label == label)) {
      throw CliError(data, p.string() + " holds label '" + snaps.back().label.name() + "', expected '" + label.name() + "'");
    }
  }
  SynthesisOptions opts;
  opts.fit = cfg.fit;
  opts.solver = cfg.solver;
  opts.solver.verbose = g_verbose;
  log("fitting " + std::to_string(snaps.size()) + " Koopman matrices with q = " + std::to_string(cfg.basis_degree));

  SynthesisResult res;
  try {
    res = synthesize(snaps, build_basis(cfg.n, cfg.basis_degree), cfg.synthesis, opts);
  } catch (const StageError& e) {
    write_json(dir / "synthesis.json", {{"status", "failed"}, {"stage", to_string(e.stage)}, {"error", e.what()}});
    throw CliError(exit_code(e.stage), to_string(e.stage) + " stage: " + e.what());
  }
  write_json(dir / "generators.json", to_json(res.generators));
  write_json(dir / "controller.json", to_json(res.controller));
  const CertificateReport cert =
      certificate_diagnostics(res.controller, res.generators, cfg.synthesis, cfg.sample.box, cfg.certificate_samples,
                              cfg.sample.seed);
  write_json(dir / "certificate.json", to_json(cert));
  nlohmann::json stats{{"status", "ok"},
                       {"fit_residuals", res.generators.fit_residuals},
                       {"fit_data_residuals", res.generators.fit_data_residuals},
                       {"decisions", res.program.layout.size()},
                       {"gram_block_sizes", res.gram_block_sizes},
                       {"equality_rows", res.equality_rows},
                       {"certificate_degree", res.certificate_degree},
                       {"sdp",
                        {{"status", sdp::to_string(res.solution.status)},
                         {"iterations", res.solution.iterations},
                         {"primal_objective", res.solution.primal_objective},
                         {"dual_objective", res.solution.dual_objective},
                         {"primal_residual", res.solution.primal_residual},
                         {"dual_residual", res.solution.dual_residual},
                         {"duality_gap", res.solution.duality_gap},
                         {"message", res.solution.message}}},
                       {"wall_seconds", res.wall_seconds}};
  write_json(dir / "synthesis.json", stats);
  for (int j = 0; j < res.controller.m(); ++j) {
    std::cout << "u" << j + 1 << "(x) = " << to_string(res.controller.c[static_cast<std::size_t>(j)], 0.0) << '\n';
  }
  std::cout << "certificate: min " << cert.min_value << ", violations " << cert.violation_fraction
            << " (unfiltered min " << cert.raw_min_value << ")\n";
  return ok;
}

int cmd_simulate(const RunConfig& cfg, bool open, int keep, const std::string& ctrl_path, const std::string& x0_text) {
  if (cfg.is_external()) throw CliError(general, "simulate needs a bundled benchmark model");
  const fs::path dir = prepare_dir(cfg);
  DirLock lock(dir);
  const SystemModel model = cfg.model();
  std::function<FeedbackLaw()> make_law;
  std::optional<Controller> ctrl;
  if (open) {
    make_law = [&] { return open_loop(model.m); };
  } else {
    const fs::path p = ctrl_path.empty() ? dir / "controller.json" : fs::path(ctrl_path);
    auto j = read_json(p);
    if (!j) throw CliError(data, "cannot read controller file " + p.string());
    ctrl = controller_from_json(*j);
    if (ctrl->n() != model.n || ctrl->m() != model.m) {
      throw CliError(data, "controller has n = " + std::to_string(ctrl->n()) + ", m = " + std::to_string(ctrl->m()) +
                               " but " + cfg.system + " has n = " + std::to_string(model.n) +
                               ", m = " + std::to_string(model.m));
    }
    make_law = [&] { return feedback_law(*ctrl, cfg.validation.guard); };
  }

  const std::string tag = open ? "open_loop" : "closed_loop";
  const fs::path traj_dir = dir / ("trajectories_" + tag);
  fs::create_directories(traj_dir);

  if (!x0_text.empty()) {
    Vector x0(model.n);
    std::stringstream ss(x0_text);
    std::string item;
    int k = 0;
    while (std::getline(ss, item, ',')) {
      if (k >= model.n) throw CliError(general, "--x0 has more than n entries");
      x0[k++] = std::stod(item);
    }
    if (k != model.n) throw CliError(general, "--x0 needs exactly n comma-separated entries");
    Trajectory t = simulate(model, make_law(), x0, cfg.validation.dt, cfg.validation.t_final, cfg.validation.blowup_bound);
    const fs::path p = traj_dir / "single.csv";
    write_trajectory_csv(p.string(), t);
    std::cout << "final |x| = " << t.final_state().norm() << " (" << to_string(t.status) << ") -> " << p.string() << '\n';
    return ok;
  }

  std::vector<Trajectory> trajs;
  const ValidationReport rep = validate(make_law, model, cfg.validation, &trajs);
  for (int i = 0; i < std::min<int>(keep, static_cast<int>(trajs.size())); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "trial_%03d.csv", i);
    write_trajectory_csv((traj_dir / name).string(), trajs[static_cast<std::size_t>(i)]);
  }
  nlohmann::json j = to_json(rep);
  j["mode"] = tag;
  j["validation"] = to_json(cfg.validation);
  if (!open && model.n > 0) {
    const Matrix J = closed_loop_jacobian(model, feedback_law(*ctrl), Vector::Zero(model.n));
    j["linearization_spectral_abscissa"] = spectral_abscissa(J);
  }
  write_json(dir / ("validation_" + tag + ".json"), j);
  write_validation_csv((dir / ("validation_" + tag + ".csv")).string(), rep);
  std::cout << tag << ": " << rep.converged_count << "/" << rep.n_trials << " trials converged (" << rep.criterion
            << "), " << rep.divergence_count << " diverged, " << rep.guard_failures << " guard failures\n";
  return ok;
}

// Flattens nested JSON into "a.b.c" -> value for field-level diffs.
void flatten(const nlohmann::json& j, const std::string& prefix, std::map<std::string, nlohmann::json>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array() && !j.empty() && (j.front().is_object() || j.front().is_array())) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else {
    out[prefix] = j;
  }
}

nlohmann::json controller_terms(const nlohmann::json& ctrl) {
  nlohmann::json terms = nlohmann::json::object();
  const Controller c = controller_from_json(ctrl);
  auto add = [&](const std::string& name, const PolyVec& p) {
    for (std::size_t k = 0; k < p.basis().size(); ++k) {
      const double v = p.coeffs()[static_cast<Eigen::Index>(k)];
      if (v == 0.0) continue;
      std::string mono;
      for (std::size_t i = 0; i < p.basis()[k].exponents.size(); ++i) {
        const int e = p.basis()[k].exponents[i];
        if (e == 0) continue;
        if (!mono.empty()) mono += "*";
        mono += "x" + std::to_string(i + 1) + (e > 1 ? "^" + std::to_string(e) : "");
      }
      terms[name + "[" + (mono.empty() ? "1" : mono) + "]"] = v;
    }
  };
  add("a", c.a);
  for (std::size_t j = 0; j < c.c.size(); ++j) add("c" + std::to_string(j + 1), c.c[j]);
  return terms;
}

nlohmann::json summarize_run(const fs::path& dir) {
  nlohmann::json s;
  s["run"] = dir.string();
  auto stage = [&](const std::string& name, const std::optional<nlohmann::json>& j) {
    s["stages"][name] = j ? *j : nlohmann::json("missing stage");
  };
  stage("collect", read_json(dir / "collect.json"));
  auto synth = read_json(dir / "synthesis.json");
  if (synth && synth->value("status", "") == "ok") {
    stage("fit", nlohmann::json{{"fit_residuals", (*synth)["fit_residuals"]},
                                {"fit_data_residuals", (*synth)["fit_data_residuals"]}});
    stage("synthesize", *synth);
  } else {
    stage("fit", synth && synth->value("stage", "") != "data" && synth->value("stage", "") != "fit"
                     ? std::optional<nlohmann::json>(nlohmann::json("completed, but synthesis failed later"))
                     : std::nullopt);
    stage("synthesize", synth);
  }
  auto ctrl = read_json(dir / "controller.json");
  if (ctrl) s["controller"] = controller_terms(*ctrl);
  stage("certificate", read_json(dir / "certificate.json"));
  auto closed = read_json(dir / "validation_closed_loop.json");
  if (closed) closed->erase("final_norms");
  stage("validate", closed);
  if (auto openl = read_json(dir / "validation_open_loop.json")) {
    openl->erase("final_norms");
    s["open_loop"] = *openl;
  }
  return s;
}

std::string markdown(const nlohmann::json& s) {
  std::ostringstream md;
  md << "# Run " << s["run"].get<std::string>() << "\n\n";
  md << "| stage | state |\n|---|---|\n";
  for (const char* name : {"collect", "fit", "synthesize", "certificate", "validate"}) {
    const auto& v = s["stages"][name];
    std::string state = v.is_string() ? v.get<std::string>() : "done";
    if (std::string(name) == "synthesize" && v.is_object() && v.value("status", "") == "failed") state = "failed: " + v.value("error", "");
    md << "| " << name << " | " << state << " |\n";
  }
  const auto& st = s["stages"];
  if (st["synthesize"].is_object() && st["synthesize"].contains("sdp")) {
    const auto& sdp = st["synthesize"]["sdp"];
    md << "\nSDP: " << sdp["status"].get<std::string>() << " after " << sdp["iterations"] << " iterations, objective "
       << sdp["primal_objective"] << "\n";
  }
  if (s.contains("controller")) {
    md << "\n## Controller coefficients\n\n";
    for (const auto& [k, v] : s["controller"].items()) md << "- `" << k << "` = " << v << "\n";
  }
  if (st["certificate"].is_object()) {
    md << "\nCertificate: min " << st["certificate"]["min_value"] << ", violation fraction "
       << st["certificate"]["violation_fraction"] << " (unfiltered min " << st["certificate"]["raw_min_value"] << ")\n";
  }
  if (st["validate"].is_object()) {
    md << "\nClosed loop: " << st["validate"]["converged_count"] << "/" << st["validate"]["n_trials"]
       << " converged (" << st["validate"]["criterion"]["text"].get<std::string>() << ")\n";
  }
  if (s.contains("open_loop")) {
    md << "Open loop: " << s["open_loop"]["converged_count"] << "/" << s["open_loop"]["n_trials"] << " converged\n";
  }
  if (s.contains("diff")) {
    md << "\n## Differences against " << s["diff"]["other"].get<std::string>() << "\n\n";
    for (const auto& d : s["diff"]["fields"]) {
      md << "- `" << d["field"].get<std::string>() << "`: " << d["this"].dump() << " vs " << d["other"].dump() << "\n";
    }
  }
  return md.str();
}

int cmd_report(const fs::path& dir, const std::string& other) {
  if (!fs::is_directory(dir)) throw CliError(data, "run directory " + dir.string() + " does not exist");
  nlohmann::json s = summarize_run(dir);
  if (!other.empty()) {
    if (!fs::is_directory(other)) throw CliError(data, "run directory " + other + " does not exist");
    const nlohmann::json t = summarize_run(other);
    std::map<std::string, nlohmann::json> a, b;
    flatten(s.value("controller", nlohmann::json::object()), "controller", a);
    flatten(t.value("controller", nlohmann::json::object()), "controller", b);
    nlohmann::json fields = nlohmann::json::array();
    for (const auto& [k, v] : a) {
      auto it = b.find(k);
      if (it == b.end()) {
        fields.push_back({{"field", k}, {"this", v}, {"other", nullptr}});
      } else if (it->second != v) {
        fields.push_back({{"field", k}, {"this", v}, {"other", it->second}});
      }
    }
    for (const auto& [k, v] : b) {
      if (!a.contains(k)) fields.push_back({{"field", k}, {"this", nullptr}, {"other", v}});
    }
    s["diff"] = {{"other", other}, {"fields", fields}};
  }
  write_json(dir / "report.json", s);
  std::ofstream(dir / "report.md") << markdown(s);
  std::cout << markdown(s);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven density-function controller synthesis"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "run configuration (JSON file, or preset:<vdp|pendulum|lorenz|rigid_body>)");
  app.add_option("--out", g.out, "output directory (overrides output_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "seed for sampling and validation");
  app.add_flag("--verbose", g_verbose, "progress on stderr");
  app.footer("Worker threads: DENSYN_WORKERS (default: hardware concurrency).");

  auto* collect = app.add_subcommand("collect", "simulate the benchmark and write snapshot files");
  auto* synth = app.add_subcommand("synthesize", "fit generators, solve the SOS program, write the controller");
  auto* simulate_cmd = app.add_subcommand("simulate", "closed-loop (or open-loop) Monte-Carlo validation");
  bool open = false;
  int keep = 10;
  std::string ctrl_path, x0;
  simulate_cmd->add_flag("--open-loop", open, "apply u = 0 instead of the controller");
  simulate_cmd->add_option("--controller", ctrl_path, "controller JSON (default <out>/controller.json)");
  simulate_cmd->add_option("--trajectories", keep, "number of trial trajectories written as CSV")->check(CLI::NonNegativeNumber);
  simulate_cmd->add_option("--x0", x0, "simulate one trajectory from this comma-separated state");
  auto* report = app.add_subcommand("report", "summarize a run directory");
  std::string diff;
  report->add_option("--diff", diff, "second run directory for a field-level controller diff");
  auto* preset_cmd = app.add_subcommand("preset", "print a shipped preset configuration");
  std::string preset_name;
  preset_cmd->add_option("name", preset_name, "vdp | pendulum | lorenz | rigid_body")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : general;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*preset_cmd) {
      std::cout << to_json(preset(preset_name)).dump(2) << '\n';
      return ok;
    }
    if (*report) {
      fs::path dir = g.out;
      if (dir.empty() && !g.config.empty()) dir = resolve_config(g).output_dir;
      if (dir.empty()) throw CliError(general, "report needs --out <run directory> or --config");
      return cmd_report(dir, diff);
    }
    const RunConfig cfg = resolve_config(g);
    log("system " + cfg.system + ", output " + cfg.output_dir + ", " + std::to_string(worker_count()) + " workers");
    if (*collect) return cmd_collect(cfg);
    if (*synth) return cmd_synthesize(cfg);
    if (*simulate_cmd) return cmd_simulate(cfg, open, keep, ctrl_path, x0);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind);
  } catch (const StageError& e) {
    std::cerr << "error: " << to_string(e.stage) << " stage: " << e.what() << '\n';
    return exit_code(e.stage);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return general;
  }
  return general;
}
