#pragma once

// Declarative run configuration (JSON) tying a system, sampling, basis, synthesis,
// solver and validation settings together, plus the four shipped case-study presets.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "densyn/dynamics.hpp"
#include "densyn/edmd.hpp"
#include "densyn/sdp.hpp"
#include "densyn/sos.hpp"
#include "densyn/synthesis.hpp"

namespace densyn {

/// Invalid or inconsistent configuration. `kind` tells the front end which exit code
/// applies: sampling problems are data errors, the basis degree rule is an SOS error.
class ConfigError : public std::runtime_error {
 public:
  enum class Kind { general, data, degree };
  ConfigError(Kind kind, const std::string& what) : std::runtime_error(what), kind(kind) {}
  Kind kind;
};

struct RunConfig {
  std::string system = "vdp";  // benchmark name, or "external"
  // External runs read snapshot CSVs by label ("zero", "e1", ...); n and m come from here.
  std::map<std::string, std::string> snapshot_files;
  int n = 0;
  int m = 0;
  std::vector<double> inertia{2.0, 1.0, 2.0 / 3.0};  // rigid body only
  int basis_degree = 6;
  SampleConfig sample;
  SynthesisSpec synthesis;
  FitOptions fit;
  sdp::SolverParams solver;
  ValidationConfig validation;
  int certificate_samples = 10000;
  std::string output_dir = "run";

  bool is_external() const { return system == "external"; }
  /// Builds the bundled model; throws for external systems.
  SystemModel model() const;
  /// Labels zero, e1..em.
  std::vector<InputLabel> labels() const;

  /// Cross-field checks; fills derived fields (n, m for benchmarks, default b).
  void validate();
};

nlohmann::json to_json(const RunConfig& c);
/// Parses and validates. Unknown keys are rejected so typos surface early.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// vdp | pendulum | lorenz | rigid_body
RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace densyn
