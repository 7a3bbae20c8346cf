#pragma once

// End-to-end pipeline (snapshots -> generators -> SOS -> SDP -> controller), the
// rational feedback law u_j = c_j / a, Monte-Carlo closed-loop validation and
// sampled checks of the certificate polynomial.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "densyn/dynamics.hpp"
#include "densyn/edmd.hpp"
#include "densyn/polybasis.hpp"
#include "densyn/sdp.hpp"
#include "densyn/sos.hpp"

namespace densyn {

struct Controller {
  PolyVec a;
  std::vector<PolyVec> c;
  int alpha = 0;
  PolyVec b;
  double guard_eta = 1e-9;
  nlohmann::json provenance = nlohmann::json::object();

  int n() const { return a.dim(); }
  int m() const { return static_cast<int>(c.size()); }
};

nlohmann::json to_json(const Controller& ctrl);
Controller controller_from_json(const nlohmann::json& j);

/// |a(x)| fell below guard_eta; no division was attempted.
class GuardViolation : public std::runtime_error {
 public:
  GuardViolation(const std::string& what, Vector x, double a_value)
      : std::runtime_error(what), x(std::move(x)), a_value(a_value) {}
  Vector x;
  double a_value;
};

/// u_j(x) = c_j(x) / a(x). Throws GuardViolation when |a(x)| < guard_eta.
Vector eval_control(const Controller& ctrl, const Vector& x);

enum class GuardMode {
  abort,       // propagate GuardViolation (the rollout stops)
  hold_last,   // reuse the previous input, zero if there is none
};

/// Feedback law for simulate(). With hold_last every call shares the remembered input,
/// so use one law per rollout.
FeedbackLaw feedback_law(const Controller& ctrl, GuardMode mode = GuardMode::abort);

/// Pipeline stages in the order they run; each failure is reported against one of them.
enum class Stage { data, fit, sos, sdp };
std::string to_string(Stage s);

class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, const std::string& what) : std::runtime_error(what), stage(stage) {}
  Stage stage;
};

struct SynthesisOptions {
  FitOptions fit;
  sdp::SolverParams solver;
  double snap_tol = 1e-7;
};

/// Sampled positivity of the stability polynomial for a fixed decision vector.
struct CertificateReport {
  int samples = 0;
  double tolerance = 1e-6;
  // The polynomial handed to the SOS test (after cleaning and degree limits).
  double min_value = 0.0;
  double violation_fraction = 0.0;
  // The unfiltered polynomial built from the learned generators.
  double raw_min_value = 0.0;
  double raw_violation_fraction = 0.0;
};

nlohmann::json to_json(const CertificateReport& r);

struct SynthesisResult {
  Controller controller;
  GeneratorSet generators;
  SosProgram program;
  sdp::SdpSolution solution;
  std::vector<int> gram_block_sizes;
  int equality_rows = 0;
  int certificate_degree = 0;
  double wall_seconds = 0.0;
};

/// Runs the pipeline. The snapshot list must contain the zero label and e_1..e_m exactly
/// once each, in any order. Errors are raised as StageError.
SynthesisResult synthesize(const std::vector<SnapshotSet>& snapshots, const BasisPtr& basis, const SynthesisSpec& spec,
                           const SynthesisOptions& opts = {});

/// The SOS and SDP stages only, starting from already learned generators.
SynthesisResult synthesize_from_generators(const GeneratorSet& gen, const SynthesisSpec& spec,
                                           const SynthesisOptions& opts = {});

/// Inverse of decisions_to_polys: reads the free coefficients of a and c back out.
Vector decisions_from_controller(const DecisionLayout& layout, const Controller& ctrl);

/// Evaluates the stability polynomial of ctrl at uniform points of the box.
CertificateReport certificate_diagnostics(const Controller& ctrl, const GeneratorSet& gen, const SynthesisSpec& spec,
                                          const std::vector<std::pair<double, double>>& box, int samples = 10000,
                                          std::uint64_t seed = 0, double tolerance = 1e-6);

struct ValidationConfig {
  int n_trials = 100;
  std::vector<std::pair<double, double>> box;
  double t_final = 30.0;
  double dt = 0.01;
  double eps_norm = 0.05;
  std::uint64_t seed = 0;
  double blowup_bound = 1e6;
  GuardMode guard = GuardMode::abort;

  void validate(int n) const;
};

nlohmann::json to_json(const ValidationConfig& v);
ValidationConfig validation_config_from_json(const nlohmann::json& j);

struct TrialOutcome {
  Vector x0;
  double final_norm = 0.0;
  bool converged = false;
  Trajectory::Status status = Trajectory::Status::completed;
  std::string message;
};

struct ValidationReport {
  int n_trials = 0;
  int converged_count = 0;
  int divergence_count = 0;  // blow-ups and non-finite states
  int guard_failures = 0;
  double eps_norm = 0.0;
  double t_final = 0.0;
  std::string criterion;
  std::vector<TrialOutcome> trials;
  double wall_seconds = 0.0;

  double converged_fraction() const { return n_trials > 0 ? static_cast<double>(converged_count) / n_trials : 0.0; }
};

/// Initial points of trial i, identical for every law given the same config.
Vector trial_initial_state(const ValidationConfig& cfg, int i);

/// Closed-loop rollouts from uniform initial points; trial i counts as converged when
/// |x(t_final)| < eps_norm. make_law is called once per trial. When trajectories is
/// given it receives every rollout, indexed by trial.
ValidationReport validate(const std::function<FeedbackLaw()>& make_law, const SystemModel& model,
                          const ValidationConfig& cfg, std::vector<Trajectory>* trajectories = nullptr);
ValidationReport validate(const Controller& ctrl, const SystemModel& model, const ValidationConfig& cfg);

/// u = 0 for every state.
FeedbackLaw open_loop(int m);

nlohmann::json to_json(const ValidationReport& r);
/// "trial,converged,final_norm,status,x0_1..x0_n".
void write_validation_csv(const std::string& path, const ValidationReport& r);

/// Central-difference Jacobian of x -> F(x) + G(x) law(x) at x.
Matrix closed_loop_jacobian(const SystemModel& model, const FeedbackLaw& law, const Vector& x, double h = 1e-6);

/// Largest real part among the eigenvalues of a square matrix.
double spectral_abscissa(const Matrix& A);

/// FNV-1a digest of the snapshot pairs, as 16 hex digits.
std::string snapshot_digest(const SnapshotSet& s);

}  // namespace densyn
