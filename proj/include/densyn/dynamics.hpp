#pragma once

// Benchmark control-affine systems xdot = F(x) + G(x) u, fixed-step RK4 integration,
// and snapshot collection under zero and unit-step inputs.
//
// This is the only place where F and G are evaluated; everything downstream sees
// snapshot pairs only.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "densyn/polybasis.hpp"

namespace densyn {

struct SystemModel {
  std::string name;
  int n = 0;
  int m = 0;
  std::function<Vector(const Vector&)> drift;         // F(x), length n
  std::function<Matrix(const Vector&)> input_matrix;  // G(x), n x m; column j is G_j

  Vector rhs(const Vector& x, const Vector& u) const;
};

/// Van der Pol: x1' = x2, x2' = (1 - x1^2) x2 - x1 + u.
SystemModel van_der_pol();
/// Inverted pendulum: x1' = x2, x2' = sin(x1) - 0.5 x2 + u.
SystemModel pendulum();
/// Lorenz with the input entering the second equation.
SystemModel lorenz(double sigma = 10.0, double rho = 28.0, double beta = 8.0 / 3.0);
/// Rigid body in angular velocity w and Rodrigues parameters p (state (w, p)):
///   w' = J^-1 S(w) J w + J^-1 u,  p' = H(p) w,
/// with S(v) the cross-product matrix (S(v) y = v x y) and H(p) = (I + S(p) + p p^T) / 2.
/// The inertia default diag(2, 1, 2/3) is an assumption; see the README.
SystemModel rigid_body(const Eigen::Vector3d& inertia = Eigen::Vector3d(2.0, 1.0, 2.0 / 3.0));

/// vdp | pendulum | lorenz | rigid_body
SystemModel make_benchmark(const std::string& name);

/// One classical Runge-Kutta step of xdot = F(x) + G(x) u with u held constant.
/// Non-finite entries in the result signal a failed step.
Vector rk4_step(const SystemModel& model, const Vector& x, const Vector& u, double dt);

/// Constant input applied while collecting data: zero, or the unit vector e_j.
struct InputLabel {
  int channel = -1;  // -1 for zero input, j (0-based) for e_{j+1}

  static InputLabel zero() { return {}; }
  static InputLabel unit(int j) { return {j}; }
  bool is_zero() const { return channel < 0; }
  Vector input(int m) const;
  /// "zero" or "e1", "e2", ... (1-based, matching file names).
  std::string name() const;
  static InputLabel parse(const std::string& s);
  friend bool operator==(const InputLabel&, const InputLabel&) = default;
};

enum class SampleFilter {
  box_exit,  // drop pairs whose successor leaves the sampling box
  blowup,    // drop only pairs whose successor norm exceeds blowup_bound
};

struct SampleConfig {
  double dt = 0.01;
  int n_init = 10000;
  std::vector<std::pair<double, double>> box;
  std::uint64_t seed = 0;
  int horizon = 1;
  SampleFilter filter = SampleFilter::box_exit;
  double blowup_bound = 1e6;

  void validate(int n) const;
};

nlohmann::json to_json(const SampleConfig& cfg);
SampleConfig sample_config_from_json(const nlohmann::json& j);

struct SnapshotSet {
  InputLabel label;
  Matrix X;  // n x T states
  Matrix Y;  // n x T successors
  double dt = 0.0;

  int n() const { return static_cast<int>(X.rows()); }
  int T() const { return static_cast<int>(X.cols()); }
};

/// Raised when too few snapshot pairs survive filtering for the requested regression.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform initial points in the box (identical across labels for a given seed),
/// each advanced `horizon` RK4 steps under the labelled constant input.
/// Throws InsufficientData when fewer than min_pairs pairs survive.
SnapshotSet collect_snapshots(const SystemModel& model, const InputLabel& label, const SampleConfig& cfg,
                              std::size_t min_pairs = 1);

/// Snapshot CSV: "# label=<zero|e_j>, dt=<float>, n=<int>" then rows x_1..x_n,y_1..y_n.
void write_snapshot_csv(const std::string& path, const SnapshotSet& s);
SnapshotSet read_snapshot_csv(const std::string& path);

struct Trajectory {
  enum class Status { completed, blowup, controller_error, non_finite };

  std::vector<double> t;
  std::vector<Vector> x;
  std::vector<Vector> u;
  Status status = Status::completed;
  std::string message;

  const Vector& final_state() const { return x.back(); }
};

std::string to_string(Trajectory::Status s);

using FeedbackLaw = std::function<Vector(const Vector&)>;

/// Closed-loop rollout with zero-order hold: u = controller(x) at the start of each step.
/// Stops early when |x| exceeds blowup_bound or the controller throws (message keeps the state).
Trajectory simulate(const SystemModel& model, const FeedbackLaw& controller, const Vector& x0, double dt,
                    double t_final, double blowup_bound = 1e6);

/// CSV "t,x1..xn,u1..um".
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

}  // namespace densyn
