#include "densyn/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "densyn/parallel.hpp"

namespace densyn {

Vector SystemModel::rhs(const Vector& x, const Vector& u) const {
  Vector dx = drift(x);
  if (m > 0 && u.size() > 0) dx.noalias() += input_matrix(x) * u;
  return dx;
}

SystemModel van_der_pol() {
  SystemModel s;
  s.name = "vdp";
  s.n = 2;
  s.m = 1;
  s.drift = [](const Vector& x) {
    Vector f(2);
    f << x[1], (1.0 - x[0] * x[0]) * x[1] - x[0];
    return f;
  };
  s.input_matrix = [](const Vector&) {
    Matrix g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  return s;
}

SystemModel pendulum() {
  SystemModel s;
  s.name = "pendulum";
  s.n = 2;
  s.m = 1;
  s.drift = [](const Vector& x) {
    Vector f(2);
    f << x[1], std::sin(x[0]) - 0.5 * x[1];
    return f;
  };
  s.input_matrix = [](const Vector&) {
    Matrix g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  return s;
}

SystemModel lorenz(double sigma, double rho, double beta) {
  SystemModel s;
  s.name = "lorenz";
  s.n = 3;
  s.m = 1;
  s.drift = [=](const Vector& x) {
    Vector f(3);
    f << sigma * (x[1] - x[0]), x[0] * (rho - x[2]) - x[1], x[0] * x[1] - beta * x[2];
    return f;
  };
  s.input_matrix = [](const Vector&) {
    Matrix g = Matrix::Zero(3, 1);
    g(1, 0) = 1.0;
    return g;
  };
  return s;
}

namespace {

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0;
  return s;
}

}  // namespace

SystemModel rigid_body(const Eigen::Vector3d& inertia) {
  if ((inertia.array() <= 0.0).any()) throw std::invalid_argument("rigid_body: inertia entries must be positive");
  SystemModel s;
  s.name = "rigid_body";
  s.n = 6;
  s.m = 3;
  const Eigen::Matrix3d J = inertia.asDiagonal();
  const Eigen::Matrix3d J_inv = inertia.cwiseInverse().asDiagonal();
  s.drift = [=](const Vector& x) {
    const Eigen::Vector3d w = x.head<3>();
    const Eigen::Vector3d p = x.tail<3>();
    const Eigen::Matrix3d H = 0.5 * (Eigen::Matrix3d::Identity() + cross_matrix(p) + p * p.transpose());
    Vector f(6);
    f.head<3>() = J_inv * cross_matrix(w) * J * w;
    f.tail<3>() = H * w;
    return f;
  };
  s.input_matrix = [=](const Vector&) {
    Matrix g = Matrix::Zero(6, 3);
    g.topRows<3>() = J_inv;
    return g;
  };
  return s;
}

SystemModel make_benchmark(const std::string& name) {
  if (name == "vdp") return van_der_pol();
  if (name == "pendulum") return pendulum();
  if (name == "lorenz") return lorenz();
  if (name == "rigid_body") return rigid_body();
  throw std::invalid_argument("unknown benchmark system '" + name + "'");
}

Vector rk4_step(const SystemModel& model, const Vector& x, const Vector& u, double dt) {
  const Vector k1 = model.rhs(x, u);
  const Vector k2 = model.rhs(x + 0.5 * dt * k1, u);
  const Vector k3 = model.rhs(x + 0.5 * dt * k2, u);
  const Vector k4 = model.rhs(x + dt * k3, u);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vector InputLabel::input(int m) const {
  Vector u = Vector::Zero(m);
  if (!is_zero()) {
    if (channel >= m) throw std::out_of_range("input label " + name() + " exceeds input dimension");
    u[channel] = 1.0;
  }
  return u;
}

std::string InputLabel::name() const { return is_zero() ? std::string("zero") : "e" + std::to_string(channel + 1); }

InputLabel InputLabel::parse(const std::string& s) {
  if (s == "zero") return zero();
  if (s.size() >= 2 && s[0] == 'e') {
    std::string digits = s.substr(s[1] == '_' ? 2 : 1);
    try {
      const int j = std::stoi(digits);
      if (j >= 1) return unit(j - 1);
    } catch (const std::exception&) {
    }
  }
  throw std::invalid_argument("invalid input label '" + s + "'");
}

void SampleConfig::validate(int n) const {
  if (!(dt > 0.0)) throw std::invalid_argument("sampling: dt must be positive");
  if (n_init < 1) throw std::invalid_argument("sampling: n_init must be >= 1");
  if (horizon < 1) throw std::invalid_argument("sampling: horizon must be >= 1");
  if (static_cast<int>(box.size()) != n) {
    throw std::invalid_argument("sampling: box has " + std::to_string(box.size()) + " intervals, expected " +
                                std::to_string(n));
  }
  for (const auto& [lo, hi] : box) {
    if (!(lo < hi)) throw std::invalid_argument("sampling: box lower bound must be below upper bound");
  }
}

nlohmann::json to_json(const SampleConfig& cfg) {
  nlohmann::json box = nlohmann::json::array();
  for (const auto& [lo, hi] : cfg.box) box.push_back({lo, hi});
  return {{"dt", cfg.dt},
          {"n_init", cfg.n_init},
          {"box", box},
          {"seed", cfg.seed},
          {"horizon", cfg.horizon},
          {"filter", cfg.filter == SampleFilter::box_exit ? "box_exit" : "blowup"},
          {"blowup_bound", cfg.blowup_bound}};
}

SampleConfig sample_config_from_json(const nlohmann::json& j) {
  SampleConfig cfg;
  cfg.dt = j.value("dt", cfg.dt);
  cfg.n_init = j.value("n_init", cfg.n_init);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.horizon = j.value("horizon", cfg.horizon);
  cfg.blowup_bound = j.value("blowup_bound", cfg.blowup_bound);
  const std::string filter = j.value("filter", std::string("box_exit"));
  if (filter == "box_exit") {
    cfg.filter = SampleFilter::box_exit;
  } else if (filter == "blowup") {
    cfg.filter = SampleFilter::blowup;
  } else {
    throw std::invalid_argument("sampling: unknown filter '" + filter + "'");
  }
  if (j.contains("box")) {
    for (const auto& iv : j.at("box")) cfg.box.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());
  }
  return cfg;
}

SnapshotSet collect_snapshots(const SystemModel& model, const InputLabel& label, const SampleConfig& cfg,
                              std::size_t min_pairs) {
  cfg.validate(model.n);
  const Vector u = label.input(model.m);
  const int n = model.n;
  const auto inside = [&](const Vector& y) {
    if (!y.allFinite()) return false;
    if (cfg.filter == SampleFilter::blowup) return y.norm() <= cfg.blowup_bound;
    for (int i = 0; i < n; ++i) {
      if (y[i] < cfg.box[i].first || y[i] > cfg.box[i].second) return false;
    }
    return true;
  };

  // Per-trajectory results in slot order keep the output independent of scheduling.
  std::vector<std::vector<std::pair<Vector, Vector>>> pairs(static_cast<std::size_t>(cfg.n_init));
  parallel_for(pairs.size(), [&](std::size_t k) {
    std::mt19937_64 rng(sub_seed(cfg.seed, k));
    Vector x(n);
    for (int i = 0; i < n; ++i) {
      const auto [lo, hi] = cfg.box[i];
      x[i] = lo + (hi - lo) * unit_uniform(rng());
    }
    for (int h = 0; h < cfg.horizon; ++h) {
      Vector y = rk4_step(model, x, u, cfg.dt);
      if (!inside(y)) break;
      pairs[k].emplace_back(x, y);
      x = std::move(y);
    }
  });

  std::size_t total = 0;
  for (const auto& p : pairs) total += p.size();
  if (total < min_pairs) {
    throw InsufficientData("snapshot collection for label " + label.name() + " kept " + std::to_string(total) +
                           " pairs, need at least " + std::to_string(min_pairs));
  }
  SnapshotSet s;
  s.label = label;
  s.dt = cfg.dt;
  s.X.resize(n, static_cast<Eigen::Index>(total));
  s.Y.resize(n, static_cast<Eigen::Index>(total));
  Eigen::Index col = 0;
  for (const auto& traj : pairs) {
    for (const auto& [x, y] : traj) {
      s.X.col(col) = x;
      s.Y.col(col) = y;
      ++col;
    }
  }
  return s;
}

void write_snapshot_csv(const std::string& path, const SnapshotSet& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", s.dt);
  out << "# label=" << s.label.name() << ", dt=" << buf << ", n=" << s.n() << "\n";
  for (int c = 0; c < s.T(); ++c) {
    for (int i = 0; i < s.n(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", s.X(i, c));
      out << (i ? "," : "") << buf;
    }
    for (int i = 0; i < s.n(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", s.Y(i, c));
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

SnapshotSet read_snapshot_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open snapshot file '" + path + "'");
  std::string header;
  std::getline(in, header);
  if (header.rfind("#", 0) != 0) throw std::runtime_error(path + ": missing '# label=..., dt=..., n=...' header");

  SnapshotSet s;
  int n = -1;
  bool have_label = false;
  std::stringstream hs(header.substr(1));
  std::string field;
  while (std::getline(hs, field, ',')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t\r");
      const auto e = v.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    const std::string key = trim(field.substr(0, eq));
    const std::string value = trim(field.substr(eq + 1));
    if (key == "label") {
      s.label = InputLabel::parse(value);
      have_label = true;
    } else if (key == "dt") {
      s.dt = std::stod(value);
    } else if (key == "n") {
      n = std::stoi(value);
    }
  }
  if (!have_label || n < 1 || !(s.dt > 0.0)) throw std::runtime_error(path + ": incomplete snapshot header");

  std::vector<double> values;
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ls(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(ls, cell, ',')) {
      values.push_back(std::stod(cell));
      ++count;
    }
    if (count != static_cast<std::size_t>(2 * n)) {
      throw std::runtime_error(path + ": row " + std::to_string(rows + 1) + " has " + std::to_string(count) +
                               " values, expected " + std::to_string(2 * n));
    }
    ++rows;
  }
  s.X.resize(n, static_cast<Eigen::Index>(rows));
  s.Y.resize(n, static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    for (int i = 0; i < n; ++i) {
      s.X(i, static_cast<Eigen::Index>(r)) = values[r * 2 * n + i];
      s.Y(i, static_cast<Eigen::Index>(r)) = values[r * 2 * n + n + i];
    }
  }
  return s;
}

std::string to_string(Trajectory::Status s) {
  switch (s) {
    case Trajectory::Status::completed: return "completed";
    case Trajectory::Status::blowup: return "blowup";
    case Trajectory::Status::controller_error: return "controller_error";
    case Trajectory::Status::non_finite: return "non_finite";
  }
  return "unknown";
}

Trajectory simulate(const SystemModel& model, const FeedbackLaw& controller, const Vector& x0, double dt,
                    double t_final, double blowup_bound) {
  if (!(t_final > 0.0)) throw std::invalid_argument("simulate: T_final must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");
  if (x0.size() != model.n) throw std::invalid_argument("simulate: initial state has wrong dimension");

  Trajectory traj;
  const auto steps = static_cast<long>(std::ceil(t_final / dt - 1e-9));
  traj.t.reserve(static_cast<std::size_t>(steps + 1));
  traj.x.reserve(static_cast<std::size_t>(steps + 1));
  traj.u.reserve(static_cast<std::size_t>(steps + 1));

  Vector x = x0;
  for (long k = 0;; ++k) {
    Vector u;
    try {
      u = controller ? controller(x) : Vector::Zero(model.m);
    } catch (const std::exception& e) {
      traj.status = Trajectory::Status::controller_error;
      traj.message = e.what();
      u = Vector::Zero(model.m);
      traj.t.push_back(static_cast<double>(k) * dt);
      traj.x.push_back(x);
      traj.u.push_back(u);
      return traj;
    }
    traj.t.push_back(static_cast<double>(k) * dt);
    traj.x.push_back(x);
    traj.u.push_back(u);
    if (k == steps) break;
    x = rk4_step(model, x, u, dt);
    if (!x.allFinite()) {
      traj.status = Trajectory::Status::non_finite;
      traj.message = "state became non-finite at t=" + std::to_string(static_cast<double>(k + 1) * dt);
      return traj;
    }
    if (x.norm() > blowup_bound) {
      traj.t.push_back(static_cast<double>(k + 1) * dt);
      traj.x.push_back(x);
      traj.u.push_back(Vector::Zero(model.m));
      traj.status = Trajectory::Status::blowup;
      traj.message = "state norm exceeded " + std::to_string(blowup_bound);
      return traj;
    }
  }
  return traj;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  const auto n = traj.x.empty() ? 0 : traj.x.front().size();
  const auto m = traj.u.empty() ? 0 : traj.u.front().size();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << (i + 1);
  for (Eigen::Index j = 0; j < m; ++j) out << ",u" << (j + 1);
  out << "\n";
  char buf[64];
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.10g", traj.t[k]);
    out << buf;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%.10g", traj.x[k][i]);
      out << "," << buf;
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      std::snprintf(buf, sizeof buf, "%.10g", traj.u[k][j]);
      out << "," << buf;
    }
    out << "\n";
  }
}

}  // namespace densyn
