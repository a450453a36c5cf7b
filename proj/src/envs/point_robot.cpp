#include "mamba/envs/point_robot.hpp"

#include <algorithm>
#include <cmath>

namespace mamba::envs {

namespace {

double clip(double x, double bound) { return std::clamp(x, -bound, bound); }

}  // namespace

PointRobotEnv::PointRobotEnv(double wind_std)
    : id_(wind_std > 0 ? "prn-wind" : "prn"), wind_std_(wind_std) {
  if (wind_std < 0) throw EnvError("prn-wind: std must be >= 0");
}

TaskSpec PointRobotEnv::sample_task(Rng& rng) const {
  double phi = rng.uniform(0.0, M_PI);
  return {id_, {std::cos(phi), std::sin(phi)}};
}

EnvState PointRobotEnv::reset(const TaskSpec&) const {
  EnvState s;
  s.v = {0.0, 0.0};
  return s;
}

double PointRobotEnv::step(const TaskSpec& task, EnvState& state,
                           std::span<const double> action, Rng& rng) const {
  if (action.size() != 2) throw EnvError("prn: expected 2D action");
  double dx = clip(action[0], 0.1);
  double dy = clip(action[1], 0.1);
  if (wind_std_ > 0) {
    // Wind perturbs the executed displacement; only the chosen action is
    // subject to the actuation bound.
    dx += rng.normal(0.0, wind_std_);
    dy += rng.normal(0.0, wind_std_);
  }
  state.v[0] += dx;
  state.v[1] += dy;
  double dist = std::hypot(state.v[0] - task.theta[0], state.v[1] - task.theta[1]);
  return dist <= kGoalRadius ? 1.0 - dist : 0.0;
}

void PointRobotEnv::observe(const EnvState& state, std::span<double> out) const {
  out[0] = state.v[0];
  out[1] = state.v[1];
}

TaskSpec EscapeRoomEnv::sample_task(Rng& rng) const {
  // Door arc center; the whole arc stays on the upper half circle.
  double half = kDoorArc / 2.0;
  double center = rng.uniform(half, M_PI - half);
  return {id_, {center}};
}

EnvState EscapeRoomEnv::reset(const TaskSpec&) const {
  EnvState s;
  s.v = {0.0, 0.0};
  return s;
}

double EscapeRoomEnv::step(const TaskSpec& task, EnvState& state,
                           std::span<const double> action, Rng&) const {
  if (action.size() != 2) throw EnvError("escape-room: expected 2D action");
  double nx = state.v[0] + clip(action[0], 0.1);
  double ny = state.v[1] + clip(action[1], 0.1);
  double r0 = std::hypot(state.v[0], state.v[1]);
  double r1 = std::hypot(nx, ny);
  bool inside = r0 <= 1.0;
  auto in_door = [&](double x, double y) {
    double ang = std::atan2(y, x);
    return std::abs(ang - task.theta[0]) <= kDoorArc / 2.0;
  };
  if (inside) {
    if (r1 <= 1.0 || in_door(nx, ny)) {
      state.v[0] = nx;
      state.v[1] = ny;
    } else {
      // Pushed back onto the wall: radial projection keeps tangential motion.
      state.v[0] = nx / r1;
      state.v[1] = ny / r1;
    }
  } else {
    if (r1 > 1.0 || in_door(nx, ny)) {
      state.v[0] = nx;
      state.v[1] = ny;
    }
    // else: wall blocks re-entry, stay in place
  }
  return std::hypot(state.v[0], state.v[1]) > 1.0 ? 1.0 : 0.0;
}

void EscapeRoomEnv::observe(const EnvState& state, std::span<double> out) const {
  out[0] = state.v[0];
  out[1] = state.v[1];
}

}  // namespace mamba::envs
