#include "mamba/envs/reacher.hpp"

#include <algorithm>
#include <cmath>

namespace mamba::envs {

void reacher_kinematics(double q1, double q2, double& x, double& y) {
  constexpr double l = ReacherEnv::kLink;
  x = l * std::cos(q1) + l * std::cos(q1 + q2);
  y = l * std::sin(q1) + l * std::sin(q1 + q2);
}

ReacherEnv::ReacherEnv(int n_goals, int t_steps, int k_sub_episodes)
    : n_(n_goals), t_(t_steps > 0 ? t_steps : (n_goals <= 2 ? 300 : 400)), k_(k_sub_episodes),
      id_("reacher-" + std::to_string(n_goals)) {
  if (n_ < 1) throw EnvError("reacher: need at least one goal");
}

TaskSpec ReacherEnv::sample_task(Rng& rng) const {
  TaskSpec task;
  task.env_id = id_;
  for (int i = 0; i < n_; ++i) {
    // Uniform over the reachable disk of radius 2 * kLink.
    double r = 2.0 * kLink * std::sqrt(rng.uniform());
    double ang = rng.uniform(0.0, 2.0 * M_PI);
    task.theta.push_back(r * std::cos(ang));
    task.theta.push_back(r * std::sin(ang));
  }
  return task;
}

EnvState ReacherEnv::reset(const TaskSpec&) const {
  EnvState s;
  s.v = {0.0, 0.0};  // joint angles
  s.paid.assign(static_cast<size_t>(n_), 0);
  return s;
}

double ReacherEnv::step(const TaskSpec& task, EnvState& state, std::span<const double> action,
                        Rng&) const {
  if (action.size() != 2) throw EnvError("reacher: expected 2D action");
  auto wrap = [](double q) {
    while (q > M_PI) q -= 2.0 * M_PI;
    while (q < -M_PI) q += 2.0 * M_PI;
    return q;
  };
  state.v[0] = wrap(state.v[0] + std::clamp(action[0], -0.1, 0.1));
  state.v[1] = wrap(state.v[1] + std::clamp(action[1], -0.1, 0.1));
  double tx, ty;
  reacher_kinematics(state.v[0], state.v[1], tx, ty);

  // First goal not yet collected this sub-episode is the active one.
  int active = 0;
  while (active < n_ && state.paid[static_cast<size_t>(active)]) ++active;
  if (active == n_) active = n_ - 1;  // all collected: last goal keeps paying

  double gx = task.theta[static_cast<size_t>(2 * active)];
  double gy = task.theta[static_cast<size_t>(2 * active + 1)];
  double dist = std::hypot(tx - gx, ty - gy);
  if (dist <= kGoalRadius) {
    state.paid[static_cast<size_t>(active)] = 1;
    return (kGoalRadius - dist) / kGoalRadius;
  }
  return 0.0;
}

void ReacherEnv::observe(const EnvState& state, std::span<double> out) const {
  double tx, ty;
  reacher_kinematics(state.v[0], state.v[1], tx, ty);
  out[0] = std::cos(state.v[0]);
  out[1] = std::sin(state.v[0]);
  out[2] = std::cos(state.v[1]);
  out[3] = std::sin(state.v[1]);
  out[4] = tx;
  out[5] = ty;
}

}  // namespace mamba::envs
