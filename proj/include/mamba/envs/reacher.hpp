#pragma once

#include "mamba/envs/env.hpp"

namespace mamba::envs {

// Planar two-link arm (joint-velocity control) with N hidden goals sampled
// i.i.d. in the reachable disk. Goals must be reached in order; goals
// 0..N-2 pay once per sub-episode on first penetration of the goal radius,
// the last goal pays on every step inside it. Reward inside the radius is
// (radius - distance) / radius, zero elsewhere.
class ReacherEnv : public Environment {
public:
  // T <= 0 picks the schedule from the goal count (300 for N <= 2, else 400).
  explicit ReacherEnv(int n_goals, int t_steps = 0, int k_sub_episodes = 3);

  const std::string& id() const override { return id_; }
  int obs_dim() const override { return 6; }  // cos/sin of both joints + tip
  ActionSpace action_space() const override { return {false, 2, 0.1}; }
  int sub_episode_len() const override { return t_; }
  int sub_episodes() const override { return k_; }

  TaskSpec sample_task(Rng& rng) const override;
  EnvState reset(const TaskSpec& task) const override;
  double step(const TaskSpec& task, EnvState& state, std::span<const double> action,
              Rng& rng) const override;
  void observe(const EnvState& state, std::span<double> out) const override;

  int n_goals() const { return n_; }

  static constexpr double kLink = 0.6;
  static constexpr double kGoalRadius = 0.05;

private:
  int n_, t_, k_;
  std::string id_;
};

}  // namespace mamba::envs
