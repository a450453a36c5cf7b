#pragma once

#include "mamba/envs/env.hpp"

namespace mamba::envs {

// Point Robot Navigation: goal on the unit upper semicircle, sparse reward
// 1 - ||p - g|| inside goal radius 0.2. Two sub-episodes of 100 steps.
// Actions are 2D displacements clipped to +-0.1 per axis.
class PointRobotEnv : public Environment {
public:
  explicit PointRobotEnv(double wind_std = 0.0);

  const std::string& id() const override { return id_; }
  int obs_dim() const override { return 2; }
  ActionSpace action_space() const override { return {false, 2, 0.1}; }
  int sub_episode_len() const override { return 100; }
  int sub_episodes() const override { return 2; }

  TaskSpec sample_task(Rng& rng) const override;
  EnvState reset(const TaskSpec& task) const override;
  double step(const TaskSpec& task, EnvState& state, std::span<const double> action,
              Rng& rng) const override;
  void observe(const EnvState& state, std::span<double> out) const override;

  double wind_std() const { return wind_std_; }

  static constexpr double kGoalRadius = 0.2;

private:
  std::string id_;
  double wind_std_;
};

// Circular room of radius 1 with a hidden door arc of length pi/8 on the
// upper half. Reward 0 inside, 1 outside. Two sub-episodes of 60 steps.
class EscapeRoomEnv : public Environment {
public:
  EscapeRoomEnv() : id_("escape-room") {}

  const std::string& id() const override { return id_; }
  int obs_dim() const override { return 2; }
  ActionSpace action_space() const override { return {false, 2, 0.1}; }
  int sub_episode_len() const override { return 60; }
  int sub_episodes() const override { return 2; }

  TaskSpec sample_task(Rng& rng) const override;
  EnvState reset(const TaskSpec& task) const override;
  double step(const TaskSpec& task, EnvState& state, std::span<const double> action,
              Rng& rng) const override;
  void observe(const EnvState& state, std::span<double> out) const override;

  static constexpr double kDoorArc = M_PI / 8.0;

private:
  std::string id_;
};

}  // namespace mamba::envs
