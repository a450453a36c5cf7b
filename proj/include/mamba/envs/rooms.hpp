#pragma once

#include "mamba/envs/env.hpp"

namespace mamba::envs {

// Grid world of N 3x3 rooms in a row, joined by 1x3 corridors at the middle
// row. One goal per room, hidden in one of its four corners; goal i pays only
// after goals 0..i-1 were collected in the current sub-episode. Goals in all
// but the last room pay +1 once per sub-episode; the last room's goal pays +1
// on every step spent on it. Every other step costs -0.1.
//
// Cells use (x, y) with x the column and y the row (0..2). Room i spans
// columns [6i, 6i+2]; the corridor to the next room is row 1, columns
// [6i+3, 6i+5]. The agent starts at the center of room 0 and observes (x, y).
class RoomsEnv : public Environment {
public:
  // T <= 0 picks the default schedule 30 + 10 N.
  RoomsEnv(int n_rooms, int t_steps = 0, int k_sub_episodes = 2, std::string id = "");

  const std::string& id() const override { return id_; }
  int obs_dim() const override { return 2; }
  ActionSpace action_space() const override { return {true, 4, 0}; }
  int sub_episode_len() const override { return t_; }
  int sub_episodes() const override { return k_; }

  TaskSpec sample_task(Rng& rng) const override;
  EnvState reset(const TaskSpec& task) const override;
  double step(const TaskSpec& task, EnvState& state, std::span<const double> action,
              Rng& rng) const override;
  void observe(const EnvState& state, std::span<double> out) const override;

  int n_rooms() const { return n_; }
  bool valid_cell(int x, int y) const;
  // Corner cell of room `room` for corner index 0..3.
  void corner_cell(int room, int corner, int& x, int& y) const;
  // Task with explicit corner indices (oracle and tests).
  TaskSpec task_from_corners(const std::vector<int>& corners) const;

  // Actions: 0 = right, 1 = left, 2 = up, 3 = down.
  void apply_move(int action, int& x, int& y) const;

  static constexpr double kStepPenalty = -0.1;
  static constexpr double kGoalReward = 1.0;

private:
  int n_, t_, k_;
  std::string id_;
};

}  // namespace mamba::envs
