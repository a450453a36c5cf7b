#pragma once

#include <functional>
#include <iosfwd>

#include "mamba/envs/env.hpp"

namespace mamba::envs {

// One recorded step. `obs` is the raw observation the agent acted on and
// `reward` the reward produced by `action`. The reward observed alongside
// `obs` (i.e. the previous step's outcome) lives in the augmented stream.
struct Transition {
  int t = 0;
  int k = 0;
  bool sub_episode_reset = false;  // true exactly at t % T == 0
  std::vector<double> obs;
  std::vector<double> action;
  double reward = 0.0;
};

// Full H = K*T trajectory of one sampled task.
struct MetaEpisode {
  TaskSpec task;
  int sub_episode_len = 0;  // T
  std::vector<Transition> transitions;
  std::vector<double> sub_episode_returns;  // length K

  int length() const { return static_cast<int>(transitions.size()); }
  double total_return() const;
  // Augmented observation [obs_t, reward_{t-1}, t/H] for transition index t.
  std::vector<double> augmented_obs(int t) const;
};

// Streaming wrapper around an environment: augments observations with the
// last reward and the normalized time index, and resets the physical state
// (but never the task) every T steps.
class MetaRollout {
public:
  MetaRollout(const Environment& env, TaskSpec task, Rng rng);

  int t() const { return t_; }
  int sub_episode() const { return t_ / env_.sub_episode_len(); }
  bool done() const { return t_ >= env_.horizon(); }

  // Current augmented observation o'_t = [o_t, r_{t-1}, t/H].
  const std::vector<double>& augmented() const { return augmented_; }
  const std::vector<double>& raw_obs() const { return raw_obs_; }

  // Applies the action, returns its reward. Throws once the meta-episode is
  // over (t = H).
  double step(std::span<const double> action);

  const TaskSpec& task() const { return task_; }

private:
  void refresh_obs();

  const Environment& env_;
  TaskSpec task_;
  Rng rng_;
  EnvState state_;
  int t_ = 0;
  double prev_reward_ = 0.0;
  std::vector<double> raw_obs_;
  std::vector<double> augmented_;
};

// Runs a full meta-episode with `policy` choosing an action from each
// augmented observation. Used by scripted agents and tests; the learning
// agent records episodes through its own latent-state loop.
MetaEpisode run_meta_episode(const Environment& env, const TaskSpec& task, Rng rng,
                             const std::function<std::vector<double>(const MetaRollout&)>& policy);

// Trajectory CSV: header then one row per transition
// (t, k, obs..., action..., reward, reset_flag).
void write_episode_csv(std::ostream& out, const MetaEpisode& episode);

// Assembles sub-episode returns from transitions (sums per T-block).
void finalize_returns(MetaEpisode& episode);

}  // namespace mamba::envs
