#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mamba/util/rng.hpp"

namespace mamba::envs {

struct EnvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Hidden task parameters drawn from the environment's prior. theta layout is
// environment-specific (goal coordinates, door angle, corner indices, ...).
struct TaskSpec {
  std::string env_id;
  std::vector<double> theta;
};

struct ActionSpace {
  bool discrete = false;
  int dim = 0;          // continuous components, or number of discrete actions
  double max_abs = 0;   // per-axis clip bound for continuous actions
};

// Physical state of one environment instance. `paid` tracks once-per-
// sub-episode goal payouts (reset at every sub-episode boundary).
struct EnvState {
  std::vector<double> v;
  std::vector<uint8_t> paid;
};

class Environment {
public:
  virtual ~Environment() = default;

  virtual const std::string& id() const = 0;
  virtual int obs_dim() const = 0;
  virtual ActionSpace action_space() const = 0;
  virtual int sub_episode_len() const = 0;  // T
  virtual int sub_episodes() const = 0;     // K
  int horizon() const { return sub_episode_len() * sub_episodes(); }

  virtual TaskSpec sample_task(Rng& rng) const = 0;
  // Fixed start state; also used at sub-episode boundaries (task persists,
  // payout bookkeeping resets).
  virtual EnvState reset(const TaskSpec& task) const = 0;
  // Validates/clips the action, advances the state, returns the reward.
  // Continuous actions are clipped per axis; discrete actions are action[0]
  // rounded, and must be a valid index.
  virtual double step(const TaskSpec& task, EnvState& state,
                      std::span<const double> action, Rng& rng) const = 0;
  virtual void observe(const EnvState& state, std::span<double> out) const = 0;

  std::vector<double> observe_vec(const EnvState& state) const {
    std::vector<double> out(static_cast<size_t>(obs_dim()));
    observe(state, out);
    return out;
  }
};

// Registry lookup by string id: "prn", "prn-wind", "escape-room", "rooms-N",
// "rooms-N-tiny", "reacher-N" (N parsed from the id).
std::unique_ptr<Environment> make_env(const std::string& id);

// Planar two-link forward kinematics, link lengths l1 = l2 = 0.6.
void reacher_kinematics(double q1, double q2, double& x, double& y);

}  // namespace mamba::envs
