#include "mamba/envs/rooms.hpp"

#include <cmath>

namespace mamba::envs {

RoomsEnv::RoomsEnv(int n_rooms, int t_steps, int k_sub_episodes, std::string id)
    : n_(n_rooms), t_(t_steps > 0 ? t_steps : 30 + 10 * n_rooms), k_(k_sub_episodes),
      id_(id.empty() ? "rooms-" + std::to_string(n_rooms) : std::move(id)) {
  if (n_ < 1) throw EnvError("rooms: need at least one room");
  if (k_ < 1) throw EnvError("rooms: need at least one sub-episode");
}

bool RoomsEnv::valid_cell(int x, int y) const {
  if (y < 0 || y > 2) return false;
  int width = 6 * (n_ - 1) + 3;
  if (x < 0 || x >= width) return false;
  int block = x % 6;
  if (block <= 2) return true;  // room column
  return y == 1;                // corridor row
}

void RoomsEnv::corner_cell(int room, int corner, int& x, int& y) const {
  x = 6 * room + (corner & 1) * 2;
  y = ((corner >> 1) & 1) * 2;
}

TaskSpec RoomsEnv::sample_task(Rng& rng) const {
  TaskSpec task;
  task.env_id = id_;
  task.theta.resize(static_cast<size_t>(n_));
  for (int i = 0; i < n_; ++i) {
    task.theta[static_cast<size_t>(i)] = static_cast<double>(rng.below(4));
  }
  return task;
}

TaskSpec RoomsEnv::task_from_corners(const std::vector<int>& corners) const {
  if (static_cast<int>(corners.size()) != n_) throw EnvError("rooms: need one corner per room");
  TaskSpec task;
  task.env_id = id_;
  for (int c : corners) {
    if (c < 0 || c > 3) throw EnvError("rooms: corner index out of range");
    task.theta.push_back(static_cast<double>(c));
  }
  return task;
}

EnvState RoomsEnv::reset(const TaskSpec&) const {
  EnvState s;
  s.v = {1.0, 1.0};  // center of room 0
  s.paid.assign(static_cast<size_t>(n_), 0);
  return s;
}

void RoomsEnv::apply_move(int action, int& x, int& y) const {
  int nx = x, ny = y;
  switch (action) {
    case 0: nx += 1; break;
    case 1: nx -= 1; break;
    case 2: ny -= 1; break;
    case 3: ny += 1; break;
    default: throw EnvError("rooms: action index must be in [0, 4)");
  }
  if (valid_cell(nx, ny)) {
    x = nx;
    y = ny;
  }
}

double RoomsEnv::step(const TaskSpec& task, EnvState& state, std::span<const double> action,
                      Rng&) const {
  if (action.empty()) throw EnvError("rooms: missing action");
  int a = static_cast<int>(std::lround(action[0]));
  int x = static_cast<int>(state.v[0]);
  int y = static_cast<int>(state.v[1]);
  apply_move(a, x, y);
  state.v[0] = x;
  state.v[1] = y;

  if (x % 6 <= 2) {
    int room = x / 6;
    int gx, gy;
    corner_cell(room, static_cast<int>(task.theta[static_cast<size_t>(room)]), gx, gy);
    if (x == gx && y == gy) {
      bool armed = true;
      for (int j = 0; j < room; ++j) armed = armed && state.paid[static_cast<size_t>(j)];
      bool payable = armed && (room == n_ - 1 || !state.paid[static_cast<size_t>(room)]);
      if (payable) {
        state.paid[static_cast<size_t>(room)] = 1;
        return kGoalReward;
      }
    }
  }
  return kStepPenalty;
}

void RoomsEnv::observe(const EnvState& state, std::span<double> out) const {
  out[0] = state.v[0];
  out[1] = state.v[1];
}

}  // namespace mamba::envs
