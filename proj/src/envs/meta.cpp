#include "mamba/envs/meta.hpp"

#include <functional>
#include <ostream>

namespace mamba::envs {

double MetaEpisode::total_return() const {
  double sum = 0.0;
  for (const Transition& tr : transitions) sum += tr.reward;
  return sum;
}

std::vector<double> MetaEpisode::augmented_obs(int t) const {
  const Transition& tr = transitions.at(static_cast<size_t>(t));
  std::vector<double> out = tr.obs;
  out.push_back(t == 0 ? 0.0 : transitions[static_cast<size_t>(t - 1)].reward);
  out.push_back(static_cast<double>(t) / static_cast<double>(transitions.size()));
  return out;
}

MetaRollout::MetaRollout(const Environment& env, TaskSpec task, Rng rng)
    : env_(env), task_(std::move(task)), rng_(rng), state_(env.reset(task_)) {
  raw_obs_.resize(static_cast<size_t>(env_.obs_dim()));
  refresh_obs();
}

void MetaRollout::refresh_obs() {
  env_.observe(state_, raw_obs_);
  augmented_ = raw_obs_;
  augmented_.push_back(prev_reward_);
  augmented_.push_back(static_cast<double>(t_) / static_cast<double>(env_.horizon()));
}

double MetaRollout::step(std::span<const double> action) {
  if (done()) throw EnvError("meta-episode over: step past t = H-1");
  double r = env_.step(task_, state_, action, rng_);
  prev_reward_ = r;
  ++t_;
  if (!done() && t_ % env_.sub_episode_len() == 0) {
    // Physical reset between sub-episodes; task and reward context persist.
    state_ = env_.reset(task_);
  }
  refresh_obs();
  return r;
}

MetaEpisode run_meta_episode(const Environment& env, const TaskSpec& task, Rng rng,
                             const std::function<std::vector<double>(const MetaRollout&)>& policy) {
  MetaRollout roll(env, task, rng);
  MetaEpisode ep;
  ep.task = task;
  ep.sub_episode_len = env.sub_episode_len();
  ep.transitions.reserve(static_cast<size_t>(env.horizon()));
  while (!roll.done()) {
    Transition tr;
    tr.t = roll.t();
    tr.k = roll.sub_episode();
    tr.sub_episode_reset = roll.t() % env.sub_episode_len() == 0;
    tr.obs = roll.raw_obs();
    tr.action = policy(roll);
    tr.reward = roll.step(tr.action);
    ep.transitions.push_back(std::move(tr));
  }
  finalize_returns(ep);
  return ep;
}

void finalize_returns(MetaEpisode& episode) {
  episode.sub_episode_returns.clear();
  if (episode.sub_episode_len <= 0) return;
  int k_count = episode.length() / episode.sub_episode_len;
  episode.sub_episode_returns.assign(static_cast<size_t>(k_count), 0.0);
  for (const Transition& tr : episode.transitions) {
    int k = tr.t / episode.sub_episode_len;
    if (k < k_count) episode.sub_episode_returns[static_cast<size_t>(k)] += tr.reward;
  }
}

void write_episode_csv(std::ostream& out, const MetaEpisode& episode) {
  if (episode.transitions.empty()) return;
  size_t obs_dim = episode.transitions[0].obs.size();
  size_t act_dim = episode.transitions[0].action.size();
  out << "t,k";
  for (size_t i = 0; i < obs_dim; ++i) out << ",obs" << i;
  for (size_t i = 0; i < act_dim; ++i) out << ",action" << i;
  out << ",reward,reset_flag\n";
  for (const Transition& tr : episode.transitions) {
    out << tr.t << "," << tr.k;
    for (double v : tr.obs) out << "," << v;
    for (double v : tr.action) out << "," << v;
    out << "," << tr.reward << "," << (tr.sub_episode_reset ? 1 : 0) << "\n";
  }
}

}  // namespace mamba::envs
