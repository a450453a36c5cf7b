#include "mamba/replay/replay.hpp"

#include <filesystem>
#include <fstream>
#include <numeric>

namespace mamba::replay {

void ReplayBuffer::push(envs::MetaEpisode episode) {
  if (length_ < 0) {
    length_ = episode.length();
  } else if (episode.length() != length_) {
    throw envs::EnvError("replay: episode length " + std::to_string(episode.length()) +
                         " does not match buffer length " + std::to_string(length_));
  }
  episodes_.push_back(std::move(episode));
  ++inserted_;
  while (episodes_.size() > capacity_) episodes_.pop_front();
}

size_t ReplayBuffer::approx_bytes() const {
  size_t bytes = 0;
  for (const envs::MetaEpisode& ep : episodes_) {
    for (const envs::Transition& tr : ep.transitions) {
      bytes += sizeof(envs::Transition);
      bytes += (tr.obs.capacity() + tr.action.capacity()) * sizeof(double);
    }
    bytes += ep.sub_episode_returns.capacity() * sizeof(double);
  }
  return bytes;
}

void ReplayBuffer::spill_to(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  for (size_t i = 0; i < episodes_.size(); ++i) {
    std::ofstream out(dir + "/episode_" + std::to_string(inserted_ - episodes_.size() + i) + ".csv");
    envs::write_episode_csv(out, episodes_[i]);
  }
}

SampleBatch sample_mamba(const ReplayBuffer& buffer, int batch, int h_prime, int l, Rng& rng) {
  if (buffer.size() == 0) throw envs::EnvError("replay: cannot sample from an empty buffer");
  if (h_prime < 1 || h_prime > buffer.episode_length()) {
    throw envs::EnvError("replay: prefix length " + std::to_string(h_prime) + " out of range");
  }
  if (l < 1) throw envs::EnvError("replay: need at least one loss index");
  SampleBatch out;
  out.mode = SampleMode::kMamba;
  out.items.resize(static_cast<size_t>(batch));
  for (SampleItem& item : out.items) {
    item.episode = rng.below(buffer.size());
    item.start = 0;
    item.length = h_prime;
    item.loss_indices.resize(static_cast<size_t>(l));
    for (int& idx : item.loss_indices) {
      idx = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(h_prime)));
    }
  }
  return out;
}

SampleBatch sample_vanilla(const ReplayBuffer& buffer, int batch, int l_window, Rng& rng) {
  if (buffer.size() == 0) throw envs::EnvError("replay: cannot sample from an empty buffer");
  int h = buffer.episode_length();
  if (l_window < 1 || l_window > h) {
    throw envs::EnvError("replay: window length " + std::to_string(l_window) + " out of range");
  }
  SampleBatch out;
  out.mode = SampleMode::kVanilla;
  out.items.resize(static_cast<size_t>(batch));
  for (SampleItem& item : out.items) {
    item.episode = rng.below(buffer.size());
    item.start = static_cast<int>(rng.below(static_cast<uint64_t>(h - l_window + 1)));
    item.length = l_window;
    item.loss_indices.resize(static_cast<size_t>(l_window));
    std::iota(item.loss_indices.begin(), item.loss_indices.end(), 1);
  }
  return out;
}

}  // namespace mamba::replay
