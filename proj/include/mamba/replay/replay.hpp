#pragma once

#include <deque>

#include "mamba/envs/meta.hpp"

namespace mamba::replay {

// Ring buffer of meta-episodes, oldest-first eviction. All stored episodes
// must share the same length H (checked on push).
class ReplayBuffer {
public:
  explicit ReplayBuffer(size_t capacity = 10000) : capacity_(capacity) {}

  void push(envs::MetaEpisode episode);
  size_t size() const { return episodes_.size(); }
  size_t capacity() const { return capacity_; }
  uint64_t inserted() const { return inserted_; }
  int episode_length() const { return length_; }
  const envs::MetaEpisode& episode(size_t i) const { return episodes_.at(i); }

  // Approximate resident bytes of the stored trajectories.
  size_t approx_bytes() const;

  // Writes one trajectory CSV per stored episode into `dir`.
  void spill_to(const std::string& dir) const;

private:
  size_t capacity_;
  int length_ = -1;
  uint64_t inserted_ = 0;
  std::deque<envs::MetaEpisode> episodes_;
};

enum class SampleMode { kMamba, kVanilla };

// One batch item. `start`/`length` give the encode span in transition
// indices; `loss_indices` are 1-based latent positions within that span
// (latent i corresponds to transition start + i - 1).
struct SampleItem {
  size_t episode = 0;
  int start = 0;
  int length = 0;
  std::vector<int> loss_indices;
};

struct SampleBatch {
  SampleMode mode = SampleMode::kMamba;
  std::vector<SampleItem> items;
};

// Full-prefix sampling: encode span [0, h_prime), loss indices i.i.d.
// Uniform{1..h_prime} (with replacement).
SampleBatch sample_mamba(const ReplayBuffer& buffer, int batch, int h_prime, int l, Rng& rng);

// Random fixed-length window; every window position contributes to the loss.
SampleBatch sample_vanilla(const ReplayBuffer& buffer, int batch, int l_window, Rng& rng);

}  // namespace mamba::replay
