#pragma once

#include <functional>

#include "mamba/nn/adam.hpp"
#include "mamba/nn/layers.hpp"

namespace mamba::rssm {

struct RssmConfig {
  int obs_dim = 0;     // augmented observation dimension (raw + reward + time)
  int action_dim = 0;  // one-hot width for discrete, vector width for continuous
  int dyn_hidden = 64;
  int dyn_stoch = 16;     // latent groups
  int dyn_discrete = 16;  // classes per group
  int units = 128;
  int imag_horizon = 10;
  double kl_dyn_weight = 0.5;
  double kl_rep_weight = 0.1;
  double free_bits = 1.0;

  int z_dim() const { return dyn_stoch * dyn_discrete; }
  int feat_dim() const { return dyn_hidden + z_dim(); }
};

// Latent state as concrete matrices (dyn_hidden x batch, z_dim x batch);
// the form that crosses graph boundaries and checkpoints.
struct LatentValue {
  nn::Mat h;
  nn::Mat z;
  Eigen::Index batch() const { return h.cols(); }
};

// Latent state inside a live graph.
struct LatentNodes {
  int h = -1;
  int z = -1;
};

struct StepNodes {
  LatentNodes state;
  int prior_logits = -1;
  int post_logits = -1;
};

struct WmLossBreakdown {
  double obs_nll = 0;
  double reward_nll = 0;
  double kl = 0;       // raw KL(posterior || prior), before flooring
  double kl_loss = 0;  // weighted dyn/rep terms after the free-bits floor
  double total = 0;
  int total_node = -1;
  int loss_terms = 0;  // latent indices contributing (with multiplicity)
};

struct ImaginedStep {
  LatentNodes state;
  int feat = -1;
  int action = -1;
  int reward = -1;  // decoded reward node (1 x batch)
};

// Recurrent state-space model: GRU carry + grouped categorical latent,
// prior/posterior heads, reward and observation decoders (unit-variance
// Gaussian likelihoods).
class WorldModel {
public:
  WorldModel(RssmConfig cfg, Rng& init_rng);

  const RssmConfig& config() const { return cfg_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }

  // Soft mode replaces hard latent samples with softmax probabilities,
  // making the whole graph differentiable for finite-difference checks.
  void set_soft_latents(bool soft) { soft_latents_ = soft; }

  // Meta-episode start: zero carry, latent sampled from the prior head.
  LatentValue initial_state(int batch, Rng& rng);

  LatentNodes nodes_from(nn::Graph& g, const LatentValue& v) const;
  LatentValue value_of(const nn::Graph& g, const LatentNodes& s) const;

  int feat(nn::Ctx& c, const LatentNodes& s) const;  // [h; z]

  // One filtering step: advance the carry with (z_prev, action), sample the
  // posterior latent from the new carry and the observation embedding.
  StepNodes observe_step(nn::Ctx& c, const LatentNodes& prev, int action, int obs,
                         Rng& rng) const;

  // Sequential filtering; actions[t] is the action that produced obs[t]
  // (zeros at t = 0). Returns one StepNodes per input.
  std::vector<StepNodes> encode_sequence(nn::Ctx& c, const LatentNodes& init,
                                         std::span<const int> actions,
                                         std::span<const int> obs, Rng& rng) const;

  // Prediction loss at the selected latent indices (1-based into `steps`).
  // Target layouts: obs (obs_dim x n*B) and reward (1 x n*B) with column
  // t*B + b holding the target for step t, batch item b.
  WmLossBreakdown wm_loss(nn::Ctx& c, std::span<const StepNodes> steps,
                          const nn::Mat& obs_targets, const nn::Mat& reward_targets,
                          std::span<const int> indices) const;

  using PolicyFn = std::function<int(nn::Ctx&, int feat_node, Rng&)>;

  // Latent-space rollout from `start`: policy action, carry update, prior
  // sample, decoded reward, for `horizon` steps.
  std::vector<ImaginedStep> imagine(nn::Ctx& c, const LatentNodes& start,
                                    const PolicyFn& policy, int horizon, Rng& rng) const;

  int decode_reward(nn::Ctx& c, int feat) const;
  int decode_obs(nn::Ctx& c, int feat) const;

  // Gaussian NLL helper nodes: mean over columns of
  // 0.5 * ||x - mu||^2 + d/2 * log(2 pi).
  int gaussian_nll(nn::Graph& g, int pred, const nn::Mat& target) const;

private:
  int advance_carry(nn::Ctx& c, const LatentNodes& prev, int action) const;
  int prior_logits(nn::Ctx& c, int h) const;
  int posterior_logits(nn::Ctx& c, int h, int embed) const;
  int encode_obs(nn::Ctx& c, int obs) const;
  int sample_latent(nn::Ctx& c, int logits, Rng& rng) const;

  bool soft_latents_ = false;
  RssmConfig cfg_;
  nn::ParamSet params_;
  nn::Dense enc1_, enc2_;
  nn::Dense in_proj_;
  nn::GruCell cell_;
  nn::Dense prior1_, prior2_;
  nn::Dense post1_, post2_;
  nn::Dense rew1_, rew2_;
  nn::Dense dec1_, dec2_;
};

}  // namespace mamba::rssm
