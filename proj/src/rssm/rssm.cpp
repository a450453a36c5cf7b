#include "mamba/rssm/rssm.hpp"

#include <cmath>

namespace mamba::rssm {

using nn::Act;
using nn::Ctx;
using nn::Graph;
using nn::Mat;

WorldModel::WorldModel(RssmConfig cfg, Rng& init_rng)
    : cfg_(cfg),
      enc1_(nn::make_dense(params_, "enc1", cfg.obs_dim, cfg.units, Act::kElu, init_rng)),
      enc2_(nn::make_dense(params_, "enc2", cfg.units, cfg.units, Act::kElu, init_rng)),
      in_proj_(nn::make_dense(params_, "in_proj", cfg.z_dim() + cfg.action_dim, cfg.units,
                              Act::kElu, init_rng)),
      cell_(nn::make_gru(params_, "cell", cfg.units, cfg.dyn_hidden, init_rng)),
      prior1_(nn::make_dense(params_, "prior1", cfg.dyn_hidden, cfg.units, Act::kElu, init_rng)),
      prior2_(nn::make_dense(params_, "prior2", cfg.units, cfg.z_dim(), Act::kIdentity, init_rng)),
      post1_(nn::make_dense(params_, "post1", cfg.dyn_hidden + cfg.units, cfg.units, Act::kElu,
                            init_rng)),
      post2_(nn::make_dense(params_, "post2", cfg.units, cfg.z_dim(), Act::kIdentity, init_rng)),
      rew1_(nn::make_dense(params_, "rew1", cfg.feat_dim(), cfg.units, Act::kElu, init_rng)),
      rew2_(nn::make_dense(params_, "rew2", cfg.units, 1, Act::kIdentity, init_rng)),
      dec1_(nn::make_dense(params_, "dec1", cfg.feat_dim(), cfg.units, Act::kElu, init_rng)),
      dec2_(nn::make_dense(params_, "dec2", cfg.units, cfg.obs_dim, Act::kIdentity, init_rng)) {}

LatentValue WorldModel::initial_state(int batch, Rng& rng) {
  Graph g;
  Ctx c(g, false);
  int h = g.input(Mat::Zero(cfg_.dyn_hidden, batch));
  int z = g.sample_straight_through(prior_logits(c, h), cfg_.dyn_discrete, rng);
  return {g.value(h), g.value(z)};
}

LatentNodes WorldModel::nodes_from(Graph& g, const LatentValue& v) const {
  return {g.input(v.h), g.input(v.z)};
}

LatentValue WorldModel::value_of(const Graph& g, const LatentNodes& s) const {
  return {g.value(s.h), g.value(s.z)};
}

int WorldModel::feat(Ctx& c, const LatentNodes& s) const {
  return c.g.concat_rows(std::array<int, 2>{s.h, s.z});
}

int WorldModel::encode_obs(Ctx& c, int obs) const { return enc2_.apply(c, enc1_.apply(c, obs)); }

int WorldModel::prior_logits(Ctx& c, int h) const { return prior2_.apply(c, prior1_.apply(c, h)); }

int WorldModel::posterior_logits(Ctx& c, int h, int embed) const {
  int joint = c.g.concat_rows(std::array<int, 2>{h, embed});
  return post2_.apply(c, post1_.apply(c, joint));
}

int WorldModel::sample_latent(Ctx& c, int logits, Rng& rng) const {
  if (soft_latents_) return c.g.softmax_groups(logits, cfg_.dyn_discrete);
  return c.g.sample_straight_through(logits, cfg_.dyn_discrete, rng);
}

int WorldModel::advance_carry(Ctx& c, const LatentNodes& prev, int action) const {
  int x = in_proj_.apply(c, c.g.concat_rows(std::array<int, 2>{prev.z, action}));
  return cell_.step(c, prev.h, x);
}

StepNodes WorldModel::observe_step(Ctx& c, const LatentNodes& prev, int action, int obs,
                                   Rng& rng) const {
  StepNodes out;
  int h = advance_carry(c, prev, action);
  if (!c.g.value(h).allFinite()) throw nn::NnError("observe_step: non-finite carry activation");
  out.prior_logits = prior_logits(c, h);
  out.post_logits = posterior_logits(c, h, encode_obs(c, obs));
  out.state.h = h;
  out.state.z = sample_latent(c, out.post_logits, rng);
  return out;
}

std::vector<StepNodes> WorldModel::encode_sequence(Ctx& c, const LatentNodes& init,
                                                   std::span<const int> actions,
                                                   std::span<const int> obs, Rng& rng) const {
  if (actions.size() != obs.size()) {
    throw nn::NnError("encode_sequence: action/observation length mismatch");
  }
  std::vector<StepNodes> steps;
  steps.reserve(actions.size());
  LatentNodes prev = init;
  for (size_t t = 0; t < actions.size(); ++t) {
    StepNodes s = observe_step(c, prev, actions[t], obs[t], rng);
    prev = s.state;
    steps.push_back(s);
  }
  return steps;
}

int WorldModel::decode_reward(Ctx& c, int feat) const { return rew2_.apply(c, rew1_.apply(c, feat)); }

int WorldModel::decode_obs(Ctx& c, int feat) const { return dec2_.apply(c, dec1_.apply(c, feat)); }

int WorldModel::gaussian_nll(Graph& g, int pred, const Mat& target) const {
  Eigen::Index dim = target.rows();
  int err = g.square_(g.sub(pred, g.input(target)));
  int per_col = g.affine(g.col_sums(err), 0.5, 0.5 * static_cast<double>(dim) * std::log(2.0 * M_PI));
  return g.mean(per_col);
}

WmLossBreakdown WorldModel::wm_loss(Ctx& c, std::span<const StepNodes> steps,
                                    const Mat& obs_targets, const Mat& reward_targets,
                                    std::span<const int> indices) const {
  if (indices.empty()) throw nn::NnError("wm_loss: empty loss index set");
  Graph& g = c.g;
  Eigen::Index batch = g.value(steps[0].state.h).cols();

  // Gather latent states, logits and targets at the selected indices. Indices
  // are 1-based positions in the encoded sequence; a batch of B sequences
  // contributes B columns per index.
  std::vector<int> h_nodes, z_nodes, prior_nodes, post_nodes, col_ids;
  size_t total = indices.size() * static_cast<size_t>(batch);
  h_nodes.reserve(total);
  Mat obs_sel(obs_targets.rows(), static_cast<Eigen::Index>(total));
  Mat rew_sel(1, static_cast<Eigen::Index>(total));
  Eigen::Index out_col = 0;
  for (int idx : indices) {
    if (idx < 1 || static_cast<size_t>(idx) > steps.size()) {
      throw nn::NnError("wm_loss: loss index " + std::to_string(idx) + " outside [1, n]");
    }
    const StepNodes& s = steps[static_cast<size_t>(idx - 1)];
    for (Eigen::Index b = 0; b < batch; ++b) {
      h_nodes.push_back(s.state.h);
      z_nodes.push_back(s.state.z);
      prior_nodes.push_back(s.prior_logits);
      post_nodes.push_back(s.post_logits);
      col_ids.push_back(static_cast<int>(b));
      obs_sel.col(out_col) = obs_targets.col((idx - 1) * batch + b);
      rew_sel.col(out_col) = reward_targets.col((idx - 1) * batch + b);
      ++out_col;
    }
  }
  int h_sel = g.gather_cols(h_nodes, col_ids);
  int z_sel = g.gather_cols(z_nodes, col_ids);
  int prior_sel = g.gather_cols(prior_nodes, col_ids);
  int post_sel = g.gather_cols(post_nodes, col_ids);
  int feat_sel = g.concat_rows(std::array<int, 2>{h_sel, z_sel});

  int obs_nll = gaussian_nll(g, decode_obs(c, feat_sel), obs_sel);
  int rew_nll = gaussian_nll(g, decode_reward(c, feat_sel), rew_sel);

  int gs = cfg_.dyn_discrete;
  auto kl_per_col = [&](int post_logits, int prior_logits) {
    int p_post = g.softmax_groups(post_logits, gs);
    int lp_post = g.log_softmax_groups(post_logits, gs);
    int lp_prior = g.log_softmax_groups(prior_logits, gs);
    return g.col_sums(g.mul(p_post, g.sub(lp_post, lp_prior)));
  };
  // Dynamics term trains the prior towards the (frozen) posterior;
  // representation term nudges the posterior towards the (frozen) prior.
  int kl_dyn = kl_per_col(g.stop_grad(post_sel), prior_sel);
  int kl_rep = kl_per_col(post_sel, g.stop_grad(prior_sel));
  int kl_loss = g.add(g.affine(g.mean(g.max_scalar(kl_dyn, cfg_.free_bits)), cfg_.kl_dyn_weight),
                      g.affine(g.mean(g.max_scalar(kl_rep, cfg_.free_bits)), cfg_.kl_rep_weight));

  int total_node = g.add(g.add(obs_nll, rew_nll), kl_loss);

  WmLossBreakdown out;
  out.obs_nll = g.value(obs_nll)(0, 0);
  out.reward_nll = g.value(rew_nll)(0, 0);
  out.kl = g.value(kl_dyn).mean();
  out.kl_loss = g.value(kl_loss)(0, 0);
  out.total = g.value(total_node)(0, 0);
  out.total_node = total_node;
  out.loss_terms = static_cast<int>(indices.size());
  return out;
}

std::vector<ImaginedStep> WorldModel::imagine(Ctx& c, const LatentNodes& start,
                                              const PolicyFn& policy, int horizon,
                                              Rng& rng) const {
  if (horizon < 1) throw nn::NnError("imagine: horizon must be >= 1");
  std::vector<ImaginedStep> out;
  out.reserve(static_cast<size_t>(horizon));
  LatentNodes state = start;
  for (int t = 0; t < horizon; ++t) {
    ImaginedStep step;
    int f = feat(c, state);
    step.action = policy(c, f, rng);
    int h = advance_carry(c, state, step.action);
    int prior = prior_logits(c, h);
    step.state.h = h;
    step.state.z = sample_latent(c, prior, rng);
    step.feat = feat(c, step.state);
    step.reward = decode_reward(c, step.feat);
    out.push_back(step);
    state = step.state;
  }
  return out;
}

}  // namespace mamba::rssm
