#include <doctest.h>

#include <cmath>

#include "mamba/nn/adam.hpp"
#include "mamba/nn/gradcheck.hpp"
#include "mamba/rssm/rssm.hpp"

using namespace mamba;
using namespace mamba::rssm;
using nn::Ctx;
using nn::Graph;
using nn::Mat;

namespace {

RssmConfig tiny_config() {
  RssmConfig cfg;
  cfg.obs_dim = 3;
  cfg.action_dim = 2;
  cfg.dyn_hidden = 8;
  cfg.dyn_stoch = 2;
  cfg.dyn_discrete = 4;
  cfg.units = 8;
  return cfg;
}

void zero_all(nn::ParamSet& ps) {
  for (nn::Param& p : ps) p.value.setZero();
}

// Builds per-step input nodes for a random toy sequence.
struct ToySeq {
  std::vector<Mat> obs, act;
  Mat obs_targets, rew_targets;  // (obs_dim x n*B), (1 x n*B)
};

ToySeq make_toy(const RssmConfig& cfg, int n, int batch, Rng& rng) {
  ToySeq seq;
  seq.obs_targets.resize(cfg.obs_dim, n * batch);
  seq.rew_targets.resize(1, n * batch);
  for (int t = 0; t < n; ++t) {
    Mat o(cfg.obs_dim, batch), a(cfg.action_dim, batch);
    for (Eigen::Index i = 0; i < o.size(); ++i) o.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal() * 0.1;
    seq.obs_targets.middleCols(t * batch, batch) = o;
    for (int b = 0; b < batch; ++b) seq.rew_targets(0, t * batch + b) = rng.normal();
    seq.obs.push_back(std::move(o));
    seq.act.push_back(std::move(a));
  }
  return seq;
}

}  // namespace

TEST_CASE("observe_step: zero params keep the carry at the zero fixed point") {
  Rng rng(1);
  RssmConfig cfg = tiny_config();
  WorldModel wm(cfg, rng);
  zero_all(wm.params());
  Graph g;
  Ctx c(g, false);
  LatentNodes prev{g.input(Mat::Zero(cfg.dyn_hidden, 1)), g.input(Mat::Zero(cfg.z_dim(), 1))};
  Rng sample(2);
  StepNodes s = wm.observe_step(c, prev, g.input(Mat::Zero(cfg.action_dim, 1)),
                                g.input(Mat::Zero(cfg.obs_dim, 1)), sample);
  CHECK(g.value(s.state.h).cwiseAbs().maxCoeff() == 0.0);
  // Uniform posterior logits: the latent is still a valid per-group one-hot.
  for (int grp = 0; grp < cfg.dyn_stoch; ++grp) {
    CHECK(g.value(s.state.z).col(0).segment(grp * cfg.dyn_discrete, cfg.dyn_discrete).sum() == 1.0);
  }
}

TEST_CASE("observe_step: same inputs and seed give identical latents") {
  Rng rng(3);
  WorldModel wm(tiny_config(), rng);
  Mat obs = Mat::Random(3, 2), act = Mat::Random(2, 2);
  auto run = [&] {
    Graph g;
    Ctx c(g, false);
    Rng sample(42);
    LatentNodes prev{g.input(Mat::Zero(8, 2)), g.input(Mat::Zero(8, 2))};
    StepNodes s = wm.observe_step(c, prev, g.input(act), g.input(obs), sample);
    return std::pair<Mat, Mat>(g.value(s.state.h), g.value(s.state.z));
  };
  auto a = run();
  auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("posterior collapses to the prior when the embedding path is zeroed") {
  Rng rng(4);
  RssmConfig cfg = tiny_config();
  WorldModel wm(cfg, rng);
  nn::ParamSet& ps = wm.params();
  // Copy the prior head into the posterior head and cut the embedding block.
  nn::Param* prior1 = ps.find("prior1.w");
  nn::Param* post1 = ps.find("post1.w");
  post1->value.setZero();
  post1->value.leftCols(cfg.dyn_hidden) = prior1->value;
  ps.find("post1.b")->value = ps.find("prior1.b")->value;
  ps.find("post2.w")->value = ps.find("prior2.w")->value;
  ps.find("post2.b")->value = ps.find("prior2.b")->value;

  Graph g;
  Ctx c(g, false);
  Rng sample(5);
  LatentNodes prev{g.input(Mat::Random(cfg.dyn_hidden, 2)), g.input(Mat::Zero(cfg.z_dim(), 2))};
  StepNodes s = wm.observe_step(c, prev, g.input(Mat::Random(cfg.action_dim, 2)),
                                g.input(Mat::Random(cfg.obs_dim, 2)), sample);
  CHECK((g.value(s.post_logits) - g.value(s.prior_logits)).cwiseAbs().maxCoeff() < 1e-12);

  // And with generic weights they differ.
  Rng rng2(6);
  WorldModel generic(cfg, rng2);
  Graph g2;
  Ctx c2(g2, false);
  StepNodes s2 = generic.observe_step(c2, {g2.input(Mat::Random(cfg.dyn_hidden, 2)),
                                           g2.input(Mat::Zero(cfg.z_dim(), 2))},
                                      g2.input(Mat::Random(cfg.action_dim, 2)),
                                      g2.input(Mat::Random(cfg.obs_dim, 2)), sample);
  CHECK((g2.value(s2.post_logits) - g2.value(s2.prior_logits)).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("encode_sequence: length contract and split-refeed equivalence") {
  Rng rng(7);
  RssmConfig cfg = tiny_config();
  WorldModel wm(cfg, rng);

  SUBCASE("zero-length input returns no steps") {
    Graph g;
    Ctx c(g, false);
    Rng sample(1);
    auto steps = wm.encode_sequence(c, wm.nodes_from(g, wm.initial_state(1, sample)), {}, {}, sample);
    CHECK(steps.empty());
  }

  SUBCASE("two hundred steps produce two hundred latents") {
    Graph g;
    Ctx c(g, false);
    Rng sample(2);
    std::vector<int> acts, obs;
    for (int t = 0; t < 200; ++t) {
      acts.push_back(g.input(Mat::Zero(cfg.action_dim, 1)));
      obs.push_back(g.input(Mat::Constant(cfg.obs_dim, 1, 0.1)));
    }
    LatentNodes init = wm.nodes_from(g, wm.initial_state(1, sample));
    auto steps = wm.encode_sequence(c, init, acts, obs, sample);
    CHECK(steps.size() == 200);
  }

  SUBCASE("carrying the state across a split matches unbroken encoding bitwise") {
    Rng data(3);
    ToySeq seq = make_toy(cfg, 10, 2, data);
    auto encode_all = [&] {
      Graph g;
      Ctx c(g, false);
      Rng sample(9);
      std::vector<int> acts, obs;
      for (int t = 0; t < 10; ++t) {
        acts.push_back(g.input(seq.act[static_cast<size_t>(t)]));
        obs.push_back(g.input(seq.obs[static_cast<size_t>(t)]));
      }
      LatentNodes init{g.input(Mat::Zero(cfg.dyn_hidden, 2)), g.input(Mat::Zero(cfg.z_dim(), 2))};
      auto steps = wm.encode_sequence(c, init, acts, obs, sample);
      return wm.value_of(g, steps.back().state);
    };
    auto encode_split = [&] {
      Rng sample(9);
      LatentValue carry{Mat::Zero(cfg.dyn_hidden, 2), Mat::Zero(cfg.z_dim(), 2)};
      for (int part = 0; part < 2; ++part) {
        Graph g;
        Ctx c(g, false);
        std::vector<int> acts, obs;
        for (int t = part * 5; t < part * 5 + 5; ++t) {
          acts.push_back(g.input(seq.act[static_cast<size_t>(t)]));
          obs.push_back(g.input(seq.obs[static_cast<size_t>(t)]));
        }
        auto steps = wm.encode_sequence(c, wm.nodes_from(g, carry), acts, obs, sample);
        carry = wm.value_of(g, steps.back().state);
      }
      return carry;
    };
    LatentValue a = encode_all();
    LatentValue b = encode_split();
    CHECK(a.h == b.h);
    CHECK(a.z == b.z);
  }
}

TEST_CASE("wm_loss: closed-form Gaussian NLL, zero KL at equal logits, exact term count") {
  Rng rng(8);
  RssmConfig cfg = tiny_config();
  WorldModel wm(cfg, rng);

  SUBCASE("zero decoder on zero targets gives d/2 log(2 pi)") {
    Graph g;
    int pred = g.input(Mat::Zero(5, 7));
    WorldModel wm2(cfg, rng);
    int nll = wm2.gaussian_nll(g, pred, Mat::Zero(5, 7));
    CHECK(g.value(nll)(0, 0) == doctest::Approx(2.5 * std::log(2.0 * M_PI)));
  }

  SUBCASE("identical posterior and prior logits give zero raw KL") {
    nn::ParamSet& ps = wm.params();
    ps.find("post1.w")->value.setZero();
    ps.find("post1.w")->value.leftCols(cfg.dyn_hidden) = ps.find("prior1.w")->value;
    ps.find("post1.b")->value = ps.find("prior1.b")->value;
    ps.find("post2.w")->value = ps.find("prior2.w")->value;
    ps.find("post2.b")->value = ps.find("prior2.b")->value;

    Graph g;
    Ctx c(g, true);
    Rng sample(11), data(12);
    ToySeq seq = make_toy(cfg, 4, 2, data);
    std::vector<int> acts, obs;
    for (int t = 0; t < 4; ++t) {
      acts.push_back(g.input(seq.act[static_cast<size_t>(t)]));
      obs.push_back(g.input(seq.obs[static_cast<size_t>(t)]));
    }
    LatentNodes init{g.input(Mat::Zero(cfg.dyn_hidden, 2)), g.input(Mat::Zero(cfg.z_dim(), 2))};
    auto steps = wm.encode_sequence(c, init, acts, obs, sample);
    std::vector<int> indices{1, 2, 3, 4};
    WmLossBreakdown loss = wm.wm_loss(c, steps, seq.obs_targets, seq.rew_targets, indices);
    CHECK(loss.kl == doctest::Approx(0.0).epsilon(1e-10));
  }

  SUBCASE("64 indices over a 200-step sequence touch exactly 64 latents") {
    Rng sample(13), data(14);
    RssmConfig small = cfg;
    ToySeq seq = make_toy(small, 200, 1, data);
    Graph g;
    Ctx c(g, false);
    std::vector<int> acts, obs;
    for (int t = 0; t < 200; ++t) {
      acts.push_back(g.input(seq.act[static_cast<size_t>(t)]));
      obs.push_back(g.input(seq.obs[static_cast<size_t>(t)]));
    }
    LatentNodes init{g.input(Mat::Zero(small.dyn_hidden, 1)), g.input(Mat::Zero(small.z_dim(), 1))};
    auto steps = wm.encode_sequence(c, init, acts, obs, sample);
    std::vector<int> indices;
    for (int i = 0; i < 64; ++i) indices.push_back(1 + static_cast<int>(sample.below(200)));
    WmLossBreakdown loss = wm.wm_loss(c, steps, seq.obs_targets, seq.rew_targets, indices);
    CHECK(loss.loss_terms == 64);
  }

  SUBCASE("empty index set is rejected") {
    Graph g;
    Ctx c(g, false);
    std::vector<StepNodes> steps(1);
    CHECK_THROWS_AS(wm.wm_loss(c, steps, Mat::Zero(3, 1), Mat::Zero(1, 1), {}), nn::NnError);
  }
}

TEST_CASE("wm_loss gradients match finite differences on a 4-step toy sequence") {
  Rng rng(21);
  RssmConfig cfg = tiny_config();
  WorldModel wm(cfg, rng);
  wm.set_soft_latents(true);  // hard samples are piecewise constant; check the smooth path
  Rng data(22);
  ToySeq seq = make_toy(cfg, 4, 2, data);
  std::vector<int> indices{1, 3, 4};

  auto run = [&](bool learn) {
    Graph g;
    Ctx c(g, learn);
    Rng sample(5);
    std::vector<int> acts, obs;
    for (int t = 0; t < 4; ++t) {
      acts.push_back(g.input(seq.act[static_cast<size_t>(t)]));
      obs.push_back(g.input(seq.obs[static_cast<size_t>(t)]));
    }
    LatentNodes init{g.input(Mat::Zero(cfg.dyn_hidden, 2)), g.input(Mat::Zero(cfg.z_dim(), 2))};
    auto steps = wm.encode_sequence(c, init, acts, obs, sample);
    WmLossBreakdown loss = wm.wm_loss(c, steps, seq.obs_targets, seq.rew_targets, indices);
    if (learn) g.backward(loss.total_node);
    return loss.total;
  };

  wm.params().zero_grads();
  run(true);
  auto result = nn::check_grads(wm.params(), [&] { return run(false); });
  INFO("worst parameter: ", result.worst_param);
  CHECK(result.max_rel_error < 1e-3);
}

TEST_CASE("raw KL is non-negative at every index") {
  Rng rng(31);
  RssmConfig cfg = tiny_config();
  for (int trial = 0; trial < 10; ++trial) {
    WorldModel wm(cfg, rng);
    Graph g;
    Ctx c(g, false);
    Rng sample(static_cast<uint64_t>(trial)), data(static_cast<uint64_t>(100 + trial));
    ToySeq seq = make_toy(cfg, 6, 2, data);
    std::vector<int> acts, obs;
    for (int t = 0; t < 6; ++t) {
      acts.push_back(g.input(seq.act[static_cast<size_t>(t)]));
      obs.push_back(g.input(seq.obs[static_cast<size_t>(t)]));
    }
    LatentNodes init{g.input(Mat::Zero(cfg.dyn_hidden, 2)), g.input(Mat::Zero(cfg.z_dim(), 2))};
    auto steps = wm.encode_sequence(c, init, acts, obs, sample);
    for (const StepNodes& s : steps) {
      // KL(post || prior) per column from raw logits.
      int p = g.softmax_groups(s.post_logits, cfg.dyn_discrete);
      int diff = g.sub(g.log_softmax_groups(s.post_logits, cfg.dyn_discrete),
                       g.log_softmax_groups(s.prior_logits, cfg.dyn_discrete));
      Mat kl = g.value(g.col_sums(g.mul(p, diff)));
      CHECK(kl.minCoeff() >= -1e-12);
    }
  }
}

TEST_CASE("imagine: horizon one, reproducibility, constant reward decoder") {
  Rng rng(41);
  RssmConfig cfg = tiny_config();
  WorldModel wm(cfg, rng);
  auto zero_policy = [&](Ctx& c, int, Rng&) { return c.g.input(Mat::Zero(cfg.action_dim, 3)); };

  SUBCASE("horizon 1 gives exactly one imagined transition") {
    Graph g;
    Ctx c(g, false);
    Rng sample(1);
    LatentNodes start = wm.nodes_from(g, wm.initial_state(3, sample));
    auto steps = wm.imagine(c, start, zero_policy, 1, sample);
    CHECK(steps.size() == 1);
  }

  SUBCASE("deterministic policy and fixed seed reproduce the trajectory") {
    auto rollout = [&] {
      Graph g;
      Ctx c(g, false);
      Rng sample(7);
      LatentNodes start = wm.nodes_from(g, wm.initial_state(3, sample));
      auto steps = wm.imagine(c, start, zero_policy, 5, sample);
      std::vector<double> rewards;
      for (const auto& s : steps) {
        for (Eigen::Index i = 0; i < 3; ++i) rewards.push_back(g.value(s.reward)(0, i));
      }
      return rewards;
    };
    CHECK(rollout() == rollout());
  }

  SUBCASE("zeroed reward output layer decodes its bias everywhere") {
    wm.params().find("rew2.w")->value.setZero();
    wm.params().find("rew2.b")->value(0, 0) = 0.625;
    Graph g;
    Ctx c(g, false);
    Rng sample(3);
    LatentNodes start = wm.nodes_from(g, wm.initial_state(3, sample));
    auto steps = wm.imagine(c, start, zero_policy, 4, sample);
    for (const auto& s : steps) {
      for (Eigen::Index i = 0; i < 3; ++i) CHECK(g.value(s.reward)(0, i) == doctest::Approx(0.625));
    }
  }

  SUBCASE("horizon zero is rejected") {
    Graph g;
    Ctx c(g, false);
    Rng sample(1);
    LatentNodes start = wm.nodes_from(g, wm.initial_state(3, sample));
    CHECK_THROWS_AS(wm.imagine(c, start, zero_policy, 0, sample), nn::NnError);
  }
}

TEST_CASE("uniform loss-index subsampling is unbiased for the full-sequence gradient") {
  Rng rng(51);
  RssmConfig cfg = tiny_config();
  WorldModel wm(cfg, rng);
  Rng data(52);
  const int n = 12;
  ToySeq seq = make_toy(cfg, n, 1, data);

  Graph g;
  Ctx c(g, true);
  Rng sample(53);
  std::vector<int> acts, obs;
  for (int t = 0; t < n; ++t) {
    acts.push_back(g.input(seq.act[static_cast<size_t>(t)]));
    obs.push_back(g.input(seq.obs[static_cast<size_t>(t)]));
  }
  LatentNodes init{g.input(Mat::Zero(cfg.dyn_hidden, 1)), g.input(Mat::Zero(cfg.z_dim(), 1))};
  auto steps = wm.encode_sequence(c, init, acts, obs, sample);

  auto grads_for = [&](std::span<const int> indices) {
    wm.params().zero_grads();
    WmLossBreakdown loss = wm.wm_loss(c, steps, seq.obs_targets, seq.rew_targets, indices);
    g.backward(loss.total_node);
    std::vector<Mat> out;
    for (nn::Param& p : wm.params()) out.push_back(p.grad);
    return out;
  };

  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i + 1;
  std::vector<Mat> full = grads_for(all);

  std::vector<Mat> mean;
  Rng draw(54);
  const int resamples = 200, l = 4;
  for (int r = 0; r < resamples; ++r) {
    std::vector<int> idx;
    for (int i = 0; i < l; ++i) idx.push_back(1 + static_cast<int>(draw.below(n)));
    std::vector<Mat> grads = grads_for(idx);
    if (mean.empty()) {
      mean = grads;
    } else {
      for (size_t i = 0; i < grads.size(); ++i) mean[i] += grads[i];
    }
  }
  double num = 0, den = 0;
  for (size_t i = 0; i < full.size(); ++i) {
    mean[i] /= static_cast<double>(resamples);
    num += (mean[i] - full[i]).squaredNorm();
    den += full[i].squaredNorm();
  }
  CHECK(std::sqrt(num / den) < 0.05);
}

TEST_CASE("rssm learns a 1d ar(1) process better than the unconditional mean") {
  // x_{t+1} = phi x_t + sigma eps. Predicting the unconditional mean scores
  // NLL = 0.5 * sigma^2/(1-phi^2) + 0.5 log(2 pi) under a unit-variance
  // Gaussian; one-step prediction through the prior must beat it.
  const double phi = 0.9, sigma = 0.3;
  const double nll_uncond = 0.5 * sigma * sigma / (1 - phi * phi) + 0.5 * std::log(2 * M_PI);

  RssmConfig cfg;
  cfg.obs_dim = 1;
  cfg.action_dim = 1;
  cfg.dyn_hidden = 16;
  cfg.dyn_stoch = 4;
  cfg.dyn_discrete = 4;
  cfg.units = 16;
  Rng rng(61);
  WorldModel wm(cfg, rng);
  nn::AdamOptimizer opt(3e-3);

  Rng proc(62);
  const int len = 16, batch = 8;
  auto sample_batch = [&](int b) {
    std::vector<Mat> obs(static_cast<size_t>(len));
    for (int t = 0; t < len; ++t) obs[static_cast<size_t>(t)].resize(1, b);
    for (int col = 0; col < b; ++col) {
      double x = proc.normal() * sigma / std::sqrt(1 - phi * phi);
      for (int t = 0; t < len; ++t) {
        obs[static_cast<size_t>(t)](0, col) = x;
        x = phi * x + sigma * proc.normal();
      }
    }
    return obs;
  };

  Rng sample(63);
  for (int step = 0; step < 2000; ++step) {
    auto obs_data = sample_batch(batch);
    Graph g;
    Ctx c(g, true);
    std::vector<int> acts, obs;
    Mat obs_targets(1, len * batch);
    for (int t = 0; t < len; ++t) {
      acts.push_back(g.input(Mat::Zero(1, batch)));
      obs.push_back(g.input(obs_data[static_cast<size_t>(t)]));
      obs_targets.middleCols(t * batch, batch) = obs_data[static_cast<size_t>(t)];
    }
    LatentNodes init{g.input(Mat::Zero(cfg.dyn_hidden, batch)), g.input(Mat::Zero(cfg.z_dim(), batch))};
    auto steps = wm.encode_sequence(c, init, acts, obs, sample);
    std::vector<int> indices(static_cast<size_t>(len));
    for (int i = 0; i < len; ++i) indices[static_cast<size_t>(i)] = i + 1;
    WmLossBreakdown loss = wm.wm_loss(c, steps, obs_targets, Mat::Zero(1, len * batch), indices);
    g.backward(loss.total_node);
    opt.step(wm.params());
  }

  // Evaluate one-step prediction through the prior path on held-out data.
  auto eval_obs = sample_batch(64);
  Graph g;
  Ctx c(g, false);
  Rng sample_eval(64);
  std::vector<int> acts, obs;
  for (int t = 0; t < len - 1; ++t) {
    acts.push_back(g.input(Mat::Zero(1, 64)));
    obs.push_back(g.input(eval_obs[static_cast<size_t>(t)]));
  }
  LatentNodes init{g.input(Mat::Zero(cfg.dyn_hidden, 64)), g.input(Mat::Zero(cfg.z_dim(), 64))};
  auto steps = wm.encode_sequence(c, init, acts, obs, sample_eval);
  double nll_sum = 0;
  int count = 0;
  for (int t = 4; t + 1 < len; ++t) {  // skip burn-in while the carry warms up
    auto imagined = wm.imagine(
        c, steps[static_cast<size_t>(t - 1)].state,
        [&](Ctx& cc, int, Rng&) { return cc.g.input(Mat::Zero(1, 64)); }, 1, sample_eval);
    int nll = wm.gaussian_nll(g, wm.decode_obs(c, imagined[0].feat), eval_obs[static_cast<size_t>(t)]);
    nll_sum += g.value(nll)(0, 0);
    ++count;
  }
  double nll_prior = nll_sum / count;
  INFO("prior-path NLL ", nll_prior, " vs unconditional ", nll_uncond);
  CHECK(nll_prior < nll_uncond);
}
