#pragma once

#include <string>
#include <unordered_map>

#include "mamba/nn/graph.hpp"
#include "mamba/nn/params.hpp"

namespace mamba::nn {

enum class Act { kIdentity, kTanh, kElu };

// Binds a graph to a parameter mode: learnable (param nodes, gradients
// accumulate) or frozen (values used as constants). Each Param materializes
// at most one node per graph.
struct Ctx {
  Graph& g;
  bool learn = true;

  explicit Ctx(Graph& graph, bool learn_params = true) : g(graph), learn(learn_params) {}

  int node(Param& p) {
    auto it = cache_.find(&p);
    if (it != cache_.end()) return it->second;
    int id = learn ? g.param(p) : g.frozen(p);
    cache_.emplace(&p, id);
    return id;
  }

private:
  std::unordered_map<Param*, int> cache_;
};

// Affine layer with optional activation: y = act(W x + b).
struct Dense {
  Param* w = nullptr;  // out x in
  Param* b = nullptr;  // out x 1
  Act act = Act::kIdentity;

  int out_dim() const { return static_cast<int>(w->value.rows()); }
  int in_dim() const { return static_cast<int>(w->value.cols()); }

  int apply(Ctx& c, int x) const {
    int y = c.g.add(c.g.matmul(c.node(*w), x), c.node(*b));
    switch (act) {
      case Act::kIdentity: return y;
      case Act::kTanh: return c.g.tanh_(y);
      case Act::kElu: return c.g.elu_(y);
    }
    return y;
  }
};

Dense make_dense(ParamSet& ps, const std::string& name, int in, int out, Act act, Rng& rng);

// Gated recurrent cell, fused-gate layout:
//   pre = W x + U h + b          (3h rows: reset | update | candidate)
//   r = sigmoid(pre_r), u = sigmoid(pre_u)
//   c = tanh(Wc-part of pre + r .* (U h)_c)
//   h' = u .* h + (1 - u) .* c
// With all parameters zero this reduces to h' = 0.5 h (fixed point at 0).
struct GruCell {
  Param* w = nullptr;  // 3h x in
  Param* u = nullptr;  // 3h x h
  Param* b = nullptr;  // 3h x 1
  int hidden = 0;

  int step(Ctx& c, int h_prev, int x) const;
};

GruCell make_gru(ParamSet& ps, const std::string& name, int in, int hidden, Rng& rng);

// Grouped categorical latent: `groups` independent categorical variables with
// `classes` outcomes each, parameterized by stacked logits (groups*classes rows).
struct CategoricalSpec {
  int groups = 0;
  int classes = 0;
  int flat_dim() const { return groups * classes; }
};

}  // namespace mamba::nn
