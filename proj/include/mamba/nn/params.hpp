#pragma once

#include <deque>
#include <string>
#include <vector>

#include "mamba/nn/graph.hpp"
#include "mamba/util/rng.hpp"

namespace mamba::nn {

// Owning collection of named parameters. Pointers into the set stay valid for
// its lifetime (deque storage), so layers can hold raw Param*.
class ParamSet {
public:
  // Uniform fan-in init: U[-1/sqrt(fan_in), +1/sqrt(fan_in)].
  Param& add(const std::string& name, int rows, int cols, Rng& rng);
  Param& add_zeros(const std::string& name, int rows, int cols);

  Param* find(const std::string& name);
  const Param* find(const std::string& name) const;

  void zero_grads();
  // Squared L2 norm over all gradients.
  double grad_sq_norm() const;
  size_t count() const { return params_.size(); }
  size_t scalar_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  // Copies values (not grads) from another set with identical layout.
  void copy_values_from(const ParamSet& other);

private:
  std::deque<Param> params_;
};

// Checkpoint file: a plain-text manifest followed by raw little-endian
// float32 data. See README for the exact layout. Multiple sets are written
// under distinct prefixes ("wm.", "agent.", ...).
void save_params(const std::string& path,
                 const std::vector<std::pair<std::string, const ParamSet*>>& sets);
// Loads into existing sets; every tensor must match by name and shape.
void load_params(const std::string& path,
                 const std::vector<std::pair<std::string, ParamSet*>>& sets);

}  // namespace mamba::nn
