#include "mamba/nn/params.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace mamba::nn {

Param& ParamSet::add(const std::string& name, int rows, int cols, Rng& rng) {
  Param p;
  p.name = name;
  p.value.resize(rows, cols);
  double bound = 1.0 / std::sqrt(static_cast<double>(cols > 0 ? cols : 1));
  for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
      p.value(i, j) = rng.uniform(-bound, bound);
    }
  }
  p.grad = Mat::Zero(rows, cols);
  params_.push_back(std::move(p));
  return params_.back();
}

Param& ParamSet::add_zeros(const std::string& name, int rows, int cols) {
  Param p;
  p.name = name;
  p.value = Mat::Zero(rows, cols);
  p.grad = Mat::Zero(rows, cols);
  params_.push_back(std::move(p));
  return params_.back();
}

Param* ParamSet::find(const std::string& name) {
  for (Param& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const Param* ParamSet::find(const std::string& name) const {
  for (const Param& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

void ParamSet::zero_grads() {
  for (Param& p : params_) p.grad.setZero(p.value.rows(), p.value.cols());
}

double ParamSet::grad_sq_norm() const {
  double sq = 0.0;
  for (const Param& p : params_) {
    if (p.grad.size() > 0) sq += p.grad.squaredNorm();
  }
  return sq;
}

size_t ParamSet::scalar_count() const {
  size_t n = 0;
  for (const Param& p : params_) n += static_cast<size_t>(p.value.size());
  return n;
}

void ParamSet::copy_values_from(const ParamSet& other) {
  if (other.params_.size() != params_.size()) throw NnError("copy_values_from: layout mismatch");
  auto it = other.params_.begin();
  for (Param& p : params_) {
    if (it->value.rows() != p.value.rows() || it->value.cols() != p.value.cols()) {
      throw NnError("copy_values_from: shape mismatch at " + p.name);
    }
    p.value = it->value;
    ++it;
  }
}

namespace {

void write_f32_le(std::ostream& out, double v) {
  float f = static_cast<float>(v);
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap32(bits);
  }
  out.write(reinterpret_cast<const char*>(&bits), 4);
}

double read_f32_le(std::istream& in) {
  uint32_t bits;
  in.read(reinterpret_cast<char*>(&bits), 4);
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap32(bits);
  }
  float f;
  std::memcpy(&f, &bits, 4);
  return static_cast<double>(f);
}

}  // namespace

void save_params(const std::string& path,
                 const std::vector<std::pair<std::string, const ParamSet*>>& sets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NnError("cannot open checkpoint for writing: " + path);
  size_t tensors = 0;
  for (const auto& [prefix, set] : sets) tensors += set->count();
  out << "mamba-checkpoint 1\n";
  out << "dtype float32 little-endian row-major\n";
  out << "tensors " << tensors << "\n";
  for (const auto& [prefix, set] : sets) {
    for (const Param& p : *set) {
      out << prefix << p.name << " " << p.value.rows() << " " << p.value.cols() << "\n";
    }
  }
  out << "data\n";
  for (const auto& [prefix, set] : sets) {
    for (const Param& p : *set) {
      for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
          write_f32_le(out, p.value(i, j));
        }
      }
    }
  }
  if (!out) throw NnError("failed writing checkpoint: " + path);
}

void load_params(const std::string& path,
                 const std::vector<std::pair<std::string, ParamSet*>>& sets) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NnError("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "mamba-checkpoint 1") {
    throw NnError("bad checkpoint header in " + path);
  }
  std::getline(in, line);  // dtype line
  std::getline(in, line);
  size_t tensors = 0;
  {
    std::istringstream ss(line);
    std::string word;
    ss >> word >> tensors;
    if (word != "tensors") throw NnError("bad checkpoint manifest in " + path);
  }
  struct Entry {
    std::string name;
    Eigen::Index rows, cols;
  };
  std::vector<Entry> entries;
  entries.reserve(tensors);
  for (size_t i = 0; i < tensors; ++i) {
    if (!std::getline(in, line)) throw NnError("truncated checkpoint manifest in " + path);
    std::istringstream ss(line);
    Entry e;
    ss >> e.name >> e.rows >> e.cols;
    entries.push_back(e);
  }
  if (!std::getline(in, line) || line != "data") throw NnError("missing data marker in " + path);

  std::map<std::string, Param*> by_name;
  for (const auto& [prefix, set] : sets) {
    for (Param& p : *set) by_name[prefix + p.name] = &p;
  }
  size_t seen = 0;
  for (const Entry& e : entries) {
    auto it = by_name.find(e.name);
    if (it == by_name.end()) {
      // Skip unknown tensor payload to keep partial loads possible.
      in.seekg(static_cast<std::streamoff>(4 * e.rows * e.cols), std::ios::cur);
      continue;
    }
    Param& p = *it->second;
    if (p.value.rows() != e.rows || p.value.cols() != e.cols) {
      throw NnError("checkpoint tensor `" + e.name + "` has shape " + std::to_string(e.rows) +
                    "x" + std::to_string(e.cols) + ", expected " + std::to_string(p.value.rows()) +
                    "x" + std::to_string(p.value.cols()));
    }
    for (Eigen::Index i = 0; i < e.rows; ++i) {
      for (Eigen::Index j = 0; j < e.cols; ++j) {
        p.value(i, j) = read_f32_le(in);
      }
    }
    ++seen;
  }
  if (!in) throw NnError("truncated checkpoint data in " + path);
  size_t expected = 0;
  for (const auto& [prefix, set] : sets) expected += set->count();
  if (seen != expected) {
    throw NnError("checkpoint " + path + " is missing tensors (found " + std::to_string(seen) +
                  " of " + std::to_string(expected) + ")");
  }
}

}  // namespace mamba::nn
