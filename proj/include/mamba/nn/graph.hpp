#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mamba/util/rng.hpp"

namespace mamba::nn {

using Mat = Eigen::MatrixXd;

struct NnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Learnable tensor. `grad` accumulates across backward passes until the
// optimizer consumes it.
struct Param {
  std::string name;
  Mat value;
  Mat grad;
};

// Reverse-mode tape over matrix-valued nodes. Forward values are computed
// eagerly as ops are added; backward() then fills gradients for every node
// that transitively depends on a Param added via param().
//
// Column convention: activations are (features x batch). A (n x 1) operand of
// add/sub/mul broadcasts across columns (bias add).
class Graph {
public:
  // ---- leaves ----
  int input(Mat v);                          // constant, no gradient
  int input_col(std::span<const double> v);  // column vector constant
  int scalar(double v);
  int param(Param& p);   // learnable leaf; backward accumulates into p.grad
  int frozen(Param& p);  // parameter value used as a constant

  // ---- arithmetic ----
  int matmul(int a, int b);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);                          // elementwise
  int affine(int a, double mul, double add = 0);  // elementwise a*mul + add

  // ---- nonlinearities ----
  int tanh_(int a);
  int sigmoid_(int a);
  int elu_(int a);
  int relu_(int a);
  int exp_(int a);
  int log_(int a);
  int softplus_(int a);
  int square_(int a);
  int max_scalar(int a, double c);  // elementwise max(a, c)

  // ---- shape ----
  int concat_rows(std::span<const int> parts);
  int slice_rows(int a, int first, int count);
  int concat_cols(std::span<const int> parts);
  // Column gather across nodes: output column j is value(nodes[j]).col(cols[j]).
  int gather_cols(std::span<const int> nodes, std::span<const int> cols);

  // ---- reductions ----
  int sum(int a);       // 1x1
  int mean(int a);      // 1x1
  int col_sums(int a);  // 1 x cols, sum over rows

  // ---- categorical groups (rows partitioned into groups of `group_size`) ----
  int softmax_groups(int logits, int group_size);
  int log_softmax_groups(int logits, int group_size);
  // Hard one-hot sample per group; gradient passes through as if the output
  // were the softmax probabilities.
  int sample_straight_through(int logits, int group_size, Rng& rng);

  // ---- misc ----
  int stop_grad(int a);
  // Picks value(rows[c], c) for each column c, returning a 1 x cols row.
  int select_rows_per_col(int a, std::vector<int> rows);

  const Mat& value(int id) const { return node(id).value; }
  // Gradient of the last backward() loss w.r.t. node `id` (zeros if detached).
  Mat grad_of(int id) const;
  bool requires_grad(int id) const { return node(id).requires_grad; }

  // Reverse sweep from a scalar loss node. Accumulates into Param::grad for
  // every learnable leaf. Node gradients are reset at each call; Param::grad
  // is not (callers zero it via optimizer or explicitly).
  void backward(int loss);

  size_t size() const { return nodes_.size(); }

private:
  enum class Op {
    kInput, kParam, kMatmul, kAdd, kSub, kMul, kAffine,
    kTanh, kSigmoid, kElu, kRelu, kExp, kLog, kSoftplus, kSquare, kMaxScalar,
    kConcatRows, kSliceRows, kConcatCols, kGatherCols,
    kSum, kColSums,
    kSoftmaxG, kLogSoftmaxG, kStSampleG,
    kStopGrad, kSelectRows,
  };

  struct Node {
    Op op;
    std::array<int, 2> p{-1, -1};
    std::vector<int> many;  // concat parts / per-column row indices
    int i0 = 0;             // group size, slice start, broadcast flag
    int i1 = 0;             // slice count
    double c0 = 0, c1 = 0;
    Mat value;
    Mat aux;  // softmax probabilities for group ops
    Mat grad;
    Param* param = nullptr;
    bool requires_grad = false;
  };

  const Node& node(int id) const;
  Node& node(int id);
  int push(Node n);
  int unary(Op op, int a, Mat value);
  void ensure_grad(Node& n);
  void accumulate(int id, const Mat& g);
  void backward_node(int id);
  [[noreturn]] void fail(const std::string& op, const std::string& msg) const;

  std::vector<Node> nodes_;
};

// Elementwise helpers shared with tests.
inline double elu_fn(double x) { return x > 0 ? x : std::expm1(x); }
inline double softplus_fn(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }

}  // namespace mamba::nn
