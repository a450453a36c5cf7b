#include "mamba/nn/graph.hpp"

#include <cmath>

namespace mamba::nn {

namespace {

std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

const Graph::Node& Graph::node(int id) const {
  if (id < 0 || static_cast<size_t>(id) >= nodes_.size()) {
    throw NnError("graph: invalid node id " + std::to_string(id));
  }
  return nodes_[static_cast<size_t>(id)];
}

Graph::Node& Graph::node(int id) {
  return const_cast<Node&>(static_cast<const Graph*>(this)->node(id));
}

void Graph::fail(const std::string& op, const std::string& msg) const {
  throw NnError("graph op `" + op + "`: " + msg);
}

int Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Graph::input(Mat v) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(v);
  return push(std::move(n));
}

int Graph::input_col(std::span<const double> v) {
  Mat m(static_cast<Eigen::Index>(v.size()), 1);
  for (size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return input(std::move(m));
}

int Graph::scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return input(std::move(m));
}

int Graph::param(Param& p) {
  Node n;
  n.op = Op::kParam;
  n.value = p.value;
  n.param = &p;
  n.requires_grad = true;
  return push(std::move(n));
}

int Graph::frozen(Param& p) { return input(p.value); }

int Graph::unary(Op op, int a, Mat value) {
  Node n;
  n.op = op;
  n.p[0] = a;
  n.value = std::move(value);
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

int Graph::matmul(int a, int b) {
  const Mat& va = node(a).value;
  const Mat& vb = node(b).value;
  if (va.cols() != vb.rows()) {
    fail("matmul", "inner dimensions differ: " + shape_str(va) + " * " + shape_str(vb));
  }
  Node n;
  n.op = Op::kMatmul;
  n.p = {a, b};
  n.value = va * vb;
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

static bool broadcast_ok(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && b.cols() == 1 && a.cols() > 1;
}

int Graph::add(int a, int b) {
  const Mat& va = node(a).value;
  const Mat& vb = node(b).value;
  Node n;
  n.op = Op::kAdd;
  n.p = {a, b};
  if (va.rows() == vb.rows() && va.cols() == vb.cols()) {
    n.value = va + vb;
  } else if (broadcast_ok(va, vb)) {
    n.value = va.colwise() + vb.col(0);
    n.i0 = 1;
  } else {
    fail("add", "shape mismatch: " + shape_str(va) + " + " + shape_str(vb));
  }
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

int Graph::sub(int a, int b) {
  const Mat& va = node(a).value;
  const Mat& vb = node(b).value;
  Node n;
  n.op = Op::kSub;
  n.p = {a, b};
  if (va.rows() == vb.rows() && va.cols() == vb.cols()) {
    n.value = va - vb;
  } else if (broadcast_ok(va, vb)) {
    n.value = va.colwise() - vb.col(0);
    n.i0 = 1;
  } else {
    fail("sub", "shape mismatch: " + shape_str(va) + " - " + shape_str(vb));
  }
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

int Graph::mul(int a, int b) {
  const Mat& va = node(a).value;
  const Mat& vb = node(b).value;
  Node n;
  n.op = Op::kMul;
  n.p = {a, b};
  if (va.rows() == vb.rows() && va.cols() == vb.cols()) {
    n.value = va.cwiseProduct(vb);
  } else if (broadcast_ok(va, vb)) {
    n.value = va.array().colwise() * vb.col(0).array();
    n.i0 = 1;
  } else {
    fail("mul", "shape mismatch: " + shape_str(va) + " * " + shape_str(vb));
  }
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

int Graph::affine(int a, double mul, double add) {
  Node n;
  n.op = Op::kAffine;
  n.p[0] = a;
  n.c0 = mul;
  n.c1 = add;
  n.value = (node(a).value.array() * mul + add).matrix();
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

int Graph::tanh_(int a) { return unary(Op::kTanh, a, node(a).value.array().tanh().matrix()); }

int Graph::sigmoid_(int a) {
  return unary(Op::kSigmoid, a, (1.0 / (1.0 + (-node(a).value.array()).exp())).matrix());
}

int Graph::elu_(int a) {
  return unary(Op::kElu, a, node(a).value.unaryExpr([](double x) { return elu_fn(x); }));
}

int Graph::relu_(int a) { return unary(Op::kRelu, a, node(a).value.cwiseMax(0.0)); }

int Graph::exp_(int a) { return unary(Op::kExp, a, node(a).value.array().exp().matrix()); }

int Graph::log_(int a) { return unary(Op::kLog, a, node(a).value.array().log().matrix()); }

int Graph::softplus_(int a) {
  return unary(Op::kSoftplus, a, node(a).value.unaryExpr([](double x) { return softplus_fn(x); }));
}

int Graph::square_(int a) { return unary(Op::kSquare, a, node(a).value.array().square().matrix()); }

int Graph::max_scalar(int a, double c) {
  int id = unary(Op::kMaxScalar, a, node(a).value.cwiseMax(c));
  node(id).c0 = c;
  return id;
}

int Graph::concat_rows(std::span<const int> parts) {
  if (parts.empty()) fail("concat_rows", "no parts");
  Eigen::Index rows = 0;
  Eigen::Index cols = node(parts[0]).value.cols();
  for (int p : parts) {
    const Mat& v = node(p).value;
    if (v.cols() != cols) fail("concat_rows", "column mismatch: " + shape_str(v));
    rows += v.rows();
  }
  Node n;
  n.op = Op::kConcatRows;
  n.many.assign(parts.begin(), parts.end());
  n.value.resize(rows, cols);
  Eigen::Index r = 0;
  for (int p : parts) {
    const Mat& v = node(p).value;
    n.value.middleRows(r, v.rows()) = v;
    r += v.rows();
    n.requires_grad = n.requires_grad || node(p).requires_grad;
  }
  return push(std::move(n));
}

int Graph::slice_rows(int a, int first, int count) {
  const Mat& v = node(a).value;
  if (first < 0 || count < 0 || first + count > v.rows()) {
    fail("slice_rows", "range [" + std::to_string(first) + ", +" + std::to_string(count) +
                           ") out of " + shape_str(v));
  }
  int id = unary(Op::kSliceRows, a, v.middleRows(first, count));
  node(id).i0 = first;
  node(id).i1 = count;
  return id;
}

int Graph::concat_cols(std::span<const int> parts) {
  if (parts.empty()) fail("concat_cols", "no parts");
  Eigen::Index cols = 0;
  Eigen::Index rows = node(parts[0]).value.rows();
  for (int p : parts) {
    const Mat& v = node(p).value;
    if (v.rows() != rows) fail("concat_cols", "row mismatch: " + shape_str(v));
    cols += v.cols();
  }
  Node n;
  n.op = Op::kConcatCols;
  n.many.assign(parts.begin(), parts.end());
  n.value.resize(rows, cols);
  Eigen::Index c = 0;
  for (int p : parts) {
    const Mat& v = node(p).value;
    n.value.middleCols(c, v.cols()) = v;
    c += v.cols();
    n.requires_grad = n.requires_grad || node(p).requires_grad;
  }
  return push(std::move(n));
}

int Graph::gather_cols(std::span<const int> nodes, std::span<const int> cols) {
  if (nodes.empty() || nodes.size() != cols.size()) {
    fail("gather_cols", "need one column index per source node");
  }
  Eigen::Index rows = node(nodes[0]).value.rows();
  Node n;
  n.op = Op::kGatherCols;
  n.value.resize(rows, static_cast<Eigen::Index>(nodes.size()));
  n.many.reserve(nodes.size() * 2);  // interleaved (node, column) pairs
  for (size_t j = 0; j < nodes.size(); ++j) {
    const Mat& v = node(nodes[j]).value;
    if (v.rows() != rows) fail("gather_cols", "row mismatch: " + shape_str(v));
    if (cols[j] < 0 || cols[j] >= v.cols()) fail("gather_cols", "column index out of range");
    n.value.col(static_cast<Eigen::Index>(j)) = v.col(cols[j]);
    n.many.push_back(nodes[j]);
    n.many.push_back(cols[j]);
    n.requires_grad = n.requires_grad || node(nodes[j]).requires_grad;
  }
  return push(std::move(n));
}

int Graph::sum(int a) {
  Mat m(1, 1);
  m(0, 0) = node(a).value.sum();
  return unary(Op::kSum, a, std::move(m));
}

int Graph::mean(int a) {
  const Mat& v = node(a).value;
  if (v.size() == 0) fail("mean", "empty operand");
  return affine(sum(a), 1.0 / static_cast<double>(v.size()));
}

int Graph::col_sums(int a) {
  return unary(Op::kColSums, a, node(a).value.colwise().sum());
}

int Graph::softmax_groups(int logits, int group_size) {
  const Mat& v = node(logits).value;
  if (group_size <= 0 || v.rows() % group_size != 0) {
    fail("softmax_groups", "group size " + std::to_string(group_size) + " does not divide rows of " + shape_str(v));
  }
  Mat probs(v.rows(), v.cols());
  int groups = static_cast<int>(v.rows()) / group_size;
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    for (int g = 0; g < groups; ++g) {
      auto seg = v.col(c).segment(g * group_size, group_size);
      double mx = seg.maxCoeff();
      Eigen::VectorXd e = (seg.array() - mx).exp();
      probs.col(c).segment(g * group_size, group_size) = e / e.sum();
    }
  }
  int id = unary(Op::kSoftmaxG, logits, probs);
  node(id).i0 = group_size;
  node(id).aux = node(id).value;
  return id;
}

int Graph::log_softmax_groups(int logits, int group_size) {
  const Mat& v = node(logits).value;
  if (group_size <= 0 || v.rows() % group_size != 0) {
    fail("log_softmax_groups", "group size " + std::to_string(group_size) + " does not divide rows of " + shape_str(v));
  }
  Mat out(v.rows(), v.cols());
  Mat probs(v.rows(), v.cols());
  int groups = static_cast<int>(v.rows()) / group_size;
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    for (int g = 0; g < groups; ++g) {
      auto seg = v.col(c).segment(g * group_size, group_size);
      double mx = seg.maxCoeff();
      Eigen::VectorXd shifted = seg.array() - mx;
      double lse = std::log(shifted.array().exp().sum());
      out.col(c).segment(g * group_size, group_size) = shifted.array() - lse;
      probs.col(c).segment(g * group_size, group_size) = (shifted.array() - lse).exp();
    }
  }
  int id = unary(Op::kLogSoftmaxG, logits, std::move(out));
  node(id).i0 = group_size;
  node(id).aux = std::move(probs);
  return id;
}

int Graph::sample_straight_through(int logits, int group_size, Rng& rng) {
  if (!node(logits).value.allFinite()) fail("sample_straight_through", "logits not finite");
  if (group_size <= 0 || node(logits).value.rows() % group_size != 0) {
    fail("sample_straight_through", "group size " + std::to_string(group_size) +
                                        " does not divide rows of " + shape_str(node(logits).value));
  }
  int probs_id = softmax_groups(logits, group_size);
  Mat probs = node(probs_id).value;  // copy: push() below may reallocate node storage
  Mat sample = Mat::Zero(probs.rows(), probs.cols());
  int groups = static_cast<int>(probs.rows()) / group_size;
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    for (int g = 0; g < groups; ++g) {
      double u = rng.uniform();
      double acc = 0.0;
      int pick = group_size - 1;
      for (int k = 0; k < group_size; ++k) {
        acc += probs(g * group_size + k, c);
        if (u < acc) {
          pick = k;
          break;
        }
      }
      sample(g * group_size + pick, c) = 1.0;
    }
  }
  // Parent is the logits node: the estimator routes the sample's gradient
  // through the softmax as if the probabilities had been emitted.
  int id = unary(Op::kStSampleG, logits, std::move(sample));
  node(id).i0 = group_size;
  node(id).aux = std::move(probs);
  return id;
}

int Graph::stop_grad(int a) {
  Node n;
  n.op = Op::kStopGrad;
  n.p[0] = a;
  n.value = node(a).value;
  n.requires_grad = false;
  return push(std::move(n));
}

int Graph::select_rows_per_col(int a, std::vector<int> rows) {
  const Mat& v = node(a).value;
  if (static_cast<Eigen::Index>(rows.size()) != v.cols()) {
    fail("select_rows_per_col", "need one row index per column");
  }
  Mat out(1, v.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    int r = rows[static_cast<size_t>(c)];
    if (r < 0 || r >= v.rows()) fail("select_rows_per_col", "row index out of range");
    out(0, c) = v(r, c);
  }
  Node n;
  n.op = Op::kSelectRows;
  n.p[0] = a;
  n.many = std::move(rows);
  n.value = std::move(out);
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

Mat Graph::grad_of(int id) const {
  const Node& n = node(id);
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::ensure_grad(Node& n) {
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  }
}

void Graph::accumulate(int id, const Mat& g) {
  Node& n = node(id);
  if (!n.requires_grad) return;
  ensure_grad(n);
  n.grad += g;
}

void Graph::backward(int loss) {
  if (nodes_.empty()) throw NnError("backward: no forward graph has been built");
  const Node& ln = node(loss);
  if (ln.value.rows() != 1 || ln.value.cols() != 1) {
    throw NnError("backward: loss node must be scalar, got " + shape_str(ln.value));
  }
  for (Node& n : nodes_) n.grad.resize(0, 0);
  if (!ln.requires_grad) return;  // loss does not depend on any parameter
  {
    Node& l = node(loss);
    ensure_grad(l);
    l.grad(0, 0) = 1.0;
  }
  for (int id = loss; id >= 0; --id) {
    Node& n = node(id);
    if (!n.requires_grad || n.grad.size() == 0) continue;
    backward_node(id);
  }
}

void Graph::backward_node(int id) {
  Node& n = node(id);
  const Mat& g = n.grad;
  switch (n.op) {
    case Op::kInput:
    case Op::kStopGrad:
      break;
    case Op::kParam: {
      Param& p = *n.param;
      if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
        p.grad = Mat::Zero(p.value.rows(), p.value.cols());
      }
      p.grad += g;
      break;
    }
    case Op::kMatmul: {
      const Mat& va = node(n.p[0]).value;
      const Mat& vb = node(n.p[1]).value;
      if (node(n.p[0]).requires_grad) accumulate(n.p[0], g * vb.transpose());
      if (node(n.p[1]).requires_grad) accumulate(n.p[1], va.transpose() * g);
      break;
    }
    case Op::kAdd: {
      if (node(n.p[0]).requires_grad) accumulate(n.p[0], g);
      if (node(n.p[1]).requires_grad) {
        accumulate(n.p[1], n.i0 ? Mat(g.rowwise().sum()) : g);
      }
      break;
    }
    case Op::kSub: {
      if (node(n.p[0]).requires_grad) accumulate(n.p[0], g);
      if (node(n.p[1]).requires_grad) {
        accumulate(n.p[1], n.i0 ? Mat(-g.rowwise().sum()) : Mat(-g));
      }
      break;
    }
    case Op::kMul: {
      const Mat& va = node(n.p[0]).value;
      const Mat& vb = node(n.p[1]).value;
      if (node(n.p[0]).requires_grad) {
        accumulate(n.p[0], n.i0 ? Mat((g.array().colwise() * vb.col(0).array()).matrix())
                                : Mat(g.cwiseProduct(vb)));
      }
      if (node(n.p[1]).requires_grad) {
        accumulate(n.p[1], n.i0 ? Mat(g.cwiseProduct(va).rowwise().sum()) : Mat(g.cwiseProduct(va)));
      }
      break;
    }
    case Op::kAffine:
      accumulate(n.p[0], g * n.c0);
      break;
    case Op::kTanh:
      accumulate(n.p[0], (g.array() * (1.0 - n.value.array().square())).matrix());
      break;
    case Op::kSigmoid:
      accumulate(n.p[0], (g.array() * n.value.array() * (1.0 - n.value.array())).matrix());
      break;
    case Op::kElu: {
      const Mat& x = node(n.p[0]).value;
      accumulate(n.p[0], (g.array() * (x.array() > 0).select(Mat::Ones(x.rows(), x.cols()), n.value.array() + 1.0).array()).matrix());
      break;
    }
    case Op::kRelu: {
      const Mat& x = node(n.p[0]).value;
      accumulate(n.p[0], (g.array() * (x.array() > 0).cast<double>()).matrix());
      break;
    }
    case Op::kExp:
      accumulate(n.p[0], g.cwiseProduct(n.value));
      break;
    case Op::kLog:
      accumulate(n.p[0], g.cwiseQuotient(node(n.p[0]).value));
      break;
    case Op::kSoftplus: {
      const Mat& x = node(n.p[0]).value;
      accumulate(n.p[0], (g.array() / (1.0 + (-x.array()).exp())).matrix());
      break;
    }
    case Op::kSquare:
      accumulate(n.p[0], (g.array() * 2.0 * node(n.p[0]).value.array()).matrix());
      break;
    case Op::kMaxScalar: {
      const Mat& x = node(n.p[0]).value;
      accumulate(n.p[0], (g.array() * (x.array() > n.c0).cast<double>()).matrix());
      break;
    }
    case Op::kConcatRows: {
      Eigen::Index r = 0;
      for (int p : n.many) {
        Eigen::Index pr = node(p).value.rows();
        if (node(p).requires_grad) accumulate(p, g.middleRows(r, pr));
        r += pr;
      }
      break;
    }
    case Op::kSliceRows: {
      Node& parent = node(n.p[0]);
      if (parent.requires_grad) {
        ensure_grad(parent);
        parent.grad.middleRows(n.i0, n.i1) += g;
      }
      break;
    }
    case Op::kConcatCols: {
      Eigen::Index c = 0;
      for (int p : n.many) {
        Eigen::Index pc = node(p).value.cols();
        if (node(p).requires_grad) accumulate(p, g.middleCols(c, pc));
        c += pc;
      }
      break;
    }
    case Op::kGatherCols: {
      for (size_t j = 0; j * 2 < n.many.size(); ++j) {
        int src = n.many[j * 2];
        int col = n.many[j * 2 + 1];
        Node& parent = node(src);
        if (!parent.requires_grad) continue;
        ensure_grad(parent);
        parent.grad.col(col) += g.col(static_cast<Eigen::Index>(j));
      }
      break;
    }
    case Op::kSum:
      accumulate(n.p[0], Mat::Constant(node(n.p[0]).value.rows(), node(n.p[0]).value.cols(), g(0, 0)));
      break;
    case Op::kColSums: {
      Node& parent = node(n.p[0]);
      if (parent.requires_grad) {
        ensure_grad(parent);
        parent.grad += Mat::Ones(parent.value.rows(), 1) * g;
      }
      break;
    }
    case Op::kSoftmaxG:
    case Op::kStSampleG: {
      // d logits = p .* (g - sum_group(p .* g))
      const Mat& p = n.aux;
      int gs = n.i0;
      Mat out(p.rows(), p.cols());
      int groups = static_cast<int>(p.rows()) / gs;
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        for (int grp = 0; grp < groups; ++grp) {
          auto pseg = p.col(c).segment(grp * gs, gs);
          auto gseg = g.col(c).segment(grp * gs, gs);
          double dot = pseg.dot(gseg);
          out.col(c).segment(grp * gs, gs) = pseg.array() * (gseg.array() - dot);
        }
      }
      accumulate(n.p[0], out);
      break;
    }
    case Op::kLogSoftmaxG: {
      // d logits = g - p .* sum_group(g)
      const Mat& p = n.aux;
      int gs = n.i0;
      Mat out(p.rows(), p.cols());
      int groups = static_cast<int>(p.rows()) / gs;
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        for (int grp = 0; grp < groups; ++grp) {
          auto pseg = p.col(c).segment(grp * gs, gs);
          auto gseg = g.col(c).segment(grp * gs, gs);
          double tot = gseg.sum();
          out.col(c).segment(grp * gs, gs) = gseg.array() - pseg.array() * tot;
        }
      }
      accumulate(n.p[0], out);
      break;
    }
    case Op::kSelectRows: {
      Node& parent = node(n.p[0]);
      if (parent.requires_grad) {
        ensure_grad(parent);
        for (Eigen::Index c = 0; c < n.value.cols(); ++c) {
          parent.grad(n.many[static_cast<size_t>(c)], c) += g(0, c);
        }
      }
      break;
    }
  }
}

}  // namespace mamba::nn
