#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "mtme/error.hpp"
#include "mtme/util/rng.hpp"

namespace mtme::ad {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Node {
  Mat value;
  Mat grad;  // allocated lazily, same shape as value
  bool requiresGrad = false;
  bool consumed = false;  // set on a loss node once backward has run
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Mat& gradRef() {
    if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
    return grad;
  }
};

namespace detail {
inline bool& gradModeFlag() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

inline bool gradEnabled() { return detail::gradModeFlag(); }

// Disables graph recording for the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard() : prev_(detail::gradModeFlag()) { detail::gradModeFlag() = false; }
  ~NoGradGuard() { detail::gradModeFlag() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Handle to a node of the computation graph. Copies share the node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Mat value, bool requiresGrad = false) : node_(std::make_shared<Node>()) {
    node_->value = std::move(value);
    node_->requiresGrad = requiresGrad;
  }

  static Tensor parameter(Mat value) { return Tensor(std::move(value), true); }
  static Tensor constant(Mat value) { return Tensor(std::move(value), false); }
  static Tensor scalar(double v) { return constant(Mat::Constant(1, 1, v)); }

  bool defined() const { return node_ != nullptr; }
  const Mat& value() const { return node_->value; }
  Mat& mutableValue() { return node_->value; }
  const Mat& grad() const { return node_->gradRef(); }
  Mat& mutableGrad() { return node_->gradRef(); }
  void zeroGrad() { node_->grad = Mat::Zero(rows(), cols()); }
  bool requiresGrad() const { return node_->requiresGrad; }
  long rows() const { return node_->value.rows(); }
  long cols() const { return node_->value.cols(); }
  double item() const {
    if (rows() != 1 || cols() != 1) throw InvalidArgument("item() on a non-scalar tensor");
    return node_->value(0, 0);
  }
  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

  // Result node of an operation. Records parents and the gradient closure only
  // when recording is on and some input needs a gradient.
  static Tensor op(Mat value, std::vector<Tensor> inputs, std::function<void(Node&)> backward) {
    Tensor out(std::move(value), false);
    if (!gradEnabled()) return out;
    bool any = false;
    for (const auto& in : inputs) any = any || in.requiresGrad();
    if (!any) return out;
    out.node_->requiresGrad = true;
    for (auto& in : inputs) out.node_->parents.push_back(in.node_);
    out.node_->backward = std::move(backward);
    return out;
  }

 private:
  std::shared_ptr<Node> node_;
};

inline std::string shapeString(const Mat& m) { return "(" + std::to_string(m.rows()) + ", " + std::to_string(m.cols()) + ")"; }

inline void requireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(std::string(op) + ": shape mismatch " + shapeString(a.value()) + " vs " +
                          shapeString(b.value()));
  }
}

// Adds g into the gradient of the i-th parent if it tracks one.
inline void accumulate(Node& self, std::size_t i, const Mat& g) {
  Node& p = *self.parents[i];
  if (p.requiresGrad) p.gradRef() += g;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw InvalidArgument("matmul: inner dimensions differ " + shapeString(a.value()) + " x " + shapeString(b.value()));
  }
  return Tensor::op(a.value() * b.value(), {a, b}, [](Node& n) {
    const Mat& A = n.parents[0]->value;
    const Mat& B = n.parents[1]->value;
    if (n.parents[0]->requiresGrad) n.parents[0]->gradRef().noalias() += n.grad * B.transpose();
    if (n.parents[1]->requiresGrad) n.parents[1]->gradRef().noalias() += A.transpose() * n.grad;
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  requireSameShape(a, b, "add");
  return Tensor::op(a.value() + b.value(), {a, b}, [](Node& n) {
    accumulate(n, 0, n.grad);
    accumulate(n, 1, n.grad);
  });
}

// a (r x c) plus a row vector b (1 x c) added to every row.
inline Tensor addRow(const Tensor& a, const Tensor& b) {
  if (b.rows() != 1 || b.cols() != a.cols()) {
    throw InvalidArgument("addRow: expected (1, " + std::to_string(a.cols()) + ") bias, got " + shapeString(b.value()));
  }
  Mat out = a.value();
  out.rowwise() += b.value().row(0);
  return Tensor::op(std::move(out), {a, b}, [](Node& n) {
    accumulate(n, 0, n.grad);
    if (n.parents[1]->requiresGrad) n.parents[1]->gradRef() += n.grad.colwise().sum();
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  requireSameShape(a, b, "sub");
  return Tensor::op(a.value() - b.value(), {a, b}, [](Node& n) {
    accumulate(n, 0, n.grad);
    accumulate(n, 1, -n.grad);
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  requireSameShape(a, b, "mul");
  return Tensor::op(a.value().cwiseProduct(b.value()), {a, b}, [](Node& n) {
    accumulate(n, 0, n.grad.cwiseProduct(n.parents[1]->value));
    accumulate(n, 1, n.grad.cwiseProduct(n.parents[0]->value));
  });
}

inline Tensor scale(const Tensor& a, double s) {
  return Tensor::op(a.value() * s, {a}, [s](Node& n) { accumulate(n, 0, n.grad * s); });
}

inline Tensor sigmoid(const Tensor& a) {
  Mat out = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return Tensor::op(std::move(out), {a}, [](Node& n) {
    accumulate(n, 0, n.grad.cwiseProduct(n.value.cwiseProduct((1.0 - n.value.array()).matrix())));
  });
}

inline Tensor tanh(const Tensor& a) {
  Mat out = a.value().array().tanh().matrix();
  return Tensor::op(std::move(out), {a}, [](Node& n) {
    accumulate(n, 0, n.grad.cwiseProduct((1.0 - n.value.array().square()).matrix()));
  });
}

inline Tensor relu(const Tensor& a) {
  Mat out = a.value().cwiseMax(0.0);
  return Tensor::op(std::move(out), {a}, [](Node& n) {
    const Mat& x = n.parents[0]->value;
    accumulate(n, 0, (x.array() > 0.0).select(n.grad, 0.0).matrix());
  });
}

inline Tensor concatCols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw InvalidArgument("concatCols: no inputs");
  const long r = parts.front().rows();
  long c = 0;
  for (const auto& p : parts) {
    if (p.rows() != r) throw InvalidArgument("concatCols: row counts differ");
    c += p.cols();
  }
  Mat out(r, c);
  long off = 0;
  std::vector<long> offsets;
  for (const auto& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    offsets.push_back(off);
    off += p.cols();
  }
  return Tensor::op(std::move(out), parts, [offsets](Node& n) {
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      accumulate(n, i, n.grad.middleCols(offsets[i], n.parents[i]->value.cols()));
    }
  });
}

inline Tensor sliceCols(const Tensor& a, long start, long len) {
  if (start < 0 || len < 0 || start + len > a.cols()) throw InvalidArgument("sliceCols: range out of bounds");
  return Tensor::op(a.value().middleCols(start, len), {a}, [start, len](Node& n) {
    Node& p = *n.parents[0];
    if (p.requiresGrad) p.gradRef().middleCols(start, len) += n.grad;
  });
}

// Row-wise choice: rows with mask 1 come from a, the rest from b.
inline Tensor select(const std::vector<char>& mask, const Tensor& a, const Tensor& b) {
  requireSameShape(a, b, "select");
  if (static_cast<long>(mask.size()) != a.rows()) throw InvalidArgument("select: mask length mismatch");
  Mat out = b.value();
  for (long r = 0; r < a.rows(); ++r) {
    if (mask[static_cast<std::size_t>(r)]) out.row(r) = a.value().row(r);
  }
  return Tensor::op(std::move(out), {a, b}, [mask](Node& n) {
    for (std::size_t i = 0; i < 2; ++i) {
      Node& p = *n.parents[i];
      if (!p.requiresGrad) continue;
      Mat& g = p.gradRef();
      for (long r = 0; r < n.grad.rows(); ++r) {
        if (static_cast<bool>(mask[static_cast<std::size_t>(r)]) == (i == 0)) g.row(r) += n.grad.row(r);
      }
    }
  });
}

// Rows of the table picked by ids.
inline Tensor embedding(const Tensor& table, const std::vector<int>& ids) {
  Mat out(static_cast<long>(ids.size()), table.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= table.rows()) {
      throw InvalidArgument("embedding: id " + std::to_string(ids[r]) + " outside table of " +
                            std::to_string(table.rows()) + " rows");
    }
    out.row(static_cast<long>(r)) = table.value().row(ids[r]);
  }
  return Tensor::op(std::move(out), {table}, [ids](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requiresGrad) return;
    Mat& g = p.gradRef();
    for (std::size_t r = 0; r < ids.size(); ++r) g.row(ids[r]) += n.grad.row(static_cast<long>(r));
  });
}

// Inverted dropout: kept entries are scaled by 1/(1-p). Identity when not training.
inline Tensor dropout(const Tensor& a, double p, bool training, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw InvalidArgument("dropout: p must be in [0, 1)");
  if (!training || p == 0.0) return a;
  Mat keep(a.rows(), a.cols());
  const double s = 1.0 / (1.0 - p);
  for (long i = 0; i < keep.size(); ++i) keep.data()[i] = rng.bernoulli(p) ? 0.0 : s;
  Mat out = a.value().cwiseProduct(keep);
  return Tensor::op(std::move(out), {a}, [keep](Node& n) { accumulate(n, 0, n.grad.cwiseProduct(keep)); });
}

inline Tensor sum(const Tensor& a) {
  return Tensor::op(Mat::Constant(1, 1, a.value().sum()), {a}, [](Node& n) {
    const Mat& x = n.parents[0]->value;
    accumulate(n, 0, Mat::Constant(x.rows(), x.cols(), n.grad(0, 0)));
  });
}

inline Tensor mean(const Tensor& a) {
  if (a.value().size() == 0) throw InvalidArgument("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

// Mean squared error over all cells.
inline Tensor mse(const Tensor& pred, const Tensor& target) {
  requireSameShape(pred, target, "mse");
  const Mat diff = pred.value() - target.value();
  const double count = static_cast<double>(diff.size());
  if (count == 0) throw InvalidArgument("mse: empty tensors");
  return Tensor::op(Mat::Constant(1, 1, diff.squaredNorm() / count), {pred, target}, [diff, count](Node& n) {
    const Mat g = diff * (2.0 * n.grad(0, 0) / count);
    accumulate(n, 0, g);
    accumulate(n, 1, -g);
  });
}

// Mean squared error over the cells where mask is non-zero.
inline Tensor maskedMse(const Tensor& pred, const Tensor& target, const Mat& mask) {
  requireSameShape(pred, target, "maskedMse");
  if (mask.rows() != pred.rows() || mask.cols() != pred.cols()) throw InvalidArgument("maskedMse: mask shape mismatch");
  const Mat m = (mask.array() != 0.0).cast<double>().matrix();
  const double count = m.sum();
  if (count == 0) throw InvalidArgument("maskedMse: every cell is masked");
  const Mat diff = (pred.value() - target.value()).cwiseProduct(m);
  return Tensor::op(Mat::Constant(1, 1, diff.squaredNorm() / count), {pred, target}, [diff, count](Node& n) {
    const Mat g = diff * (2.0 * n.grad(0, 0) / count);
    accumulate(n, 0, g);
    accumulate(n, 1, -g);
  });
}

// Reverse pass from a scalar loss. Gradients are summed into every reachable
// node that requires one; the graph is released afterwards and the same loss
// cannot be differentiated again.
inline void backward(const Tensor& loss) {
  if (!loss.defined()) throw InvalidArgument("backward: undefined tensor");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw InvalidArgument("backward: loss must be scalar, got " + shapeString(loss.value()));
  }
  Node* root = loss.node();
  if (root->consumed) throw InvalidArgument("backward: graph already released by an earlier backward call");
  root->consumed = true;
  if (!root->requiresGrad) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requiresGrad && !p->parents.empty() && visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->gradRef() += Mat::Ones(1, 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.size() != 0) n->backward(*n);
  }
  for (Node* n : order) {
    n->parents.clear();
    n->backward = nullptr;
    if (n != root) n->grad = Mat();
  }
}

}  // namespace mtme::ad
