#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "genrec/tensor.hpp"

namespace genrec {

// A learnable tensor. Owned by a ParamStore; graphs reference it through
// leaf nodes and gradients flow into a GradMap keyed by the parameter.
struct Parameter {
  std::string name;
  Tensor value;
};

class ParamStore {
public:
  Parameter& create(const std::string& name, Tensor init);
  Parameter* find(const std::string& name);
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  int64_t total_size() const;

private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

// Gradient accumulator. One per thread during data-parallel training;
// merged in thread order so reductions stay deterministic.
class GradMap {
public:
  Tensor& slot(const Parameter* p);
  const Tensor* find(const Parameter* p) const;
  void add(const GradMap& other);
  void clear();
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [p, g] : grads_) f(p, g);
  }

private:
  std::unordered_map<const Parameter*, Tensor> grads_;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated on demand during backward
  bool requires_grad = false;
  const Parameter* param = nullptr;
  std::vector<NodePtr> inputs;
  std::function<void(Node&)> backprop;  // accumulate node.grad into inputs
};

// Handle to a node in the computation graph. Cheap to copy; the graph is
// assembled dynamically per forward pass and freed when handles drop.
class Var {
public:
  Var() = default;
  explicit Var(NodePtr n) : node_(std::move(n)) {}

  static Var constant(Tensor t);
  static Var leaf(const Parameter& p);

  const Tensor& value() const { return node_->value; }
  const NodePtr& node() const { return node_; }
  bool defined() const { return node_ != nullptr; }
  bool requires_grad() const { return node_ && node_->requires_grad; }

private:
  NodePtr node_;
};

// Reverse-mode sweep from a scalar loss. Populates `grads` for every
// parameter leaf reachable from the loss. Throws NumericError if the loss
// is not a single element.
void backward(const Var& loss, GradMap& grads);

// ---- operations -----------------------------------------------------------

Var add(const Var& a, const Var& b);
// a: R x C, b: one row of length C broadcast over rows of a
Var add_rowvec(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // elementwise
// out = a * s with s a single-element tensor
Var scale(const Var& a, const Var& s);
Var scale_const(const Var& a, double c);
Var neg(const Var& a);

Var matmul(const Var& a, const Var& b);     // A  * B
Var matmul_nt(const Var& a, const Var& b);  // A  * B^T

// concatenation along the last axis; inputs must agree on row count
Var concat_cols(const std::vector<Var>& parts);

Var leaky_relu(const Var& a, double negative_slope = 0.01);
Var sigmoid(const Var& a);
Var softplus(const Var& a);  // ln(1 + e^x), stable
Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);

// out = a + c where c carries no gradient (used for additive masks)
Var add_constant(const Var& a, const Tensor& c);

// forward identity, zero gradient through this edge
Var stop_gradient(const Var& a);
// forward: bitwise copy of value_src; backward: gradient flows to grad_src.
// Equivalent to grad_src + stop_gradient(value_src - grad_src) without the
// floating-point round trip.
Var straight_through(const Var& value_src, const Var& grad_src);

Var sum_all(const Var& a);   // -> shape (1)
Var mean_all(const Var& a);  // -> shape (1)
Var sum_rows(const Var& a);  // R x C -> R x 1

Var gather_rows(const Var& a, std::vector<int64_t> idx);
Var slice_cols(const Var& a, int64_t start, int64_t len);
// out[r] = a[r, cols[r]]; R x C -> R x 1
Var gather_cols_per_row(const Var& a, std::vector<int64_t> cols);

Var layer_norm(const Var& x, const Var& gamma, const Var& beta,
               double eps = 1e-5);

// out[t] = mean of x rows listed in adj[t]; zero row when adj[t] is empty.
// adj must outlive the backward pass (callers keep it in the graph object).
Var neighbor_mean(const Var& x, const std::vector<std::vector<int32_t>>& adj);

// rowwise squared euclidean distance, R x C -> R x 1
Var sq_l2_dist(const Var& a, const Var& b);

}  // namespace genrec
