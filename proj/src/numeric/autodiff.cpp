#include "genrec/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "genrec/kernels.hpp"

namespace genrec {

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Parameter& ParamStore::create(const std::string& name, Tensor init) {
  params_.push_back(std::make_unique<Parameter>(Parameter{name, std::move(init)}));
  return *params_.back();
}

Parameter* ParamStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

int64_t ParamStore::total_size() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

Tensor& GradMap::slot(const Parameter* p) {
  auto it = grads_.find(p);
  if (it == grads_.end()) it = grads_.emplace(p, Tensor(p->value.shape())).first;
  return it->second;
}

const Tensor* GradMap::find(const Parameter* p) const {
  auto it = grads_.find(p);
  return it == grads_.end() ? nullptr : &it->second;
}

void GradMap::add(const GradMap& other) {
  for (const auto& [p, g] : other.grads_) {
    Tensor& mine = slot(p);
    axpy(1.0, g.data(), mine.data(), g.size());
  }
}

void GradMap::clear() { grads_.clear(); }

Var Var::constant(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  return Var(std::move(n));
}

Var Var::leaf(const Parameter& p) {
  auto n = std::make_shared<Node>();
  n->value = p.value;
  n->requires_grad = true;
  n->param = &p;
  return Var(std::move(n));
}

namespace {

Tensor& ensure_grad(Node& n) {
  if (n.grad.size() == 0) n.grad = Tensor(n.value.shape());
  return n.grad;
}

NodePtr make_node(Tensor value, std::vector<NodePtr> inputs,
                  std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  for (const auto& in : inputs)
    if (in->requires_grad) n->requires_grad = true;
  if (n->requires_grad) {
    n->inputs = std::move(inputs);
    n->backprop = std::move(backprop);
  }
  return n;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() +
                     " vs " + b.shape_str());
}

}  // namespace

void backward(const Var& loss, GradMap& grads) {
  if (!loss.defined() || loss.value().size() != 1)
    throw NumericError("backward: loss must be a single element, got shape " +
                       (loss.defined() ? loss.value().shape_str() : "(undefined)"));
  if (!loss.requires_grad()) return;

  // iterative post-order topological sort over grad-requiring nodes
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second)
        stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  ensure_grad(*loss.node())[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->grad.size() == 0) continue;  // unreachable from the seed
    if (n->backprop) n->backprop(*n);
    if (n->param) {
      Tensor& g = grads.slot(n->param);
      axpy(1.0, n->grad.data(), g.data(), g.size());
    }
  }
  // release gradient buffers so shared subgraphs can be reused
  for (Node* n : order) n->grad = Tensor();
}

// ---- elementwise ----------------------------------------------------------

Var add(const Var& a, const Var& b) {
  check_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  axpy(1.0, b.value().data(), out.data(), out.size());
  return Var(make_node(std::move(out), {a.node(), b.node()}, [](Node& n) {
    for (int s = 0; s < 2; ++s)
      if (n.inputs[s]->requires_grad)
        axpy(1.0, n.grad.data(), ensure_grad(*n.inputs[s]).data(), n.grad.size());
  }));
}

Var add_rowvec(const Var& a, const Var& b) {
  const int64_t rows = a.value().rows(), cols = a.value().cols();
  if (b.value().size() != cols)
    throw ShapeError("add_rowvec: shape mismatch " + a.value().shape_str() +
                     " vs " + b.value().shape_str());
  Tensor out = a.value();
  for (int64_t r = 0; r < rows; ++r)
    axpy(1.0, b.value().data(), out.data() + r * cols, cols);
  return Var(make_node(std::move(out), {a.node(), b.node()}, [rows, cols](Node& n) {
    if (n.inputs[0]->requires_grad)
      axpy(1.0, n.grad.data(), ensure_grad(*n.inputs[0]).data(), n.grad.size());
    if (n.inputs[1]->requires_grad) {
      Tensor& gb = ensure_grad(*n.inputs[1]);
      for (int64_t r = 0; r < rows; ++r)
        axpy(1.0, n.grad.data() + r * cols, gb.data(), cols);
    }
  }));
}

Var sub(const Var& a, const Var& b) {
  check_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  axpy(-1.0, b.value().data(), out.data(), out.size());
  return Var(make_node(std::move(out), {a.node(), b.node()}, [](Node& n) {
    if (n.inputs[0]->requires_grad)
      axpy(1.0, n.grad.data(), ensure_grad(*n.inputs[0]).data(), n.grad.size());
    if (n.inputs[1]->requires_grad)
      axpy(-1.0, n.grad.data(), ensure_grad(*n.inputs[1]).data(), n.grad.size());
  }));
}

Var mul(const Var& a, const Var& b) {
  check_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return Var(make_node(std::move(out), {a.node(), b.node()}, [](Node& n) {
    const Tensor& av = n.inputs[0]->value;
    const Tensor& bv = n.inputs[1]->value;
    if (n.inputs[0]->requires_grad) {
      Tensor& ga = ensure_grad(*n.inputs[0]);
      for (int64_t i = 0; i < ga.size(); ++i) ga[i] += n.grad[i] * bv[i];
    }
    if (n.inputs[1]->requires_grad) {
      Tensor& gb = ensure_grad(*n.inputs[1]);
      for (int64_t i = 0; i < gb.size(); ++i) gb[i] += n.grad[i] * av[i];
    }
  }));
}

Var scale(const Var& a, const Var& s) {
  if (s.value().size() != 1)
    throw ShapeError("scale: scalar operand has shape " + s.value().shape_str() +
                     ", expected a single element vs " + a.value().shape_str());
  const double sv = s.value()[0];
  Tensor out = a.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= sv;
  return Var(make_node(std::move(out), {a.node(), s.node()}, [sv](Node& n) {
    if (n.inputs[0]->requires_grad)
      axpy(sv, n.grad.data(), ensure_grad(*n.inputs[0]).data(), n.grad.size());
    if (n.inputs[1]->requires_grad) {
      const Tensor& av = n.inputs[0]->value;
      double acc = dot(n.grad.data(), av.data(), av.size());
      ensure_grad(*n.inputs[1])[0] += acc;
    }
  }));
}

Var scale_const(const Var& a, double c) {
  Tensor out = a.value();
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= c;
  return Var(make_node(std::move(out), {a.node()}, [c](Node& n) {
    if (n.inputs[0]->requires_grad)
      axpy(c, n.grad.data(), ensure_grad(*n.inputs[0]).data(), n.grad.size());
  }));
}

Var neg(const Var& a) { return scale_const(a, -1.0); }

// ---- matrix products ------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  const int64_t m = a.value().rows(), k = a.value().cols();
  if (b.value().rows() != k)
    throw ShapeError("matmul: shape mismatch " + a.value().shape_str() + " vs " +
                     b.value().shape_str());
  const int64_t n = b.value().cols();
  Tensor out({m, n});
  gemm_nn(a.value().data(), b.value().data(), out.data(), m, k, n, false);
  return Var(make_node(std::move(out), {a.node(), b.node()}, [m, k, n](Node& nd) {
    const Tensor& av = nd.inputs[0]->value;
    const Tensor& bv = nd.inputs[1]->value;
    if (nd.inputs[0]->requires_grad)
      gemm_nt(nd.grad.data(), bv.data(), ensure_grad(*nd.inputs[0]).data(), m, n, k, true);
    if (nd.inputs[1]->requires_grad)
      gemm_tn(av.data(), nd.grad.data(), ensure_grad(*nd.inputs[1]).data(), k, m, n, true);
  }));
}

Var matmul_nt(const Var& a, const Var& b) {
  const int64_t m = a.value().rows(), k = a.value().cols();
  if (b.value().cols() != k)
    throw ShapeError("matmul_nt: shape mismatch " + a.value().shape_str() +
                     " vs " + b.value().shape_str());
  const int64_t n = b.value().rows();
  Tensor out({m, n});
  gemm_nt(a.value().data(), b.value().data(), out.data(), m, k, n, false);
  return Var(make_node(std::move(out), {a.node(), b.node()}, [m, k, n](Node& nd) {
    const Tensor& av = nd.inputs[0]->value;
    const Tensor& bv = nd.inputs[1]->value;
    if (nd.inputs[0]->requires_grad)
      gemm_nn(nd.grad.data(), bv.data(), ensure_grad(*nd.inputs[0]).data(), m, n, k, true);
    if (nd.inputs[1]->requires_grad)
      gemm_tn(nd.grad.data(), av.data(), ensure_grad(*nd.inputs[1]).data(), n, m, k, true);
  }));
}

// ---- shape ops -------------------------------------------------------------

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  const int64_t rows = parts[0].value().rows();
  bool all_rank1 = true;
  int64_t total = 0;
  for (const auto& p : parts) {
    if (p.value().rows() != rows)
      throw ShapeError("concat: shape mismatch " + parts[0].value().shape_str() +
                       " vs " + p.value().shape_str());
    if (p.value().rank() != 1) all_rank1 = false;
    total += p.value().cols();
  }
  Tensor out(all_rank1 ? std::vector<int64_t>{total}
                       : std::vector<int64_t>{rows, total});
  int64_t off = 0;
  for (const auto& p : parts) {
    const int64_t c = p.value().cols();
    for (int64_t r = 0; r < rows; ++r)
      std::memcpy(out.data() + r * total + off, p.value().data() + r * c,
                  sizeof(double) * static_cast<size_t>(c));
    off += c;
  }
  std::vector<NodePtr> ins;
  ins.reserve(parts.size());
  for (const auto& p : parts) ins.push_back(p.node());
  return Var(make_node(std::move(out), std::move(ins), [rows, total](Node& n) {
    int64_t off = 0;
    for (auto& in : n.inputs) {
      const int64_t c = in->value.cols();
      if (in->requires_grad) {
        Tensor& g = ensure_grad(*in);
        for (int64_t r = 0; r < rows; ++r)
          axpy(1.0, n.grad.data() + r * total + off, g.data() + r * c, c);
      }
      off += c;
    }
  }));
}

Var gather_rows(const Var& a, std::vector<int64_t> idx) {
  const int64_t cols = a.value().cols();
  const int64_t rows = a.value().rows();
  Tensor out({static_cast<int64_t>(idx.size()), cols});
  for (size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= rows)
      throw ShapeError("gather_rows: index " + std::to_string(idx[r]) +
                       " out of range for " + a.value().shape_str());
    std::memcpy(out.data() + r * cols, a.value().data() + idx[r] * cols,
                sizeof(double) * static_cast<size_t>(cols));
  }
  auto ip = std::make_shared<std::vector<int64_t>>(std::move(idx));
  return Var(make_node(std::move(out), {a.node()}, [ip, cols](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = ensure_grad(*n.inputs[0]);
    for (size_t r = 0; r < ip->size(); ++r)
      axpy(1.0, n.grad.data() + r * cols, g.data() + (*ip)[r] * cols, cols);
  }));
}

Var slice_cols(const Var& a, int64_t start, int64_t len) {
  const int64_t rows = a.value().rows(), cols = a.value().cols();
  if (start < 0 || len <= 0 || start + len > cols)
    throw ShapeError("slice_cols: [" + std::to_string(start) + "," +
                     std::to_string(start + len) + ") out of range for " +
                     a.value().shape_str());
  Tensor out({rows, len});
  for (int64_t r = 0; r < rows; ++r)
    std::memcpy(out.data() + r * len, a.value().data() + r * cols + start,
                sizeof(double) * static_cast<size_t>(len));
  return Var(make_node(std::move(out), {a.node()}, [rows, cols, start, len](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = ensure_grad(*n.inputs[0]);
    for (int64_t r = 0; r < rows; ++r)
      axpy(1.0, n.grad.data() + r * len, g.data() + r * cols + start, len);
  }));
}

Var gather_cols_per_row(const Var& a, std::vector<int64_t> cols_idx) {
  const int64_t rows = a.value().rows(), cols = a.value().cols();
  if (static_cast<int64_t>(cols_idx.size()) != rows)
    throw ShapeError("gather_cols_per_row: need one column per row of " +
                     a.value().shape_str());
  Tensor out({rows, 1});
  for (int64_t r = 0; r < rows; ++r) {
    if (cols_idx[r] < 0 || cols_idx[r] >= cols)
      throw ShapeError("gather_cols_per_row: column " + std::to_string(cols_idx[r]) +
                       " out of range for " + a.value().shape_str());
    out[r] = a.value().at(r, cols_idx[r]);
  }
  auto ip = std::make_shared<std::vector<int64_t>>(std::move(cols_idx));
  return Var(make_node(std::move(out), {a.node()}, [ip, cols](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = ensure_grad(*n.inputs[0]);
    for (size_t r = 0; r < ip->size(); ++r)
      g.data()[r * cols + (*ip)[r]] += n.grad[r];
  }));
}

// ---- nonlinearities --------------------------------------------------------

Var leaky_relu(const Var& a, double negative_slope) {
  Tensor out = a.value();
  for (int64_t i = 0; i < out.size(); ++i)
    if (out[i] < 0.0) out[i] *= negative_slope;
  return Var(make_node(std::move(out), {a.node()}, [negative_slope](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    const Tensor& x = n.inputs[0]->value;
    Tensor& g = ensure_grad(*n.inputs[0]);
    for (int64_t i = 0; i < g.size(); ++i)
      g[i] += n.grad[i] * (x[i] > 0.0 ? 1.0 : negative_slope);
  }));
}

Var sigmoid(const Var& a) {
  Tensor out = a.value();
  for (int64_t i = 0; i < out.size(); ++i) {
    const double x = out[i];
    out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
  }
  return Var(make_node(std::move(out), {a.node()}, [](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = ensure_grad(*n.inputs[0]);
    for (int64_t i = 0; i < g.size(); ++i) {
      const double y = n.value[i];
      g[i] += n.grad[i] * y * (1.0 - y);
    }
  }));
}

Var softplus(const Var& a) {
  Tensor out = a.value();
  for (int64_t i = 0; i < out.size(); ++i) {
    const double x = out[i];
    // ln(1+e^x) = max(x,0) + log1p(e^{-|x|})
    out[i] = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  }
  return Var(make_node(std::move(out), {a.node()}, [](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    const Tensor& x = n.inputs[0]->value;
    Tensor& g = ensure_grad(*n.inputs[0]);
    for (int64_t i = 0; i < g.size(); ++i) {
      const double xv = x[i];
      const double s = xv >= 0.0 ? 1.0 / (1.0 + std::exp(-xv))
                                 : std::exp(xv) / (1.0 + std::exp(xv));
      g[i] += n.grad[i] * s;
    }
  }));
}

namespace {
void softmax_row(const double* x, double* y, int64_t c, bool log_form) {
  double mx = x[0];
  for (int64_t j = 1; j < c; ++j) mx = std::max(mx, x[j]);
  double sum = 0.0;
  for (int64_t j = 0; j < c; ++j) sum += std::exp(x[j] - mx);
  if (log_form) {
    const double lse = mx + std::log(sum);
    for (int64_t j = 0; j < c; ++j) y[j] = x[j] - lse;
  } else {
    for (int64_t j = 0; j < c; ++j) y[j] = std::exp(x[j] - mx) / sum;
  }
}
}  // namespace

Var softmax_rows(const Var& a) {
  const int64_t rows = a.value().rows(), cols = a.value().cols();
  Tensor out(a.value().shape());
  for (int64_t r = 0; r < rows; ++r)
    softmax_row(a.value().data() + r * cols, out.data() + r * cols, cols, false);
  return Var(make_node(std::move(out), {a.node()}, [rows, cols](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = ensure_grad(*n.inputs[0]);
    for (int64_t r = 0; r < rows; ++r) {
      const double* y = n.value.data() + r * cols;
      const double* gy = n.grad.data() + r * cols;
      double acc = dot(gy, y, cols);
      double* gx = g.data() + r * cols;
      for (int64_t j = 0; j < cols; ++j) gx[j] += (gy[j] - acc) * y[j];
    }
  }));
}

Var log_softmax_rows(const Var& a) {
  const int64_t rows = a.value().rows(), cols = a.value().cols();
  Tensor out(a.value().shape());
  for (int64_t r = 0; r < rows; ++r)
    softmax_row(a.value().data() + r * cols, out.data() + r * cols, cols, true);
  return Var(make_node(std::move(out), {a.node()}, [rows, cols](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = ensure_grad(*n.inputs[0]);
    for (int64_t r = 0; r < rows; ++r) {
      const double* y = n.value.data() + r * cols;
      const double* gy = n.grad.data() + r * cols;
      double gsum = 0.0;
      for (int64_t j = 0; j < cols; ++j) gsum += gy[j];
      double* gx = g.data() + r * cols;
      for (int64_t j = 0; j < cols; ++j) gx[j] += gy[j] - std::exp(y[j]) * gsum;
    }
  }));
}

// ---- gradient routing ------------------------------------------------------

Var add_constant(const Var& a, const Tensor& c) {
  check_same_shape("add_constant", a.value(), c);
  Tensor out = a.value();
  axpy(1.0, c.data(), out.data(), out.size());
  return Var(make_node(std::move(out), {a.node()}, [](Node& n) {
    if (n.inputs[0]->requires_grad)
      axpy(1.0, n.grad.data(), ensure_grad(*n.inputs[0]).data(), n.grad.size());
  }));
}

Var stop_gradient(const Var& a) {
  auto n = std::make_shared<Node>();
  n->value = a.value();  // forward identity, no inputs: gradient wall
  return Var(std::move(n));
}

Var straight_through(const Var& value_src, const Var& grad_src) {
  check_same_shape("straight_through", value_src.value(), grad_src.value());
  Tensor out = value_src.value();
  return Var(make_node(std::move(out), {grad_src.node()}, [](Node& n) {
    if (n.inputs[0]->requires_grad)
      axpy(1.0, n.grad.data(), ensure_grad(*n.inputs[0]).data(), n.grad.size());
  }));
}

// ---- reductions ------------------------------------------------------------

Var sum_all(const Var& a) {
  double s = 0.0;
  for (int64_t i = 0; i < a.value().size(); ++i) s += a.value()[i];
  return Var(make_node(Tensor::scalar(s), {a.node()}, [](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = ensure_grad(*n.inputs[0]);
    const double gv = n.grad[0];
    for (int64_t i = 0; i < g.size(); ++i) g[i] += gv;
  }));
}

Var mean_all(const Var& a) {
  return scale_const(sum_all(a), 1.0 / static_cast<double>(a.value().size()));
}

Var sum_rows(const Var& a) {
  const int64_t rows = a.value().rows(), cols = a.value().cols();
  Tensor out({rows, 1});
  for (int64_t r = 0; r < rows; ++r) {
    double s = 0.0;
    const double* x = a.value().data() + r * cols;
    for (int64_t j = 0; j < cols; ++j) s += x[j];
    out[r] = s;
  }
  return Var(make_node(std::move(out), {a.node()}, [rows, cols](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = ensure_grad(*n.inputs[0]);
    for (int64_t r = 0; r < rows; ++r) {
      const double gv = n.grad[r];
      double* gx = g.data() + r * cols;
      for (int64_t j = 0; j < cols; ++j) gx[j] += gv;
    }
  }));
}

// ---- layer norm ------------------------------------------------------------

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const int64_t rows = x.value().rows(), cols = x.value().cols();
  if (gamma.value().size() != cols || beta.value().size() != cols)
    throw ShapeError("layer_norm: affine shape " + gamma.value().shape_str() +
                     " vs input " + x.value().shape_str());
  Tensor out(x.value().shape());
  Tensor xhat({rows, cols});
  Tensor inv_std({rows, 1});
  for (int64_t r = 0; r < rows; ++r) {
    const double* xr = x.value().data() + r * cols;
    double mean = 0.0;
    for (int64_t j = 0; j < cols; ++j) mean += xr[j];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (int64_t j = 0; j < cols; ++j) {
      const double d = xr[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (int64_t j = 0; j < cols; ++j) {
      const double h = (xr[j] - mean) * is;
      xhat.at(r, j) = h;
      out.at(r, j) = h * gamma.value()[j] + beta.value()[j];
    }
  }
  auto xh = std::make_shared<Tensor>(std::move(xhat));
  auto is = std::make_shared<Tensor>(std::move(inv_std));
  return Var(make_node(std::move(out), {x.node(), gamma.node(), beta.node()},
                       [rows, cols, xh, is](Node& n) {
    const Tensor& gv = n.inputs[1]->value;
    for (int64_t r = 0; r < rows; ++r) {
      const double* gy = n.grad.data() + r * cols;
      const double* h = xh->data() + r * cols;
      if (n.inputs[0]->requires_grad) {
        Tensor& gx = ensure_grad(*n.inputs[0]);
        double m1 = 0.0, m2 = 0.0;  // mean(g*gamma), mean(g*gamma*xhat)
        for (int64_t j = 0; j < cols; ++j) {
          const double t = gy[j] * gv[j];
          m1 += t;
          m2 += t * h[j];
        }
        m1 /= static_cast<double>(cols);
        m2 /= static_cast<double>(cols);
        double* gxr = gx.data() + r * cols;
        const double isr = (*is)[r];
        for (int64_t j = 0; j < cols; ++j)
          gxr[j] += (gy[j] * gv[j] - m1 - h[j] * m2) * isr;
      }
      if (n.inputs[1]->requires_grad) {
        Tensor& gg = ensure_grad(*n.inputs[1]);
        for (int64_t j = 0; j < cols; ++j) gg[j] += gy[j] * h[j];
      }
      if (n.inputs[2]->requires_grad) {
        Tensor& gb = ensure_grad(*n.inputs[2]);
        for (int64_t j = 0; j < cols; ++j) gb[j] += gy[j];
      }
    }
  }));
}

Var neighbor_mean(const Var& x, const std::vector<std::vector<int32_t>>& adj) {
  const int64_t cols = x.value().cols();
  const int64_t src_rows = x.value().rows();
  const int64_t out_rows = static_cast<int64_t>(adj.size());
  Tensor out({out_rows, cols});
  for (int64_t t = 0; t < out_rows; ++t) {
    const auto& nb = adj[t];
    if (nb.empty()) continue;
    double* o = out.data() + t * cols;
    for (int32_t s : nb) {
      if (s < 0 || s >= src_rows)
        throw ShapeError("neighbor_mean: adjacency index " + std::to_string(s) +
                         " out of range for " + x.value().shape_str());
      axpy(1.0, x.value().data() + static_cast<int64_t>(s) * cols, o, cols);
    }
    const double inv = 1.0 / static_cast<double>(nb.size());
    for (int64_t j = 0; j < cols; ++j) o[j] *= inv;
  }
  const auto* adj_ptr = &adj;
  return Var(make_node(std::move(out), {x.node()}, [adj_ptr, cols](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    Tensor& g = ensure_grad(*n.inputs[0]);
    for (size_t t = 0; t < adj_ptr->size(); ++t) {
      const auto& nb = (*adj_ptr)[t];
      if (nb.empty()) continue;
      const double inv = 1.0 / static_cast<double>(nb.size());
      const double* gt = n.grad.data() + static_cast<int64_t>(t) * cols;
      for (int32_t s : nb)
        axpy(inv, gt, g.data() + static_cast<int64_t>(s) * cols, cols);
    }
  }));
}

Var sq_l2_dist(const Var& a, const Var& b) {
  check_same_shape("sq_l2_dist", a.value(), b.value());
  Var d = sub(a, b);
  return sum_rows(mul(d, d));
}

}  // namespace genrec
