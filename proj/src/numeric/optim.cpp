#include "genrec/optim.hpp"

#include <cmath>

namespace genrec {

Tensor xavier_init(const std::vector<int64_t>& shape, Rng& rng) {
  int64_t fan_in = 0, fan_out = 0;
  if (shape.size() >= 2) {
    fan_in = shape[0];
    fan_out = shape[shape.size() - 1];
  } else if (shape.size() == 1) {
    fan_in = fan_out = shape[0];
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(shape);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

void sgd_step(ParamStore& params, const GradMap& grads, double lr, double l2,
              double scale) {
  for (const auto& p : params.all()) {
    const Tensor* g = grads.find(p.get());
    if (!g) continue;
    Tensor& v = p->value;
    for (int64_t i = 0; i < v.size(); ++i)
      v[i] -= lr * (scale * (*g)[i] + l2 * v[i]);
  }
}

}  // namespace genrec
