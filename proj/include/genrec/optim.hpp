#pragma once

#include "genrec/autodiff.hpp"
#include "genrec/rng.hpp"

namespace genrec {

// Xavier-uniform initialisation: entries uniform in
// +-sqrt(6 / (fan_in + fan_out)). For rank-1 shapes fan_in = fan_out = n.
Tensor xavier_init(const std::vector<int64_t>& shape, Rng& rng);

// p <- p - lr * (scale * g + l2 * p) for every parameter with a gradient
// entry. `scale` folds the 1/batch normalisation into the update.
void sgd_step(ParamStore& params, const GradMap& grads, double lr, double l2,
              double scale = 1.0);

}  // namespace genrec
