#pragma once

#include <functional>

#include "genrec/autodiff.hpp"
#include "genrec/optim.hpp"

namespace genrec::testing {

// Central finite differences against the autodiff gradients. The builder
// must re-read parameter values on every call, i.e. create fresh leaves.
struct FdReport {
  double max_rel_err = 0.0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::string worst_param;
};

inline FdReport fd_check(ParamStore& params,
                         const std::function<Var()>& loss_builder,
                         double eps = 1e-4) {
  GradMap grads;
  backward(loss_builder(), grads);

  FdReport rep;
  for (const auto& p : params.all()) {
    const Tensor* g = grads.find(p.get());
    for (int64_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + eps;
      const double up = loss_builder().value()[0];
      p->value[i] = saved - eps;
      const double down = loss_builder().value()[0];
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = g ? (*g)[i] : 0.0;
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-3});
      const double rel = std::abs(numeric - analytic) / denom;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_analytic = analytic;
        rep.worst_numeric = numeric;
        rep.worst_param = p->name;
      }
    }
  }
  return rep;
}

// As above but the scalar function is supplied independently of the
// library (used where the training loss contains stop-gradients: the
// oracle evaluates the sg-frozen function).
inline FdReport fd_check_against(ParamStore& params, const GradMap& grads,
                                 const std::function<double()>& frozen_loss,
                                 double eps = 1e-4) {
  FdReport rep;
  for (const auto& p : params.all()) {
    const Tensor* g = grads.find(p.get());
    for (int64_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + eps;
      const double up = frozen_loss();
      p->value[i] = saved - eps;
      const double down = frozen_loss();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = g ? (*g)[i] : 0.0;
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-3});
      const double rel = std::abs(numeric - analytic) / denom;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_analytic = analytic;
        rep.worst_numeric = numeric;
        rep.worst_param = p->name;
      }
    }
  }
  return rep;
}

inline Tensor random_tensor(std::vector<int64_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

}  // namespace genrec::testing
