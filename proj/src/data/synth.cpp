#include "genrec/synth.hpp"

#include <algorithm>
#include <numeric>

namespace genrec {

SynthResult synth_dataset(const SynthConfig& cfg) {
  if (cfg.users <= 0 || cfg.items <= 0)
    throw DataError("synth: users and items must be positive");
  if (cfg.density * static_cast<double>(cfg.items) < 1.0)
    throw DataError("synth: density " + std::to_string(cfg.density) +
                    " leaves some users without interactions");

  Rng rng(cfg.seed);
  const int64_t U = cfg.users, I = cfg.items, r = cfg.rank;

  Tensor user_f({U, r}), item_f({I, r});
  for (int64_t k = 0; k < user_f.size(); ++k) user_f[k] = rng.normal();
  for (int64_t k = 0; k < item_f.size(); ++k) item_f[k] = rng.normal();

  SynthResult out;
  std::vector<std::pair<double, int32_t>> scored(I);
  Rng pick = rng.fork(0xface);
  for (int64_t u = 0; u < U; ++u) {
    // binomial draw keeps per-user counts realistic around density * I
    int64_t n_u = 0;
    for (int64_t i = 0; i < I; ++i)
      if (pick.uniform() < cfg.density) ++n_u;
    n_u = std::max<int64_t>(1, n_u);

    for (int64_t i = 0; i < I; ++i) {
      double s = 0.0;
      for (int64_t k = 0; k < r; ++k) s += user_f.at(u, k) * item_f.at(i, k);
      s += cfg.noise * std::sqrt(static_cast<double>(r)) * pick.normal();
      scored[i] = {s, static_cast<int32_t>(i)};
    }
    std::partial_sort(scored.begin(), scored.begin() + n_u, scored.end(),
                      [](const auto& a, const auto& b) {
                        return a.first > b.first ||
                               (a.first == b.first && a.second < b.second);
                      });
    for (int64_t k = 0; k < n_u; ++k)
      out.pairs.emplace_back(static_cast<int32_t>(u), scored[k].second);
  }

  out.dataset = InteractionDataset::from_pairs(U, I, out.pairs, cfg.seed);

  out.bank.item_count = I;
  const std::array<int64_t, 3> dims = {cfg.dim_visual, cfg.dim_acoustic,
                                       cfg.dim_textual};
  Rng feat = rng.fork(0xfea7);
  for (int m = 0; m < ItemFeatureBank::kModalities; ++m) {
    if (dims[m] <= 0) continue;
    Tensor proj({r, dims[m]});
    for (int64_t k = 0; k < proj.size(); ++k) proj[k] = feat.normal();
    Tensor f({I, dims[m]});
    for (int64_t i = 0; i < I; ++i) {
      for (int64_t j = 0; j < dims[m]; ++j) {
        double s = 0.0;
        for (int64_t k = 0; k < r; ++k) s += item_f.at(i, k) * proj.at(k, j);
        f.at(i, j) = s + cfg.feature_noise * feat.normal();
      }
    }
    out.bank.features[m] = std::move(f);
    out.bank.present[m] = true;
  }
  out.bank.validate();
  return out;
}

}  // namespace genrec
