#include <doctest.h>

#include <cmath>

#include "genrec/graph_encoder.hpp"
#include "genrec/synth.hpp"
#include "test_util.hpp"

using namespace genrec;
using genrec::testing::fd_check;
using genrec::testing::random_tensor;

TEST_SUITE_BEGIN("graph_encoder");

namespace {

// independent plain-loop forward of the whole encoder, for the dual-route check
Representations reference_forward(const GraphEncoder& enc, const Tensor& features,
                                  const BipartiteGraph& g) {
  const auto& ps = const_cast<GraphEncoder&>(enc).params();
  auto P = [&](const std::string& n) {
    return const_cast<ParamStore&>(ps).find(n);
  };
  const Tensor& W = P("enc.feature_proj")->value;
  const Tensor& hc = P("enc.item_cf")->value;
  const Tensor& hu0 = P("enc.user_init")->value;
  const int64_t I = hc.rows(), U = hu0.rows(), d = hc.cols();
  const int64_t dd = 2 * d;

  auto matmul_ref = [](const Tensor& a, const Tensor& b) {
    Tensor out({a.rows(), b.cols()});
    for (int64_t i = 0; i < a.rows(); ++i)
      for (int64_t j = 0; j < b.cols(); ++j) {
        double s = 0.0;
        for (int64_t k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(k, j);
        out.at(i, j) = s;
      }
    return out;
  };
  auto lrelu = [](Tensor t) {
    for (int64_t i = 0; i < t.size(); ++i)
      if (t[i] < 0) t[i] *= 0.01;
    return t;
  };
  auto agg = [&](const Tensor& src, const std::vector<std::vector<int32_t>>& adj) {
    Tensor out({static_cast<int64_t>(adj.size()), src.cols()});
    for (size_t t = 0; t < adj.size(); ++t) {
      if (adj[t].empty()) continue;
      for (int32_t s : adj[t])
        for (int64_t j = 0; j < src.cols(); ++j)
          out.at(static_cast<int64_t>(t), j) += src.at(s, j);
      for (int64_t j = 0; j < src.cols(); ++j)
        out.at(static_cast<int64_t>(t), j) /= static_cast<double>(adj[t].size());
    }
    return out;
  };

  Tensor hm = matmul_ref(features, W);
  Tensor items({I, dd});
  for (int64_t i = 0; i < I; ++i)
    for (int64_t j = 0; j < dd; ++j)
      items.at(i, j) = j < d ? hm.at(i, j) : hc.at(i, j - d);
  Tensor users = hu0;

  for (int y = 0; y < enc.config().layers; ++y) {
    const Tensor& w1 = P("enc.self." + std::to_string(y))->value;
    const Tensor& w2 = P("enc.neigh." + std::to_string(y))->value;
    Tensor items_next({I, dd}), users_next({U, dd});
    Tensor i_agg = agg(users, g.item_adj);
    Tensor u_agg = agg(items, g.user_adj);
    Tensor a = matmul_ref(items, w1), b = matmul_ref(i_agg, w2);
    for (int64_t k = 0; k < a.size(); ++k) items_next[k] = a[k] + b[k];
    Tensor c = matmul_ref(users, w1), e = matmul_ref(u_agg, w2);
    for (int64_t k = 0; k < c.size(); ++k) users_next[k] = c[k] + e[k];
    items = lrelu(std::move(items_next));
    users = lrelu(std::move(users_next));
  }
  const Tensor& proj = P("enc.out_proj")->value;
  return Representations{matmul_ref(users, proj), matmul_ref(items, proj)};
}

SynthResult tiny_synth(int64_t users, int64_t items, uint64_t seed) {
  SynthConfig cfg;
  cfg.users = users;
  cfg.items = items;
  cfg.density = std::max(0.2, 2.0 / static_cast<double>(items));
  cfg.rank = 3;
  cfg.dim_visual = 5;
  cfg.dim_acoustic = 3;
  cfg.dim_textual = 2;
  cfg.seed = seed;
  return synth_dataset(cfg);
}

}  // namespace

TEST_CASE("encoder forward matches an independent reference implementation") {
  auto data = tiny_synth(9, 13, 21);
  auto graph = build_graph(data.dataset);
  Rng rng(77);
  GraphEncoder enc(9, 13, data.bank.total_dim(), {4, 2}, rng);
  Tensor features = data.bank.concat_features();

  Representations fast = enc.encode_values(features, graph);
  Representations ref = reference_forward(enc, features, graph);
  CHECK(fast.users.shape() == std::vector<int64_t>{9, 4});
  CHECK(fast.items.shape() == std::vector<int64_t>{13, 4});
  for (int64_t i = 0; i < fast.users.size(); ++i)
    CHECK(fast.users[i] == doctest::Approx(ref.users[i]).epsilon(1e-10));
  for (int64_t i = 0; i < fast.items.size(); ++i)
    CHECK(fast.items[i] == doctest::Approx(ref.items[i]).epsilon(1e-10));
}

TEST_CASE("isolated nodes keep only the self term") {
  // item 1 has no interactions at all
  std::vector<std::pair<int32_t, int32_t>> pairs = {{0, 0}};
  auto ds = InteractionDataset::from_pairs(1, 2, pairs, 1);
  auto graph = build_graph(ds);
  Tensor features({2, 3});
  Rng rng(5);
  GraphEncoder enc(1, 2, 3, {2, 1}, rng);
  Representations ref = reference_forward(enc, features, graph);
  Representations out = enc.encode_values(features, graph);
  for (int64_t i = 0; i < out.items.size(); ++i)
    CHECK(out.items[i] == doctest::Approx(ref.items[i]).epsilon(1e-12));
}

TEST_CASE("mean aggregation ignores duplication of equal neighbors") {
  Tensor x({3, 2}, {1.0, 2.0, 1.0, 2.0, 5.0, -1.0});
  std::vector<std::vector<int32_t>> one = {{0}};
  std::vector<std::vector<int32_t>> two = {{0, 1}};  // rows 0 and 1 are equal
  Var a = neighbor_mean(Var::constant(x), one);
  Var b = neighbor_mean(Var::constant(x), two);
  for (int64_t j = 0; j < 2; ++j) CHECK(a.value()[j] == b.value()[j]);
}

TEST_CASE("bpr loss values") {
  // equal scores: ln 2 per triple
  Tensor hu({1, 2}, {1.0, 0.0});
  Tensor hi({2, 2}, {0.5, 0.5, 0.5, -0.5});
  Var users = Var::constant(hu);
  Var items = Var::constant(hi);

  SUBCASE("zero margin gives ln 2") {
    Tensor same({2, 2}, {0.5, 0.5, 0.5, 0.5});
    Var loss = bpr_loss(users, Var::constant(same), {{0, 0, 1}});
    CHECK(loss.value()[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }

  SUBCASE("margin 2 gives -ln sigma(2)") {
    Tensor gap({2, 2}, {2.0, 0.0, 0.0, 0.0});
    Var loss = bpr_loss(users, Var::constant(gap), {{0, 0, 1}});
    const double expected = -std::log(1.0 / (1.0 + std::exp(-2.0)));
    CHECK(loss.value()[0] == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("strictly positive and decreasing in the margin") {
    double prev = 1e300;
    for (double m : {-2.0, -0.5, 0.0, 0.5, 2.0, 10.0}) {
      Tensor it({2, 2}, {m, 0.0, 0.0, 0.0});
      Var loss = bpr_loss(users, Var::constant(it), {{0, 0, 1}});
      CHECK(loss.value()[0] > 0.0);
      CHECK(loss.value()[0] < prev);
      prev = loss.value()[0];
    }
  }
}

TEST_CASE("negative samples come from the unobserved set") {
  auto data = tiny_synth(12, 20, 3);
  Rng rng(9);
  auto triples = sample_bpr_triples(data.dataset, rng);
  CHECK(triples.size() == static_cast<size_t>(data.dataset.train_count()));
  for (const auto& t : triples) {
    const auto& pos = data.dataset.train_items[t[0]];
    CHECK(std::binary_search(pos.begin(), pos.end(), static_cast<int32_t>(t[1])));
    CHECK_FALSE(std::binary_search(pos.begin(), pos.end(), static_cast<int32_t>(t[2])));
  }
}

TEST_CASE("full encoder gradient matches finite differences on a tiny graph") {
  auto data = tiny_synth(4, 4, 11);
  auto graph = build_graph(data.dataset);
  Tensor features = data.bank.concat_features();
  Rng rng(13);
  GraphEncoder enc(4, 4, data.bank.total_dim(), {3, 2}, rng);
  auto triples = sample_bpr_triples(data.dataset, rng);
  if (triples.size() > 6) triples.resize(6);

  auto builder = [&] {
    GraphEncoder::Reps reps = enc.encode_all(features, graph);
    return bpr_loss(reps.users, reps.items, triples);
  };
  auto rep = fd_check(enc.params(), builder);
  CAPTURE(rep.worst_param);
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("encode_values is deterministic") {
  auto data = tiny_synth(6, 8, 2);
  auto graph = build_graph(data.dataset);
  Rng rng(3);
  GraphEncoder enc(6, 8, data.bank.total_dim(), {4, 2}, rng);
  auto a = enc.encode_values(data.bank, graph);
  auto b = enc.encode_values(data.bank, graph);
  for (int64_t i = 0; i < a.items.size(); ++i) CHECK(a.items[i] == b.items[i]);
  for (int64_t i = 0; i < a.users.size(); ++i) CHECK(a.users[i] == b.users[i]);
}

TEST_SUITE_END();
