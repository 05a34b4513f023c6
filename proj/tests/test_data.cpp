#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "genrec/dataset.hpp"
#include "genrec/features.hpp"
#include "genrec/synth.hpp"

using namespace genrec;

TEST_SUITE_BEGIN("data");

namespace {
std::vector<std::pair<int32_t, int32_t>> grid_pairs(int users, int per_user) {
  std::vector<std::pair<int32_t, int32_t>> p;
  for (int u = 0; u < users; ++u)
    for (int i = 0; i < per_user; ++i)
      p.emplace_back(u, (u + i) % (users + per_user));
  return p;
}
}  // namespace

TEST_CASE("10 interactions per user split exactly 8/1/1") {
  auto ds = InteractionDataset::from_pairs(10, 20, grid_pairs(10, 10), 42);
  for (int64_t u = 0; u < 10; ++u) {
    CHECK(ds.train_items[u].size() == 8);
    CHECK(ds.valid_items[u].size() == 1);
    CHECK(ds.test_items[u].size() == 1);
  }
}

TEST_CASE("split is a partition of each user's items") {
  auto pairs = grid_pairs(7, 13);
  auto ds = InteractionDataset::from_pairs(7, 20, pairs, 3);
  for (int64_t u = 0; u < 7; ++u) {
    std::set<int32_t> together;
    size_t total = 0;
    for (const auto* part : {&ds.train_items[u], &ds.valid_items[u], &ds.test_items[u]}) {
      together.insert(part->begin(), part->end());
      total += part->size();
    }
    CHECK(together.size() == total);  // disjoint
    CHECK(total == 13);
  }
}

TEST_CASE("users below three interactions stay in train") {
  std::vector<std::pair<int32_t, int32_t>> pairs = {{0, 0}, {0, 1}, {1, 2}};
  auto ds = InteractionDataset::from_pairs(2, 3, pairs, 1);
  CHECK(ds.train_items[0].size() == 2);
  CHECK(ds.valid_items[0].empty());
  CHECK(ds.test_items[0].empty());
  CHECK(ds.train_items[1].size() == 1);

  // exactly three: 1/1/1
  std::vector<std::pair<int32_t, int32_t>> three = {{0, 0}, {0, 1}, {0, 2}};
  auto d3 = InteractionDataset::from_pairs(1, 3, three, 1);
  CHECK(d3.train_items[0].size() == 1);
  CHECK(d3.valid_items[0].size() == 1);
  CHECK(d3.test_items[0].size() == 1);
}

TEST_CASE("duplicate pairs are rejected with a report") {
  std::vector<std::pair<int32_t, int32_t>> pairs = {{0, 0}, {0, 0}};
  CHECK_THROWS_WITH_AS(InteractionDataset::from_pairs(1, 1, pairs, 1),
                       doctest::Contains("duplicate"), DataError);
}

TEST_CASE("same seed gives identical splits, different seed differs") {
  auto pairs = grid_pairs(20, 10);
  auto a = InteractionDataset::from_pairs(20, 30, pairs, 9);
  auto b = InteractionDataset::from_pairs(20, 30, pairs, 9);
  auto c = InteractionDataset::from_pairs(20, 30, pairs, 10);
  bool all_same = true, any_differs = false;
  for (int64_t u = 0; u < 20; ++u) {
    all_same &= a.train_items[u] == b.train_items[u];
    any_differs |= a.train_items[u] != c.train_items[u];
  }
  CHECK(all_same);
  CHECK(any_differs);
}

TEST_CASE("popularity equals train degree and matches the graph") {
  auto ds = InteractionDataset::from_pairs(10, 20, grid_pairs(10, 10), 4);
  auto g = build_graph(ds);
  for (int64_t i = 0; i < ds.item_count; ++i)
    CHECK(ds.popularity[i] == static_cast<int64_t>(g.item_adj[i].size()));
}

TEST_CASE("graph is symmetric and holds train edges only") {
  auto ds = InteractionDataset::from_pairs(12, 25, grid_pairs(12, 11), 8);
  auto g = build_graph(ds);
  int64_t train_edges = 0;
  for (int64_t u = 0; u < ds.user_count; ++u) {
    for (int32_t i : g.user_adj[u]) {
      const auto& back = g.item_adj[i];
      CHECK(std::find(back.begin(), back.end(), static_cast<int32_t>(u)) != back.end());
    }
    train_edges += static_cast<int64_t>(g.user_adj[u].size());
    for (int32_t i : ds.test_items[u]) {
      const auto& adj = g.user_adj[u];
      CHECK(std::find(adj.begin(), adj.end(), i) == adj.end());
    }
  }
  CHECK(train_edges == ds.train_count());
}

TEST_CASE("single edge graph") {
  std::vector<std::pair<int32_t, int32_t>> pairs = {{0, 0}};
  auto ds = InteractionDataset::from_pairs(1, 1, pairs, 1);
  auto g = build_graph(ds);
  REQUIRE(g.user_adj[0].size() == 1);
  CHECK(g.user_adj[0][0] == 0);
  REQUIRE(g.item_adj[0].size() == 1);
  CHECK(g.item_adj[0][0] == 0);
}

TEST_CASE("interaction file round trip with id remapping") {
  const std::string path = "test_inter.tsv";
  {
    std::ofstream os(path);
    os << "alice\tmovie9\nbob\tmovie9\nalice\tmovie3\n";
  }
  auto loaded = load_interactions(path, 5);
  CHECK(loaded.user_ids == std::vector<std::string>{"alice", "bob"});
  CHECK(loaded.item_ids == std::vector<std::string>{"movie9", "movie3"});
  CHECK(loaded.dataset.user_count == 2);
  CHECK(loaded.dataset.item_count == 2);
  CHECK(loaded.dataset.interaction_count() == 3);
  std::remove(path.c_str());
}

TEST_CASE("malformed interaction lines carry the line number") {
  const std::string path = "test_bad.tsv";
  {
    std::ofstream os(path);
    os << "a\t1\nwrong-line\n";
  }
  CHECK_THROWS_WITH_AS(load_interactions(path, 1), doctest::Contains(":2"), DataError);
  std::remove(path.c_str());
}

TEST_CASE("feature files round trip through float32 storage") {
  Tensor f({4, 3});
  for (int64_t i = 0; i < f.size(); ++i) f[i] = 0.25 * static_cast<double>(i) - 1.0;
  save_feature_file("test_feat.bin", f);
  auto bank = load_features("test_feat.bin", "", "", 4);
  CHECK(bank.present[0]);
  CHECK_FALSE(bank.present[1]);  // acoustic missing -> flagged absent
  CHECK(bank.present[2] == false);
  CHECK(bank.features[0].shape() == std::vector<int64_t>{4, 3});
  for (int64_t i = 0; i < f.size(); ++i)
    CHECK(bank.features[0][i] == f[i]);  // quarters are exact in float32
  CHECK(bank.total_dim() == 3);
  std::remove("test_feat.bin");
  std::remove("test_feat.bin.desc");
}

TEST_CASE("feature row mismatch names the modality") {
  Tensor f({4, 3});
  save_feature_file("test_feat2.bin", f);
  CHECK_THROWS_WITH_AS(load_features("", "test_feat2.bin", "", 9),
                       doctest::Contains("acoustic"), DataError);
  std::remove("test_feat2.bin");
  std::remove("test_feat2.bin.desc");
}

TEST_CASE("concat_features stacks present modalities in order") {
  ItemFeatureBank bank;
  bank.item_count = 2;
  bank.features[0] = Tensor({2, 2}, {1, 2, 3, 4});
  bank.present[0] = true;
  bank.features[2] = Tensor({2, 1}, {9, 8});
  bank.present[2] = true;
  Tensor cat = bank.concat_features();
  CHECK(cat.shape() == std::vector<int64_t>{2, 3});
  CHECK(cat.at(0, 0) == 1);
  CHECK(cat.at(0, 2) == 9);
  CHECK(cat.at(1, 1) == 4);
  CHECK(cat.at(1, 2) == 8);
}

TEST_CASE("synthetic generator hits the expected density and is seeded") {
  SynthConfig cfg;
  cfg.users = 100;
  cfg.items = 200;
  cfg.density = 0.05;
  cfg.seed = 12;
  auto a = synth_dataset(cfg);
  const int64_t n = a.dataset.interaction_count();
  CHECK(n > 700);   // binomial around 1000
  CHECK(n < 1300);
  for (int64_t u = 0; u < cfg.users; ++u)
    CHECK(a.dataset.train_items[u].size() + a.dataset.valid_items[u].size() +
              a.dataset.test_items[u].size() >= 1);

  auto b = synth_dataset(cfg);
  CHECK(a.pairs == b.pairs);
  cfg.seed = 13;
  auto c = synth_dataset(cfg);
  CHECK(a.pairs != c.pairs);

  CHECK(a.bank.present[0]);
  CHECK(a.bank.features[0].rows() == cfg.items);
}

TEST_CASE("synthetic generator rejects densities that starve users") {
  SynthConfig cfg;
  cfg.users = 10;
  cfg.items = 50;
  cfg.density = 0.001;  // < 1 expected interaction per user
  CHECK_THROWS_AS(synth_dataset(cfg), DataError);
}

TEST_SUITE_END();
