#include <doctest.h>

#include <cmath>
#include <set>

#include "genrec/beam_search.hpp"
#include "test_util.hpp"

using namespace genrec;
using genrec::testing::random_tensor;

TEST_SUITE_BEGIN("generation");

namespace {

struct Setup {
  RecIdRegistry registry;
  RecModel model;
  InferenceModel::Memory memory;
  InferenceModel infer() const { return InferenceModel(model); }
};

RecIdRegistry random_registry(int64_t items, int levels, int64_t codebook, Rng& rng) {
  std::vector<std::vector<int32_t>> codes;
  std::vector<int64_t> pops;
  for (int64_t i = 0; i < items; ++i) {
    std::vector<int32_t> c;
    for (int l = 0; l < levels; ++l)
      c.push_back(static_cast<int32_t>(rng.uniform_int(codebook)));
    codes.push_back(std::move(c));
    pops.push_back(rng.uniform_int(40));
  }
  return RecIdRegistry::build(codes, pops, codebook);
}

Setup make_setup(int64_t items, uint64_t seed, int levels = 2, int64_t codebook = 4) {
  Rng rng(seed);
  RecIdRegistry registry = random_registry(items, levels, codebook, rng);
  RecModelConfig cfg;
  cfg.dim = 8;
  cfg.heads = 2;
  cfg.layers = 1;
  cfg.ffn_dim = 12;
  cfg.max_history = 4;
  cfg.pos = PosEncoding::kRelation;
  cfg.vocab = registry.vocab().size();
  cfg.id_length = registry.vocab().id_length();
  Rng mr = rng.fork(1);
  RecModel model(cfg, mr);

  Rng dr = rng.fork(2);
  Tensor reps = random_tensor({items, 8}, dr);
  Tensor hu = random_tensor({8}, dr);
  Rng er = rng.fork(3);
  std::vector<int32_t> history = {0, static_cast<int32_t>(items - 1)};
  EncodedSequence seq = embed_input(reps, history, 4, er);
  InferenceModel::Memory mem = InferenceModel(model).encode(hu, seq);
  return Setup{std::move(registry), std::move(model), std::move(mem)};
}

}  // namespace

TEST_CASE("beam search equals exhaustive scoring on small catalogs") {
  for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const int64_t items = 30;
    Setup s = make_setup(items, seed, 3, 3);
    InferenceModel infer = s.infer();

    BeamSearchResult beam =
        beam_search(infer, s.memory, s.registry, items, {}, items);

    std::vector<std::pair<double, int64_t>> scored;
    for (int64_t i = 0; i < items; ++i)
      scored.emplace_back(score_rec_id(infer, s.memory, s.registry, i), i);
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return s.registry.tokens_of(a.second) < s.registry.tokens_of(b.second);
    });

    REQUIRE(beam.items.size() == static_cast<size_t>(items));
    for (int64_t r = 0; r < items; ++r) {
      CHECK(beam.items[static_cast<size_t>(r)] == scored[static_cast<size_t>(r)].second);
      CHECK(beam.scores[static_cast<size_t>(r)] ==
            doctest::Approx(scored[static_cast<size_t>(r)].first).epsilon(1e-9));
    }
  }
}

TEST_CASE("every emitted sequence is a real Rec-ID at any width") {
  Setup s = make_setup(40, 9, 2, 5);
  InferenceModel infer = s.infer();
  for (int64_t width : {1, 2, 5, 10, 40}) {
    BeamSearchResult res =
        beam_search(infer, s.memory, s.registry, std::min<int64_t>(width, 10), {}, width);
    for (int64_t item : res.items) {
      CHECK(item >= 0);
      CHECK(item < 40);
    }
    // scores are sums of log-probabilities
    for (double sc : res.scores) CHECK(sc <= 0.0);
    for (size_t r = 1; r < res.scores.size(); ++r)
      CHECK(res.scores[r] <= res.scores[r - 1]);
  }
}

TEST_CASE("a one-item catalog is always returned") {
  Setup s = make_setup(1, 4);
  InferenceModel infer = s.infer();
  for (int64_t k : {1, 3, 10}) {
    BeamSearchResult res = beam_search(infer, s.memory, s.registry, k);
    REQUIRE(res.items.size() == 1);
    CHECK(res.items[0] == 0);
    CHECK(res.exhausted == (k > 1));
  }
}

TEST_CASE("exclusions drop items and the result is backfilled") {
  const int64_t items = 20;
  Setup s = make_setup(items, 7, 2, 4);
  InferenceModel infer = s.infer();

  BeamSearchResult all = beam_search(infer, s.memory, s.registry, 5, {}, items);
  std::vector<int32_t> exclude = {static_cast<int32_t>(all.items[0]),
                                  static_cast<int32_t>(all.items[2])};
  std::sort(exclude.begin(), exclude.end());
  BeamSearchResult filtered = beam_search(infer, s.memory, s.registry, 5, exclude);
  CHECK(filtered.items.size() == 5);
  for (int64_t item : filtered.items) {
    CHECK(!std::binary_search(exclude.begin(), exclude.end(),
                              static_cast<int32_t>(item)));
  }
  // the survivors keep their relative order from the unfiltered ranking
  CHECK(filtered.items[0] == all.items[1]);
}

TEST_CASE("beam search is deterministic") {
  Setup a = make_setup(25, 13, 2, 4);
  Setup b = make_setup(25, 13, 2, 4);
  BeamSearchResult ra = beam_search(a.infer(), a.memory, a.registry, 10);
  BeamSearchResult rb = beam_search(b.infer(), b.memory, b.registry, 10);
  CHECK(ra.items == rb.items);
  CHECK(ra.scores == rb.scores);
}

TEST_CASE("constrained scores of all items sum to at most one") {
  Setup s = make_setup(12, 21, 2, 4);
  InferenceModel infer = s.infer();
  double mass = 0.0;
  for (int64_t i = 0; i < 12; ++i)
    mass += std::exp(score_rec_id(infer, s.memory, s.registry, i));
  CHECK(mass <= 1.0 + 1e-9);
  CHECK(mass > 0.0);
}

TEST_CASE("uniform logits score M * -ln(vocab)") {
  Setup s = make_setup(10, 31, 2, 4);
  for (const std::string n : {"out.w", "out.b"}) {
    Parameter* p = s.model.params().find(n);
    for (int64_t i = 0; i < p->value.size(); ++i) p->value[i] = 0.0;
  }
  InferenceModel infer = s.infer();
  const double expected = -static_cast<double>(s.registry.vocab().id_length()) *
                          std::log(static_cast<double>(s.registry.vocab().size()));
  CHECK(score_rec_id(infer, s.memory, s.registry, 0) ==
        doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("a model concentrated on one Rec-ID dominates the ranking") {
  Setup s = make_setup(15, 41, 2, 4);
  // bias the output hard toward item 3's tokens; with the projection
  // zeroed, each step splits its mass evenly over the M boosted tokens
  Parameter* out_w = s.model.params().find("out.w");
  for (int64_t i = 0; i < out_w->value.size(); ++i) out_w->value[i] = 0.0;
  const auto tokens = s.registry.tokens_of(3);
  Parameter* out_b = s.model.params().find("out.b");
  for (int64_t t : tokens) out_b->value[t] += 50.0;
  InferenceModel infer(s.model);

  const double m = static_cast<double>(tokens.size());
  const double sc = score_rec_id(infer, s.memory, s.registry, 3);
  CHECK(sc == doctest::Approx(m * std::log(1.0 / m)).epsilon(1e-9));
  BeamSearchResult res = beam_search(infer, s.memory, s.registry, 1);
  CHECK(res.items[0] == 3);
}

TEST_CASE("unknown items cannot be scored") {
  Setup s = make_setup(5, 51);
  InferenceModel infer = s.infer();
  CHECK_THROWS_AS(score_rec_id(infer, s.memory, s.registry, 99), DataError);
}

TEST_SUITE_END();
