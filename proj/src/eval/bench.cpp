#include "genrec/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <queue>
#include <sstream>

#include "genrec/beam_search.hpp"
#include "genrec/infer.hpp"
#include "genrec/kernels.hpp"
#include "genrec/rec_id.hpp"
#include "genrec/transformer.hpp"

namespace genrec {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Stats {
  double median, mean, stddev;
};

Stats summarize(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const size_t n = xs.size();
  Stats s{};
  s.median = n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(n);
  for (double x : xs) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = n > 1 ? std::sqrt(s.stddev / static_cast<double>(n - 1)) : 0.0;
  return s;
}

// top-k by score over all items with a bounded heap: I dots + I log k
void mf_score_user(const double* hu, const Tensor& item_factors, int64_t k,
                   std::vector<int64_t>& out) {
  const int64_t items = item_factors.rows(), d = item_factors.cols();
  using Entry = std::pair<double, int64_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (int64_t i = 0; i < items; ++i) {
    const double s = dot(hu, item_factors.data() + i * d, d);
    if (static_cast<int64_t>(heap.size()) < k) {
      heap.emplace(s, i);
    } else if (s > heap.top().first) {
      heap.pop();
      heap.emplace(s, i);
    }
  }
  out.clear();
  while (!heap.empty()) {
    out.push_back(heap.top().second);
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
}

}  // namespace

std::vector<BenchRow> run_inference_bench(const BenchOptions& opt, std::ostream* log) {
  if (opt.repetitions <= 0) return {};
  const int saved_threads = num_threads();
  set_num_threads(1);  // isolate algorithmic cost

  std::vector<BenchRow> rows;
  for (double scale : opt.scales) {
    const int64_t items =
        std::max<int64_t>(opt.k, static_cast<int64_t>(std::llround(
                                     static_cast<double>(opt.base_items) * scale)));
    Rng rng(opt.seed ^ static_cast<uint64_t>(items));

    // shared random "representations": MF factors and encoder embeddings
    Tensor item_factors({items, opt.dim});
    for (int64_t i = 0; i < item_factors.size(); ++i)
      item_factors[i] = rng.normal() / std::sqrt(static_cast<double>(opt.dim));

    // random Rec-IDs for the catalog
    std::vector<std::vector<int32_t>> codes(
        static_cast<size_t>(items), std::vector<int32_t>(static_cast<size_t>(opt.levels)));
    std::vector<int64_t> popularity(static_cast<size_t>(items));
    for (int64_t i = 0; i < items; ++i) {
      for (int l = 0; l < opt.levels; ++l)
        codes[static_cast<size_t>(i)][static_cast<size_t>(l)] =
            static_cast<int32_t>(rng.uniform_int(opt.codebook));
      popularity[static_cast<size_t>(i)] = rng.uniform_int(1000);
    }
    RecIdRegistry registry = RecIdRegistry::build(codes, popularity, opt.codebook);

    RecModelConfig mc;
    mc.dim = opt.dim;
    mc.heads = opt.heads;
    mc.layers = opt.layers;
    mc.ffn_dim = opt.ffn_dim;
    mc.max_history = opt.history;
    mc.pos = PosEncoding::kRelation;
    mc.vocab = registry.vocab().size();
    mc.id_length = registry.vocab().id_length();
    Rng mrng = rng.fork(0x11);
    RecModel model(mc, mrng);
    InferenceModel infer(model);

    // fixed pool of timed users: random history + random representation
    std::vector<EncodedSequence> sequences;
    std::vector<Tensor> user_reps;
    Rng urng = rng.fork(0x22);
    for (int64_t u = 0; u < opt.timed_users; ++u) {
      std::vector<int32_t> history;
      for (int64_t p = 0; p < opt.history; ++p)
        history.push_back(static_cast<int32_t>(urng.uniform_int(items)));
      std::sort(history.begin(), history.end());
      history.erase(std::unique(history.begin(), history.end()), history.end());
      sequences.push_back(embed_input(item_factors, history, opt.history, urng));
      Tensor rep({opt.dim});
      for (int64_t j = 0; j < opt.dim; ++j) rep[j] = urng.normal();
      user_reps.push_back(std::move(rep));
    }

    // --- inner-product retrieval ---
    std::vector<double> mf_ms;
    std::vector<int64_t> top;
    mf_score_user(user_reps[0].data(), item_factors, opt.k, top);  // warm-up
    for (int rep = 0; rep < opt.repetitions; ++rep) {
      const auto t0 = Clock::now();
      for (int64_t u = 0; u < opt.timed_users; ++u)
        mf_score_user(user_reps[static_cast<size_t>(u)].data(), item_factors, opt.k, top);
      mf_ms.push_back(ms_since(t0) / static_cast<double>(opt.timed_users));
    }

    // --- constrained generation ---
    std::vector<double> gen_ms;
    {
      auto mem = infer.encode(user_reps[0], sequences[0]);  // warm-up
      beam_search(infer, mem, registry, opt.k);
    }
    for (int rep = 0; rep < opt.repetitions; ++rep) {
      const auto t0 = Clock::now();
      for (int64_t u = 0; u < opt.timed_users; ++u) {
        auto mem = infer.encode(user_reps[static_cast<size_t>(u)],
                                sequences[static_cast<size_t>(u)]);
        beam_search(infer, mem, registry, opt.k);
      }
      gen_ms.push_back(ms_since(t0) / static_cast<double>(opt.timed_users));
    }

    const Stats ms = summarize(mf_ms);
    const Stats gs = summarize(gen_ms);
    rows.push_back({"mf", scale, items, ms.median, ms.mean, ms.stddev});
    rows.push_back({"generative", scale, items, gs.median, gs.mean, gs.stddev});
    if (log)
      (*log) << "scale=" << scale << " items=" << items
             << " mf_ms=" << ms.median << " generative_ms=" << gs.median << "\n";
  }

  set_num_threads(saved_threads);
  return rows;
}

std::string bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "method" << std::setw(9) << "scale"
     << std::setw(10) << "items" << std::setw(13) << "median_ms"
     << std::setw(12) << "mean_ms" << "stddev_ms\n";
  for (const auto& r : rows)
    os << std::left << std::setw(12) << r.method << std::setw(9) << r.scale
       << std::setw(10) << r.items << std::fixed << std::setprecision(4)
       << std::setw(13) << r.median_ms << std::setw(12) << r.mean_ms
       << r.stddev_ms << "\n";
  return os.str();
}

void save_bench_csv(const std::string& path, const std::vector<BenchRow>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write bench csv: " + path);
  os << "method,scale,items,median_ms,mean_ms,stddev_ms\n";
  for (const auto& r : rows)
    os << r.method << ',' << r.scale << ',' << r.items << ',' << r.median_ms
       << ',' << r.mean_ms << ',' << r.stddev_ms << "\n";
}

}  // namespace genrec
