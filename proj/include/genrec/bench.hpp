#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace genrec {

// Per-user inference cost of inner-product retrieval vs constrained
// generation, across catalog scales. Models are randomly initialised with
// production shapes; cost does not depend on the trained values. Scoring
// is pinned to one thread so the comparison is algorithmic.
struct BenchOptions {
  int64_t base_items = 1 << 18;
  std::vector<double> scales = {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0};
  int64_t timed_users = 8;
  int repetitions = 5;
  int64_t k = 10;
  int64_t dim = 64;
  int64_t history = 20;
  int heads = 4;
  int layers = 2;
  int64_t ffn_dim = 128;
  int levels = 3;
  int64_t codebook = 128;
  uint64_t seed = 7;
};

struct BenchRow {
  std::string method;  // "mf" or "generative"
  double scale = 1.0;
  int64_t items = 0;
  double median_ms = 0.0;  // per-user, median over repetitions
  double mean_ms = 0.0;
  double stddev_ms = 0.0;
};

std::vector<BenchRow> run_inference_bench(const BenchOptions& opt,
                                          std::ostream* log = nullptr);

std::string bench_table(const std::vector<BenchRow>& rows);
// plot-ready: method,scale,items,median_ms,mean_ms,stddev_ms
void save_bench_csv(const std::string& path, const std::vector<BenchRow>& rows);

}  // namespace genrec
