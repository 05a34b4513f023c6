// Times the OpenMP kernels against their serial reference implementations.
// Usage: bench_kernels [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "genrec/kernels.hpp"
#include "genrec/rng.hpp"

using namespace genrec;
using Clock = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
}

std::vector<double> randn(int64_t n, Rng& rng) {
  std::vector<double> v(static_cast<size_t>(n));
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : 0;
  set_num_threads(threads);
  std::printf("threads: %d\n", num_threads());
  std::printf("%-34s %12s %12s %9s\n", "kernel", "serial_ms", "parallel_ms", "speedup");

  Rng rng(42);
  struct GemmCase {
    const char* name;
    int64_t m, k, n;
  };
  const GemmCase cases[] = {
      {"gemm_nn 256x256x256", 256, 256, 256},
      {"gemm_nn 512x512x512", 512, 512, 512},
      {"gemm_nn 2048x64x64 (batch rows)", 2048, 64, 64},
      {"gemm_nn 64x512x512 (wide)", 64, 512, 512},
  };
  for (const auto& c : cases) {
    auto a = randn(c.m * c.k, rng);
    auto b = randn(c.k * c.n, rng);
    std::vector<double> out(static_cast<size_t>(c.m * c.n));
    const double ts = time_ms(
        [&] { gemm_nn_serial(a.data(), b.data(), out.data(), c.m, c.k, c.n, false); }, 5);
    const double tp = time_ms(
        [&] { gemm_nn(a.data(), b.data(), out.data(), c.m, c.k, c.n, false); }, 5);
    std::printf("%-34s %12.3f %12.3f %8.2fx\n", c.name, ts, tp, ts / tp);
  }

  {
    const int64_t n = 100000, l = 128, d = 32;
    auto queries = randn(n * d, rng);
    auto book = randn(l * d, rng);
    std::vector<int32_t> idx(static_cast<size_t>(n));
    const double ts = time_ms(
        [&] { nearest_row_serial(queries.data(), n, book.data(), l, d, idx.data()); }, 3);
    const double tp = time_ms(
        [&] { nearest_row(queries.data(), n, book.data(), l, d, idx.data()); }, 3);
    std::printf("%-34s %12.3f %12.3f %8.2fx\n", "nearest_row 100k x 128 x 32", ts, tp,
                ts / tp);
  }
  return 0;
}
