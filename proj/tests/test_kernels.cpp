#include <doctest.h>

#include "genrec/kernels.hpp"
#include "genrec/rng.hpp"

using namespace genrec;

TEST_SUITE_BEGIN("kernels");

namespace {
std::vector<double> randv(int64_t n, Rng& rng) {
  std::vector<double> v(static_cast<size_t>(n));
  for (auto& x : v) x = rng.normal();
  return v;
}
}  // namespace

TEST_CASE("parallel gemm variants are bit-equal to the serial reference") {
  Rng rng(99);
  set_num_threads(2);
  const int64_t shapes[][3] = {{37, 19, 23}, {128, 64, 96}, {200, 64, 64}};
  for (const auto& s : shapes) {
    const int64_t m = s[0], k = s[1], n = s[2];
    auto a = randv(m * k, rng);
    auto b = randv(k * n, rng);
    std::vector<double> c1(static_cast<size_t>(m * n)), c2 = c1;
    gemm_nn_serial(a.data(), b.data(), c1.data(), m, k, n, false);
    gemm_nn(a.data(), b.data(), c2.data(), m, k, n, false);
    CHECK(c1 == c2);

    auto bt = randv(n * k, rng);
    gemm_nt_serial(a.data(), bt.data(), c1.data(), m, k, n, false);
    gemm_nt(a.data(), bt.data(), c2.data(), m, k, n, false);
    CHECK(c1 == c2);

    auto at = randv(k * m, rng);
    gemm_tn_serial(at.data(), b.data(), c1.data(), m, k, n, true);
    gemm_tn(at.data(), b.data(), c2.data(), m, k, n, true);
    CHECK(c1 == c2);
  }
}

TEST_CASE("gemm_nn matches a naive triple loop") {
  Rng rng(5);
  const int64_t m = 9, k = 7, n = 8;
  auto a = randv(m * k, rng);
  auto b = randv(k * n, rng);
  std::vector<double> c(static_cast<size_t>(m * n));
  gemm_nn(a.data(), b.data(), c.data(), m, k, n, false);
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (int64_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      CHECK(c[i * n + j] == doctest::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("gemm transposed variants match the plain definition") {
  Rng rng(6);
  const int64_t m = 6, k = 5, n = 7;
  auto a = randv(m * k, rng);
  auto bt = randv(n * k, rng);   // B stored n x k, used as B^T
  auto at = randv(k * m, rng);   // A stored k x m, used as A^T
  auto b = randv(k * n, rng);
  std::vector<double> c(static_cast<size_t>(m * n));

  gemm_nt(a.data(), bt.data(), c.data(), m, k, n, false);
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (int64_t p = 0; p < k; ++p) s += a[i * k + p] * bt[j * k + p];
      CHECK(c[i * n + j] == doctest::Approx(s).epsilon(1e-12));
    }

  gemm_tn(at.data(), b.data(), c.data(), m, k, n, false);
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (int64_t p = 0; p < k; ++p) s += at[p * m + i] * b[p * n + j];
      CHECK(c[i * n + j] == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("nearest_row equals an exhaustive scan and breaks ties low") {
  Rng rng(77);
  const int64_t n = 500, l = 64, d = 16;
  auto q = randv(n * d, rng);
  auto book = randv(l * d, rng);
  std::vector<int32_t> fast(static_cast<size_t>(n)), serial(fast);
  nearest_row(q.data(), n, book.data(), l, d, fast.data());
  nearest_row_serial(q.data(), n, book.data(), l, d, serial.data());
  CHECK(fast == serial);
  for (int64_t i = 0; i < n; ++i) {
    int32_t best = -1;
    double best_d = 1e300;
    for (int64_t r = 0; r < l; ++r) {
      double dist = 0.0;
      for (int64_t j = 0; j < d; ++j) {
        const double diff = q[i * d + j] - book[r * d + j];
        dist += diff * diff;
      }
      if (dist < best_d) {
        best_d = dist;
        best = static_cast<int32_t>(r);
      }
    }
    CHECK(fast[static_cast<size_t>(i)] == best);
  }

  // duplicated codebook rows: lowest index wins
  for (int64_t j = 0; j < d; ++j) book[(l - 1) * d + j] = book[3 * d + j];
  std::vector<int32_t> idx(1);
  nearest_row(book.data() + 3 * d, 1, book.data(), l, d, idx.data());
  CHECK(idx[0] == 3);
}

TEST_SUITE_END();
