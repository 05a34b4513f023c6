#include "genrec/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace genrec {

namespace {
int g_threads = 0;  // 0 = library default

inline bool worth_parallel(int64_t rows, int64_t work_per_row) {
#ifdef _OPENMP
  return g_threads != 1 && rows >= 4 && rows * work_per_row > 16384;
#else
  (void)rows;
  (void)work_per_row;
  return false;
#endif
}
}  // namespace

void set_num_threads(int n) {
  g_threads = n;
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#endif
}

int num_threads() {
#ifdef _OPENMP
  return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

// Row i of C depends only on row i of A, so distributing rows keeps the
// inner accumulation order identical to the serial loop.
static inline void gemm_nn_row(const double* a, const double* b, double* c,
                               int64_t i, int64_t k, int64_t n, bool accumulate) {
  double* ci = c + i * n;
  if (!accumulate) std::memset(ci, 0, sizeof(double) * static_cast<size_t>(n));
  const double* ai = a + i * k;
  for (int64_t p = 0; p < k; ++p) {
    const double aip = ai[p];
    if (aip == 0.0) continue;
    const double* bp = b + p * n;
    for (int64_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
  }
}

void gemm_nn_serial(const double* a, const double* b, double* c,
                    int64_t m, int64_t k, int64_t n, bool accumulate) {
  for (int64_t i = 0; i < m; ++i) gemm_nn_row(a, b, c, i, k, n, accumulate);
}

void gemm_nn(const double* a, const double* b, double* c,
             int64_t m, int64_t k, int64_t n, bool accumulate) {
  if (!worth_parallel(m, k * n)) {
    gemm_nn_serial(a, b, c, m, k, n, accumulate);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) gemm_nn_row(a, b, c, i, k, n, accumulate);
#endif
}

static inline void gemm_nt_row(const double* a, const double* b, double* c,
                               int64_t i, int64_t k, int64_t n, bool accumulate) {
  const double* ai = a + i * k;
  double* ci = c + i * n;
  for (int64_t j = 0; j < n; ++j) {
    const double* bj = b + j * k;
    double s = 0.0;
    for (int64_t p = 0; p < k; ++p) s += ai[p] * bj[p];
    ci[j] = accumulate ? ci[j] + s : s;
  }
}

void gemm_nt_serial(const double* a, const double* b, double* c,
                    int64_t m, int64_t k, int64_t n, bool accumulate) {
  for (int64_t i = 0; i < m; ++i) gemm_nt_row(a, b, c, i, k, n, accumulate);
}

void gemm_nt(const double* a, const double* b, double* c,
             int64_t m, int64_t k, int64_t n, bool accumulate) {
  if (!worth_parallel(m, k * n)) {
    gemm_nt_serial(a, b, c, m, k, n, accumulate);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) gemm_nt_row(a, b, c, i, k, n, accumulate);
#endif
}

// C = A^T * B with A stored k x m. Parallelised over output rows i
// (columns of A); the p-loop order matches the serial version.
static inline void gemm_tn_row(const double* a, const double* b, double* c,
                               int64_t i, int64_t m, int64_t k, int64_t n,
                               bool accumulate) {
  double* ci = c + i * n;
  if (!accumulate) std::memset(ci, 0, sizeof(double) * static_cast<size_t>(n));
  for (int64_t p = 0; p < k; ++p) {
    const double aip = a[p * m + i];
    if (aip == 0.0) continue;
    const double* bp = b + p * n;
    for (int64_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
  }
}

void gemm_tn_serial(const double* a, const double* b, double* c,
                    int64_t m, int64_t k, int64_t n, bool accumulate) {
  for (int64_t i = 0; i < m; ++i) gemm_tn_row(a, b, c, i, m, k, n, accumulate);
}

void gemm_tn(const double* a, const double* b, double* c,
             int64_t m, int64_t k, int64_t n, bool accumulate) {
  if (!worth_parallel(m, k * n)) {
    gemm_tn_serial(a, b, c, m, k, n, accumulate);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) gemm_tn_row(a, b, c, i, m, k, n, accumulate);
#endif
}

static inline int32_t nearest_one(const double* q, const double* codebook,
                                  int64_t l, int64_t d) {
  int32_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int64_t r = 0; r < l; ++r) {
    const double* cb = codebook + r * d;
    double dist = 0.0;
    for (int64_t j = 0; j < d; ++j) {
      const double diff = q[j] - cb[j];
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<int32_t>(r);
    }
  }
  return best;
}

void nearest_row_serial(const double* queries, int64_t n,
                        const double* codebook, int64_t l, int64_t d,
                        int32_t* out_idx) {
  for (int64_t i = 0; i < n; ++i)
    out_idx[i] = nearest_one(queries + i * d, codebook, l, d);
}

void nearest_row(const double* queries, int64_t n,
                 const double* codebook, int64_t l, int64_t d,
                 int32_t* out_idx) {
  if (!worth_parallel(n, l * d)) {
    nearest_row_serial(queries, n, codebook, l, d, out_idx);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i)
    out_idx[i] = nearest_one(queries + i * d, codebook, l, d);
#endif
}

void axpy(double alpha, const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot(const double* a, const double* b, int64_t n) {
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace genrec
