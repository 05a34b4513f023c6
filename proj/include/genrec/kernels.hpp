#pragma once

#include <cstdint>

namespace genrec {

// Low-level dense kernels. Every kernel has a serial reference
// implementation (the _serial entry points) and an OpenMP version that
// distributes independent output rows across threads. The per-element
// arithmetic order is identical in both, so results are bit-equal and a
// run is deterministic for any thread count. bench_kernels compares the
// two; the unit tests assert the bit-equality.

// C[m x n] += / = A[m x k] * B[k x n]
void gemm_nn_serial(const double* a, const double* b, double* c,
                    int64_t m, int64_t k, int64_t n, bool accumulate);
void gemm_nn(const double* a, const double* b, double* c,
             int64_t m, int64_t k, int64_t n, bool accumulate);

// C[m x n] += / = A[m x k] * B[n x k]^T
void gemm_nt_serial(const double* a, const double* b, double* c,
                    int64_t m, int64_t k, int64_t n, bool accumulate);
void gemm_nt(const double* a, const double* b, double* c,
             int64_t m, int64_t k, int64_t n, bool accumulate);

// C[m x n] += / = A[k x m]^T * B[k x n]
void gemm_tn_serial(const double* a, const double* b, double* c,
                    int64_t m, int64_t k, int64_t n, bool accumulate);
void gemm_tn(const double* a, const double* b, double* c,
             int64_t m, int64_t k, int64_t n, bool accumulate);

// For each of the n query rows (dim d), index of the codebook row
// (l rows, dim d) with minimal squared euclidean distance; ties resolved
// to the lowest index.
void nearest_row_serial(const double* queries, int64_t n,
                        const double* codebook, int64_t l, int64_t d,
                        int32_t* out_idx);
void nearest_row(const double* queries, int64_t n,
                 const double* codebook, int64_t l, int64_t d,
                 int32_t* out_idx);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, int64_t n);

double dot(const double* a, const double* b, int64_t n);

// Threads used by the parallel kernels (and by anything else that asks).
void set_num_threads(int n);
int num_threads();

}  // namespace genrec
