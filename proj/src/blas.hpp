#pragma once

#include <cblas.h>

namespace odtte::detail {

// Row-major C = alpha * op(A) * op(B) + beta * C
inline void gemm(bool trans_a, bool trans_b, int m, int n, int k,
                 double alpha, const double* a, int lda,
                 const double* b, int ldb,
                 double beta, double* c, int ldc) {
    cblas_dgemm(CblasRowMajor,
                trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans,
                m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

} // namespace odtte::detail
