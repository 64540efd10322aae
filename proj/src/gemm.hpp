#pragma once

#include <cstddef>

#include "arcnn/plane.hpp"

// Internal dense kernels backing the convolution primitives. Not part of the
// public surface. Every routine accumulates each output element in ascending
// k order, so results are bit-stable across block sizes and match a naive
// triple loop exactly.
namespace arcnn::detail {

/// C[m x n] += A[m x k] * B[k x n]; row-major with explicit leading dims.
/// With accumulate false the product overwrites C instead.
void dgemm_nn(int m, int n, int k, const double* a, int lda, const double* b, int ldb,
              double* c, int ldc, bool accumulate = true);

/// C[m x j] (+)= A[m x n] * B[j x n]^T, i.e. C[i][jj] = sum_n A[i][n]*B[jj][n].
/// Both operands stream contiguously along n; nothing is packed.
void dgemm_nt(int m, int j, int n, const double* a, int lda, const double* b, int ldb,
              double* c, int ldc, bool accumulate = true);

/// Patch matrix for valid convolution with an f x f kernel:
/// col[(ic*f+ky)*f+kx][oy*ow+ox] = in[ic][oy+ky][ox+kx].
void im2col(const FeatureStack& in, int f, double* col);

/// Scatter-add inverse of im2col: out[ic][oy+ky][ox+kx] += col[...][...],
/// for the band of output rows [oy0, oy0+rows). col holds that band only.
void col2im_add(const double* col, int f, FeatureStack& out, int oy0, int rows);

/// dst[j][i] = src[i][j] for an r x c row-major matrix.
void transpose(const double* src, int rows, int cols, double* dst);

}  // namespace arcnn::detail
