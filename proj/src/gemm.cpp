#include "gemm.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace arcnn::detail {

namespace {

#if defined(__AVX512F__)

// BLIS-style blocking for the NN product. B is packed into zero-padded
// 16-column tiles and A into row-block panels, so the microkernel streams
// contiguous memory. Within one C element the k index ascends sequentially
// across all blocks; the summation order equals the naive triple loop's,
// bit for bit.
constexpr int KC = 384;   // k slice; B tile of KC x 16 doubles stays near L1
constexpr int MC = 128;   // row chunk; A panel of MC x KC doubles stays in L2
constexpr int NC = 1024;  // column chunk; packed B slice capped at 2 MB

// Panel width W is the row count of this A block (8, 4, 2 or 1).
// apanel[p*W + i] = A[i][p], btile[p*16 + j] = B[p][j].
template <int W>
inline void micro_tile(int kc, const double* __restrict apanel, const double* __restrict btile,
                       double* __restrict c, int ldc, __mmask8 m0, __mmask8 m1, bool accumulate) {
    __m512d acc0[W], acc1[W];
    for (int i = 0; i < W; ++i) {
        acc0[i] = _mm512_setzero_pd();
        acc1[i] = _mm512_setzero_pd();
    }
    for (int p = 0; p < kc; ++p) {
        const __m512d b0 = _mm512_loadu_pd(btile);
        const __m512d b1 = _mm512_loadu_pd(btile + 8);
        btile += 16;
        for (int i = 0; i < W; ++i) {
            const __m512d av = _mm512_set1_pd(apanel[i]);
            acc0[i] = _mm512_fmadd_pd(av, b0, acc0[i]);
            acc1[i] = _mm512_fmadd_pd(av, b1, acc1[i]);
        }
        apanel += W;
    }
    for (int i = 0; i < W; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * ldc;
        if (accumulate) {
            const __m512d c0 = _mm512_maskz_loadu_pd(m0, crow);
            const __m512d c1 = _mm512_maskz_loadu_pd(m1, crow + 8);
            _mm512_mask_storeu_pd(crow, m0, _mm512_add_pd(c0, acc0[i]));
            _mm512_mask_storeu_pd(crow + 8, m1, _mm512_add_pd(c1, acc1[i]));
        } else {
            _mm512_mask_storeu_pd(crow, m0, acc0[i]);
            _mm512_mask_storeu_pd(crow + 8, m1, acc1[i]);
        }
    }
}

// Packs mc x kc rows of A into consecutive panels of width 8/4/2/1.
void pack_a(std::vector<double>& buf, const double* a, int lda, int mc, int kc) {
    buf.resize(static_cast<std::size_t>(mc) * kc);
    double* dst = buf.data();
    int i = 0;
    while (i < mc) {
        const int w = (mc - i >= 8) ? 8 : (mc - i >= 4) ? 4 : (mc - i >= 2) ? 2 : 1;
        for (int p = 0; p < kc; ++p)
            for (int r = 0; r < w; ++r)
                *dst++ = a[static_cast<std::size_t>(i + r) * lda + p];
        i += w;
    }
}

// Packs kc x nc of B into ceil(nc/16) tiles, ragged tail zero-filled.
void pack_b(std::vector<double>& buf, const double* b, int ldb, int kc, int nc) {
    const int tiles = (nc + 15) / 16;
    buf.resize(static_cast<std::size_t>(tiles) * kc * 16);
    for (int t = 0; t < tiles; ++t) {
        const int j0 = t * 16;
        const int w = std::min(16, nc - j0);
        double* dst = buf.data() + static_cast<std::size_t>(t) * kc * 16;
        for (int p = 0; p < kc; ++p, dst += 16) {
            const double* src = b + static_cast<std::size_t>(p) * ldb + j0;
            for (int j = 0; j < w; ++j) dst[j] = src[j];
            for (int j = w; j < 16; ++j) dst[j] = 0.0;
        }
    }
}

inline double hsum(__m512d v) { return _mm512_reduce_add_pd(v); }

// 4x4 block of dot products over contiguous rows of A and B.
template <int MR, int JR>
inline void micro_dots(int n, const double* __restrict a, int lda, const double* __restrict b,
                       int ldb, double* __restrict c, int ldc, bool accumulate) {
    __m512d acc[MR][JR];
    for (int i = 0; i < MR; ++i)
        for (int j = 0; j < JR; ++j) acc[i][j] = _mm512_setzero_pd();
    int p = 0;
    for (; p + 8 <= n; p += 8) {
        __m512d av[MR], bv[JR];
        for (int i = 0; i < MR; ++i) av[i] = _mm512_loadu_pd(a + static_cast<std::size_t>(i) * lda + p);
        for (int j = 0; j < JR; ++j) bv[j] = _mm512_loadu_pd(b + static_cast<std::size_t>(j) * ldb + p);
        for (int i = 0; i < MR; ++i)
            for (int j = 0; j < JR; ++j) acc[i][j] = _mm512_fmadd_pd(av[i], bv[j], acc[i][j]);
    }
    const int rem = n - p;
    if (rem > 0) {
        const __mmask8 m = static_cast<__mmask8>((1u << rem) - 1);
        __m512d av[MR], bv[JR];
        for (int i = 0; i < MR; ++i)
            av[i] = _mm512_maskz_loadu_pd(m, a + static_cast<std::size_t>(i) * lda + p);
        for (int j = 0; j < JR; ++j)
            bv[j] = _mm512_maskz_loadu_pd(m, b + static_cast<std::size_t>(j) * ldb + p);
        for (int i = 0; i < MR; ++i)
            for (int j = 0; j < JR; ++j) acc[i][j] = _mm512_fmadd_pd(av[i], bv[j], acc[i][j]);
    }
    for (int i = 0; i < MR; ++i)
        for (int j = 0; j < JR; ++j) {
            double* slot = c + static_cast<std::size_t>(i) * ldc + j;
            const double v = hsum(acc[i][j]);
            *slot = accumulate ? *slot + v : v;
        }
}

#else

// Portable reference paths; same per-element accumulation order as the
// blocked kernels (ascending k / n).
void gemm_nn_ref(int m, int n, int k, const double* a, int lda, const double* b, int ldb,
                 double* c, int ldc, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p)
                s += a[static_cast<std::size_t>(i) * lda + p] *
                     b[static_cast<std::size_t>(p) * ldb + j];
            double* slot = c + static_cast<std::size_t>(i) * ldc + j;
            *slot = accumulate ? *slot + s : s;
        }
    }
}

void gemm_nt_ref(int m, int jdim, int n, const double* a, int lda, const double* b, int ldb,
                 double* c, int ldc, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < jdim; ++j) {
            double s = 0.0;
            for (int p = 0; p < n; ++p)
                s += a[static_cast<std::size_t>(i) * lda + p] *
                     b[static_cast<std::size_t>(j) * ldb + p];
            double* slot = c + static_cast<std::size_t>(i) * ldc + j;
            *slot = accumulate ? *slot + s : s;
        }
    }
}

#endif

}  // namespace

void dgemm_nn(int m, int n, int k, const double* a, int lda, const double* b, int ldb, double* c,
              int ldc, bool accumulate) {
#if defined(__AVX512F__)
    thread_local std::vector<double> apack, bpack;
    for (int jc0 = 0; jc0 < n; jc0 += NC) {
        const int nc = std::min(NC, n - jc0);
        const int tiles = (nc + 15) / 16;
        for (int pc = 0; pc < k; pc += KC) {
            const int kc = std::min(KC, k - pc);
            // only the first k slice may overwrite C
            const bool acc_slice = accumulate || pc > 0;
            pack_b(bpack, b + static_cast<std::size_t>(pc) * ldb + jc0, ldb, kc, nc);
            for (int ic0 = 0; ic0 < m; ic0 += MC) {
                const int mc = std::min(MC, m - ic0);
                pack_a(apack, a + static_cast<std::size_t>(ic0) * lda + pc, lda, mc, kc);
                for (int t = 0; t < tiles; ++t) {
                    const int j0 = jc0 + t * 16;
                    const int nr = std::min(16, n - j0);
                    const __mmask8 m0 = nr >= 8 ? __mmask8(0xff) : __mmask8((1u << nr) - 1);
                    const __mmask8 m1 =
                        nr >= 16 ? __mmask8(0xff)
                                 : (nr > 8 ? __mmask8((1u << (nr - 8)) - 1) : __mmask8(0));
                    const double* btile = bpack.data() + static_cast<std::size_t>(t) * kc * 16;
                    const double* apanel = apack.data();
                    int i = ic0;
                    const int iend = ic0 + mc;
                    while (i < iend) {
                        double* crow = c + static_cast<std::size_t>(i) * ldc + j0;
                        const int left = iend - i;
                        if (left >= 8) {
                            micro_tile<8>(kc, apanel, btile, crow, ldc, m0, m1, acc_slice);
                            apanel += static_cast<std::size_t>(kc) * 8;
                            i += 8;
                        } else if (left >= 4) {
                            micro_tile<4>(kc, apanel, btile, crow, ldc, m0, m1, acc_slice);
                            apanel += static_cast<std::size_t>(kc) * 4;
                            i += 4;
                        } else if (left >= 2) {
                            micro_tile<2>(kc, apanel, btile, crow, ldc, m0, m1, acc_slice);
                            apanel += static_cast<std::size_t>(kc) * 2;
                            i += 2;
                        } else {
                            micro_tile<1>(kc, apanel, btile, crow, ldc, m0, m1, acc_slice);
                            apanel += kc;
                            i += 1;
                        }
                    }
                }
            }
        }
    }
#else
    gemm_nn_ref(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
#endif
}

void dgemm_nt(int m, int j, int n, const double* a, int lda, const double* b, int ldb, double* c,
              int ldc, bool accumulate) {
#if defined(__AVX512F__)
    int i = 0;
    for (; i + 4 <= m; i += 4) {
        int jj = 0;
        for (; jj + 4 <= j; jj += 4)
            micro_dots<4, 4>(n, a + static_cast<std::size_t>(i) * lda, lda,
                             b + static_cast<std::size_t>(jj) * ldb, ldb,
                             c + static_cast<std::size_t>(i) * ldc + jj, ldc, accumulate);
        for (; jj < j; ++jj)
            micro_dots<4, 1>(n, a + static_cast<std::size_t>(i) * lda, lda,
                             b + static_cast<std::size_t>(jj) * ldb, ldb,
                             c + static_cast<std::size_t>(i) * ldc + jj, ldc, accumulate);
    }
    for (; i < m; ++i) {
        int jj = 0;
        for (; jj + 4 <= j; jj += 4)
            micro_dots<1, 4>(n, a + static_cast<std::size_t>(i) * lda, lda,
                             b + static_cast<std::size_t>(jj) * ldb, ldb,
                             c + static_cast<std::size_t>(i) * ldc + jj, ldc, accumulate);
        for (; jj < j; ++jj)
            micro_dots<1, 1>(n, a + static_cast<std::size_t>(i) * lda, lda,
                             b + static_cast<std::size_t>(jj) * ldb, ldb,
                             c + static_cast<std::size_t>(i) * ldc + jj, ldc, accumulate);
    }
#else
    gemm_nt_ref(m, j, n, a, lda, b, ldb, c, ldc, accumulate);
#endif
}

void im2col(const FeatureStack& in, int f, double* col) {
    const int oh = in.height - f + 1;
    const int ow = in.width - f + 1;
    const std::size_t n = static_cast<std::size_t>(oh) * ow;
    double* dst = col;
    for (int ic = 0; ic < in.channels; ++ic) {
        for (int ky = 0; ky < f; ++ky) {
            for (int kx = 0; kx < f; ++kx) {
                for (int oy = 0; oy < oh; ++oy) {
                    const double* src = in.channel(ic) +
                                        static_cast<std::size_t>(oy + ky) * in.width + kx;
                    std::memcpy(dst + static_cast<std::size_t>(oy) * ow, src,
                                sizeof(double) * ow);
                }
                dst += n;
            }
        }
    }
}

void col2im_add(const double* col, int f, FeatureStack& out, int oy0, int rows) {
    const int ow = out.width - f + 1;
    const std::size_t n = static_cast<std::size_t>(rows) * ow;
    const double* src = col;
    for (int ic = 0; ic < out.channels; ++ic) {
        for (int ky = 0; ky < f; ++ky) {
            for (int kx = 0; kx < f; ++kx) {
                for (int oy = 0; oy < rows; ++oy) {
                    double* dst = out.channel(ic) +
                                  static_cast<std::size_t>(oy0 + oy + ky) * out.width + kx;
                    const double* s = src + static_cast<std::size_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) dst[ox] += s[ox];
                }
                src += n;
            }
        }
    }
}

void transpose(const double* src, int rows, int cols, double* dst) {
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            dst[static_cast<std::size_t>(j) * rows + i] =
                src[static_cast<std::size_t>(i) * cols + j];
}

}  // namespace arcnn::detail
