#pragma once

#include <array>

#include "arcnn/plane.hpp"

namespace arcnn {

/// JPEG quality setting, 1 (coarsest) to 100 (finest).
struct QualityFactor {
    int value = 50;

    QualityFactor() = default;
    explicit QualityFactor(int q);
};

/// 8x8 luminance quantization table; every entry in [1, 255].
struct QuantTable {
    std::array<int, 64> q{};

    int at(int y, int x) const { return q[static_cast<std::size_t>(y) * 8 + x]; }
};

/// Annex-K reference luminance table (the q=50 baseline).
extern const std::array<int, 64> kBaseLuminanceTable;

/// IJG scaling of the base table: scale = 5000/q for q < 50 else 200 - 2q;
/// entry = clamp(floor((base*scale + 50) / 100), 1, 255).
QuantTable quant_table_for_quality(QualityFactor q);

/// Orthonormal type-II 2-D DCT of one 8x8 block and its inverse.
void dct8_forward(const double in[64], double out[64]);
void dct8_inverse(const double in[64], double out[64]);

/// JPEG-style luminance degradation: per 8x8 block, level shift on the 255
/// scale, DCT, quantize/dequantize with the q-scaled table, inverse DCT.
/// Planes with non-multiple-of-8 sides are replicate-padded internally and
/// cropped back. Output is clamped to [0,1] and has the input's size.
Plane degrade(const Plane& x, QualityFactor q);

/// Real-use-case emulation: bilinear downscale to target_width (aspect
/// preserved), then degrade.
Plane degrade_realuse(const Plane& x, int target_width, QualityFactor q);

/// BT.601 luminance: Y = 0.299 R + 0.587 G + 0.114 B, clamped to [0,1].
Plane rgb_to_luma(const Plane& r, const Plane& g, const Plane& b);

Plane resize_bilinear(const Plane& x, int out_height, int out_width);

}  // namespace arcnn
