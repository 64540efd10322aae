#include "arcnn/jpeg_codec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace arcnn {

QualityFactor::QualityFactor(int q) : value(q) {
    if (q < 1 || q > 100)
        throw std::invalid_argument("quality must be in [1,100], got " + std::to_string(q));
}

const std::array<int, 64> kBaseLuminanceTable = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

QuantTable quant_table_for_quality(QualityFactor q) {
    const int scale = q.value < 50 ? 5000 / q.value : 200 - 2 * q.value;
    QuantTable t;
    for (int i = 0; i < 64; ++i)
        t.q[i] = std::clamp((kBaseLuminanceTable[i] * scale + 50) / 100, 1, 255);
    return t;
}

namespace {

// basis[u][x] = a_u * cos((2x+1) u pi / 16), orthonormal scaling
struct DctBasis {
    double m[8][8];
    DctBasis() {
        const double pi = 3.14159265358979323846;
        for (int u = 0; u < 8; ++u) {
            const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int x = 0; x < 8; ++x) m[u][x] = a * std::cos((2 * x + 1) * u * pi / 16.0);
        }
    }
};
const DctBasis kBasis;

}  // namespace

void dct8_forward(const double in[64], double out[64]) {
    double tmp[64];
    // rows
    for (int y = 0; y < 8; ++y)
        for (int u = 0; u < 8; ++u) {
            double s = 0.0;
            for (int x = 0; x < 8; ++x) s += kBasis.m[u][x] * in[y * 8 + x];
            tmp[y * 8 + u] = s;
        }
    // columns
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
            double s = 0.0;
            for (int y = 0; y < 8; ++y) s += kBasis.m[v][y] * tmp[y * 8 + u];
            out[v * 8 + u] = s;
        }
}

void dct8_inverse(const double in[64], double out[64]) {
    double tmp[64];
    for (int v = 0; v < 8; ++v)
        for (int x = 0; x < 8; ++x) {
            double s = 0.0;
            for (int u = 0; u < 8; ++u) s += kBasis.m[u][x] * in[v * 8 + u];
            tmp[v * 8 + x] = s;
        }
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double s = 0.0;
            for (int v = 0; v < 8; ++v) s += kBasis.m[v][y] * tmp[v * 8 + x];
            out[y * 8 + x] = s;
        }
}

namespace {

Plane pad_to_multiple_of_8(const Plane& x) {
    const int ph = (x.height + 7) / 8 * 8;
    const int pw = (x.width + 7) / 8 * 8;
    if (ph == x.height && pw == x.width) return x;
    Plane p(ph, pw);
    for (int y = 0; y < ph; ++y) {
        const int sy = std::min(y, x.height - 1);
        for (int xx = 0; xx < pw; ++xx) p.at(y, xx) = x.at(sy, std::min(xx, x.width - 1));
    }
    return p;
}

}  // namespace

Plane degrade(const Plane& x, QualityFactor q) {
    const QuantTable table = quant_table_for_quality(q);
    Plane padded = pad_to_multiple_of_8(x);

    double block[64], coef[64];
    for (int by = 0; by < padded.height; by += 8) {
        for (int bx = 0; bx < padded.width; bx += 8) {
            for (int y = 0; y < 8; ++y)
                for (int xx = 0; xx < 8; ++xx)
                    block[y * 8 + xx] = padded.at(by + y, bx + xx) * 255.0 - 128.0;
            dct8_forward(block, coef);
            for (int i = 0; i < 64; ++i) {
                const double step = static_cast<double>(table.q[i]);
                coef[i] = static_cast<double>(std::llround(coef[i] / step)) * step;
            }
            dct8_inverse(coef, block);
            for (int y = 0; y < 8; ++y)
                for (int xx = 0; xx < 8; ++xx)
                    padded.at(by + y, bx + xx) =
                        std::clamp((block[y * 8 + xx] + 128.0) / 255.0, 0.0, 1.0);
        }
    }

    if (padded.same_shape(x)) return padded;
    Plane out(x.height, x.width);
    for (int y = 0; y < x.height; ++y)
        std::copy_n(padded.row(y), x.width, out.row(y));
    return out;
}

Plane resize_bilinear(const Plane& x, int out_height, int out_width) {
    if (out_height < 1 || out_width < 1)
        throw std::invalid_argument("resize_bilinear: target size must be positive");
    Plane out(out_height, out_width);
    const double sy = static_cast<double>(x.height) / out_height;
    const double sx = static_cast<double>(x.width) / out_width;
    for (int y = 0; y < out_height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, x.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, x.height - 1);
        const double wy = fy - y0;
        for (int xx = 0; xx < out_width; ++xx) {
            const double fx = std::clamp((xx + 0.5) * sx - 0.5, 0.0, x.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, x.width - 1);
            const double wx = fx - x0;
            const double top = x.at(y0, x0) * (1.0 - wx) + x.at(y0, x1) * wx;
            const double bot = x.at(y1, x0) * (1.0 - wx) + x.at(y1, x1) * wx;
            out.at(y, xx) = top * (1.0 - wy) + bot * wy;
        }
    }
    return out;
}

Plane degrade_realuse(const Plane& x, int target_width, QualityFactor q) {
    if (target_width < 1 || target_width > x.width)
        throw std::invalid_argument("degrade_realuse: target width " +
                                    std::to_string(target_width) + " invalid for image width " +
                                    std::to_string(x.width));
    if (target_width == x.width) return degrade(x, q);
    const int target_height = std::max(
        1, static_cast<int>(std::llround(static_cast<double>(x.height) * target_width / x.width)));
    return degrade(resize_bilinear(x, target_height, target_width), q);
}

Plane rgb_to_luma(const Plane& r, const Plane& g, const Plane& b) {
    if (!r.same_shape(g) || !r.same_shape(b))
        throw std::invalid_argument("rgb_to_luma: plane dimensions differ");
    Plane y(r.height, r.width);
    for (std::size_t i = 0; i < y.data.size(); ++i)
        y.data[i] = std::clamp(0.299 * r.data[i] + 0.587 * g.data[i] + 0.114 * b.data[i], 0.0, 1.0);
    return y;
}

}  // namespace arcnn
