#include "arcnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace arcnn {

namespace {

std::vector<double> snap255(const Plane& p) {
    std::vector<double> v(p.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(p.data[i]))
            throw std::invalid_argument("metrics: image contains non-finite values");
        v[i] = std::round(std::clamp(p.data[i], 0.0, 1.0) * 255.0);
    }
    return v;
}

void check_same_size(const Plane& a, const Plane& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": image sizes differ (" +
                                    std::to_string(a.height) + "x" + std::to_string(a.width) +
                                    " vs " + std::to_string(b.height) + "x" +
                                    std::to_string(b.width) + ")");
}

double mse255(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

}  // namespace

double psnr(const Plane& ref, const Plane& test) {
    check_same_size(ref, test, "psnr");
    const double mse = mse255(snap255(ref), snap255(test));
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double ssim(const Plane& ref, const Plane& test, int window, int stride) {
    check_same_size(ref, test, "ssim");
    if (window < 1 || stride < 1) throw std::invalid_argument("ssim: bad window/stride");
    if (ref.height < window || ref.width < window)
        throw std::invalid_argument("ssim: image smaller than the " + std::to_string(window) +
                                    "x" + std::to_string(window) + " window");

    const std::vector<double> x = snap255(ref);
    const std::vector<double> y = snap255(test);
    const int w = ref.width;
    const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
    const double inv_n = 1.0 / (static_cast<double>(window) * window);

    double total = 0.0;
    long count = 0;
    for (int wy = 0; wy + window <= ref.height; wy += stride) {
        for (int wx = 0; wx + window <= ref.width; wx += stride) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (int i = 0; i < window; ++i) {
                const double* xr = x.data() + static_cast<std::size_t>(wy + i) * w + wx;
                const double* yr = y.data() + static_cast<std::size_t>(wy + i) * w + wx;
                for (int j = 0; j < window; ++j) {
                    sx += xr[j];
                    sy += yr[j];
                    sxx += xr[j] * xr[j];
                    syy += yr[j] * yr[j];
                    sxy += xr[j] * yr[j];
                }
            }
            const double mx = sx * inv_n;
            const double my = sy * inv_n;
            const double vx = sxx * inv_n - mx * mx;
            const double vy = syy * inv_n - my * my;
            const double cov = sxy * inv_n - mx * my;
            const double val = ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                               ((mx * mx + my * my + c1) * (vx + vy + c2));
            total += val;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

double psnr_b(const Plane& ref, const Plane& test, int block) {
    check_same_size(ref, test, "psnr_b");
    if (block < 2) throw std::invalid_argument("psnr_b: block must be >= 2");
    if (ref.height <= block || ref.width <= block)
        throw std::invalid_argument("psnr_b: image sides must exceed the block size");

    const std::vector<double> r = snap255(ref);
    const std::vector<double> t = snap255(test);
    const int h = ref.height, w = ref.width;

    double sum_b = 0.0, sum_nb = 0.0;
    long n_b = 0, n_nb = 0;
    // horizontal neighbor pairs; a pair (x, x+1) straddles the grid when
    // x+1 is a block-column start
    for (int y = 0; y < h; ++y) {
        const double* row = t.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x + 1 < w; ++x) {
            const double d = row[x] - row[x + 1];
            if ((x + 1) % block == 0) {
                sum_b += d * d;
                ++n_b;
            } else {
                sum_nb += d * d;
                ++n_nb;
            }
        }
    }
    // vertical neighbor pairs
    for (int y = 0; y + 1 < h; ++y) {
        const double* row = t.data() + static_cast<std::size_t>(y) * w;
        const double* next = row + w;
        for (int x = 0; x < w; ++x) {
            const double d = row[x] - next[x];
            if ((y + 1) % block == 0) {
                sum_b += d * d;
                ++n_b;
            } else {
                sum_nb += d * d;
                ++n_nb;
            }
        }
    }

    const double d_b = n_b > 0 ? sum_b / static_cast<double>(n_b) : 0.0;
    const double d_nb = n_nb > 0 ? sum_nb / static_cast<double>(n_nb) : 0.0;
    double bef = 0.0;
    if (d_b > d_nb) {
        const double eta = std::log2(static_cast<double>(block)) /
                           std::log2(static_cast<double>(std::min(h, w)));
        bef = eta * (d_b - d_nb);
    }
    const double mse_b = mse255(r, t) + bef;
    if (mse_b <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse_b));
}

MetricsReport evaluate_pair(const Plane& ref, const Plane& test) {
    return {psnr(ref, test), ssim(ref, test), psnr_b(ref, test)};
}

}  // namespace arcnn
