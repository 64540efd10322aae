#pragma once

#include "arcnn/plane.hpp"

namespace arcnn {

/// PSNR of identical images is reported as this sentinel instead of infinity.
inline constexpr double kPsnrCap = 100.0;

/// Peak signal-to-noise ratio in dB, 10*log10(255^2 / MSE). Both inputs are
/// snapped to the 8-bit grid first so results match standard tooling.
double psnr(const Plane& ref, const Plane& test);

/// Mean structural similarity over dense (stride-1) unweighted windows;
/// statistics on the 0..255 scale with C1=(0.01*255)^2, C2=(0.03*255)^2.
/// The window parameter exists because the exact windowing convention
/// differs between implementations; 8x8 stride 1 is the default here.
double ssim(const Plane& ref, const Plane& test, int window = 8, int stride = 1);

/// PSNR penalized by the Yim-Bovik blocking effect factor of the test image:
/// MSE-B = MSE + eta * max(0, D_b - D_nb), where D_b / D_nb are mean squared
/// differences of adjacent pixel pairs straddling / not straddling the block
/// grid and eta = log2(block) / log2(min(H, W)) when D_b > D_nb, else 0.
double psnr_b(const Plane& ref, const Plane& test, int block = 8);

struct MetricsReport {
    double psnr = 0.0;
    double ssim = 0.0;
    double psnr_b = 0.0;
};

MetricsReport evaluate_pair(const Plane& ref, const Plane& test);

}  // namespace arcnn
