#include "arcnn/conv_ops.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "gemm.hpp"

namespace arcnn {

namespace {

// Column-matrix scratch is capped so full-image inference does not balloon;
// larger outputs are processed in horizontal bands (numerically identical to
// a single pass, the bands only block the loops).
constexpr std::size_t kColCapDoubles = 6u << 20;  // 48 MB

struct Scratch {
    std::vector<double> col;
    std::vector<double> wt;
};

Scratch& scratch() {
    thread_local Scratch s;
    return s;
}

void check_forward_shapes(const FeatureStack& input, const ConvWeights& w) {
    if (input.channels != w.in_channels)
        throw std::invalid_argument("conv_valid_forward: input has " +
                                    std::to_string(input.channels) + " channels, kernel expects " +
                                    std::to_string(w.in_channels));
    if (input.height < w.filter_size || input.width < w.filter_size)
        throw std::invalid_argument("conv_valid_forward: input " + std::to_string(input.height) +
                                    "x" + std::to_string(input.width) +
                                    " is smaller than the " + std::to_string(w.filter_size) +
                                    "x" + std::to_string(w.filter_size) + " kernel");
}

// Stack view of a horizontal band of input rows [y0, y0+rows).
FeatureStack band_view(const FeatureStack& in, int y0, int rows) {
    FeatureStack band(in.channels, rows, in.width);
    for (int c = 0; c < in.channels; ++c)
        std::memcpy(band.channel(c), in.channel(c) + static_cast<std::size_t>(y0) * in.width,
                    sizeof(double) * band.plane_size());
    return band;
}

int rows_per_band(int kdim, int ow, int oh) {
    const std::size_t per_row = static_cast<std::size_t>(kdim) * ow;
    int rows = per_row == 0 ? oh : static_cast<int>(kColCapDoubles / per_row);
    return std::clamp(rows, 1, oh);
}

}  // namespace

ConvWeights::ConvWeights(int out_c, int in_c, int f)
    : out_channels(out_c),
      in_channels(in_c),
      filter_size(f),
      weights(static_cast<std::size_t>(out_c) * in_c * f * f, 0.0),
      bias(static_cast<std::size_t>(out_c), 0.0) {
    if (out_c <= 0 || in_c <= 0) throw std::invalid_argument("ConvWeights: channel counts must be positive");
    if (f < 1 || f % 2 == 0)
        throw std::invalid_argument("ConvWeights: filter size must be odd and >= 1, got " +
                                    std::to_string(f));
}

std::string ConvWeights::shape_string() const {
    return std::to_string(out_channels) + "x" + std::to_string(in_channels) + "x" +
           std::to_string(filter_size) + "x" + std::to_string(filter_size);
}

int conv_output_extent(int input_extent, int filter_size) {
    const int out = input_extent - filter_size + 1;
    if (out <= 0)
        throw std::invalid_argument("valid convolution output extent would be " +
                                    std::to_string(out) + " (input " +
                                    std::to_string(input_extent) + ", filter " +
                                    std::to_string(filter_size) + ")");
    return out;
}

void conv_valid_forward_into(const FeatureStack& input, const ConvWeights& w, FeatureStack& out,
                             std::vector<double>* col_cache) {
    check_forward_shapes(input, w);
    const int f = w.filter_size;
    const int oh = conv_output_extent(input.height, f);
    const int ow = conv_output_extent(input.width, f);
    const int kdim = w.in_channels * f * f;

    out.channels = w.out_channels;
    out.height = oh;
    out.width = ow;
    out.data.resize(static_cast<std::size_t>(w.out_channels) * oh * ow);
    for (int oc = 0; oc < w.out_channels; ++oc) {
        double* dst = out.channel(oc);
        std::fill(dst, dst + out.plane_size(), w.bias[oc]);
    }
    if (col_cache != nullptr) col_cache->clear();

    if (f == 1) {
        // 1x1 kernels need no patch matrix; the input already is one.
        detail::dgemm_nn(w.out_channels, oh * ow, kdim, w.weights.data(), kdim, input.data.data(),
                         oh * ow, out.data.data(), oh * ow);
        return;
    }

    auto& s = scratch();
    const int band = rows_per_band(kdim, ow, oh);
    const bool cache_here = col_cache != nullptr && band >= oh;
    for (int y0 = 0; y0 < oh; y0 += band) {
        const int rows = std::min(band, oh - y0);
        const FeatureStack in_band =
            (rows == oh) ? FeatureStack() : band_view(input, y0, rows + f - 1);
        const FeatureStack& src = (rows == oh) ? input : in_band;
        const int n = rows * ow;
        std::vector<double>& col = cache_here ? *col_cache : s.col;
        col.resize(static_cast<std::size_t>(kdim) * n);
        detail::im2col(src, f, col.data());
        // C rows are strided by the full output width; band columns are a
        // contiguous slice because bands are whole output rows.
        detail::dgemm_nn(w.out_channels, n, kdim, w.weights.data(), kdim, col.data(), n,
                         out.data.data() + static_cast<std::size_t>(y0) * ow, oh * ow);
    }
}

FeatureStack conv_valid_forward(const FeatureStack& input, const ConvWeights& w) {
    FeatureStack out;
    conv_valid_forward_into(input, w, out);
    return out;
}

void relu_forward_into(const FeatureStack& x, FeatureStack& out) {
    out.channels = x.channels;
    out.height = x.height;
    out.width = x.width;
    out.data.resize(x.data.size());
    for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
}

FeatureStack relu_forward(const FeatureStack& x) {
    FeatureStack out;
    relu_forward_into(x, out);
    return out;
}

void conv_valid_backward_into(const FeatureStack& input, const ConvWeights& w,
                              const FeatureStack& grad_out, ConvWeights& grad_w,
                              FeatureStack* grad_input, bool accumulate, const double* fwd_col) {
    check_forward_shapes(input, w);
    const int f = w.filter_size;
    const int oh = conv_output_extent(input.height, f);
    const int ow = conv_output_extent(input.width, f);
    if (grad_out.channels != w.out_channels || grad_out.height != oh || grad_out.width != ow)
        throw std::invalid_argument(
            "conv_valid_backward: grad_out shape " + std::to_string(grad_out.channels) + "x" +
            std::to_string(grad_out.height) + "x" + std::to_string(grad_out.width) +
            " does not match forward output " + std::to_string(w.out_channels) + "x" +
            std::to_string(oh) + "x" + std::to_string(ow));

    const int kdim = w.in_channels * f * f;
    const int n = oh * ow;

    if (!grad_w.same_shape(w)) grad_w = ConvWeights(w.out_channels, w.in_channels, f);
    if (!accumulate) {
        std::fill(grad_w.weights.begin(), grad_w.weights.end(), 0.0);
        std::fill(grad_w.bias.begin(), grad_w.bias.end(), 0.0);
    }

    for (int oc = 0; oc < w.out_channels; ++oc) {
        const double* g = grad_out.channel(oc);
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += g[i];
        grad_w.bias[oc] += s;
    }

    auto& sc = scratch();
    const int band = rows_per_band(kdim, ow, oh);

    // d loss / d W: every path is a row of dot products over output
    // positions, grad_w[oc][k] += sum_n grad_out[oc][n] * patches[k][n].
    if (f == 1) {
        // the input itself is the patch matrix
        detail::dgemm_nt(w.out_channels, kdim, n, grad_out.data.data(), n, input.data.data(), n,
                         grad_w.weights.data(), kdim);
    } else if (fwd_col != nullptr && band >= oh) {
        detail::dgemm_nt(w.out_channels, kdim, n, grad_out.data.data(), n, fwd_col, n,
                         grad_w.weights.data(), kdim);
    } else {
        // bands accumulate in ascending output-row order, matching the
        // unbanded sum over positions
        for (int y0 = 0; y0 < oh; y0 += band) {
            const int rows = std::min(band, oh - y0);
            const FeatureStack in_band =
                (rows == oh) ? FeatureStack() : band_view(input, y0, rows + f - 1);
            const FeatureStack& src = (rows == oh) ? input : in_band;
            const int bn = rows * ow;
            sc.col.resize(static_cast<std::size_t>(kdim) * bn);
            detail::im2col(src, f, sc.col.data());
            detail::dgemm_nt(w.out_channels, kdim, bn,
                             grad_out.data.data() + static_cast<std::size_t>(y0) * ow, n,
                             sc.col.data(), bn, grad_w.weights.data(), kdim);
        }
    }

    if (grad_input == nullptr) return;

    grad_input->channels = input.channels;
    grad_input->height = input.height;
    grad_input->width = input.width;

    // d loss / d input = scatter of W^T [kdim x oc] * grad_out [oc x n]
    sc.wt.resize(static_cast<std::size_t>(kdim) * w.out_channels);
    detail::transpose(w.weights.data(), w.out_channels, kdim, sc.wt.data());
    if (f == 1) {
        grad_input->data.resize(input.data.size());
        detail::dgemm_nn(kdim, n, w.out_channels, sc.wt.data(), w.out_channels,
                         grad_out.data.data(), n, grad_input->data.data(), n,
                         /*accumulate=*/false);
        return;
    }
    grad_input->data.assign(input.data.size(), 0.0);
    for (int y0 = 0; y0 < oh; y0 += band) {
        const int rows = std::min(band, oh - y0);
        const int bn = rows * ow;
        sc.col.resize(static_cast<std::size_t>(kdim) * bn);
        detail::dgemm_nn(kdim, bn, w.out_channels, sc.wt.data(), w.out_channels,
                         grad_out.data.data() + static_cast<std::size_t>(y0) * ow, n,
                         sc.col.data(), bn, /*accumulate=*/false);
        detail::col2im_add(sc.col.data(), f, *grad_input, y0, rows);
    }
}

ConvBackward conv_valid_backward(const FeatureStack& input, const ConvWeights& w,
                                 const FeatureStack& grad_out) {
    ConvBackward r;
    conv_valid_backward_into(input, w, grad_out, r.grad_weights, &r.grad_input, false);
    return r;
}

FeatureStack relu_backward(const FeatureStack& x, const FeatureStack& grad_out) {
    if (!x.same_shape(grad_out))
        throw std::invalid_argument("relu_backward: shape mismatch");
    FeatureStack g = grad_out;
    relu_mask_inplace(x, g);
    return g;
}

void relu_mask_inplace(const FeatureStack& x, FeatureStack& g) {
    if (!x.same_shape(g)) throw std::invalid_argument("relu_backward: shape mismatch");
    for (std::size_t i = 0; i < g.data.size(); ++i)
        if (!(x.data[i] > 0.0)) g.data[i] = 0.0;
}

double mse_loss_into(const FeatureStack& pred, const FeatureStack& target,
                     FeatureStack& grad_pred) {
    if (!pred.same_shape(target))
        throw std::invalid_argument("mse_loss: pred and target shapes differ");
    grad_pred.channels = pred.channels;
    grad_pred.height = pred.height;
    grad_pred.width = pred.width;
    grad_pred.data.resize(pred.data.size());
    const double inv_n = 1.0 / static_cast<double>(pred.data.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        loss += d * d;
        grad_pred.data[i] = 2.0 * d * inv_n;
    }
    return loss * inv_n;
}

MseLoss mse_loss(const FeatureStack& pred, const FeatureStack& target) {
    MseLoss r;
    r.loss = mse_loss_into(pred, target, r.grad_pred);
    return r;
}

}  // namespace arcnn
