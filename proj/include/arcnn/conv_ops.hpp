#pragma once

#include <string>
#include <vector>

#include "arcnn/plane.hpp"

namespace arcnn {

/// One convolutional layer's filters and biases.
/// Weight layout is [out_channel][in_channel][ky][kx], row-major.
struct ConvWeights {
    int out_channels = 0;
    int in_channels = 0;
    int filter_size = 0;  // spatial support, must be odd
    std::vector<double> weights;
    std::vector<double> bias;

    ConvWeights() = default;
    ConvWeights(int out_c, int in_c, int f);

    std::size_t weights_per_filter() const {
        return static_cast<std::size_t>(in_channels) * filter_size * filter_size;
    }
    double* filter_row(int oc) { return weights.data() + oc * weights_per_filter(); }
    const double* filter_row(int oc) const { return weights.data() + oc * weights_per_filter(); }

    bool same_shape(const ConvWeights& o) const {
        return out_channels == o.out_channels && in_channels == o.in_channels &&
               filter_size == o.filter_size;
    }
    /// e.g. "64x1x9x9"
    std::string shape_string() const;
};

/// Output extent of a valid convolution, input_extent - filter_size + 1.
/// Throws std::invalid_argument when the input is smaller than the kernel.
int conv_output_extent(int input_extent, int filter_size);

/// Valid (unpadded) convolution: out[oc] = bias[oc] + sum over in-channels and
/// the f x f window of weight * input. The output shrinks by f-1 per axis.
/// col_cache, when given, receives the internal patch matrix so a following
/// backward pass can skip rebuilding it (left empty when not applicable).
FeatureStack conv_valid_forward(const FeatureStack& input, const ConvWeights& w);
void conv_valid_forward_into(const FeatureStack& input, const ConvWeights& w, FeatureStack& out,
                             std::vector<double>* col_cache = nullptr);

/// Elementwise max(0, x).
FeatureStack relu_forward(const FeatureStack& x);
void relu_forward_into(const FeatureStack& x, FeatureStack& out);

struct ConvBackward {
    FeatureStack grad_input;
    ConvWeights grad_weights;
};

/// Exact partial derivatives of a downstream scalar loss through the valid
/// convolution. grad_weights matches w's shape; grad_bias[oc] is the sum of
/// grad_out channel oc.
ConvBackward conv_valid_backward(const FeatureStack& input, const ConvWeights& w,
                                 const FeatureStack& grad_out);

/// In-place workhorse behind conv_valid_backward. Accumulates weight/bias
/// gradients into grad_w when accumulate is set, otherwise overwrites them.
/// grad_input may be null when the input gradient is not needed. fwd_col,
/// when given, is the patch matrix cached by the matching forward call.
void conv_valid_backward_into(const FeatureStack& input, const ConvWeights& w,
                              const FeatureStack& grad_out, ConvWeights& grad_w,
                              FeatureStack* grad_input, bool accumulate,
                              const double* fwd_col = nullptr);

/// grad_in = grad_out where x > 0, else 0 (subgradient 0 at exactly 0).
FeatureStack relu_backward(const FeatureStack& x, const FeatureStack& grad_out);
/// Applies the x > 0 mask to g in place.
void relu_mask_inplace(const FeatureStack& x, FeatureStack& g);

struct MseLoss {
    double loss = 0.0;
    FeatureStack grad_pred;
};

/// Squared error normalized by element count: loss = sum((pred-target)^2)/n,
/// grad_pred = 2*(pred-target)/n. Batch averaging happens in the trainer.
MseLoss mse_loss(const FeatureStack& pred, const FeatureStack& target);
double mse_loss_into(const FeatureStack& pred, const FeatureStack& target, FeatureStack& grad_pred);

}  // namespace arcnn
