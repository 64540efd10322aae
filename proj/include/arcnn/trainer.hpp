#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "arcnn/dataset.hpp"
#include "arcnn/network.hpp"

namespace arcnn {

struct TrainConfig {
    int batch_size = 128;
    double lr_last = 1e-5;   // reconstruction layer learns slower
    double lr_rest = 1e-4;
    double momentum = 0.9;
    std::uint64_t backprop_budget = 0;  // total per-sample gradient computations
    std::uint64_t validate_every = 10000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One convergence-curve entry. backprops counts cumulative per-sample
/// gradients; val_psnr is the mean full-image PSNR over the validation set.
struct CurvePoint {
    std::uint64_t backprops = 0;
    double train_loss = 0.0;
    double val_psnr = 0.0;
};

/// Validation item: the degraded full image the network sees and the clean
/// ground truth it is scored against.
struct ValImage {
    Plane degraded;
    Plane clean;
};

/// Per-layer momentum buffers, shaped like the network's weights.
struct MomentumState {
    std::vector<ConvWeights> velocity;

    static MomentumState zeros_like(const Network& net);
};

/// One minibatch update: averages gradients over the batch, then per layer
/// v = momentum*v - lr*g and w += v, with lr_last on the final layer and
/// lr_rest elsewhere. Returns the batch loss measured before the update.
double sgd_step(Network& net, std::span<const SamplePair> batch, const TrainConfig& cfg,
                MomentumState& state);

using TrainLogSink = std::function<void(const CurvePoint&, const Network&)>;

struct TrainResult {
    std::vector<CurvePoint> curve;
    std::uint64_t backprops = 0;  // equals steps * batch_size exactly
};

/// Runs minibatch SGD until the backprop budget is exhausted, validating
/// every validate_every backprops (and at the start and end). Samples are
/// reshuffled each epoch from the config seed; the whole run is
/// deterministic. The sink, when set, observes every curve point as it is
/// logged.
TrainResult train(Network& net, const std::vector<SamplePair>& train_pairs,
                  const std::vector<ValImage>& val_images, const TrainConfig& cfg,
                  const TrainLogSink& sink = {});

/// Mean full-image PSNR of restored validation images against ground truth.
double validation_psnr(const Network& net, const std::vector<ValImage>& val_images);

// --- convergence curve utilities -------------------------------------------

std::string curve_to_csv(const std::vector<CurvePoint>& curve);
void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path);
std::vector<CurvePoint> read_curve_csv(const std::string& path);

/// Linear interpolation of val_psnr at a backprop count inside the curve's
/// range (clamped at the ends).
double interpolate_psnr(const std::vector<CurvePoint>& curve, std::uint64_t backprops);

/// Earliest backprop count at which the curve reaches target_psnr, linearly
/// interpolated between points; +infinity when it never does.
double first_crossing(const std::vector<CurvePoint>& curve, double target_psnr);

struct CurveCheckpointCmp {
    std::uint64_t backprops = 0;
    double psnr_a = 0.0;
    double psnr_b = 0.0;
    int leader = 0;  // +1 when a leads, -1 when b leads, 0 on an exact tie
};

struct CurveComparison {
    std::vector<CurveCheckpointCmp> checkpoints;  // union grid over the overlap
    int wins_a = 0;
    int wins_b = 0;
    int ties = 0;
};

CurveComparison compare_curves(const std::vector<CurvePoint>& a,
                               const std::vector<CurvePoint>& b);

}  // namespace arcnn
