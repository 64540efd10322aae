#include "arcnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "arcnn/metrics.hpp"
#include "arcnn/restore.hpp"
#include "arcnn/rng.hpp"

namespace arcnn {

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (lr_last < 0.0 || lr_rest < 0.0)
        throw std::invalid_argument("TrainConfig: learning rates must not be negative");
    if (momentum < 0.0 || momentum >= 1.0)
        throw std::invalid_argument("TrainConfig: momentum must be in [0,1)");
    if (backprop_budget == 0) throw std::invalid_argument("TrainConfig: backprop budget is 0");
    if (validate_every == 0) throw std::invalid_argument("TrainConfig: validate_every is 0");
}

MomentumState MomentumState::zeros_like(const Network& net) {
    MomentumState s;
    for (const auto& l : net.layers)
        s.velocity.emplace_back(l.out_channels, l.in_channels, l.filter_size);
    return s;
}

double sgd_step(Network& net, std::span<const SamplePair> batch, const TrainConfig& cfg,
                MomentumState& state) {
    if (batch.empty()) throw std::invalid_argument("sgd_step: empty batch");
    if (state.velocity.size() != net.layers.size())
        throw std::invalid_argument("sgd_step: momentum state does not match network");

    thread_local ForwardTape tape;
    thread_local FeatureStack target, grad_pred;
    thread_local std::vector<ConvWeights> grad_sum;

    grad_sum.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!grad_sum[i].same_shape(net.layers[i]))
            grad_sum[i] = ConvWeights(net.layers[i].out_channels, net.layers[i].in_channels,
                                      net.layers[i].filter_size);
        std::fill(grad_sum[i].weights.begin(), grad_sum[i].weights.end(), 0.0);
        std::fill(grad_sum[i].bias.begin(), grad_sum[i].bias.end(), 0.0);
    }

    double loss_sum = 0.0;
    for (const SamplePair& sample : batch) {
        const FeatureStack input = FeatureStack::from_plane(sample.input);
        const FeatureStack& pred = forward(net, input, tape);
        target.channels = 1;
        target.height = sample.target.height;
        target.width = sample.target.width;
        target.data = sample.target.data;
        loss_sum += mse_loss_into(pred, target, grad_pred);
        backward(net, tape, grad_pred, grad_sum, /*accumulate=*/true);
    }
    if (!std::isfinite(loss_sum))
        throw std::runtime_error(
            "sgd_step: training diverged (non-finite loss); lower the learning rate");

    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    const std::size_t last = net.layers.size() - 1;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const double lr = (i == last ? cfg.lr_last : cfg.lr_rest);
        ConvWeights& w = net.layers[i];
        ConvWeights& v = state.velocity[i];
        const ConvWeights& g = grad_sum[i];
        for (std::size_t j = 0; j < w.weights.size(); ++j) {
            v.weights[j] = cfg.momentum * v.weights[j] - lr * g.weights[j] * inv_batch;
            w.weights[j] += v.weights[j];
        }
        for (std::size_t j = 0; j < w.bias.size(); ++j) {
            v.bias[j] = cfg.momentum * v.bias[j] - lr * g.bias[j] * inv_batch;
            w.bias[j] += v.bias[j];
        }
    }
    return loss_sum * inv_batch;
}

double validation_psnr(const Network& net, const std::vector<ValImage>& val_images) {
    if (val_images.empty()) throw std::invalid_argument("validation_psnr: no images");
    double sum = 0.0;
    for (const auto& v : val_images) sum += psnr(v.clean, restore_image(net, v.degraded));
    return sum / static_cast<double>(val_images.size());
}

TrainResult train(Network& net, const std::vector<SamplePair>& train_pairs,
                  const std::vector<ValImage>& val_images, const TrainConfig& cfg,
                  const TrainLogSink& sink) {
    cfg.validate();
    if (train_pairs.empty()) throw std::invalid_argument("train: no training pairs");
    if (val_images.empty()) throw std::invalid_argument("train: no validation images");

    TrainResult result;
    auto log_point = [&](double loss) {
        const CurvePoint p{result.backprops, loss, validation_psnr(net, val_images)};
        result.curve.push_back(p);
        if (sink) sink(p, net);
    };

    log_point(std::numeric_limits<double>::quiet_NaN());

    const std::uint64_t batch = static_cast<std::uint64_t>(cfg.batch_size);
    if (train_pairs.size() < batch || cfg.backprop_budget < batch) return result;

    MomentumState state = MomentumState::zeros_like(net);
    Rng shuffle_rng(cfg.seed, "shuffle");
    std::vector<std::uint32_t> order(train_pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);

    std::vector<SamplePair> batch_buf(cfg.batch_size);
    std::size_t pos = order.size();  // forces an initial shuffle
    std::uint64_t last_validation = 0;
    double last_loss = 0.0;

    while (result.backprops + batch <= cfg.backprop_budget) {
        if (pos + batch > order.size()) {
            // epoch boundary: reshuffle, drop the ragged remainder so every
            // step sees exactly batch_size samples
            shuffle_rng.shuffle(order);
            pos = 0;
        }
        for (int i = 0; i < cfg.batch_size; ++i) batch_buf[i] = train_pairs[order[pos + i]];
        pos += batch;

        last_loss = sgd_step(net, batch_buf, cfg, state);
        result.backprops += batch;

        const bool budget_done = result.backprops + batch > cfg.backprop_budget;
        if (result.backprops - last_validation >= cfg.validate_every || budget_done) {
            last_validation = result.backprops;
            log_point(last_loss);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Curve utilities

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
    std::string out = "backprops,train_loss,val_psnr\n";
    char buf[96];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof(buf), "%llu,%.17g,%.17g\n",
                      static_cast<unsigned long long>(p.backprops), p.train_loss, p.val_psnr);
        out += buf;
    }
    return out;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open curve CSV for writing: " + path);
    out << curve_to_csv(curve);
    if (!out) throw std::runtime_error("curve CSV write failed: " + path);
}

std::vector<CurvePoint> read_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open curve CSV: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("backprops,", 0) != 0)
        throw std::runtime_error("not a curve CSV (missing header): " + path);
    std::vector<CurvePoint> curve;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        CurvePoint p;
        char* end = nullptr;
        p.backprops = std::strtoull(line.c_str(), &end, 10);
        if (end == nullptr || *end != ',')
            throw std::runtime_error("malformed curve CSV row: " + line);
        const char* s = end + 1;
        p.train_loss = std::strtod(s, &end);
        if (end == s || *end != ',') throw std::runtime_error("malformed curve CSV row: " + line);
        s = end + 1;
        p.val_psnr = std::strtod(s, &end);
        if (end == s) throw std::runtime_error("malformed curve CSV row: " + line);
        if (!curve.empty() && p.backprops <= curve.back().backprops)
            throw std::runtime_error("curve CSV backprops not increasing: " + path);
        curve.push_back(p);
    }
    if (curve.empty()) throw std::runtime_error("curve CSV has no data rows: " + path);
    return curve;
}

double interpolate_psnr(const std::vector<CurvePoint>& curve, std::uint64_t backprops) {
    if (curve.empty()) throw std::invalid_argument("interpolate_psnr: empty curve");
    if (backprops <= curve.front().backprops) return curve.front().val_psnr;
    if (backprops >= curve.back().backprops) return curve.back().val_psnr;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (backprops <= curve[i].backprops) {
            const auto& lo = curve[i - 1];
            const auto& hi = curve[i];
            const double t = static_cast<double>(backprops - lo.backprops) /
                             static_cast<double>(hi.backprops - lo.backprops);
            return lo.val_psnr + t * (hi.val_psnr - lo.val_psnr);
        }
    }
    return curve.back().val_psnr;
}

double first_crossing(const std::vector<CurvePoint>& curve, double target_psnr) {
    if (curve.empty()) throw std::invalid_argument("first_crossing: empty curve");
    if (curve.front().val_psnr >= target_psnr)
        return static_cast<double>(curve.front().backprops);
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i].val_psnr >= target_psnr) {
            const auto& lo = curve[i - 1];
            const auto& hi = curve[i];
            const double t = (target_psnr - lo.val_psnr) / (hi.val_psnr - lo.val_psnr);
            return static_cast<double>(lo.backprops) +
                   t * static_cast<double>(hi.backprops - lo.backprops);
        }
    }
    return std::numeric_limits<double>::infinity();
}

CurveComparison compare_curves(const std::vector<CurvePoint>& a,
                               const std::vector<CurvePoint>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("compare_curves: empty curve");
    const std::uint64_t lo = std::max(a.front().backprops, b.front().backprops);
    const std::uint64_t hi = std::min(a.back().backprops, b.back().backprops);

    std::vector<std::uint64_t> grid;
    for (const auto& p : a)
        if (p.backprops >= lo && p.backprops <= hi) grid.push_back(p.backprops);
    for (const auto& p : b)
        if (p.backprops >= lo && p.backprops <= hi) grid.push_back(p.backprops);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    CurveComparison cmp;
    for (std::uint64_t bp : grid) {
        CurveCheckpointCmp c;
        c.backprops = bp;
        c.psnr_a = interpolate_psnr(a, bp);
        c.psnr_b = interpolate_psnr(b, bp);
        c.leader = c.psnr_a > c.psnr_b ? 1 : (c.psnr_a < c.psnr_b ? -1 : 0);
        if (c.leader > 0)
            ++cmp.wins_a;
        else if (c.leader < 0)
            ++cmp.wins_b;
        else
            ++cmp.ties;
        cmp.checkpoints.push_back(c);
    }
    return cmp;
}

}  // namespace arcnn
