#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "arcnn/jpeg_codec.hpp"
#include "arcnn/trainer.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace arcnn;

namespace {

// single-weight, single-bias network acting on a 1x1 plane
Network scalar_net(double w0, double b0) {
    Network net;
    net.arch = ArchSpec::parse("1", "1");
    ConvWeights w(1, 1, 1);
    w.weights[0] = w0;
    w.bias[0] = b0;
    net.layers = {w};
    return net;
}

SamplePair scalar_sample(double x, double t) {
    SamplePair s{Plane(1, 1, x), Plane(1, 1, t)};
    return s;
}

std::vector<ValImage> tiny_val(std::uint64_t seed) {
    const Plane clean = testsup::make_natural_image(24, 24, seed);
    return {{degrade(clean, QualityFactor(10)), clean}};
}

}  // namespace

TEST_CASE("sgd_step") {
    SUBCASE("zero-gradient batch leaves weights unchanged with zero loss") {
        Network net = scalar_net(1.0, 0.0);
        MomentumState st = MomentumState::zeros_like(net);
        TrainConfig cfg;
        cfg.backprop_budget = 1;
        const std::vector<SamplePair> batch = {scalar_sample(0.7, 0.7)};
        const double loss = sgd_step(net, batch, cfg, st);
        CHECK(loss == 0.0);
        CHECK(net.layers[0].weights[0] == 1.0);
        CHECK(net.layers[0].bias[0] == 0.0);
    }
    SUBCASE("plain SGD without momentum: w' = w - lr*g") {
        Network net = scalar_net(2.0, 0.0);
        MomentumState st = MomentumState::zeros_like(net);
        TrainConfig cfg;
        cfg.momentum = 0.0;
        cfg.lr_last = 0.5;
        cfg.backprop_budget = 1;
        // x=1, t=0: pred=2, loss=(w-0)^2, g = 2*(w*x-t)*x = 4
        const std::vector<SamplePair> batch = {scalar_sample(1.0, 0.0)};
        const double loss = sgd_step(net, batch, cfg, st);
        CHECK(loss == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(net.layers[0].weights[0] == doctest::Approx(2.0 - 0.5 * 4.0).epsilon(1e-12));
    }
    SUBCASE("two momentum steps match a hand-rolled scalar trace") {
        // quadratic objective through the 1x1 conv: f(w,b) = (w*x + b - t)^2
        const double x = 0.8, t = 0.3, lr = 0.07, m = 0.9;
        Network net = scalar_net(1.5, 0.2);
        MomentumState st = MomentumState::zeros_like(net);
        TrainConfig cfg;
        cfg.momentum = m;
        cfg.lr_last = lr;
        cfg.backprop_budget = 2;
        const std::vector<SamplePair> batch = {scalar_sample(x, t)};

        double w = 1.5, b = 0.2, vw = 0.0, vb = 0.0;
        for (int step = 0; step < 2; ++step) {
            const double err = w * x + b - t;
            const double gw = 2.0 * err * x;
            const double gb = 2.0 * err;
            vw = m * vw - lr * gw;
            vb = m * vb - lr * gb;
            w += vw;
            b += vb;
            sgd_step(net, batch, cfg, st);
        }
        CHECK(net.layers[0].weights[0] == doctest::Approx(w).epsilon(1e-12));
        CHECK(net.layers[0].bias[0] == doctest::Approx(b).epsilon(1e-12));
    }
    SUBCASE("gradients are averaged over the batch, not summed") {
        Network a = scalar_net(1.0, 0.0);
        Network b = a;
        MomentumState sa = MomentumState::zeros_like(a);
        MomentumState sb = MomentumState::zeros_like(b);
        TrainConfig cfg;
        cfg.momentum = 0.0;
        cfg.lr_last = 0.1;
        cfg.backprop_budget = 4;
        const std::vector<SamplePair> one = {scalar_sample(1.0, 0.0)};
        const std::vector<SamplePair> four(4, scalar_sample(1.0, 0.0));
        sgd_step(a, one, cfg, sa);
        sgd_step(b, four, cfg, sb);
        CHECK(a.layers[0].weights[0] == b.layers[0].weights[0]);
    }
    SUBCASE("empty batch rejected") {
        Network net = scalar_net(1.0, 0.0);
        MomentumState st = MomentumState::zeros_like(net);
        TrainConfig cfg;
        CHECK_THROWS_AS(sgd_step(net, std::vector<SamplePair>{}, cfg, st), std::invalid_argument);
    }
}

TEST_CASE("train") {
    const auto corpus = testsup::make_corpus(2, 52, 52, 3100);
    // arch 5-3-3 shrinks by 8, so targets are 24x24 crops
    const auto pairs = make_pairs(corpus, QualityFactor(10), 8);
    const auto val = tiny_val(3200);

    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.backprop_budget = 64;
    cfg.validate_every = 16;
    cfg.seed = 5;
    const ArchSpec arch = ArchSpec::parse("5-3-3", "6,4,1");

    SUBCASE("budget smaller than one batch: no steps, initial point only") {
        Network net = build_network(arch, InitScheme::gaussian, 1);
        TrainConfig small = cfg;
        small.backprop_budget = 7;
        const TrainResult r = train(net, pairs, val, small);
        CHECK(r.backprops == 0);
        REQUIRE(r.curve.size() == 1);
        CHECK(r.curve[0].backprops == 0);
        CHECK(std::isnan(r.curve[0].train_loss));
    }
    SUBCASE("budget 0 rejected") {
        Network net = build_network(arch, InitScheme::gaussian, 1);
        TrainConfig zero = cfg;
        zero.backprop_budget = 0;
        CHECK_THROWS_AS(train(net, pairs, val, zero), std::invalid_argument);
    }
    SUBCASE("backprop counter is exactly steps * batch_size; curve is increasing") {
        Network net = build_network(arch, InitScheme::gaussian, 1);
        const TrainResult r = train(net, pairs, val, cfg);
        CHECK(r.backprops == 64);  // 8 steps of 8
        REQUIRE(r.curve.size() >= 2);
        for (std::size_t i = 1; i < r.curve.size(); ++i)
            CHECK(r.curve[i].backprops > r.curve[i - 1].backprops);
        CHECK(r.curve.back().backprops == 64);
    }
    SUBCASE("fixed seed gives a bit-identical curve and final weights") {
        Network a = build_network(arch, InitScheme::gaussian, 1);
        Network b = build_network(arch, InitScheme::gaussian, 1);
        const TrainResult ra = train(a, pairs, val, cfg);
        const TrainResult rb = train(b, pairs, val, cfg);
        CHECK(curve_to_csv(ra.curve) == curve_to_csv(rb.curve));
        for (std::size_t i = 0; i < a.layers.size(); ++i) {
            CHECK(a.layers[i].weights == b.layers[i].weights);
            CHECK(a.layers[i].bias == b.layers[i].bias);
        }
    }
    SUBCASE("lr_last = 0 leaves the reconstruction layer bit-unchanged") {
        Network net = build_network(arch, InitScheme::gaussian, 2);
        const ConvWeights before = net.layers.back();
        TrainConfig frozen = cfg;
        frozen.lr_last = 0.0;
        frozen.lr_rest = 1e-3;
        train(net, pairs, val, frozen);
        CHECK(net.layers.back().weights == before.weights);
        CHECK(net.layers.back().bias == before.bias);
        CHECK(net.layers.front().weights != build_network(arch, InitScheme::gaussian, 2).layers.front().weights);
    }
    SUBCASE("loss is non-increasing on a single repeated batch at a small lr") {
        Network net = build_network(arch, InitScheme::gaussian, 3);
        MomentumState st = MomentumState::zeros_like(net);
        TrainConfig smooth;
        smooth.momentum = 0.0;
        smooth.lr_rest = 1e-5;
        smooth.lr_last = 1e-5;
        smooth.backprop_budget = 1;
        const std::vector<SamplePair> batch(pairs.begin(), pairs.begin() + 8);
        double prev = sgd_step(net, batch, smooth, st);
        for (int i = 0; i < 10; ++i) {
            const double cur = sgd_step(net, batch, smooth, st);
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
    }
    SUBCASE("the sink observes every curve point") {
        Network net = build_network(arch, InitScheme::gaussian, 1);
        std::vector<std::uint64_t> seen;
        const TrainResult r = train(net, pairs, val, cfg,
                                    [&](const CurvePoint& p, const Network&) {
                                        seen.push_back(p.backprops);
                                    });
        REQUIRE(seen.size() == r.curve.size());
        for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == r.curve[i].backprops);
    }
}

TEST_CASE("curve csv round trip") {
    std::vector<CurvePoint> curve = {{0, std::nan(""), 21.5}, {128, 0.01230000000000001, 22.75},
                                     {256, 0.009, 23.125}};
    const auto path = std::filesystem::temp_directory_path() / "arcnn_curve_test.csv";
    write_curve_csv(curve, path.string());
    const auto back = read_curve_csv(path.string());
    REQUIRE(back.size() == curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        CHECK(back[i].backprops == curve[i].backprops);
        CHECK((std::isnan(back[i].train_loss) ? std::isnan(curve[i].train_loss)
                                              : back[i].train_loss == curve[i].train_loss));
        CHECK(back[i].val_psnr == curve[i].val_psnr);
    }
    std::filesystem::remove(path);

    CHECK_THROWS_AS(read_curve_csv("/nonexistent.csv"), std::runtime_error);
}

TEST_CASE("compare_curves and crossings") {
    const std::vector<CurvePoint> a = {{0, 0, 20.0}, {100, 0, 24.0}, {200, 0, 26.0}};
    SUBCASE("identical curves tie everywhere") {
        const CurveComparison c = compare_curves(a, a);
        CHECK(c.ties == static_cast<int>(c.checkpoints.size()));
        CHECK(c.wins_a == 0);
        CHECK(c.wins_b == 0);
    }
    SUBCASE("a uniform +0.5 dB offset dominates at every checkpoint") {
        std::vector<CurvePoint> b = a;
        for (auto& p : b) p.val_psnr += 0.5;
        const CurveComparison c = compare_curves(b, a);
        CHECK(c.wins_a == static_cast<int>(c.checkpoints.size()));
        CHECK(c.wins_b == 0);
    }
    SUBCASE("interpolated checkpoints from both grids") {
        const std::vector<CurvePoint> b = {{0, 0, 19.0}, {150, 0, 25.5}, {200, 0, 25.8}};
        const CurveComparison c = compare_curves(a, b);
        REQUIRE(c.checkpoints.size() == 4);  // union grid {0, 100, 150, 200}
        CHECK(c.checkpoints[2].backprops == 150);
        CHECK(c.checkpoints[2].psnr_a == doctest::Approx(25.0));
    }
    SUBCASE("first crossing interpolates linearly and handles never-crossing") {
        CHECK(first_crossing(a, 20.0) == 0.0);
        CHECK(first_crossing(a, 25.0) == doctest::Approx(150.0));
        CHECK(std::isinf(first_crossing(a, 26.5)));
    }
}

TEST_CASE("divergence raises instead of streaming NaNs") {
    Network net = scalar_net(1e200, 0.0);
    MomentumState st = MomentumState::zeros_like(net);
    TrainConfig cfg;
    cfg.backprop_budget = 1;
    const std::vector<SamplePair> batch = {scalar_sample(1e200, 0.0)};
    CHECK_THROWS_WITH_AS(sgd_step(net, batch, cfg, st), doctest::Contains("diverged"),
                         std::runtime_error);
}
