#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "arcnn/pgm.hpp"
#include "arcnn/restore.hpp"
#include "arcnn/rng.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace arcnn;
namespace fs = std::filesystem;

namespace {

Plane shift_right(const Plane& p, int dx) {
    Plane out(p.height, p.width, 0.0);
    for (int y = 0; y < p.height; ++y)
        for (int x = dx; x < p.width; ++x) out.at(y, x) = p.at(y, x - dx);
    return out;
}

}  // namespace

TEST_CASE("restore_image") {
    SUBCASE("unit 1x1 network returns the input exactly") {
        Network net;
        net.arch = ArchSpec::parse("1", "1");
        ConvWeights w(1, 1, 1);
        w.weights[0] = 1.0;
        net.layers = {w};
        const Plane y = testsup::make_natural_image(20, 28, 70);
        CHECK(restore_image(net, y).data == y.data);
    }
    SUBCASE("output size equals input size for any network and input") {
        const Network net =
            build_network(ArchSpec::parse("9-7-1-5", "6,5,4,1"), InitScheme::he, 71);
        for (const auto& [h, w] : {std::pair{1, 1}, {5, 7}, {19, 3}, {40, 33}}) {
            const Plane y = testsup::make_natural_image(h, w, 72 + h + w);
            const Plane out = restore_image(net, y);
            CHECK(out.height == h);
            CHECK(out.width == w);
        }
    }
    SUBCASE("output clamped to [0,1]") {
        Network net = build_network(ArchSpec::parse("3-3", "4,1"), InitScheme::he, 73);
        for (double& v : net.layers[1].weights) v *= 30.0;  // force excursions
        const Plane y = testsup::make_natural_image(24, 24, 74);
        for (double v : restore_image(net, y).data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    SUBCASE("shift consistency away from the border band") {
        // restoring a shifted image equals shifting the restored image,
        // except inside the padding-influenced border band
        const Network net =
            build_network(ArchSpec::parse("5-3-3", "6,4,1"), InitScheme::he, 75);
        const int shrink = net.total_shrinkage();  // 8
        const int dx = 3;
        const Plane y = testsup::make_natural_image(40, 48, 76);
        const Plane a = restore_image(net, shift_right(y, dx));
        const Plane b = restore_image(net, y);
        for (int yy = shrink; yy < y.height - shrink; ++yy)
            for (int xx = shrink + dx; xx < y.width - shrink; ++xx)
                CHECK(std::fabs(a.at(yy, xx) - b.at(yy, xx - dx)) < 1e-6);
    }
    SUBCASE("zero padding differs from replicate only near the border") {
        const Network net =
            build_network(ArchSpec::parse("5-3-3", "6,4,1"), InitScheme::he, 77);
        const int shrink = net.total_shrinkage();
        const Plane y = testsup::make_natural_image(32, 32, 78);
        const Plane rep = restore_image(net, y, PadMode::replicate);
        const Plane zero = restore_image(net, y, PadMode::zero);
        for (int yy = shrink; yy < y.height - shrink; ++yy)
            for (int xx = shrink; xx < y.width - shrink; ++xx)
                CHECK(rep.at(yy, xx) == zero.at(yy, xx));
        CHECK(rep.data != zero.data);
    }
}

TEST_CASE("restore_batch") {
    const Network net = build_network(ArchSpec::parse("3-1", "3,1"), InitScheme::he, 80);
    const fs::path in_dir = fs::temp_directory_path() / "arcnn_restore_in";
    const fs::path out_dir = fs::temp_directory_path() / "arcnn_restore_out";
    fs::remove_all(in_dir);
    fs::remove_all(out_dir);
    fs::create_directories(in_dir);

    SUBCASE("empty directory restores nothing") {
        CHECK(restore_batch(net, in_dir.string(), out_dir.string()) == 0);
    }
    SUBCASE("three valid files produce three outputs with matching names") {
        for (int i = 0; i < 3; ++i)
            write_pgm(testsup::make_natural_image(16, 16, 81 + i),
                      (in_dir / ("img" + std::to_string(i) + ".pgm")).string());
        CHECK(restore_batch(net, in_dir.string(), out_dir.string()) == 3);
        for (int i = 0; i < 3; ++i)
            CHECK(fs::exists(out_dir / ("img" + std::to_string(i) + ".pgm")));
    }
    SUBCASE("corrupt files are skipped, valid ones still restored") {
        write_pgm(testsup::make_natural_image(16, 16, 84), (in_dir / "a.pgm").string());
        write_pgm(testsup::make_natural_image(16, 16, 85), (in_dir / "b.pgm").string());
        std::ofstream(in_dir / "broken.pgm") << "P5\n10 10\n255\nnope";
        CHECK(restore_batch(net, in_dir.string(), out_dir.string()) == 2);
        CHECK(fs::exists(out_dir / "a.pgm"));
        CHECK(fs::exists(out_dir / "b.pgm"));
        CHECK_FALSE(fs::exists(out_dir / "broken.pgm"));
    }
    SUBCASE("missing input directory reported") {
        CHECK_THROWS_AS(restore_batch(net, (in_dir / "nope").string(), out_dir.string()),
                        std::runtime_error);
    }

    fs::remove_all(in_dir);
    fs::remove_all(out_dir);
}
