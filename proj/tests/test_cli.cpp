#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "arcnn/jpeg_codec.hpp"
#include "arcnn/network.hpp"
#include "arcnn/pgm.hpp"
#include "arcnn/trainer.hpp"
#include "support/synthetic.hpp"

// End-to-end checks of the installed command-line surface; each case drives
// the real binary through std::system.

#ifndef ARCNN_CLI_PATH
#error "ARCNN_CLI_PATH must point at the arcnn binary"
#endif

using namespace arcnn;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string stdout_text;
};

CliResult run_cli(const std::string& args) {
    const fs::path out = fs::temp_directory_path() / "arcnn_cli_stdout.txt";
    const std::string cmd = std::string(ARCNN_CLI_PATH) + " " + args + " > " + out.string() +
                            " 2> " + out.string() + ".err";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    r.stdout_text = ss.str();
    return r;
}

struct TempTree {
    fs::path root;
    explicit TempTree(const char* name) : root(fs::temp_directory_path() / name) {
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~TempTree() { fs::remove_all(root); }
    std::string sub(const char* name) const {
        fs::create_directories(root / name);
        return (root / name).string();
    }
    std::string file(const char* name) const { return (root / name).string(); }
};

void write_corpus(const std::string& dir, int count, int h, int w, std::uint64_t seed) {
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "img%02d.pgm", i);
        write_pgm(testsup::make_natural_image(h, w, seed + i), (fs::path(dir) / name).string());
    }
}

}  // namespace

TEST_CASE("cli exit codes") {
    TempTree tree("arcnn_cli_codes");
    SUBCASE("usage errors exit 2") {
        CHECK(run_cli("degrade --in x --out y --quality 0").exit_code == 2);
        CHECK(run_cli("nonsense").exit_code == 2);
        CHECK(run_cli("train --data d --quality 10 --budget 0 --out r").exit_code == 2);
        CHECK(run_cli("degrade --in x").exit_code == 2);
    }
    SUBCASE("runtime errors exit 1") {
        CHECK(run_cli("degrade --in /nonexistent_dir_42 --out " + tree.sub("o") +
                      " --quality 10")
                  .exit_code == 1);
        CHECK(run_cli("restore --ckpt /nonexistent.arcn --in " + tree.sub("i") + " --out " +
                      tree.sub("o2"))
                  .exit_code == 1);
    }
    SUBCASE("help exits 0") {
        CHECK(run_cli("--help").exit_code == 0);
        CHECK(run_cli("train --help").exit_code == 0);
    }
}

TEST_CASE("cli degrade") {
    TempTree tree("arcnn_cli_degrade");
    const std::string in = tree.sub("in"), out = tree.sub("out");

    SUBCASE("empty directory degrades zero files and exits 0") {
        const CliResult r = run_cli("degrade --in " + in + " --out " + out + " --quality 10");
        CHECK(r.exit_code == 0);
        CHECK(r.stdout_text.find("degraded 0") != std::string::npos);
    }
    SUBCASE("writes one degraded file per input, deterministically") {
        write_corpus(in, 2, 48, 48, 7000);
        CHECK(run_cli("degrade --in " + in + " --out " + out + " --quality 10").exit_code == 0);
        CHECK(fs::exists(fs::path(out) / "img00.pgm"));
        CHECK(fs::exists(fs::path(out) / "img01.pgm"));
        const Plane once = read_pgm((fs::path(out) / "img00.pgm").string());
        CHECK(run_cli("degrade --in " + in + " --out " + out + " --quality 10").exit_code == 0);
        CHECK(read_pgm((fs::path(out) / "img00.pgm").string()).data == once.data);
        // matches the library path
        const Plane direct = degrade(read_pgm((fs::path(in) / "img00.pgm").string()),
                                     QualityFactor(10));
        double max_diff = 0;
        for (std::size_t i = 0; i < direct.size(); ++i)
            max_diff = std::max(max_diff, std::fabs(direct.data[i] - once.data[i]));
        CHECK(max_diff <= 1.0 / 255.0);  // one 8-bit write/read round trip
    }
}

TEST_CASE("cli evaluate") {
    TempTree tree("arcnn_cli_eval");
    const std::string ref = tree.sub("ref");
    write_corpus(ref, 2, 40, 40, 7100);

    SUBCASE("self-comparison reports the capped PSNR and SSIM 1") {
        const CliResult r = run_cli("evaluate --ref " + ref + " --test " + ref);
        CHECK(r.exit_code == 0);
        CHECK(r.stdout_text.find("image,psnr,ssim,psnr_b") != std::string::npos);
        CHECK(r.stdout_text.find("img00.pgm,100.0000,1.000000,") != std::string::npos);
        CHECK(r.stdout_text.find("mean,100.0000,1.000000,") != std::string::npos);
    }
    SUBCASE("mismatched file sets are listed") {
        const std::string test = tree.sub("test");
        write_corpus(test, 1, 40, 40, 7100);
        const CliResult r = run_cli("evaluate --ref " + ref + " --test " + test);
        CHECK(r.exit_code == 1);
    }
}

TEST_CASE("cli train, restore, compare-curves") {
    TempTree tree("arcnn_cli_train");
    const std::string data = tree.sub("data");
    write_corpus(data, 4, 48, 48, 7200);
    const std::string run1 = tree.file("run1");

    // tiny run: arch 5-3-3 shrinks by 8 so 48x48 images give 9 sub-images each
    const std::string train_args =
        " --data " + data +
        " --quality 10 --arch 5-3-3 --channels 6,4,1 --budget 64 --batch 8"
        " --validate-every 32 --seed 3 --init he --val-fraction 0.25 --out ";
    const CliResult t1 = run_cli("train" + train_args + run1);
    CHECK(t1.exit_code == 0);
    CHECK(fs::exists(fs::path(run1) / "config.txt"));
    CHECK(fs::exists(fs::path(run1) / "curve.csv"));
    CHECK(fs::exists(fs::path(run1) / "final.arcn"));
    CHECK(fs::exists(fs::path(run1) / "ckpt_64.arcn"));

    SUBCASE("config snapshot records the full setup") {
        std::ifstream in(fs::path(run1) / "config.txt");
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string cfg = ss.str();
        CHECK(cfg.find("command=train") != std::string::npos);
        CHECK(cfg.find("arch=5-3-3") != std::string::npos);
        CHECK(cfg.find("channels=6,4,1") != std::string::npos);
        CHECK(cfg.find("budget=64") != std::string::npos);
        CHECK(cfg.find("seed=3") != std::string::npos);
    }
    SUBCASE("same seed reproduces the curve bit for bit") {
        const std::string run2 = tree.file("run2");
        CHECK(run_cli("train" + train_args + run2).exit_code == 0);
        std::ifstream a(fs::path(run1) / "curve.csv"), b(fs::path(run2) / "curve.csv");
        const std::string ca((std::istreambuf_iterator<char>(a)), {});
        const std::string cb((std::istreambuf_iterator<char>(b)), {});
        CHECK(ca == cb);
        CHECK(!ca.empty());
    }
    SUBCASE("restore consumes the checkpoint and preserves names") {
        const std::string deg = tree.sub("deg"), rest = tree.sub("rest");
        CHECK(run_cli("degrade --in " + data + " --out " + deg + " --quality 10").exit_code == 0);
        const CliResult r = run_cli("restore --ckpt " + run1 + "/final.arcn --in " + deg +
                                    " --out " + rest);
        CHECK(r.exit_code == 0);
        CHECK(r.stdout_text.find("restored 4") != std::string::npos);
        CHECK(fs::exists(fs::path(rest) / "img03.pgm"));
    }
    SUBCASE("restore with a reference directory emits the side-by-side metrics CSV") {
        const std::string deg = tree.sub("deg2"), rest = tree.sub("rest2");
        const std::string csv = tree.file("side.csv");
        CHECK(run_cli("degrade --in " + data + " --out " + deg + " --quality 10").exit_code == 0);
        const CliResult r = run_cli("restore --ckpt " + run1 + "/final.arcn --in " + deg +
                                    " --out " + rest + " --ref " + data + " --metrics-out " + csv);
        CHECK(r.exit_code == 0);
        std::ifstream in(csv);
        std::string header;
        std::getline(in, header);
        CHECK(header == "image,psnr,ssim,psnr_b");
        int rows = 0;
        for (std::string line; std::getline(in, line);)
            if (!line.empty()) ++rows;
        CHECK(rows == 5);  // 4 images + mean
    }
    SUBCASE("transfer training rejects mismatched shapes with both shapes named") {
        const std::string run3 = tree.file("run3");
        const CliResult r = run_cli(
            "train --data " + data +
            " --quality 10 --arch 9-3-3 --channels 6,4,1 --budget 64 --batch 8 --out " + run3 +
            " --transfer " + run1 + "/final.arcn --layers 1");
        CHECK(r.exit_code == 2);
    }
    SUBCASE("transfer training copies the requested prefix") {
        const std::string run4 = tree.file("run4");
        const CliResult r = run_cli("train" + train_args + run4 + " --transfer " + run1 +
                                    "/final.arcn --layers 2");
        CHECK(r.exit_code == 0);
        const Network base = load_checkpoint(run1 + "/final.arcn").net;
        // the run-4 initial checkpoint is not saved, but layer 1 of the final
        // model still descends from the base; just verify the run completed
        // and produced a loadable model of the same shape
        const Network transferred = load_checkpoint(run4 + "/final.arcn").net;
        CHECK(transferred.shape_matches(base));
    }
    SUBCASE("compare-curves of a run against itself reports ties everywhere") {
        const CliResult r = run_cli("compare-curves --a " + run1 + "/curve.csv --b " + run1 +
                                    "/curve.csv");
        CHECK(r.exit_code == 0);
        CHECK(r.stdout_text.find("a leads at 0, b leads at 0, ties at") != std::string::npos);
    }
}

TEST_CASE("cli prepare feeds train through the sample cache") {
    TempTree tree("arcnn_cli_prepare");
    const std::string data = tree.sub("data");
    write_corpus(data, 4, 48, 48, 7300);
    const std::string cache = tree.file("samples.bin");
    const CliResult p = run_cli("prepare --data " + data +
                                " --quality 10 --shrinkage 8 --out " + cache +
                                " --seed 3 --val-fraction 0.25");
    CHECK(p.exit_code == 0);
    CHECK(fs::exists(cache));
    CHECK(read_sample_cache(cache).front().target.height == 24);  // 32 - 8

    const std::string run = tree.file("run");
    const CliResult t = run_cli("train --data " + data +
                                " --quality 10 --arch 5-3-3 --channels 6,4,1 --budget 64"
                                " --batch 8 --seed 3 --val-fraction 0.25 --cache " + cache +
                                " --out " + run);
    CHECK(t.exit_code == 0);

    SUBCASE("shrinkage mismatch against the arch is a runtime error") {
        const CliResult bad = run_cli("train --data " + data +
                                      " --quality 10 --arch 9-7-1-5 --channels 4,3,2,1"
                                      " --budget 64 --batch 8 --cache " + cache + " --out " +
                                      tree.file("run_bad"));
        CHECK(bad.exit_code == 1);
    }
}
