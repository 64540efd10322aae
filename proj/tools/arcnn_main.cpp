// Command-line front end for the artifacts-reduction pipeline: JPEG-style
// degradation, training-set preparation, model training (from scratch or
// transfer-initialized), full-image restoration, metric evaluation and
// convergence-curve comparison.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "arcnn/dataset.hpp"
#include "arcnn/jpeg_codec.hpp"
#include "arcnn/metrics.hpp"
#include "arcnn/network.hpp"
#include "arcnn/pgm.hpp"
#include "arcnn/restore.hpp"
#include "arcnn/trainer.hpp"

namespace fs = std::filesystem;
using namespace arcnn;

namespace {

struct DegradeArgs {
    std::string in_dir, out_dir;
    int quality = 10;
    int realuse_width = 0;
};

struct PrepareArgs {
    std::string data_dir, out_file;
    int quality = 10;
    int size = 32, stride = 10, shrinkage = 18;
    std::uint64_t seed = 0;
    double val_fraction = 0.2;
};

struct TrainArgs {
    std::string data_dir, out_dir, arch = "9-7-1-5", channels, init = "gaussian";
    std::string transfer_ckpt, cache_file;
    int quality = 10;
    int transfer_layers = 0;
    int realuse_width = 0;
    std::uint64_t budget = 0;
    double val_fraction = 0.2;
    TrainConfig cfg;
};

struct RestoreArgs {
    std::string ckpt, in_dir, out_dir, ref_dir, metrics_out;
};

struct EvaluateArgs {
    std::string ref_dir, test_dir, out_file;
};

struct CompareArgs {
    std::string csv_a, csv_b;
    double target = std::nan("");
};

std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Plane degrade_for_task(const Plane& clean, QualityFactor q, int realuse_width) {
    return realuse_width > 0 ? degrade_realuse(clean, realuse_width, q) : degrade(clean, q);
}

int cmd_degrade(const DegradeArgs& a) {
    const QualityFactor q(a.quality);
    fs::create_directories(a.out_dir);
    int count = 0;
    for (const auto& path : list_pgm_files(a.in_dir)) {
        const Plane img = read_pgm(path.string());
        const Plane out = degrade_for_task(img, q, a.realuse_width);
        write_pgm(out, (fs::path(a.out_dir) / path.filename()).string());
        ++count;
    }
    std::cout << "degraded " << count << " image(s) at q=" << a.quality << "\n";
    return 0;
}

std::vector<Plane> load_corpus(const std::string& dir) {
    std::vector<Plane> images;
    for (const auto& path : list_pgm_files(dir)) images.push_back(read_pgm(path.string()));
    if (images.empty()) throw std::runtime_error("no .pgm images in " + dir);
    return images;
}

int cmd_prepare(const PrepareArgs& a) {
    const QualityFactor q(a.quality);
    const auto split = split_train_val(load_corpus(a.data_dir), a.seed, a.val_fraction);
    const auto pairs = make_pairs(split.first, q, a.shrinkage, a.size, a.stride);
    write_sample_cache(pairs, a.out_file);
    std::cout << "cached " << pairs.size() << " sample pair(s) to " << a.out_file << "\n";
    return 0;
}

void write_config_snapshot(const std::string& path,
                           const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write config snapshot: " + path);
    for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
}

int cmd_train(const TrainArgs& a) {
    const QualityFactor q(a.quality);
    const ArchSpec arch = ArchSpec::parse(a.arch, a.channels);
    const InitScheme init = parse_init_scheme(a.init);

    TrainConfig cfg = a.cfg;
    cfg.backprop_budget = a.budget;

    const auto images = load_corpus(a.data_dir);
    const auto split = split_train_val(images, cfg.seed, a.val_fraction);
    if (split.second.empty())
        throw std::runtime_error("validation split is empty; add images or raise --val-fraction");

    const int shrink = arch.total_shrinkage();
    std::vector<SamplePair> pairs;
    if (!a.cache_file.empty()) {
        pairs = read_sample_cache(a.cache_file);
        const int want = pairs.front().input.height - shrink;
        if (pairs.front().target.height != want)
            throw std::runtime_error("cached targets are " +
                                     std::to_string(pairs.front().target.height) +
                                     "px but arch " + arch.to_string() + " needs " +
                                     std::to_string(want) + "px");
    } else {
        pairs = make_pairs_with(
            split.first, [&](const Plane& p) { return degrade_for_task(p, q, a.realuse_width); },
            shrink);
    }

    std::vector<ValImage> val;
    for (const auto& clean : split.second)
        val.push_back({degrade_for_task(clean, q, a.realuse_width), clean});

    Network net;
    if (!a.transfer_ckpt.empty()) {
        const LoadedCheckpoint base = load_checkpoint(a.transfer_ckpt);
        net = transfer_from(arch, base.net, a.transfer_layers, init, cfg.seed);
    } else {
        net = build_network(arch, init, cfg.seed);
    }

    fs::create_directories(a.out_dir);
    write_config_snapshot(
        (fs::path(a.out_dir) / "config.txt").string(),
        {{"command", "train"},
         {"data", a.data_dir},
         {"cache", a.cache_file},
         {"quality", std::to_string(a.quality)},
         {"realuse_width", std::to_string(a.realuse_width)},
         {"arch", arch.filters_string()},
         {"channels", arch.channels_string()},
         {"init", a.init},
         {"transfer", a.transfer_ckpt},
         {"transfer_layers", std::to_string(a.transfer_layers)},
         {"budget", std::to_string(cfg.backprop_budget)},
         {"batch_size", std::to_string(cfg.batch_size)},
         {"lr_rest", format_double(cfg.lr_rest)},
         {"lr_last", format_double(cfg.lr_last)},
         {"momentum", format_double(cfg.momentum)},
         {"validate_every", std::to_string(cfg.validate_every)},
         {"val_fraction", format_double(a.val_fraction)},
         {"seed", std::to_string(cfg.seed)}});

    std::ofstream curve_out((fs::path(a.out_dir) / "curve.csv").string(), std::ios::trunc);
    if (!curve_out) throw std::runtime_error("cannot write curve.csv under " + a.out_dir);
    curve_out << "backprops,train_loss,val_psnr\n";

    const auto sink = [&](const CurvePoint& p, const Network& snapshot) {
        char row[96];
        std::snprintf(row, sizeof(row), "%llu,%.17g,%.17g\n",
                      static_cast<unsigned long long>(p.backprops), p.train_loss, p.val_psnr);
        curve_out << row;
        curve_out.flush();
        save_checkpoint(snapshot, {a.quality, p.backprops},
                        (fs::path(a.out_dir) / ("ckpt_" + std::to_string(p.backprops) + ".arcn"))
                            .string());
        std::cout << "backprops " << p.backprops << "  loss "
                  << (std::isnan(p.train_loss) ? std::string("-") : format_double(p.train_loss))
                  << "  val_psnr " << format_double(p.val_psnr) << "\n";
    };

    const TrainResult result = train(net, pairs, val, cfg, sink);
    save_checkpoint(net, {a.quality, result.backprops},
                    (fs::path(a.out_dir) / "final.arcn").string());
    std::cout << "run complete: " << result.backprops << " backprops, final val PSNR "
              << format_double(result.curve.back().val_psnr) << " dB\n";
    return 0;
}

int cmd_evaluate(const EvaluateArgs& a);

int cmd_restore(const RestoreArgs& a) {
    const LoadedCheckpoint ckpt = load_checkpoint(a.ckpt);
    const int count = restore_batch(ckpt.net, a.in_dir, a.out_dir);
    std::cout << "restored " << count << " image(s)\n";
    if (!a.ref_dir.empty()) {
        EvaluateArgs ev;
        ev.ref_dir = a.ref_dir;
        ev.test_dir = a.out_dir;
        ev.out_file = a.metrics_out;
        return cmd_evaluate(ev);
    }
    return 0;
}

int cmd_evaluate(const EvaluateArgs& a) {
    std::map<std::string, fs::path> ref_files, test_files;
    for (const auto& p : list_pgm_files(a.ref_dir)) ref_files[p.filename().string()] = p;
    for (const auto& p : list_pgm_files(a.test_dir)) test_files[p.filename().string()] = p;

    std::vector<std::string> missing;
    for (const auto& [name, p] : ref_files)
        if (!test_files.count(name)) missing.push_back("missing in --test: " + name);
    for (const auto& [name, p] : test_files)
        if (!ref_files.count(name)) missing.push_back("missing in --ref: " + name);
    if (!missing.empty()) {
        std::string msg = "file sets differ:";
        for (const auto& m : missing) msg += "\n  " + m;
        throw std::runtime_error(msg);
    }
    if (ref_files.empty()) throw std::runtime_error("no .pgm images to evaluate");

    std::ostringstream csv;
    csv << "image,psnr,ssim,psnr_b\n";
    double sp = 0, ss = 0, sb = 0;
    char row[256];
    for (const auto& [name, path] : ref_files) {
        const MetricsReport r =
            evaluate_pair(read_pgm(path.string()), read_pgm(test_files[name].string()));
        std::snprintf(row, sizeof(row), "%s,%.4f,%.6f,%.4f\n", name.c_str(), r.psnr, r.ssim,
                      r.psnr_b);
        csv << row;
        sp += r.psnr;
        ss += r.ssim;
        sb += r.psnr_b;
    }
    const double n = static_cast<double>(ref_files.size());
    std::snprintf(row, sizeof(row), "mean,%.4f,%.6f,%.4f\n", sp / n, ss / n, sb / n);
    csv << row;

    if (a.out_file.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(a.out_file, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + a.out_file);
        out << csv.str();
    }
    return 0;
}

int cmd_compare_curves(const CompareArgs& a) {
    const auto curve_a = read_curve_csv(a.csv_a);
    const auto curve_b = read_curve_csv(a.csv_b);
    const CurveComparison cmp = compare_curves(curve_a, curve_b);

    std::cout << "backprops,psnr_a,psnr_b,leader\n";
    char row[128];
    for (const auto& c : cmp.checkpoints) {
        std::snprintf(row, sizeof(row), "%llu,%.4f,%.4f,%s\n",
                      static_cast<unsigned long long>(c.backprops), c.psnr_a, c.psnr_b,
                      c.leader > 0 ? "a" : (c.leader < 0 ? "b" : "tie"));
        std::cout << row;
    }
    std::cout << "summary: a leads at " << cmp.wins_a << ", b leads at " << cmp.wins_b
              << ", ties at " << cmp.ties << " of " << cmp.checkpoints.size()
              << " checkpoints\n";

    auto report_crossing = [](const char* name, const std::vector<CurvePoint>& c, double target) {
        const double bp = first_crossing(c, target);
        if (std::isinf(bp))
            std::cout << name << " never reaches " << target << " dB\n";
        else
            std::cout << name << " reaches " << target << " dB at " << format_double(bp)
                      << " backprops\n";
    };
    report_crossing("a", curve_a, std::isnan(a.target) ? curve_b.back().val_psnr : a.target);
    report_crossing("b", curve_b, std::isnan(a.target) ? curve_a.back().val_psnr : a.target);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AR-CNN style compression-artifact reduction pipeline"};
    app.require_subcommand(1);

    DegradeArgs dg;
    auto* deg = app.add_subcommand("degrade", "JPEG-degrade a directory of PGM images");
    deg->add_option("--in", dg.in_dir, "input directory of .pgm files")->required();
    deg->add_option("--out", dg.out_dir, "output directory")->required();
    deg->add_option("--quality", dg.quality, "JPEG quality factor")
        ->required()
        ->check(CLI::Range(1, 100));
    deg->add_option("--realuse-width", dg.realuse_width,
                    "rescale to this width before compressing (real-use emulation)")
        ->check(CLI::PositiveNumber);

    PrepareArgs pr;
    auto* prep = app.add_subcommand("prepare", "build and cache training sample pairs");
    prep->add_option("--data", pr.data_dir, "directory of ground-truth .pgm images")->required();
    prep->add_option("--quality", pr.quality, "JPEG quality factor")
        ->required()
        ->check(CLI::Range(1, 100));
    prep->add_option("--out", pr.out_file, "cache file to write")->required();
    prep->add_option("--size", pr.size, "sub-image size")->check(CLI::PositiveNumber);
    prep->add_option("--stride", pr.stride, "sub-image stride")->check(CLI::PositiveNumber);
    prep->add_option("--shrinkage", pr.shrinkage,
                     "network shrinkage the targets are cropped for");
    prep->add_option("--seed", pr.seed, "split seed");
    prep->add_option("--val-fraction", pr.val_fraction, "fraction held out of the cache")
        ->check(CLI::Range(0.0, 0.999));

    TrainArgs tr;
    auto* trn = app.add_subcommand("train", "train a network (optionally transfer-initialized)");
    trn->add_option("--data", tr.data_dir, "directory of ground-truth .pgm images")->required();
    trn->add_option("--quality", tr.quality, "JPEG quality factor")
        ->required()
        ->check(CLI::Range(1, 100));
    trn->add_option("--arch", tr.arch, "filter sizes, e.g. 9-7-1-5");
    trn->add_option("--channels", tr.channels, "channel plan, e.g. 64,32,16,1");
    trn->add_option("--budget", tr.budget, "backprop budget")
        ->required()
        ->check(CLI::PositiveNumber);
    trn->add_option("--seed", tr.cfg.seed, "master seed");
    trn->add_option("--out", tr.out_dir, "run directory")->required();
    trn->add_option("--init", tr.init, "weight init scheme")
        ->check(CLI::IsMember({"gaussian", "he"}));
    trn->add_option("--transfer", tr.transfer_ckpt, "base checkpoint to transfer layers from");
    trn->add_option("--layers", tr.transfer_layers, "number of layers to transfer")
        ->check(CLI::NonNegativeNumber);
    trn->add_option("--batch", tr.cfg.batch_size, "batch size")->check(CLI::PositiveNumber);
    trn->add_option("--lr-rest", tr.cfg.lr_rest, "learning rate for all but the last layer");
    trn->add_option("--lr-last", tr.cfg.lr_last, "learning rate for the last layer");
    trn->add_option("--momentum", tr.cfg.momentum, "momentum coefficient")
        ->check(CLI::Range(0.0, 0.999));
    trn->add_option("--validate-every", tr.cfg.validate_every, "backprops between validations")
        ->check(CLI::PositiveNumber);
    trn->add_option("--val-fraction", tr.val_fraction, "validation split fraction")
        ->check(CLI::Range(0.0, 0.999));
    trn->add_option("--cache", tr.cache_file, "load training pairs from a prepare cache");
    trn->add_option("--realuse-width", tr.realuse_width, "real-use emulation width")
        ->check(CLI::PositiveNumber);

    RestoreArgs rs;
    auto* res = app.add_subcommand("restore", "restore a directory of degraded PGM images");
    res->add_option("--ckpt", rs.ckpt, "trained checkpoint")->required();
    res->add_option("--in", rs.in_dir, "input directory")->required();
    res->add_option("--out", rs.out_dir, "output directory")->required();
    res->add_option("--ref", rs.ref_dir, "clean reference directory; adds a metrics CSV");
    res->add_option("--metrics-out", rs.metrics_out, "write the metrics CSV here");

    EvaluateArgs ev;
    auto* eva = app.add_subcommand("evaluate", "PSNR / SSIM / PSNR-B against a reference set");
    eva->add_option("--ref", ev.ref_dir, "reference directory")->required();
    eva->add_option("--test", ev.test_dir, "test directory")->required();
    eva->add_option("--out", ev.out_file, "write CSV here instead of stdout");

    CompareArgs cp;
    auto* cmp = app.add_subcommand("compare-curves", "compare two convergence curves");
    cmp->add_option("--a", cp.csv_a, "first curve CSV")->required();
    cmp->add_option("--b", cp.csv_b, "second curve CSV")->required();
    cmp->add_option("--target", cp.target, "report first crossing of this PSNR");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (deg->parsed()) return cmd_degrade(dg);
        if (prep->parsed()) return cmd_prepare(pr);
        if (trn->parsed()) return cmd_train(tr);
        if (res->parsed()) return cmd_restore(rs);
        if (eva->parsed()) return cmd_evaluate(ev);
        if (cmp->parsed()) return cmd_compare_curves(cp);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
