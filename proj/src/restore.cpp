#include "arcnn/restore.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>

#include "arcnn/pgm.hpp"

namespace arcnn {

namespace {

Plane pad_plane(const Plane& x, int pad, PadMode mode) {
    Plane p(x.height + 2 * pad, x.width + 2 * pad);
    for (int y = 0; y < p.height; ++y) {
        for (int xx = 0; xx < p.width; ++xx) {
            const int sy = y - pad;
            const int sx = xx - pad;
            if (sy >= 0 && sy < x.height && sx >= 0 && sx < x.width) {
                p.at(y, xx) = x.at(sy, sx);
            } else if (mode == PadMode::replicate) {
                p.at(y, xx) = x.at(std::clamp(sy, 0, x.height - 1), std::clamp(sx, 0, x.width - 1));
            }  // zero mode: already 0
        }
    }
    return p;
}

}  // namespace

Plane restore_image(const Network& net, const Plane& y, PadMode pad) {
    const int shrink = net.total_shrinkage();
    const Plane padded = shrink == 0 ? y : pad_plane(y, shrink / 2, pad);
    const FeatureStack out = forward(net, FeatureStack::from_plane(padded));
    Plane restored = out.to_plane();
    if (!restored.same_shape(y))
        throw std::logic_error("restore_image: padded forward pass lost alignment");
    for (double& v : restored.data) v = std::clamp(v, 0.0, 1.0);
    return restored;
}

int restore_batch(const Network& net, const std::string& dir_in, const std::string& dir_out,
                  PadMode pad) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir_out) && !fs::create_directories(dir_out))
        throw std::runtime_error("cannot create output directory: " + dir_out);
    if (!fs::is_directory(dir_out)) throw std::runtime_error("not a directory: " + dir_out);

    int written = 0;
    for (const auto& path : list_pgm_files(dir_in)) {
        Plane img;
        try {
            img = read_pgm(path.string());
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping " << path.string() << ": " << e.what() << "\n";
            continue;
        }
        const Plane restored = restore_image(net, img, pad);
        write_pgm(restored, (fs::path(dir_out) / path.filename()).string());
        ++written;
    }
    return written;
}

}  // namespace arcnn
