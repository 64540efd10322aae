#include "arcnn/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "arcnn/rng.hpp"

namespace arcnn {

std::vector<Plane> extract_subimages(const Plane& x, int size, int stride) {
    if (size < 1 || stride < 1) throw std::invalid_argument("extract_subimages: bad size/stride");
    if (x.height < size || x.width < size)
        throw std::invalid_argument("extract_subimages: image " + std::to_string(x.height) + "x" +
                                    std::to_string(x.width) + " smaller than sub-image size " +
                                    std::to_string(size));
    const int ny = (x.height - size) / stride + 1;
    const int nx = (x.width - size) / stride + 1;
    std::vector<Plane> out;
    out.reserve(static_cast<std::size_t>(ny) * nx);
    for (int oy = 0; oy < ny; ++oy) {
        for (int ox = 0; ox < nx; ++ox) {
            Plane sub(size, size);
            for (int y = 0; y < size; ++y)
                std::memcpy(sub.row(y), x.row(oy * stride + y) + ox * stride,
                            sizeof(double) * size);
            out.push_back(std::move(sub));
        }
    }
    return out;
}

std::vector<SamplePair> make_pairs_with(const std::vector<Plane>& ground_truth,
                                        const std::function<Plane(const Plane&)>& degrade_fn,
                                        int shrinkage, int size, int stride) {
    if (shrinkage < 0 || shrinkage % 2 != 0)
        throw std::invalid_argument("make_pairs: shrinkage must be even and non-negative");
    if (shrinkage >= size)
        throw std::invalid_argument("make_pairs: shrinkage " + std::to_string(shrinkage) +
                                    " must be smaller than sub-image size " +
                                    std::to_string(size));
    const int target_size = size - shrinkage;
    const int margin = shrinkage / 2;

    std::vector<SamplePair> pairs;
    for (const Plane& clean : ground_truth) {
        // Degrading the full image first keeps the block grid aligned with
        // the image, not with each crop; extraction order then matches
        // extract_subimages exactly.
        const Plane degraded = degrade_fn(clean);
        if (!degraded.same_shape(clean))
            throw std::invalid_argument("make_pairs: degradation changed the image size");
        std::vector<Plane> ins = extract_subimages(degraded, size, stride);
        std::vector<Plane> refs = extract_subimages(clean, size, stride);
        for (std::size_t i = 0; i < ins.size(); ++i) {
            Plane target(target_size, target_size);
            for (int y = 0; y < target_size; ++y)
                std::memcpy(target.row(y), refs[i].row(y + margin) + margin,
                            sizeof(double) * target_size);
            pairs.push_back({std::move(ins[i]), std::move(target)});
        }
    }
    return pairs;
}

std::vector<SamplePair> make_pairs(const std::vector<Plane>& ground_truth, QualityFactor q,
                                   int shrinkage, int size, int stride) {
    return make_pairs_with(
        ground_truth, [q](const Plane& p) { return degrade(p, q); }, shrinkage, size, stride);
}

std::pair<std::vector<Plane>, std::vector<Plane>> split_train_val(
    const std::vector<Plane>& images, std::uint64_t seed, double val_fraction) {
    if (images.empty()) throw std::invalid_argument("split_train_val: no images");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        throw std::invalid_argument("split_train_val: val_fraction must be in [0,1)");
    std::vector<std::size_t> order(images.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed, "split");
    rng.shuffle(order);

    const std::size_t n_val = std::min(
        images.size() - 1,
        static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(images.size()))));
    std::pair<std::vector<Plane>, std::vector<Plane>> result;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i < n_val)
            result.second.push_back(images[order[i]]);
        else
            result.first.push_back(images[order[i]]);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Sample cache

namespace {

constexpr char kCacheMagic[4] = {'A', 'R', 'C', 'D'};
constexpr std::uint32_t kCacheVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(v >> (8 * i));
    out.write(b, 4);
}

std::uint32_t get_u32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw std::runtime_error("sample cache truncated: " + path);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void put_doubles(std::ofstream& out, const std::vector<double>& v) {
    for (double d : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(bits >> (8 * i));
        out.write(b, 8);
    }
}

void get_doubles(std::ifstream& in, std::vector<double>& v, const std::string& path) {
    std::vector<unsigned char> raw(v.size() * 8);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw std::runtime_error("sample cache truncated: " + path);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(raw[i * 8 + k]) << (8 * k);
        std::memcpy(&v[i], &bits, 8);
    }
}

}  // namespace

void write_sample_cache(std::span<const SamplePair> samples, const std::string& path) {
    if (samples.empty()) throw std::invalid_argument("write_sample_cache: no samples");
    const Plane& in0 = samples.front().input;
    const Plane& tg0 = samples.front().target;
    for (const auto& s : samples)
        if (!s.input.same_shape(in0) || !s.target.same_shape(tg0))
            throw std::invalid_argument("write_sample_cache: samples have mixed shapes");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open sample cache for writing: " + path);
    out.write(kCacheMagic, 4);
    put_u32(out, kCacheVersion);
    put_u32(out, static_cast<std::uint32_t>(samples.size()));
    put_u32(out, static_cast<std::uint32_t>(in0.height));
    put_u32(out, static_cast<std::uint32_t>(in0.width));
    put_u32(out, static_cast<std::uint32_t>(tg0.height));
    put_u32(out, static_cast<std::uint32_t>(tg0.width));
    for (const auto& s : samples) {
        put_doubles(out, s.input.data);
        put_doubles(out, s.target.data);
    }
    if (!out) throw std::runtime_error("sample cache write failed: " + path);
}

std::vector<SamplePair> read_sample_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open sample cache: " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kCacheMagic, 4) != 0)
        throw std::runtime_error("not a sample cache: " + path);
    const std::uint32_t version = get_u32(in, path);
    if (version > kCacheVersion)
        throw std::runtime_error("sample cache version " + std::to_string(version) +
                                 " is newer than supported: " + path);
    const std::uint32_t count = get_u32(in, path);
    const int ih = static_cast<int>(get_u32(in, path));
    const int iw = static_cast<int>(get_u32(in, path));
    const int th = static_cast<int>(get_u32(in, path));
    const int tw = static_cast<int>(get_u32(in, path));
    if (count == 0 || ih < 1 || iw < 1 || th < 1 || tw < 1 || count > (1u << 28))
        throw std::runtime_error("sample cache header corrupt: " + path);

    std::vector<SamplePair> samples;
    samples.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        SamplePair s{Plane(ih, iw), Plane(th, tw)};
        get_doubles(in, s.input.data, path);
        get_doubles(in, s.target.data, path);
        samples.push_back(std::move(s));
    }
    // must be exactly at EOF
    char extra;
    in.read(&extra, 1);
    if (in.gcount() != 0) throw std::runtime_error("sample cache has trailing bytes: " + path);
    return samples;
}

}  // namespace arcnn
