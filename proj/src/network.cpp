#include "arcnn/network.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "arcnn/rng.hpp"

namespace arcnn {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string::npos ? pos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

int parse_positive_int(const std::string& tok, const char* what) {
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument(std::string(what) + ": malformed token '" + tok + "'");
    const long v = std::stol(tok);
    if (v <= 0 || v > 1 << 20)
        throw std::invalid_argument(std::string(what) + ": value out of range '" + tok + "'");
    return static_cast<int>(v);
}

}  // namespace

ArchSpec ArchSpec::parse(const std::string& filters, const std::string& channels) {
    if (filters.empty()) throw std::invalid_argument("ArchSpec: empty filter string");
    ArchSpec spec;
    const auto ftoks = split(filters, '-');
    for (const auto& t : ftoks)
        spec.layers.push_back({parse_positive_int(t, "ArchSpec filter size"), 0});

    const int n = spec.layer_count();
    if (channels.empty()) {
        for (int i = 0; i < n; ++i) {
            if (i == n - 1)
                spec.layers[i].out_channels = 1;
            else if (i == 0)
                spec.layers[i].out_channels = 64;
            else if (i == 1)
                spec.layers[i].out_channels = 32;
            else
                spec.layers[i].out_channels = 16;
        }
    } else {
        const auto ctoks = split(channels, ',');
        if (static_cast<int>(ctoks.size()) != n)
            throw std::invalid_argument("ArchSpec: " + std::to_string(ftoks.size()) +
                                        " filter sizes but " + std::to_string(ctoks.size()) +
                                        " channel counts");
        for (int i = 0; i < n; ++i)
            spec.layers[i].out_channels = parse_positive_int(ctoks[i], "ArchSpec channels");
    }
    spec.validate();
    return spec;
}

ArchSpec ArchSpec::from_string(const std::string& s) {
    const std::size_t pos = s.find('/');
    if (pos == std::string::npos) return parse(s);
    return parse(s.substr(0, pos), s.substr(pos + 1));
}

std::string ArchSpec::filters_string() const {
    std::string out;
    for (const auto& l : layers) {
        if (!out.empty()) out += '-';
        out += std::to_string(l.filter_size);
    }
    return out;
}

std::string ArchSpec::channels_string() const {
    std::string out;
    for (const auto& l : layers) {
        if (!out.empty()) out += ',';
        out += std::to_string(l.out_channels);
    }
    return out;
}

std::string ArchSpec::to_string() const { return filters_string() + "/" + channels_string(); }

int ArchSpec::total_shrinkage() const {
    int s = 0;
    for (const auto& l : layers) s += l.filter_size - 1;
    return s;
}

void ArchSpec::validate() const {
    if (layers.empty()) throw std::invalid_argument("ArchSpec: no layers");
    for (const auto& l : layers) {
        if (l.filter_size < 1 || l.filter_size % 2 == 0)
            throw std::invalid_argument("ArchSpec: filter sizes must be odd, got " +
                                        std::to_string(l.filter_size));
        if (l.out_channels < 1)
            throw std::invalid_argument("ArchSpec: channel counts must be positive");
    }
    if (layers.back().out_channels != 1)
        throw std::invalid_argument("ArchSpec: last layer must reconstruct 1 channel, got " +
                                    std::to_string(layers.back().out_channels));
}

InitScheme parse_init_scheme(const std::string& name) {
    if (name == "gaussian") return InitScheme::gaussian;
    if (name == "he") return InitScheme::he;
    throw std::invalid_argument("unknown init scheme '" + name + "' (expected gaussian|he)");
}

std::string to_string(InitScheme scheme) {
    return scheme == InitScheme::gaussian ? "gaussian" : "he";
}

bool Network::shape_matches(const Network& o) const {
    if (layers.size() != o.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (!layers[i].same_shape(o.layers[i])) return false;
    return true;
}

Network build_network(const ArchSpec& arch, InitScheme init, std::uint64_t seed) {
    arch.validate();
    Network net;
    net.arch = arch;
    Rng rng(seed, "init");
    int in_c = 1;
    for (const auto& spec : arch.layers) {
        ConvWeights w(spec.out_channels, in_c, spec.filter_size);
        const double stddev =
            init == InitScheme::gaussian
                ? 0.001
                : std::sqrt(2.0 / (static_cast<double>(in_c) * spec.filter_size * spec.filter_size));
        for (double& v : w.weights) v = rng.next_normal(0.0, stddev);
        // biases stay zero
        net.layers.push_back(std::move(w));
        in_c = spec.out_channels;
    }
    return net;
}

const FeatureStack& forward(const Network& net, const FeatureStack& input, ForwardTape& tape) {
    const int n = static_cast<int>(net.layers.size());
    if (n == 0) throw std::invalid_argument("forward: network has no layers");
    tape.inputs.resize(n);
    tape.preacts.resize(n);
    tape.cols.resize(n);
    tape.inputs[0] = input;
    for (int i = 0; i < n; ++i) {
        conv_valid_forward_into(tape.inputs[i], net.layers[i], tape.preacts[i], &tape.cols[i]);
        if (i + 1 < n) relu_forward_into(tape.preacts[i], tape.inputs[i + 1]);
    }
    return tape.preacts.back();
}

FeatureStack forward(const Network& net, const FeatureStack& input) {
    const int n = static_cast<int>(net.layers.size());
    if (n == 0) throw std::invalid_argument("forward: network has no layers");
    FeatureStack cur, next;
    conv_valid_forward_into(input, net.layers[0], cur);
    for (int i = 1; i < n; ++i) {
        relu_forward_into(cur, next);
        conv_valid_forward_into(next, net.layers[i], cur);
    }
    return cur;
}

void backward(const Network& net, const ForwardTape& tape, const FeatureStack& grad_output,
              std::vector<ConvWeights>& grads, bool accumulate) {
    const int n = static_cast<int>(net.layers.size());
    if (static_cast<int>(tape.inputs.size()) != n || static_cast<int>(tape.preacts.size()) != n)
        throw std::invalid_argument("backward: tape does not match this network");
    for (int i = 0; i < n; ++i)
        if (tape.inputs[i].channels != net.layers[i].in_channels)
            throw std::invalid_argument("backward: tape was recorded for a different network");
    if (!tape.preacts.back().same_shape(grad_output))
        throw std::invalid_argument("backward: grad_output shape does not match forward output");

    grads.resize(n);
    thread_local FeatureStack g_cur, g_prev;
    g_cur = grad_output;
    for (int i = n - 1; i >= 0; --i) {
        const double* col = (static_cast<int>(tape.cols.size()) == n && !tape.cols[i].empty())
                                ? tape.cols[i].data()
                                : nullptr;
        conv_valid_backward_into(tape.inputs[i], net.layers[i], g_cur, grads[i],
                                 i > 0 ? &g_prev : nullptr, accumulate, col);
        if (i > 0) {
            relu_mask_inplace(tape.preacts[i - 1], g_prev);
            std::swap(g_cur, g_prev);
        }
    }
}

std::vector<ConvWeights> backward(const Network& net, const ForwardTape& tape,
                                  const FeatureStack& grad_output) {
    std::vector<ConvWeights> grads;
    backward(net, tape, grad_output, grads, false);
    return grads;
}

Network transfer_from(const ArchSpec& target, const Network& base, int num_layers,
                      InitScheme rest_init, std::uint64_t seed) {
    target.validate();
    if (num_layers < 0 || num_layers > static_cast<int>(base.layers.size()) ||
        num_layers > target.layer_count())
        throw std::invalid_argument("transfer_from: cannot transfer " +
                                    std::to_string(num_layers) + " layers (base has " +
                                    std::to_string(base.layers.size()) + ", target has " +
                                    std::to_string(target.layer_count()) + ")");
    Network net = build_network(target, rest_init, seed);
    for (int i = 0; i < num_layers; ++i) {
        if (!net.layers[i].same_shape(base.layers[i]))
            throw std::invalid_argument("transfer_from: layer " + std::to_string(i + 1) +
                                        " shape mismatch: base " +
                                        base.layers[i].shape_string() + " vs target " +
                                        net.layers[i].shape_string());
        net.layers[i] = base.layers[i];
    }
    return net;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization

namespace {

void crc32_table(std::uint32_t* table) {
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
}

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
    static std::uint32_t table[256];
    static const bool init = [] {
        crc32_table(table);
        return true;
    }();
    (void)init;
    std::uint32_t c = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& buf, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(buf, bits);
}

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t len) : data_(data), len_(len) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return len_ - pos_; }

private:
    void need(std::size_t n) const {
        if (len_ - pos_ < n) throw std::runtime_error("checkpoint truncated");
    }
    const std::uint8_t* data_;
    std::size_t len_;
    std::size_t pos_ = 0;
};

constexpr char kMagic[4] = {'A', 'R', 'C', 'N'};

}  // namespace

void save_checkpoint(const Network& net, const CheckpointMeta& meta, const std::string& path) {
    std::vector<std::uint8_t> body;
    put_u32(body, kCheckpointVersion);
    const std::string arch = net.arch.to_string();
    put_u32(body, static_cast<std::uint32_t>(arch.size()));
    body.insert(body.end(), arch.begin(), arch.end());
    put_u32(body, static_cast<std::uint32_t>(meta.quality));
    put_u64(body, meta.backprops);
    put_u32(body, static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& l : net.layers) {
        put_u32(body, static_cast<std::uint32_t>(l.out_channels));
        put_u32(body, static_cast<std::uint32_t>(l.in_channels));
        put_u32(body, static_cast<std::uint32_t>(l.filter_size));
    }
    for (const auto& l : net.layers) {
        for (double v : l.weights) put_f64(body, v);
        for (double v : l.bias) put_f64(body, v);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
    std::vector<std::uint8_t> crc;
    put_u32(crc, crc32(body.data(), body.size()));
    out.write(reinterpret_cast<const char*>(crc.data()), 4);
    if (!out) throw std::runtime_error("write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);

    const std::size_t body_len = bytes.size() - 8;
    Reader r(bytes.data() + 4, body_len);
    const std::uint32_t version = r.u32();
    if (version > kCheckpointVersion)
        throw std::runtime_error("checkpoint version " + std::to_string(version) +
                                 " is newer than supported version " +
                                 std::to_string(kCheckpointVersion) + ": " + path);

    const std::uint32_t stored = Reader(bytes.data() + bytes.size() - 4, 4).u32();
    if (crc32(bytes.data() + 4, body_len) != stored)
        throw std::runtime_error("checkpoint corrupt (CRC mismatch): " + path);

    LoadedCheckpoint result;
    const std::uint32_t arch_len = r.u32();
    if (arch_len > r.remaining()) throw std::runtime_error("checkpoint truncated");
    result.net.arch = ArchSpec::from_string(r.str(arch_len));
    result.meta.quality = static_cast<std::int32_t>(r.u32());
    result.meta.backprops = r.u64();
    const std::uint32_t n_layers = r.u32();
    if (n_layers != static_cast<std::uint32_t>(result.net.arch.layer_count()))
        throw std::runtime_error("checkpoint layer count does not match architecture: " + path);

    std::vector<ConvWeights> layers;
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        const std::uint32_t oc = r.u32(), ic = r.u32(), f = r.u32();
        if (oc == 0 || ic == 0 || f == 0 || oc > 1u << 16 || ic > 1u << 16 || f > 1u << 8)
            throw std::runtime_error("checkpoint corrupt (bad layer dims): " + path);
        layers.emplace_back(static_cast<int>(oc), static_cast<int>(ic), static_cast<int>(f));
    }
    for (auto& l : layers) {
        for (double& v : l.weights) v = r.f64();
        for (double& v : l.bias) v = r.f64();
    }
    if (r.remaining() != 0) throw std::runtime_error("checkpoint has trailing bytes: " + path);
    result.net.layers = std::move(layers);

    // cross-check dims against the architecture string
    int in_c = 1;
    for (int i = 0; i < result.net.arch.layer_count(); ++i) {
        const auto& l = result.net.layers[i];
        const auto& spec = result.net.arch.layers[i];
        if (l.in_channels != in_c || l.out_channels != spec.out_channels ||
            l.filter_size != spec.filter_size)
            throw std::runtime_error("checkpoint corrupt (layer dims disagree with arch): " + path);
        in_c = spec.out_channels;
    }
    return result;
}

}  // namespace arcnn
