#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arcnn/conv_ops.hpp"

namespace arcnn {

struct LayerSpec {
    int filter_size = 0;
    int out_channels = 0;
};

/// Ordered layer plan. The textual form is a hyphen string of filter sizes
/// plus a comma string of output channels, e.g. "9-7-1-5" / "64,32,16,1".
/// Input is always a single luminance channel; the last layer reconstructs
/// one plane.
struct ArchSpec {
    std::vector<LayerSpec> layers;

    /// Parses "9-7-1-5" with an explicit channel plan, or with the default
    /// plan (64, 32, then 16 for interior layers, 1 last) when channels is
    /// empty. Throws std::invalid_argument on malformed input.
    static ArchSpec parse(const std::string& filters, const std::string& channels = "");
    /// Accepts the combined form "9-7-1-5/64,32,16,1" produced by to_string().
    static ArchSpec from_string(const std::string& s);

    std::string filters_string() const;
    std::string channels_string() const;
    std::string to_string() const;

    int layer_count() const { return static_cast<int>(layers.size()); }
    /// Total spatial loss of the valid-convolution chain, sum of (f_i - 1).
    int total_shrinkage() const;
    void validate() const;
};

enum class InitScheme {
    gaussian,  // N(0, 0.001), the reference initialization
    he,        // N(0, sqrt(2 / fan_in)), fan_in = in_channels * f^2
};

InitScheme parse_init_scheme(const std::string& name);
std::string to_string(InitScheme scheme);

/// Activations recorded by a forward pass, consumed by backward().
struct ForwardTape {
    std::vector<FeatureStack> inputs;          // input to each layer
    std::vector<FeatureStack> preacts;         // conv output of each layer, pre-ReLU
    std::vector<std::vector<double>> cols;     // cached patch matrices (may be empty)
};

struct Network {
    ArchSpec arch;
    std::vector<ConvWeights> layers;

    int total_shrinkage() const { return arch.total_shrinkage(); }
    bool shape_matches(const Network& o) const;
};

/// Fresh network with weights drawn per scheme and zero biases.
/// Deterministic for a given seed.
Network build_network(const ArchSpec& arch, InitScheme init, std::uint64_t seed);

/// Full forward pass: ReLU after every layer except the last (the
/// reconstruction layer stays linear). Output has one channel.
FeatureStack forward(const Network& net, const FeatureStack& input);
/// Recording variant; the final output is tape.preacts.back().
const FeatureStack& forward(const Network& net, const FeatureStack& input, ForwardTape& tape);

/// Exact gradients for every layer's weights and biases given the gradient
/// of a scalar loss w.r.t. the network output. grads is resized to match the
/// network; with accumulate set the new gradients are added to it.
void backward(const Network& net, const ForwardTape& tape, const FeatureStack& grad_output,
              std::vector<ConvWeights>& grads, bool accumulate = false);
std::vector<ConvWeights> backward(const Network& net, const ForwardTape& tape,
                                  const FeatureStack& grad_output);

/// Initializes a target network by copying the first num_layers layers from
/// base bit-exactly and drawing the rest per rest_init. All layers remain
/// trainable. Throws when a transferred layer's shape differs from the
/// target plan (the message lists both shapes).
Network transfer_from(const ArchSpec& target, const Network& base, int num_layers,
                      InitScheme rest_init, std::uint64_t seed);

struct CheckpointMeta {
    int quality = -1;           // JPEG quality the model was trained for
    std::uint64_t backprops = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary checkpoint: magic "ARCN", format version, architecture string,
/// training metadata, per-layer dims, little-endian f64 payloads, CRC32.
/// Round-trips are byte-identical.
void save_checkpoint(const Network& net, const CheckpointMeta& meta, const std::string& path);

struct LoadedCheckpoint {
    Network net;
    CheckpointMeta meta;
};

/// Throws std::runtime_error on unreadable, truncated, corrupt, or
/// newer-versioned files.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace arcnn
