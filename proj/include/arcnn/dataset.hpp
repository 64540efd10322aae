#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "arcnn/jpeg_codec.hpp"
#include "arcnn/plane.hpp"

namespace arcnn {

/// One training pair: a degraded sub-image and the center crop of the clean
/// sub-image that the valid-convolution chain can actually predict.
struct SamplePair {
    Plane input;
    Plane target;
};

/// Sub-images at top-left offsets {0, stride, 2*stride, ...} along each axis
/// while offset+size fits; count per axis is floor((dim-size)/stride)+1.
std::vector<Plane> extract_subimages(const Plane& x, int size = 32, int stride = 10);

/// Builds aligned pairs: each full image is degraded once, then sub-images
/// are cut from the degraded and the clean version at identical offsets.
/// Targets are the centered (size - shrinkage)^2 crops of the clean
/// sub-images, pixel-identical to the ground truth (no resampling).
std::vector<SamplePair> make_pairs(const std::vector<Plane>& ground_truth, QualityFactor q,
                                   int shrinkage, int size = 32, int stride = 10);

/// Same pairing logic with a caller-supplied degradation, used by tests and
/// the real-use-case pipeline.
std::vector<SamplePair> make_pairs_with(const std::vector<Plane>& ground_truth,
                                        const std::function<Plane(const Plane&)>& degrade_fn,
                                        int shrinkage, int size = 32, int stride = 10);

/// Deterministic seeded split into (train, val); the two parts are disjoint
/// and their union is the input set.
std::pair<std::vector<Plane>, std::vector<Plane>> split_train_val(
    const std::vector<Plane>& images, std::uint64_t seed, double val_fraction = 0.2);

/// Packed binary sample cache: magic, version, count, size fields, raw
/// little-endian doubles. All samples must share the input/target shapes.
void write_sample_cache(std::span<const SamplePair> samples, const std::string& path);
std::vector<SamplePair> read_sample_cache(const std::string& path);

}  // namespace arcnn
