#pragma once

#include <cstddef>
#include <vector>

namespace arcnn {

/// Single-channel 2-D image, row-major, nominal value range [0,1].
struct Plane {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Plane() = default;
    Plane(int h, int w, double fill = 0.0);

    double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }

    double* row(int y) { return data.data() + static_cast<std::size_t>(y) * width; }
    const double* row(int y) const { return data.data() + static_cast<std::size_t>(y) * width; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Plane& o) const { return height == o.height && width == o.width; }
};

/// C x H x W activation volume, channel-major then row-major.
struct FeatureStack {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    FeatureStack() = default;
    FeatureStack(int c, int h, int w, double fill = 0.0);

    std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
    std::size_t size() const { return data.size(); }

    double* channel(int c) { return data.data() + static_cast<std::size_t>(c) * plane_size(); }
    const double* channel(int c) const { return data.data() + static_cast<std::size_t>(c) * plane_size(); }

    double& at(int c, int y, int x) { return channel(c)[static_cast<std::size_t>(y) * width + x]; }
    double at(int c, int y, int x) const { return channel(c)[static_cast<std::size_t>(y) * width + x]; }

    bool same_shape(const FeatureStack& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    static FeatureStack from_plane(const Plane& p);
    /// Requires channels == 1.
    Plane to_plane() const;
};

/// Throws std::invalid_argument when any value is NaN or infinite.
void require_finite(const Plane& p, const char* what);
void require_finite(const FeatureStack& f, const char* what);

}  // namespace arcnn
