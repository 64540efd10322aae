#include "arcnn/plane.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace arcnn {

Plane::Plane(int h, int w, double fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {
    if (h <= 0 || w <= 0) throw std::invalid_argument("Plane: dimensions must be positive");
}

FeatureStack::FeatureStack(int c, int h, int w, double fill)
    : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {
    if (c <= 0 || h <= 0 || w <= 0)
        throw std::invalid_argument("FeatureStack: dimensions must be positive");
}

FeatureStack FeatureStack::from_plane(const Plane& p) {
    FeatureStack f(1, p.height, p.width);
    f.data = p.data;
    return f;
}

Plane FeatureStack::to_plane() const {
    if (channels != 1)
        throw std::invalid_argument("to_plane: stack has " + std::to_string(channels) +
                                    " channels, expected 1");
    Plane p(height, width);
    p.data = data;
    return p;
}

namespace {
void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x))
            throw std::invalid_argument(std::string(what) + ": non-finite value");
    }
}
}  // namespace

void require_finite(const Plane& p, const char* what) { check_finite(p.data, what); }
void require_finite(const FeatureStack& f, const char* what) { check_finite(f.data, what); }

}  // namespace arcnn
