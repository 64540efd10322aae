#pragma once

#include <string>

#include "arcnn/network.hpp"
#include "arcnn/plane.hpp"

namespace arcnn {

/// Border strategy compensating the valid-convolution size loss.
enum class PadMode {
    replicate,
    zero,
};

/// Full-image inference: pads y by total_shrinkage/2 per side, runs one
/// forward pass over the padded plane and clamps to [0,1]. The output has
/// exactly y's size for any network and any input size.
Plane restore_image(const Network& net, const Plane& y, PadMode pad = PadMode::replicate);

/// Restores every readable *.pgm in dir_in to dir_out (same filenames).
/// Unreadable files are skipped with a warning on stderr. Returns the number
/// of images written.
int restore_batch(const Network& net, const std::string& dir_in, const std::string& dir_out,
                  PadMode pad = PadMode::replicate);

}  // namespace arcnn
