#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "arcnn/plane.hpp"

namespace arcnn {

/// Reads a binary (P5) portable graymap with maxval 255; pixel values map to
/// [0,1] by /255. Throws std::runtime_error on malformed files.
Plane read_pgm(const std::string& path);

/// Writes a binary (P5) portable graymap, quantizing to the 8-bit grid.
void write_pgm(const Plane& img, const std::string& path);

/// Sorted list of *.pgm files directly inside dir.
std::vector<std::filesystem::path> list_pgm_files(const std::string& dir);

}  // namespace arcnn
