#pragma once

// Binary PGM (1 channel) / PPM (3 channels), 8-bit. Values are clipped to
// [0, 1] and rounded to the nearest of 256 levels on write.

#include "mas/types.hpp"

#include <string>

namespace mas {

std::string encode_pnm(const Image& img);
Image decode_pnm(const std::string& bytes);

Image read_pnm(const std::string& path);

/// Writes to a sibling temporary file, then renames over the target.
void write_file_atomic(const std::string& path, const std::string& bytes);

std::string read_file(const std::string& path);

}  // namespace mas
