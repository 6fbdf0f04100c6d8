#include "mas/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mas {

namespace {

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Reads the next header integer, skipping whitespace and '#' comments.
long next_header_int(const std::string& s, std::size_t& pos) {
  for (;;) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos < s.size() && s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::size_t start = pos;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  if (start == pos) throw std::runtime_error("pnm: malformed header");
  return std::stol(s.substr(start, pos - start));
}

}  // namespace

std::string encode_pnm(const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("encode_pnm: only 1- or 3-channel images are supported");
  std::ostringstream out;
  out << (img.channels == 1 ? "P5" : "P6") << '\n' << img.width << ' ' << img.height << "\n255\n";
  std::string body(std::size_t(img.size()), '\0');
  std::size_t k = 0;
  for (Index r = 0; r < img.height; ++r)
    for (Index q = 0; q < img.width; ++q)
      for (Index c = 0; c < img.channels; ++c) body[k++] = static_cast<char>(to_byte(img(c, r, q)));
  return out.str() + body;
}

Image decode_pnm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw std::runtime_error("pnm: only binary P5/P6 files are supported");
  const Index channels = bytes[1] == '5' ? 1 : 3;
  std::size_t pos = 2;
  const long width = next_header_int(bytes, pos);
  const long height = next_header_int(bytes, pos);
  const long maxval = next_header_int(bytes, pos);
  if (width <= 0 || height <= 0) throw std::runtime_error("pnm: non-positive dimensions");
  if (maxval != 255) throw std::runtime_error("pnm: only 8-bit files (maxval 255) are supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw std::runtime_error("pnm: malformed header");
  ++pos;
  const std::size_t need = std::size_t(channels * height * width);
  if (bytes.size() - pos < need) throw std::runtime_error("pnm: truncated pixel data");
  Image img(channels, height, width);
  for (Index r = 0; r < height; ++r)
    for (Index q = 0; q < width; ++q)
      for (Index c = 0; c < channels; ++c) img(c, r, q) = static_cast<unsigned char>(bytes[pos++]) / 255.0;
  return img;
}

Image read_pnm(const std::string& path) { return decode_pnm(read_file(path)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace mas
