#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "io.hpp"
#include "latent.hpp"

namespace rdanon {

/// 8-bit samples, planar C x H x W (channel-major, then row-major).
struct ImageBuffer {
  Dims dims;
  std::vector<std::uint8_t> samples;

  ImageBuffer() = default;
  explicit ImageBuffer(Dims d, std::uint8_t fill = 0) : dims(d), samples(d.count(), fill) {
    if (d.empty()) throw DimsError("image dims must be positive");
  }

  std::uint8_t& at(std::size_t c, std::size_t y, std::size_t x) {
    return samples[(c * dims.height + y) * dims.width + x];
  }
  std::uint8_t at(std::size_t c, std::size_t y, std::size_t x) const {
    return samples[(c * dims.height + y) * dims.width + x];
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

namespace detail {

class PnmHeaderReader {
public:
  explicit PnmHeaderReader(std::string_view bytes) : bytes_(bytes) {}

  // Reads one whitespace-delimited token, skipping `#` comments.
  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])) &&
           bytes_[pos_] != '#') {
      out += bytes_[pos_++];
    }
    if (out.empty()) throw FormatError("truncated PNM header");
    return out;
  }

  std::size_t number() {
    const std::string tok = token();
    std::size_t value = 0;
    for (char c : tok) {
      if (!std::isdigit(static_cast<unsigned char>(c))) {
        throw FormatError("bad PNM header field '" + tok + "'");
      }
      value = value * 10 + static_cast<std::size_t>(c - '0');
      if (value > (1u << 24)) throw FormatError("PNM header field too large");
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError("missing whitespace before PNM raster");
    }
    return pos_ + 1;
  }

private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

} // namespace detail

/// Binary PGM (P5) or PPM (P6) with maxval 255.
inline ImageBuffer decode_pnm(std::string_view bytes) {
  detail::PnmHeaderReader header(bytes);
  const std::string magic = header.token();
  std::size_t channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError("unsupported PNM magic '" + magic + "' (need P5 or P6)");
  }
  const std::size_t width = header.number();
  const std::size_t height = header.number();
  const std::size_t maxval = header.number();
  if (width == 0 || height == 0) throw FormatError("PNM image has zero size");
  if (maxval != 255) {
    throw FormatError("only 8-bit PNM (maxval 255) is supported, got " + std::to_string(maxval));
  }
  const std::size_t offset = header.raster_offset();
  const std::size_t expected = channels * width * height;
  if (bytes.size() - offset < expected) throw FormatError("truncated PNM raster");

  ImageBuffer img(Dims{channels, height, width});
  const auto* raster = reinterpret_cast<const std::uint8_t*>(bytes.data() + offset);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        img.at(c, y, x) = raster[(y * width + x) * channels + c];
      }
    }
  }
  return img;
}

inline std::string encode_pnm(const ImageBuffer& img) {
  const Dims& d = img.dims;
  if (d.channels != 1 && d.channels != 3) {
    throw DimsError("PNM output needs 1 or 3 channels, got " + std::to_string(d.channels));
  }
  std::string out = (d.channels == 1 ? "P5\n" : "P6\n") + std::to_string(d.width) + " " +
                    std::to_string(d.height) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + d.count());
  for (std::size_t y = 0; y < d.height; ++y) {
    for (std::size_t x = 0; x < d.width; ++x) {
      for (std::size_t c = 0; c < d.channels; ++c) {
        out[header + (y * d.width + x) * d.channels + c] = static_cast<char>(img.at(c, y, x));
      }
    }
  }
  return out;
}

inline ImageBuffer read_pnm(const std::filesystem::path& path) {
  try {
    return decode_pnm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void write_pnm(const ImageBuffer& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pnm(img));
}

} // namespace rdanon
