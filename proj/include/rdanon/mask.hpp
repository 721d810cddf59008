#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "latent.hpp"

namespace rdanon {

/// Binary spatial grid; 1 marks the region to anonymize.
class BinaryMask {
public:
  BinaryMask() = default;
  BinaryMask(std::size_t height, std::size_t width, std::uint8_t fill = 0)
      : height_(height), width_(width), cells_(height * width, fill ? 1 : 0) {}

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return cells_.size(); }

  bool operator()(std::size_t y, std::size_t x) const { return cells_[y * width_ + x] != 0; }
  bool operator[](std::size_t i) const { return cells_[i] != 0; }
  void set(std::size_t y, std::size_t x, bool on) { cells_[y * width_ + x] = on ? 1 : 0; }

  std::size_t area() const {
    std::size_t n = 0;
    for (auto v : cells_) n += v;
    return n;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// Image-resolution mask.
struct PixelMask : BinaryMask {
  using BinaryMask::BinaryMask;
};

/// Latent-resolution mask, broadcast across every latent channel.
struct LatentMask : BinaryMask {
  using BinaryMask::BinaryMask;
};

/// Sample >= threshold becomes 1. Only single-channel images are masks.
inline PixelMask binarize(const ImageBuffer& img, int threshold = 128) {
  if (img.dims.channels != 1) {
    throw FormatError("mask must be a grayscale image, got " +
                      std::to_string(img.dims.channels) + " channels");
  }
  PixelMask mask(img.dims.height, img.dims.width);
  for (std::size_t y = 0; y < img.dims.height; ++y) {
    for (std::size_t x = 0; x < img.dims.width; ++x) {
      mask.set(y, x, img.at(0, y, x) >= threshold);
    }
  }
  return mask;
}

inline PixelMask load_pixel_mask(const std::filesystem::path& path, int threshold = 128) {
  const ImageBuffer img = read_pnm(path);
  if (img.dims.channels != 1) {
    throw FormatError(path.string() + ": mask must be a grayscale image");
  }
  return binarize(img, threshold);
}

/// OR-pooling: a latent cell is set iff any pixel it covers is set.
inline LatentMask downscale_to_latent(const PixelMask& mask, std::size_t latent_h,
                                      std::size_t latent_w) {
  if (latent_h == 0 || latent_w == 0 || mask.height() % latent_h != 0 ||
      mask.width() % latent_w != 0) {
    throw DimsError("mask " + std::to_string(mask.height()) + "x" +
                    std::to_string(mask.width()) + " does not divide evenly into latent " +
                    std::to_string(latent_h) + "x" + std::to_string(latent_w));
  }
  const std::size_t fy = mask.height() / latent_h;
  const std::size_t fx = mask.width() / latent_w;
  LatentMask out(latent_h, latent_w);
  for (std::size_t y = 0; y < mask.height(); ++y) {
    for (std::size_t x = 0; x < mask.width(); ++x) {
      if (mask(y, x)) out.set(y / fy, x / fx, true);
    }
  }
  return out;
}

inline void require_mask_fits(const LatentMask& mask, const Dims& dims) {
  if (mask.height() != dims.height || mask.width() != dims.width) {
    throw DimsError("latent mask " + std::to_string(mask.height()) + "x" +
                    std::to_string(mask.width()) + " does not match latent " + dims.str());
  }
}

/// mask * anon + (1 - mask) * original. Every output value is copied from
/// exactly one input, never mixed arithmetically.
inline Latent blend(const Latent& anon, const Latent& original, const LatentMask& mask) {
  require_same_dims(anon.dims(), original.dims(), "blend: latent shape mismatch");
  require_mask_fits(mask, anon.dims());
  Latent out = anon;
  const std::size_t plane = anon.dims().plane();
  for (std::size_t c = 0; c < anon.dims().channels; ++c) {
    for (std::size_t p = 0; p < plane; ++p) {
      if (!mask[p]) out[c * plane + p] = original[c * plane + p];
    }
  }
  return out;
}

} // namespace rdanon
