#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "image.hpp"
#include "latent.hpp"

namespace rdanon {

/// Encoder/decoder pair between 8-bit images and latents.
class ImageCodec {
public:
  virtual ~ImageCodec() = default;

  virtual Latent encode(const ImageBuffer& img) const = 0;
  virtual ImageBuffer decode(const Latent& z) const = 0;

  /// Latent geometry produced for an image of the given geometry.
  virtual Dims latent_dims_for(const Dims& image) const = 0;
};

/// v -> v / 127.5 - 1 on encode; clamp(round((z + 1) * 127.5)) on decode.
/// Latent geometry equals image geometry.
class IdentityCodec final : public ImageCodec {
public:
  static double encode_sample(std::uint8_t v) { return static_cast<double>(v) / 127.5 - 1.0; }

  static std::uint8_t decode_sample(double z) {
    const double v = std::round((z + 1.0) * 127.5);
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }

  Latent encode(const ImageBuffer& img) const override {
    Latent z(img.dims);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = encode_sample(img.samples[i]);
    return z;
  }

  ImageBuffer decode(const Latent& z) const override {
    ImageBuffer img(z.dims());
    for (std::size_t i = 0; i < z.size(); ++i) img.samples[i] = decode_sample(z[i]);
    return img;
  }

  Dims latent_dims_for(const Dims& image) const override { return image; }
};

inline Latent identity_encode(const ImageBuffer& img) { return IdentityCodec{}.encode(img); }
inline ImageBuffer identity_decode(const Latent& z) { return IdentityCodec{}.decode(z); }

} // namespace rdanon
