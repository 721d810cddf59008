#pragma once

#include <bit>
#include <cerrno>
#include <cstdint>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <sys/random.h>

#include "detail/base64.hpp"
#include "error.hpp"
#include "io.hpp"
#include "latent.hpp"
#include "mask.hpp"

namespace rdanon {

/// Seed for reproducible key generation. Keys made this way are only as
/// secret as the seed; use the OS-entropy overload for real keys.
struct TestSeed {
  std::uint64_t value = 0;
};

/// Binary vector b over every latent coordinate, packed MSB-first in
/// channel-major, row-major order. Padding bits in the last byte are zero.
class SecretKey {
public:
  SecretKey(Dims dims, std::vector<std::uint8_t> packed)
      : dims_(dims), packed_(std::move(packed)) {
    if (dims_.empty()) throw DimsError("key dims must be positive");
    if (packed_.size() != byte_count(dims_)) {
      throw FormatError("key payload has " + std::to_string(packed_.size()) +
                        " bytes, dims " + dims_.str() + " need " +
                        std::to_string(byte_count(dims_)));
    }
    if (const std::size_t spare = packed_.size() * 8 - dims_.count(); spare > 0) {
      const auto pad_mask = static_cast<std::uint8_t>((1u << spare) - 1u);
      if ((packed_.back() & pad_mask) != 0) {
        throw FormatError("key padding bits are not zero");
      }
    }
  }

  /// All bits set, i.e. every sign +1.
  static SecretKey identity(Dims dims) {
    SecretKey key(dims, std::vector<std::uint8_t>(byte_count(dims), 0));
    for (std::size_t i = 0; i < dims.count(); ++i) key.set_bit(i, true);
    return key;
  }

  static constexpr std::size_t byte_count(const Dims& dims) { return (dims.count() + 7) / 8; }

  const Dims& dims() const { return dims_; }
  std::size_t bit_count() const { return dims_.count(); }
  const std::vector<std::uint8_t>& packed() const { return packed_; }

  bool bit(std::size_t i) const { return (packed_[i / 8] >> (7 - i % 8)) & 1u; }

  /// Rademacher view k = 2b - 1.
  int sign(std::size_t i) const { return bit(i) ? 1 : -1; }

  std::size_t popcount() const {
    std::size_t n = 0;
    for (auto byte : packed_) n += static_cast<std::size_t>(std::popcount(byte));
    return n;
  }

  SecretKey complement() const {
    SecretKey out = *this;
    for (std::size_t i = 0; i < bit_count(); ++i) out.set_bit(i, !bit(i));
    return out;
  }

  friend bool operator==(const SecretKey&, const SecretKey&) = default;

private:
  void set_bit(std::size_t i, bool on) {
    const auto m = static_cast<std::uint8_t>(1u << (7 - i % 8));
    if (on) {
      packed_[i / 8] |= m;
    } else {
      packed_[i / 8] &= static_cast<std::uint8_t>(~m);
    }
  }

  Dims dims_;
  std::vector<std::uint8_t> packed_;
};

namespace detail {

inline void clear_padding(std::vector<std::uint8_t>& packed, const Dims& dims) {
  if (const std::size_t spare = packed.size() * 8 - dims.count(); spare > 0) {
    packed.back() &= static_cast<std::uint8_t>(~((1u << spare) - 1u));
  }
}

inline void require_key_fits(const SecretKey& key, const Dims& latent) {
  if (key.dims() != latent) {
    throw DimsError("key/latent dims mismatch: key " + key.dims().str() + ", latent " +
                    latent.str());
  }
}

} // namespace detail

/// Each bit Bernoulli(0.5) from the operating system's CSPRNG.
inline SecretKey keygen(Dims dims) {
  if (dims.empty()) throw DimsError("key dims must be positive");
  std::vector<std::uint8_t> packed(SecretKey::byte_count(dims));
  std::size_t filled = 0;
  while (filled < packed.size()) {
    const ssize_t got = ::getrandom(packed.data() + filled, packed.size() - filled, 0);
    if (got < 0) {
      if (errno == EINTR) continue;
      throw Error("getrandom failed while generating key");
    }
    filled += static_cast<std::size_t>(got);
  }
  detail::clear_padding(packed, dims);
  return SecretKey(dims, std::move(packed));
}

/// Reproducible key from a 64-bit seed (mt19937_64, little-endian bytes).
inline SecretKey keygen(Dims dims, TestSeed seed) {
  if (dims.empty()) throw DimsError("key dims must be positive");
  std::mt19937_64 engine(seed.value);
  std::vector<std::uint8_t> packed(SecretKey::byte_count(dims));
  for (std::size_t i = 0; i < packed.size(); i += 8) {
    const std::uint64_t word = engine();
    for (std::size_t j = 0; j < 8 && i + j < packed.size(); ++j) {
      packed[i + j] = static_cast<std::uint8_t>(word >> (8 * j));
    }
  }
  detail::clear_padding(packed, dims);
  return SecretKey(dims, std::move(packed));
}

inline std::vector<int> to_rademacher(const SecretKey& key) {
  std::vector<int> k(key.bit_count());
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = 2 * static_cast<int>(key.bit(i)) - 1;
  return k;
}

/// k (.) z. Negation is exact, so applying the same key twice is the
/// bitwise identity.
inline Latent apply_key(const Latent& z, const SecretKey& key) {
  detail::require_key_fits(key, z.dims());
  Latent out = z;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!key.bit(i)) out[i] = -out[i];
  }
  return out;
}

/// M (.) (k (.) z) + (1 - M) (.) z with the spatial mask broadcast over channels.
inline Latent apply_key_masked(const Latent& z, const SecretKey& key, const LatentMask& mask) {
  detail::require_key_fits(key, z.dims());
  require_mask_fits(mask, z.dims());
  Latent out = z;
  const std::size_t plane = z.dims().plane();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask[i % plane] && !key.bit(i)) out[i] = -out[i];
  }
  return out;
}

inline std::size_t key_hamming(const SecretKey& a, const SecretKey& b) {
  if (a.dims() != b.dims()) {
    throw DimsError("key dims mismatch: " + a.dims().str() + " vs " + b.dims().str());
  }
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.packed().size(); ++i) {
    n += static_cast<std::size_t>(std::popcount(static_cast<std::uint8_t>(a.packed()[i] ^ b.packed()[i])));
  }
  return n;
}

/// Key file text:
///   RDK1
///   dims <C> <H> <W>
///   bits <base64 of packed bits>
inline std::string format_key(const SecretKey& key) {
  const Dims& d = key.dims();
  return "RDK1\ndims " + std::to_string(d.channels) + " " + std::to_string(d.height) + " " +
         std::to_string(d.width) + "\nbits " + detail::base64_encode(key.packed()) + "\n";
}

inline SecretKey parse_key(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) throw FormatError(std::string("key file truncated: missing ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };

  if (next_line("magic") != "RDK1") {
    throw FormatError("unsupported key format '" + line + "' (expected RDK1)");
  }

  std::istringstream dims_line(next_line("dims line"));
  std::string tag;
  long long c = 0, h = 0, w = 0;
  std::string extra;
  if (!(dims_line >> tag >> c >> h >> w) || tag != "dims" || (dims_line >> extra)) {
    throw FormatError("malformed key dims line '" + line + "'");
  }
  if (c <= 0 || h <= 0 || w <= 0) throw FormatError("key dims must be positive");
  const Dims dims{static_cast<std::size_t>(c), static_cast<std::size_t>(h),
                  static_cast<std::size_t>(w)};

  const std::string bits_line = next_line("bits line");
  if (!bits_line.starts_with("bits ")) throw FormatError("malformed key bits line");
  auto payload = detail::base64_decode(std::string_view(bits_line).substr(5));
  if (!payload) throw FormatError("key bits are not valid base64");
  if (payload->size() != SecretKey::byte_count(dims)) {
    throw FormatError("key bit count inconsistent with dims " + dims.str() + ": " +
                      std::to_string(payload->size()) + " bytes, expected " +
                      std::to_string(SecretKey::byte_count(dims)));
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line != "\r") throw FormatError("unexpected content after key bits");
  }
  return SecretKey(dims, std::move(*payload));
}

inline void save_key(const SecretKey& key, const std::filesystem::path& path) {
  write_file_atomic(path, format_key(key));
}

inline SecretKey load_key(const std::filesystem::path& path) {
  try {
    return parse_key(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

} // namespace rdanon
