#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace rdanon {

/// Channels x height x width. Storage order everywhere is channel-major,
/// then row-major within a channel.
struct Dims {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  constexpr std::size_t count() const { return channels * height * width; }
  constexpr std::size_t plane() const { return height * width; }
  constexpr bool empty() const { return count() == 0; }

  friend constexpr bool operator==(const Dims&, const Dims&) = default;

  std::string str() const {
    return "(" + std::to_string(channels) + "," + std::to_string(height) + "," +
           std::to_string(width) + ")";
  }
};

/// Real-valued C x H x W grid in double precision.
class Latent {
public:
  Latent() = default;

  explicit Latent(Dims dims, double fill = 0.0)
      : dims_(dims), data_(dims.count(), fill) {}

  Latent(Dims dims, std::vector<double> values) : dims_(dims), data_(std::move(values)) {
    if (data_.size() != dims_.count()) {
      throw DimsError("latent value count " + std::to_string(data_.size()) +
                      " does not match dims " + dims_.str());
    }
  }

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  std::span<double> values() & { return data_; }
  std::span<const double> values() const& { return data_; }
  // A span into a temporary would dangle.
  std::span<const double> values() && = delete;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * dims_.height + y) * dims_.width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * dims_.height + y) * dims_.width + x];
  }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  /// Bitwise comparison of values (so -0.0 != +0.0 and NaN payloads matter).
  friend bool operator==(const Latent& a, const Latent& b) {
    if (a.dims_ != b.dims_) return false;
    for (std::size_t i = 0; i < a.data_.size(); ++i) {
      if (std::bit_cast<unsigned long long>(a.data_[i]) !=
          std::bit_cast<unsigned long long>(b.data_[i])) {
        return false;
      }
    }
    return true;
  }

private:
  Dims dims_;
  std::vector<double> data_;
};

inline void require_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (a != b) {
    throw DimsError(std::string(what) + ": " + a.str() + " vs " + b.str());
  }
}

} // namespace rdanon
