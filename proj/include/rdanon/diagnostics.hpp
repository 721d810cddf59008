#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "image.hpp"
#include "latent.hpp"
#include "mask.hpp"

namespace rdanon {

inline double mse(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_dims(a.dims, b.dims, "mse: image dims mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double d = static_cast<double>(a.samples[i]) - static_cast<double>(b.samples[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.samples.size());
}

/// PSNR in dB for 8-bit data; +infinity when the mean squared error is zero.
inline double psnr_from_mse(double mean_squared_error) {
  if (mean_squared_error <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mean_squared_error);
}

inline double psnr(const ImageBuffer& a, const ImageBuffer& b) { return psnr_from_mse(mse(a, b)); }

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct GaussianityReport {
  std::size_t n = 0;
  double ks_stat = 0.0;
  double ks_crit = 0.0;
  double mean = 0.0;
  double var = 0.0;
  bool ks_pass = false;
  bool mean_pass = false;
  bool var_pass = false;

  bool pass() const { return ks_pass && mean_pass && var_pass; }
};

/// One-sample Kolmogorov-Smirnov test against N(0, 1) at alpha = 0.05 using
/// the asymptotic critical value 1.36 / sqrt(n), plus 3-sigma checks on the
/// sample mean and the unbiased sample variance.
inline GaussianityReport ks_standard_normal(std::span<const double> samples) {
  if (samples.size() < 8) {
    throw RangeError("KS test needs at least 8 samples, got " + std::to_string(samples.size()));
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = standard_normal_cdf(sorted[i]);
    const double di = static_cast<double>(i);
    d = std::max({d, (di + 1.0) / n - cdf, cdf - di / n});
  }

  GaussianityReport r;
  r.n = sorted.size();
  r.ks_stat = d;
  r.ks_crit = 1.36 / std::sqrt(n);
  r.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : sorted) ss += (v - r.mean) * (v - r.mean);
  r.var = ss / (n - 1.0);
  r.ks_pass = r.ks_stat < r.ks_crit;
  r.mean_pass = std::abs(r.mean) <= 3.0 / std::sqrt(n);
  r.var_pass = std::abs(r.var - 1.0) <= 3.0 * std::sqrt(2.0 / n);
  return r;
}

inline nlohmann::json to_json(const GaussianityReport& r) {
  return {{"n", r.n},           {"ks_stat", r.ks_stat},     {"ks_crit", r.ks_crit},
          {"mean", r.mean},     {"var", r.var},             {"pass", r.pass()},
          {"ks_pass", r.ks_pass}, {"mean_pass", r.mean_pass}, {"var_pass", r.var_pass}};
}

/// Fraction of masked coordinates where a and b share a sign. A zero on
/// either side counts as agreement.
inline double sign_agreement(const Latent& a, const Latent& b, const LatentMask& mask) {
  require_same_dims(a.dims(), b.dims(), "sign_agreement: latent shape mismatch");
  require_mask_fits(mask, a.dims());
  const std::size_t plane = a.dims().plane();
  std::size_t total = 0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!mask[i % plane]) continue;
    ++total;
    if (a[i] == 0.0 || b[i] == 0.0 || std::signbit(a[i]) == std::signbit(b[i])) ++agree;
  }
  if (total == 0) throw RangeError("sign_agreement: mask is empty");
  return static_cast<double>(agree) / static_cast<double>(total);
}

inline double latent_cosine(const Latent& a, const Latent& b) {
  require_same_dims(a.dims(), b.dims(), "latent_cosine: latent shape mismatch");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw RangeError("latent_cosine: zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

} // namespace rdanon
