#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "io.hpp"
#include "latent.hpp"
#include "schedule.hpp"

namespace rdanon {

/// Noise estimate eps_hat(x, t). Implementations must be deterministic and
/// shape-preserving; a trained network would plug in here.
class NoisePredictor {
public:
  virtual ~NoisePredictor() = default;

  virtual Latent predict(const Latent& x, int t) const = 0;

  /// True when predict() ignores the values of x. Steps driven by such a
  /// predictor are exact mutual inverses.
  virtual bool state_independent() const { return false; }
};

class ZeroPredictor final : public NoisePredictor {
public:
  Latent predict(const Latent& x, int) const override { return Latent(x.dims(), 0.0); }
  bool state_independent() const override { return true; }
};

struct AffineCoefficients {
  double gain = 0.0;    // a_t
  double offset = 0.0;  // c_t

  friend bool operator==(const AffineCoefficients&, const AffineCoefficients&) = default;
};

/// eps_hat(x, t) = a_t * x + c_t, one scalar row per timestep.
class AffinePredictor final : public NoisePredictor {
public:
  AffinePredictor() = default;
  explicit AffinePredictor(std::map<int, AffineCoefficients> rows) : rows_(std::move(rows)) {}

  Latent predict(const Latent& x, int t) const override {
    const AffineCoefficients& row = coefficients(t);
    if (row.gain == 0.0) return Latent(x.dims(), row.offset);
    Latent out(x.dims());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = row.gain * x[i] + row.offset;
    return out;
  }

  bool state_independent() const override {
    for (const auto& [t, row] : rows_) {
      if (row.gain != 0.0) return false;
    }
    return true;
  }

  const AffineCoefficients& coefficients(int t) const {
    auto it = rows_.find(t);
    if (it == rows_.end()) {
      throw RangeError("affine predictor has no row for timestep " + std::to_string(t));
    }
    return it->second;
  }

  bool has_row(int t) const { return rows_.contains(t); }
  const std::map<int, AffineCoefficients>& rows() const { return rows_; }

private:
  std::map<int, AffineCoefficients> rows_;
};

/// Posterior-mean noise estimate when every data coordinate is i.i.d.
/// Normal(mu, sigma^2):
///   a_t = sqrt(1 - ab) / (ab * sigma^2 + 1 - ab),  c_t = -a_t * sqrt(ab) * mu.
inline AffineCoefficients gaussian_prior_coefficients(double mu, double sigma,
                                                      double alpha_bar) {
  if (!(sigma > 0.0)) throw RangeError("gaussian prior needs sigma > 0");
  if (alpha_bar >= 1.0) return {};
  const double gain =
      std::sqrt(1.0 - alpha_bar) / (alpha_bar * sigma * sigma + 1.0 - alpha_bar);
  return {gain, -gain * std::sqrt(alpha_bar) * mu};
}

inline AffinePredictor gaussian_prior_predictor(double mu, double sigma,
                                                const AlphaBarSchedule& schedule) {
  if (!(sigma > 0.0)) throw RangeError("gaussian prior needs sigma > 0");
  std::map<int, AffineCoefficients> rows;
  for (int t = 0; t <= schedule.t_train(); ++t) {
    rows.emplace_hint(rows.end(), t,
                      gaussian_prior_coefficients(mu, sigma, schedule.alpha_bar(t)));
  }
  return AffinePredictor(std::move(rows));
}

namespace detail {

inline std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

// Accepts both a bare column and the `name=value` spelling.
inline std::string_view strip_label(std::string_view token, char label) {
  if (token.size() >= 2 && token[0] == label && token[1] == '=') token.remove_prefix(2);
  return token;
}

} // namespace detail

/// Text table: `t a c` per row, whitespace separated, `#` comments.
/// Values are written in shortest round-trip form.
inline std::string format_affine_table(const AffinePredictor& predictor) {
  std::string out = "# t a c\n";
  for (const auto& [t, row] : predictor.rows()) {
    out += std::to_string(t) + '\t' + detail::format_real(row.gain) + '\t' +
           detail::format_real(row.offset) + '\n';
  }
  return out;
}

inline AffinePredictor parse_affine_table(std::string_view text) {
  std::map<int, AffineCoefficients> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.empty()) continue;
    const std::string where = "affine table line " + std::to_string(line_no) + ": ";
    if (tokens.size() != 3) throw FormatError(where + "expected 3 columns `t a c`");
    int t = 0;
    AffineCoefficients row;
    if (!detail::parse_number(detail::strip_label(tokens[0], 't'), t) || t < 0) {
      throw FormatError(where + "bad timestep '" + tokens[0] + "'");
    }
    if (!detail::parse_number(detail::strip_label(tokens[1], 'a'), row.gain) ||
        !detail::parse_number(detail::strip_label(tokens[2], 'c'), row.offset) ||
        !std::isfinite(row.gain) || !std::isfinite(row.offset)) {
      throw FormatError(where + "bad coefficient");
    }
    if (!rows.emplace(t, row).second) {
      throw FormatError(where + "duplicate timestep " + std::to_string(t));
    }
  }
  if (rows.empty()) throw FormatError("affine table has no rows");
  return AffinePredictor(std::move(rows));
}

inline void save_affine_table(const AffinePredictor& predictor,
                              const std::filesystem::path& path) {
  write_file_atomic(path, format_affine_table(predictor));
}

inline AffinePredictor load_affine_table(const std::filesystem::path& path) {
  return parse_affine_table(read_file(path));
}

/// `zero` | `gaussian:mu=<real>,sigma=<real>` | `file:<path>`
inline std::shared_ptr<const NoisePredictor> make_predictor(std::string_view spec,
                                                            const AlphaBarSchedule& schedule) {
  if (spec == "zero") return std::make_shared<ZeroPredictor>();
  if (spec.starts_with("file:")) {
    spec.remove_prefix(5);
    if (spec.empty()) throw FormatError("predictor spec 'file:' needs a path");
    return std::make_shared<AffinePredictor>(load_affine_table(std::string(spec)));
  }
  if (spec.starts_with("gaussian:")) {
    spec.remove_prefix(9);
    double mu = 0.0;
    double sigma = 1.0;
    bool have_mu = false;
    bool have_sigma = false;
    while (!spec.empty()) {
      const auto comma = spec.find(',');
      std::string_view item = spec.substr(0, comma);
      spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) break;
      const auto key = item.substr(0, eq);
      const auto value = item.substr(eq + 1);
      if (key == "mu" && detail::parse_number(value, mu)) {
        have_mu = true;
      } else if (key == "sigma" && detail::parse_number(value, sigma)) {
        have_sigma = true;
      } else {
        throw FormatError("bad gaussian predictor parameter '" + std::string(item) + "'");
      }
    }
    if (!have_mu || !have_sigma) {
      throw FormatError("gaussian predictor spec needs mu=<real>,sigma=<real>");
    }
    return std::make_shared<AffinePredictor>(gaussian_prior_predictor(mu, sigma, schedule));
  }
  throw FormatError("unknown predictor spec '" + std::string(spec) + "'");
}

} // namespace rdanon
