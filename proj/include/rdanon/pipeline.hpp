#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "codec.hpp"
#include "ddim.hpp"
#include "detail/toml_lite.hpp"
#include "diagnostics.hpp"
#include "error.hpp"
#include "image.hpp"
#include "io.hpp"
#include "keying.hpp"
#include "mask.hpp"
#include "predictor.hpp"
#include "schedule.hpp"

namespace rdanon {

struct PipelineConfig {
  ScheduleConfig schedule;
  std::string predictor = "zero";
  std::string codec = "identity";
  int mask_threshold = 128;

  /// Missing keys keep their defaults.
  static PipelineConfig from_toml(std::string_view text) {
    const auto table = detail::TomlTable::parse(text);
    PipelineConfig cfg;
    auto as_int = [](long long v, const char* key) {
      if (v < 1 || v > 1'000'000) {
        throw RangeError(std::string("config key '") + key + "' out of range");
      }
      return static_cast<int>(v);
    };
    if (auto v = table.get_integer("t_train")) cfg.schedule.t_train = as_int(*v, "t_train");
    if (auto v = table.get_real("beta_start")) cfg.schedule.beta_start = *v;
    if (auto v = table.get_real("beta_end")) cfg.schedule.beta_end = *v;
    if (auto v = table.get_integer("steps")) cfg.schedule.steps = as_int(*v, "steps");
    if (auto v = table.get_string("predictor")) cfg.predictor = *v;
    if (auto v = table.get_string("codec")) cfg.codec = *v;
    if (auto v = table.get_integer("mask_threshold")) {
      if (*v < 0 || *v > 256) throw RangeError("config key 'mask_threshold' out of range");
      cfg.mask_threshold = static_cast<int>(*v);
    }
    return cfg;
  }

  static PipelineConfig load(const std::filesystem::path& path) {
    try {
      return from_toml(read_file(path));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
};

inline std::shared_ptr<const ImageCodec> make_codec(std::string_view name) {
  if (name == "identity") return std::make_shared<IdentityCodec>();
  throw FormatError("unknown codec '" + std::string(name) + "'");
}

/// Latent-space record of one anonymization pass.
struct AnonymizeTrace {
  Trajectory trajectory;
  Latent keyed_endpoint;
  Latent output;
};

struct RegionStats {
  std::size_t samples = 0;
  double mse = 0.0;
  double max_abs_error = 0.0;

  double psnr() const { return psnr_from_mse(mse); }
};

struct RoundtripReport {
  RegionStats overall;
  RegionStats masked;
  RegionStats unmasked;
  std::size_t latent_mask_area = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline nlohmann::json psnr_json(double db) {
  if (std::isinf(db)) return "inf";
  return db;
}

inline nlohmann::json region_json(const RegionStats& r) {
  if (r.samples == 0) return nullptr;
  return {{"samples", r.samples},
          {"mse", r.mse},
          {"psnr", psnr_json(r.psnr())},
          {"max_abs_error", r.max_abs_error}};
}

} // namespace detail

inline nlohmann::json to_json(const RoundtripReport& r) {
  return {{"mse", r.overall.mse},
          {"psnr", detail::psnr_json(r.overall.psnr())},
          {"max_abs_error", r.overall.max_abs_error},
          {"masked", detail::region_json(r.masked)},
          {"unmasked", detail::region_json(r.unmasked)},
          {"latent_mask_area", r.latent_mask_area},
          {"warnings", r.warnings}};
}

/// Invert, key the masked noise endpoint, regenerate with re-injection of
/// unmasked content. Immutable once built; one instance can serve
/// concurrent runs.
class Pipeline {
public:
  Pipeline(AlphaBarSchedule schedule, TimestepPlan plan,
           std::shared_ptr<const NoisePredictor> predictor,
           std::shared_ptr<const ImageCodec> codec = std::make_shared<IdentityCodec>())
      : schedule_(std::move(schedule)),
        plan_(std::move(plan)),
        predictor_(std::move(predictor)),
        codec_(std::move(codec)) {
    if (!predictor_ || !codec_) throw RangeError("pipeline needs a predictor and a codec");
    if (plan_.last() > schedule_.t_train()) {
      throw RangeError("plan exceeds schedule length");
    }
  }

  static Pipeline from_config(const PipelineConfig& cfg) {
    AlphaBarSchedule schedule = cfg.schedule.schedule();
    auto predictor = make_predictor(cfg.predictor, schedule);
    return Pipeline(std::move(schedule), cfg.schedule.plan(), std::move(predictor),
                    make_codec(cfg.codec));
  }

  const AlphaBarSchedule& schedule() const { return schedule_; }
  const TimestepPlan& plan() const { return plan_; }
  const NoisePredictor& predictor() const { return *predictor_; }
  const ImageCodec& codec() const { return *codec_; }

  LatentMask latent_mask_for(const ImageBuffer& img, const PixelMask& mask) const {
    if (mask.height() != img.dims.height || mask.width() != img.dims.width) {
      throw DimsError("mask " + std::to_string(mask.height()) + "x" +
                      std::to_string(mask.width()) + " does not match image " +
                      std::to_string(img.dims.height) + "x" + std::to_string(img.dims.width));
    }
    const Dims latent = codec_->latent_dims_for(img.dims);
    return downscale_to_latent(mask, latent.height, latent.width);
  }

  Trajectory invert(const Latent& z0) const {
    return rdanon::invert(z0, plan_, *predictor_, schedule_);
  }

  Latent generate(const Latent& z_T, std::optional<Reinjection> reinjection = std::nullopt) const {
    return rdanon::generate(z_T, plan_, *predictor_, schedule_, reinjection);
  }

  /// Anonymization and de-anonymization are the same latent procedure.
  AnonymizeTrace anonymize_latent(const Latent& z0, const SecretKey& key,
                                  const LatentMask& mask) const {
    detail::require_key_fits(key, z0.dims());
    require_mask_fits(mask, z0.dims());
    AnonymizeTrace trace;
    trace.trajectory = invert(z0);
    trace.keyed_endpoint = apply_key_masked(trace.trajectory.endpoint(), key, mask);
    trace.output = generate(trace.keyed_endpoint, Reinjection{trace.trajectory, mask});
    return trace;
  }

  ImageBuffer anonymize(const ImageBuffer& img, const SecretKey& key,
                        const PixelMask& mask) const {
    const LatentMask latent_mask = latent_mask_for(img, mask);
    const Latent z0 = codec_->encode(img);
    return codec_->decode(anonymize_latent(z0, key, latent_mask).output);
  }

  ImageBuffer deanonymize(const ImageBuffer& img_ano, const SecretKey& key,
                          const PixelMask& mask) const {
    return anonymize(img_ano, key, mask);
  }

  Latent reconstruct_latent(const Latent& z0) const { return generate(invert(z0).endpoint()); }

  ImageBuffer reconstruct(const ImageBuffer& img) const {
    return codec_->decode(reconstruct_latent(codec_->encode(img)));
  }

  /// anonymize then deanonymize with the same key, compared to the input and
  /// split by the latent mask footprint in image space.
  RoundtripReport roundtrip_report(const ImageBuffer& img, const SecretKey& key,
                                   const PixelMask& mask) const {
    const LatentMask latent_mask = latent_mask_for(img, mask);
    const ImageBuffer recovered = deanonymize(anonymize(img, key, mask), key, mask);

    RoundtripReport report;
    report.latent_mask_area = latent_mask.area();
    if (report.latent_mask_area == 0) report.warnings.emplace_back("no-op anonymization");

    const Dims& d = img.dims;
    const std::size_t fy = d.height / latent_mask.height();
    const std::size_t fx = d.width / latent_mask.width();
    double sq_all = 0.0, sq_in = 0.0, sq_out = 0.0;
    for (std::size_t c = 0; c < d.channels; ++c) {
      for (std::size_t y = 0; y < d.height; ++y) {
        for (std::size_t x = 0; x < d.width; ++x) {
          const double e = std::abs(static_cast<double>(img.at(c, y, x)) -
                                    static_cast<double>(recovered.at(c, y, x)));
          RegionStats& region = latent_mask(y / fy, x / fx) ? report.masked : report.unmasked;
          double& sq = latent_mask(y / fy, x / fx) ? sq_in : sq_out;
          ++region.samples;
          sq += e * e;
          region.max_abs_error = std::max(region.max_abs_error, e);
          ++report.overall.samples;
          sq_all += e * e;
          report.overall.max_abs_error = std::max(report.overall.max_abs_error, e);
        }
      }
    }
    auto finish = [](RegionStats& r, double sq) {
      if (r.samples > 0) r.mse = sq / static_cast<double>(r.samples);
    };
    finish(report.overall, sq_all);
    finish(report.masked, sq_in);
    finish(report.unmasked, sq_out);
    return report;
  }

private:
  AlphaBarSchedule schedule_;
  TimestepPlan plan_;
  std::shared_ptr<const NoisePredictor> predictor_;
  std::shared_ptr<const ImageCodec> codec_;
};

} // namespace rdanon
