#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage error,
// 2 data/format error, 3 numeric abort.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdanon/rdanon.hpp"

namespace rdanon::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct PipelineArgs {
  std::string input;
  std::string mask;
  std::string key;
  std::string config;
  std::string output;
  std::string predictor;
  std::string report;
};

inline PipelineConfig load_config(const PipelineArgs& args) {
  PipelineConfig cfg = args.config.empty() ? PipelineConfig{} : PipelineConfig::load(args.config);
  if (!args.predictor.empty()) cfg.predictor = args.predictor;
  return cfg;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Key-conditioned reversible image anonymization"};
  app.require_subcommand(1);

  // keygen
  auto* keygen_cmd = app.add_subcommand("keygen", "Generate a secret key");
  std::vector<std::size_t> dims;
  std::optional<std::uint64_t> seed;
  std::string key_out;
  keygen_cmd->add_option("--dims", dims, "Latent dims C H W")->expected(3)->required();
  keygen_cmd->add_option("--seed", seed, "Deterministic seed (testing only, NOT secret)");
  keygen_cmd->add_option("-o,--output", key_out, "Key file to write")->required();

  PipelineArgs pa;
  auto add_common = [&](CLI::App* cmd, bool needs_key, bool needs_output) {
    cmd->add_option("-i,--input", pa.input, "Input PGM/PPM image")->required();
    if (needs_key) {
      cmd->add_option("-m,--mask", pa.mask, "Grayscale PGM mask, same size as input")
          ->required();
      cmd->add_option("-k,--key", pa.key, "Key file")->required();
    }
    cmd->add_option("-c,--config", pa.config, "Schedule/pipeline TOML config");
    cmd->add_option("-p,--predictor", pa.predictor,
                    "zero | gaussian:mu=<real>,sigma=<real> | file:<path>");
    if (needs_output) cmd->add_option("-o,--output", pa.output, "Output image")->required();
  };
  auto* anonymize_cmd = app.add_subcommand("anonymize", "Anonymize the masked region");
  add_common(anonymize_cmd, true, true);
  auto* deanonymize_cmd = app.add_subcommand("deanonymize", "Undo anonymization with the key");
  add_common(deanonymize_cmd, true, true);
  auto* reconstruct_cmd = app.add_subcommand("reconstruct", "Invert and regenerate, no key");
  add_common(reconstruct_cmd, false, true);
  auto* roundtrip_cmd = app.add_subcommand("roundtrip", "Anonymize, deanonymize, report errors");
  add_common(roundtrip_cmd, true, false);
  roundtrip_cmd->add_option("--report", pa.report, "JSON report path")->required();

  auto* stats_cmd = app.add_subcommand("stats", "Statistical self-checks");
  bool gaussianity = false;
  std::size_t n = 100000;
  std::string stats_report;
  stats_cmd->add_flag("--gaussianity", gaussianity, "KS test of a keyed standard-normal draw")
      ->required();
  stats_cmd->add_option("--n", n, "Sample count")->check(CLI::Range(std::size_t{8}, std::size_t{100'000'000}));
  stats_cmd->add_option("--seed", seed, "Deterministic seed");
  stats_cmd->add_option("--report", stats_report, "JSON report path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (keygen_cmd->parsed()) {
      const Dims d{dims[0], dims[1], dims[2]};
      const SecretKey key = seed ? keygen(d, TestSeed{*seed}) : keygen(d);
      save_key(key, key_out);
      out << "wrote " << key.bit_count() << "-bit key to " << key_out << "\n";
      return kOk;
    }

    if (stats_cmd->parsed()) {
      std::mt19937_64 engine(seed ? *seed : std::random_device{}());
      std::normal_distribution<double> normal;
      Latent eps(Dims{1, 1, n});
      for (double& v : eps.values()) v = normal(engine);
      const SecretKey key = seed ? keygen(eps.dims(), TestSeed{*seed + 1}) : keygen(eps.dims());
      const Latent keyed = apply_key(eps, key);
      const GaussianityReport report = ks_standard_normal(keyed.values());
      write_json(stats_report, to_json(report));
      out << "ks_stat=" << report.ks_stat << " ks_crit=" << report.ks_crit
          << " mean=" << report.mean << " var=" << report.var
          << (report.pass() ? " PASS" : " FAIL") << "\n";
      return kOk;
    }

    const PipelineConfig cfg = load_config(pa);
    const Pipeline pipeline = Pipeline::from_config(cfg);
    const ImageBuffer img = read_pnm(pa.input);

    if (reconstruct_cmd->parsed()) {
      write_pnm(pipeline.reconstruct(img), pa.output);
      return kOk;
    }

    const PixelMask mask = load_pixel_mask(pa.mask, cfg.mask_threshold);
    const SecretKey key = load_key(pa.key);

    if (anonymize_cmd->parsed()) {
      write_pnm(pipeline.anonymize(img, key, mask), pa.output);
      return kOk;
    }
    if (deanonymize_cmd->parsed()) {
      write_pnm(pipeline.deanonymize(img, key, mask), pa.output);
      return kOk;
    }
    if (roundtrip_cmd->parsed()) {
      const RoundtripReport report = pipeline.roundtrip_report(img, key, mask);
      write_json(pa.report, to_json(report));
      for (const auto& w : report.warnings) err << "warning: " << w << "\n";
      out << "mse=" << report.overall.mse << " max_abs_error=" << report.overall.max_abs_error
          << "\n";
      return kOk;
    }
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  err << "error: no subcommand handled\n";
  return kUsage;
}

} // namespace rdanon::cli
