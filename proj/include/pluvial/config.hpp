#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pluvial/design.hpp"
#include "pluvial/terrain.hpp"

namespace pluvial {

/// Overrides given on the command line; they win over the config file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
  std::optional<unsigned> threads;
};

/// Run configuration read from a JSON file. Relative paths resolve against the
/// config file's directory. Unknown keys are rejected.
///
/// Keys: seed, threads, output_dir, paths {dem, drainage_mask, normals,
/// ensemble, contracts}, terrain {aggregate, drainage_threshold_m2,
/// tan_beta_min, fill_epsilon}, models [model specs], primary_model,
/// evaluation {folds}, decomposition {reference {column, value}},
/// projection {percentiles, variants, clamp}.
struct RunConfig {
  std::uint64_t seed = 1;
  /// 0 selects the hardware concurrency.
  unsigned threads = 0;
  std::filesystem::path output_dir;

  std::optional<std::filesystem::path> dem;
  std::optional<std::filesystem::path> drainage_mask;
  std::optional<std::filesystem::path> normals;
  std::optional<std::filesystem::path> ensemble;
  std::optional<std::filesystem::path> contracts;

  bool aggregate = false;
  TerrainParams terrain;

  std::vector<ModelSpec> models;
  std::string primary_model;

  int folds = 10;

  std::optional<std::pair<std::string, std::string>> reference;

  std::vector<double> percentiles{0.10, 0.50, 0.90};
  bool variants = false;
  ClampPercentiles variant_clamp;

  /// FNV-1a hash (hex) of the effective configuration, excluding the output
  /// directory and thread count.
  std::string hash;

  const ModelSpec& primary() const;
};

/// Environment variable that overrides output_dir (the --out flag wins over it).
inline constexpr const char* kOutputDirEnv = "PLUVIAL_OUTPUT_DIR";

RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir,
                       const ConfigOverrides& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace pluvial
