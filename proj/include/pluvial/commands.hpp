#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pluvial/config.hpp"

namespace pluvial {

inline constexpr const char* kVersion = "0.1.0";

/// Files produced by a command, relative to the output directory.
struct CommandResult {
  std::vector<std::filesystem::path> outputs;
  std::vector<std::string> warnings;
};

/// Each command reads its inputs from the config paths and earlier commands'
/// outputs, writes only under the output directory, and records a manifest
/// <command>_manifest.json (config hash, seed, versions, output hashes).
///
/// Output layout:
///   terrain/{slope,twi,hand,upslope_area}.asc, terrain/terrain_summary.json
///   attached_contracts.csv, attach_report.json
///   models/<label>.json, models/<label>_fitted.csv, models/<label>_re_qq.csv
///   predictions.csv, contract_predictions.csv
///   decomposition.csv, decomposition.json, maps/<group>.asc
///   scores.csv, cv_scores.csv
///   projection/<rcp>_<period>/{p10,p50,p90}.asc, .../members/<id>/...,
///   projection/region_ratios.csv
CommandResult cmd_terrain(const RunConfig& c);
CommandResult cmd_attach(const RunConfig& c);
CommandResult cmd_fit(const RunConfig& c);
CommandResult cmd_predict(const RunConfig& c);
CommandResult cmd_decompose(const RunConfig& c);
CommandResult cmd_evaluate(const RunConfig& c);
CommandResult cmd_cv(const RunConfig& c);
CommandResult cmd_project(const RunConfig& c);

/// Runs a command by name. Throws ValidationError for an unknown name.
CommandResult run_command(const std::string& name, const RunConfig& c);

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"terrain", "attach", "fit",  "predict",
                                              "decompose", "evaluate", "cv", "project"};
  return names;
}

/// File name of a percentile grid, e.g. 0.1 -> p10, 0.025 -> p2.5.
std::string percentile_name(double p);

}  // namespace pluvial
