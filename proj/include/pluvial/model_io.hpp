#pragma once

#include <filesystem>

#include <json.hpp>

#include "pluvial/gam.hpp"

namespace pluvial {

inline constexpr const char* kModelFormat = "pluvial-gam";
inline constexpr int kModelVersion = 1;

nlohmann::json spec_to_json(const ModelSpec& spec);
/// Parses a model spec; unknown keys are rejected.
ModelSpec spec_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const FittedModel& m);
FittedModel model_from_json(const nlohmann::json& j);

void save_model(const FittedModel& m, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

/// Throws ValidationError naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& where);

/// Writes text to a file, replacing it.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pluvial
