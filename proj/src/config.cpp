#include "pluvial/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "pluvial/errors.hpp"
#include "pluvial/model_io.hpp"

namespace pluvial {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const json& j, const std::filesystem::path& base, const std::string& key) {
  if (!j.is_string()) throw ValidationError("config: '" + key + "' must be a path string");
  std::filesystem::path p = j.get<std::string>();
  if (p.empty()) throw ValidationError("config: '" + key + "' is empty");
  if (p.is_relative()) p = base / p;
  return p.lexically_normal();
}

std::filesystem::path existing(const json& j, const std::filesystem::path& base, const std::string& key) {
  auto p = resolve(j, base, key);
  if (!std::filesystem::exists(p)) throw ValidationError("config: " + key + " path does not exist: " + p.string());
  return p;
}

template <typename T>
T number(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config: '" + key + "' has the wrong type");
  }
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const ModelSpec& RunConfig::primary() const {
  if (models.empty()) throw ValidationError("config lists no models");
  for (const auto& m : models)
    if (m.label == primary_model) return m;
  throw ValidationError("primary_model '" + primary_model + "' is not among the configured models");
}

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir, const ConfigOverrides& overrides) {
  reject_unknown_keys(j, {"seed", "threads", "output_dir", "paths", "terrain", "models", "primary_model",
                          "evaluation", "decomposition", "projection"},
                      "config");
  RunConfig c;
  json effective = j;
  if (j.contains("seed")) {
    const auto s = number<std::int64_t>(j.at("seed"), "seed");
    if (s < 0) throw ValidationError("config: seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (overrides.seed) c.seed = *overrides.seed;
  effective["seed"] = c.seed;
  if (j.contains("threads")) {
    const auto t = number<std::int64_t>(j.at("threads"), "threads");
    if (t < 0 || t > 1024) throw ValidationError("config: threads must be in [0, 1024]");
    c.threads = static_cast<unsigned>(t);
  }
  if (overrides.threads) c.threads = *overrides.threads;

  c.output_dir = base_dir / "out";
  if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir"), base_dir, "output_dir");
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) c.output_dir = std::filesystem::path(env);
  if (overrides.output_dir) c.output_dir = *overrides.output_dir;
  c.output_dir = c.output_dir.lexically_normal();

  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    reject_unknown_keys(p, {"dem", "drainage_mask", "normals", "ensemble", "contracts"}, "config paths");
    if (p.contains("dem")) c.dem = existing(p.at("dem"), base_dir, "dem");
    if (p.contains("drainage_mask")) c.drainage_mask = existing(p.at("drainage_mask"), base_dir, "drainage_mask");
    if (p.contains("normals")) c.normals = existing(p.at("normals"), base_dir, "normals");
    if (p.contains("ensemble")) c.ensemble = existing(p.at("ensemble"), base_dir, "ensemble");
    if (p.contains("contracts")) c.contracts = existing(p.at("contracts"), base_dir, "contracts");
  }

  if (j.contains("terrain")) {
    const auto& t = j.at("terrain");
    reject_unknown_keys(t, {"aggregate", "drainage_threshold_m2", "tan_beta_min", "fill_epsilon"}, "config terrain");
    if (t.contains("aggregate")) c.aggregate = number<bool>(t.at("aggregate"), "aggregate");
    if (t.contains("drainage_threshold_m2"))
      c.terrain.drainage_threshold_m2 = number<double>(t.at("drainage_threshold_m2"), "drainage_threshold_m2");
    if (t.contains("tan_beta_min")) c.terrain.tan_beta_min = number<double>(t.at("tan_beta_min"), "tan_beta_min");
    if (t.contains("fill_epsilon")) c.terrain.fill_epsilon = number<double>(t.at("fill_epsilon"), "fill_epsilon");
    if (!(c.terrain.drainage_threshold_m2 > 0.0))
      throw ValidationError("config: drainage_threshold_m2 must be positive");
    if (!(c.terrain.tan_beta_min > 0.0 && c.terrain.tan_beta_min <= 1.0))
      throw ValidationError("config: tan_beta_min must be in (0, 1]");
    if (!(c.terrain.fill_epsilon >= 0.0 && c.terrain.fill_epsilon < 1.0))
      throw ValidationError("config: fill_epsilon must be in [0, 1)");
  }

  if (j.contains("models")) {
    if (!j.at("models").is_array()) throw ValidationError("config: 'models' must be a list");
    std::set<std::string> labels;
    for (const auto& mj : j.at("models")) {
      ModelSpec s = spec_from_json(mj);
      s.validate();
      if (!labels.insert(s.label).second) throw ValidationError("config: duplicate model label '" + s.label + "'");
      c.models.push_back(std::move(s));
    }
  }
  if (j.contains("primary_model")) {
    c.primary_model = number<std::string>(j.at("primary_model"), "primary_model");
  } else if (!c.models.empty()) {
    c.primary_model = c.models.front().label;
  }
  if (!c.models.empty()) (void)c.primary();

  if (j.contains("evaluation")) {
    const auto& e = j.at("evaluation");
    reject_unknown_keys(e, {"folds"}, "config evaluation");
    if (e.contains("folds")) c.folds = number<int>(e.at("folds"), "folds");
    if (c.folds < 2 || c.folds > 1000) throw ValidationError("config: folds must be in [2, 1000]");
  }

  if (j.contains("decomposition")) {
    const auto& d = j.at("decomposition");
    reject_unknown_keys(d, {"reference"}, "config decomposition");
    if (d.contains("reference")) {
      const auto& r = d.at("reference");
      reject_unknown_keys(r, {"column", "value"}, "config decomposition reference");
      if (!r.contains("column") || !r.contains("value"))
        throw ValidationError("config: decomposition reference needs 'column' and 'value'");
      c.reference = {number<std::string>(r.at("column"), "column"), number<std::string>(r.at("value"), "value")};
    }
  }

  if (j.contains("projection")) {
    const auto& p = j.at("projection");
    reject_unknown_keys(p, {"percentiles", "variants", "clamp"}, "config projection");
    if (p.contains("percentiles")) {
      c.percentiles = number<std::vector<double>>(p.at("percentiles"), "percentiles");
      if (c.percentiles.empty()) throw ValidationError("config: percentiles is empty");
      for (double q : c.percentiles)
        if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("config: percentiles must lie in [0, 1]");
    }
    if (p.contains("variants")) c.variants = number<bool>(p.at("variants"), "variants");
    if (p.contains("clamp")) {
      const auto v = number<std::vector<double>>(p.at("clamp"), "clamp");
      if (v.size() != 2 || !(v[0] >= 0.0 && v[0] < v[1] && v[1] <= 1.0))
        throw ValidationError("config: projection clamp must be [lo, hi] with 0 <= lo < hi <= 1");
      c.variant_clamp = {v[0], v[1]};
    }
  }

  effective.erase("output_dir");
  effective.erase("threads");
  c.hash = fnv1a_hex(effective.dump());
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  auto base = std::filesystem::absolute(path).parent_path();
  return parse_config(j, base, overrides);
}

}  // namespace pluvial
