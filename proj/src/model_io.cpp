#include "pluvial/model_io.hpp"

#include <fstream>
#include <sstream>

#include "pluvial/errors.hpp"

namespace pluvial {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec(m.row(r).transpose()));
  return rows;
}

Eigen::MatrixXd to_mat(const json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  if (n == 0) return Eigen::MatrixXd(0, 0);
  const auto c = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(n, c);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto row = to_vec(j.at(static_cast<std::size_t>(r)));
    if (row.size() != c) throw ValidationError("ragged matrix in model file");
    m.row(r) = row.transpose();
  }
  return m;
}

json opt_double(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> to_opt_double(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

json spec_to_json(const ModelSpec& spec) {
  json terms = json::array();
  for (const auto& t : spec.terms) {
    json jt = {{"kind", to_string(t.kind)}, {"covariate", t.covariate}, {"label", t.label}, {"group", t.group}};
    if (t.kind == TermKind::kSmooth) jt["k"] = t.k;
    if (t.clamp) jt["clamp"] = {t.clamp->lo, t.clamp->hi};
    if (t.transform == Transform::kLog) jt["transform"] = "log";
    terms.push_back(jt);
  }
  json j = {{"label", spec.label},
            {"family", Family{spec.family, 1.0}.name()},
            {"temporal", to_string(spec.temporal)},
            {"terms", terms},
            {"options",
             {{"pirls_tol", spec.options.pirls_tol},
              {"max_pirls_iter", spec.options.max_pirls_iter},
              {"outer_tol", spec.options.outer_tol},
              {"max_outer_iter", spec.options.max_outer_iter},
              {"ridge", spec.options.ridge}}}};
  if (spec.fixed_theta) j["theta"] = *spec.fixed_theta;
  return j;
}

ModelSpec spec_from_json(const json& j) {
  reject_unknown_keys(j, {"label", "family", "theta", "temporal", "terms", "options"}, "model spec");
  ModelSpec s;
  try {
    s.label = j.value("label", std::string("model"));
    s.family = Family::parse(j.value("family", std::string("negbin"))).kind;
    if (j.contains("theta")) s.fixed_theta = j.at("theta").get<double>();
    s.temporal = parse_temporal(j.value("temporal", std::string("annual")));
    for (const auto& jt : j.at("terms")) {
      reject_unknown_keys(jt, {"kind", "covariate", "label", "group", "k", "clamp", "transform"},
                          "term of model '" + s.label + "'");
      TermSpec t;
      t.kind = parse_term_kind(jt.at("kind").get<std::string>());
      t.covariate = jt.at("covariate").get<std::string>();
      t.label = jt.value("label", t.covariate);
      t.group = jt.at("group").get<std::string>();
      t.k = jt.value("k", 10);
      if (jt.contains("clamp") && !jt.at("clamp").is_null()) {
        const auto c = jt.at("clamp").get<std::vector<double>>();
        if (c.size() != 2) throw ValidationError("clamp must be [lo, hi] percentiles");
        t.clamp = ClampPercentiles{c[0], c[1]};
      }
      const std::string tr = jt.value("transform", std::string("none"));
      if (tr == "log")
        t.transform = Transform::kLog;
      else if (tr != "none")
        throw ValidationError("unknown transform '" + tr + "' (expected none or log)");
      s.terms.push_back(t);
    }
    if (j.contains("options")) {
      const auto& o = j.at("options");
      reject_unknown_keys(o, {"pirls_tol", "max_pirls_iter", "outer_tol", "max_outer_iter", "ridge"},
                          "options of model '" + s.label + "'");
      s.options.pirls_tol = o.value("pirls_tol", s.options.pirls_tol);
      s.options.max_pirls_iter = o.value("max_pirls_iter", s.options.max_pirls_iter);
      s.options.outer_tol = o.value("outer_tol", s.options.outer_tol);
      s.options.max_outer_iter = o.value("max_outer_iter", s.options.max_outer_iter);
      s.options.ridge = o.value("ridge", s.options.ridge);
      if (!(s.options.pirls_tol > 0.0) || !(s.options.outer_tol > 0.0) || s.options.max_pirls_iter < 1 ||
          s.options.max_outer_iter < 1 || !(s.options.ridge >= 0.0))
        throw ValidationError("model '" + s.label + "': tolerances and iteration caps must be positive");
    }
  } catch (const json::exception& e) {
    throw ValidationError("model spec: " + std::string(e.what()));
  }
  s.validate();
  return s;
}

json model_to_json(const FittedModel& m) {
  json terms = json::array();
  for (std::size_t t = 0; t < m.encoding.terms.size(); ++t) {
    const auto& te = m.encoding.terms[t];
    json jt = {{"label", te.spec.label}, {"col_start", te.col_start}, {"ncols", te.ncols}, {"edf", m.edf.at(t)}};
    if (!te.levels.empty()) jt["levels"] = te.levels;
    if (te.basis) {
      jt["knots"] = te.basis->knots();
      jt["clamp_lo"] = opt_double(te.basis->clamp_lo());
      jt["clamp_hi"] = opt_double(te.basis->clamp_hi());
      jt["centering"] = vec(*te.basis->centering());
      jt["rotation"] = mat(te.rotation);
      jt["penalty_diag"] = vec(te.penalty_diag);
    }
    if (te.spec.kind == TermKind::kLinear) {
      jt["center"] = te.center;
      jt["clamp_lo"] = opt_double(te.clamp_lo);
      jt["clamp_hi"] = opt_double(te.clamp_hi);
    }
    const int li = m.lambda_index(static_cast<int>(t));
    if (li >= 0) jt["lambda"] = m.lambda[static_cast<std::size_t>(li)];
    terms.push_back(jt);
  }
  json j = {{"format", kModelFormat},
            {"version", kModelVersion},
            {"spec", spec_to_json(m.spec)},
            {"family", {{"name", m.family.name()}, {"theta", m.family.theta}}},
            {"ncoef", m.encoding.ncoef},
            {"terms", terms},
            {"coefficients", vec(m.beta)},
            {"lambda", m.lambda},
            {"sigma_u", opt_double(m.sigma_u)},
            {"covariance", mat(m.covariance)},
            {"diagnostics",
             {{"outer_iterations", m.diagnostics.outer_iterations},
              {"outer_grad_norm", m.diagnostics.outer_grad_norm},
              {"pirls_iterations", m.diagnostics.pirls_iterations},
              {"pirls_grad_norm", m.diagnostics.pirls_grad_norm},
              {"laml", m.diagnostics.laml},
              {"n_obs", m.diagnostics.n_obs},
              {"trace", m.diagnostics.trace}}}};
  if (!m.family.has_theta()) j["family"].erase("theta");
  return j;
}

FittedModel model_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) throw ValidationError("not a pluvial model file");
    if (j.at("version").get<int>() != kModelVersion)
      throw ValidationError("unsupported model file version " + std::to_string(j.at("version").get<int>()));
    FittedModel m;
    m.spec = spec_from_json(j.at("spec"));
    const auto& jf = j.at("family");
    m.family = Family::parse(jf.at("name").get<std::string>(), jf.value("theta", 1.0));
    m.encoding.ncoef = j.at("ncoef").get<int>();
    const auto& jterms = j.at("terms");
    if (jterms.size() != m.spec.terms.size()) throw ValidationError("model file terms do not match its spec");
    for (std::size_t t = 0; t < jterms.size(); ++t) {
      const auto& jt = jterms[t];
      TermEncoding te;
      te.spec = m.spec.terms[t];
      if (te.spec.label.empty()) te.spec.label = te.spec.covariate;
      te.col_start = jt.at("col_start").get<int>();
      te.ncols = jt.at("ncols").get<int>();
      if (jt.contains("levels")) te.levels = jt.at("levels").get<std::vector<std::string>>();
      if (te.spec.kind == TermKind::kSmooth) {
        te.basis = SplineBasis(jt.at("knots").get<std::vector<double>>(), to_opt_double(jt.at("clamp_lo")),
                               to_opt_double(jt.at("clamp_hi")), to_vec(jt.at("centering")));
        te.rotation = to_mat(jt.at("rotation"));
        te.penalty_diag = to_vec(jt.at("penalty_diag"));
      }
      if (te.spec.kind == TermKind::kLinear) {
        te.center = jt.at("center").get<double>();
        te.clamp_lo = to_opt_double(jt.at("clamp_lo"));
        te.clamp_hi = to_opt_double(jt.at("clamp_hi"));
      }
      m.edf.push_back(jt.at("edf").get<double>());
      m.encoding.terms.push_back(std::move(te));
    }
    m.beta = to_vec(j.at("coefficients"));
    if (m.beta.size() != m.encoding.ncoef) throw ValidationError("coefficient count does not match the terms");
    m.lambda = j.at("lambda").get<std::vector<double>>();
    m.sigma_u = to_opt_double(j.at("sigma_u"));
    m.covariance = to_mat(j.at("covariance"));
    const auto& d = j.at("diagnostics");
    m.diagnostics.outer_iterations = d.at("outer_iterations").get<int>();
    m.diagnostics.outer_grad_norm = d.at("outer_grad_norm").get<double>();
    m.diagnostics.pirls_iterations = d.at("pirls_iterations").get<int>();
    m.diagnostics.pirls_grad_norm = d.at("pirls_grad_norm").get<double>();
    m.diagnostics.laml = d.at("laml").get<double>();
    m.diagnostics.n_obs = d.at("n_obs").get<std::size_t>();
    m.diagnostics.trace = d.at("trace").get<std::vector<std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw ValidationError("malformed model file: " + std::string(e.what()));
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw Error("write failed: " + path.string());
}

void save_model(const FittedModel& m, const std::filesystem::path& path) {
  write_text(path, model_to_json(m).dump(1) + "\n");
}

FittedModel load_model(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open model file: " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ValidationError("model file " + path.string() + " is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace pluvial
