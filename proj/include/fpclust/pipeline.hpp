#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fpclust/basis.hpp"
#include "fpclust/clustering.hpp"
#include "fpclust/error.hpp"
#include "fpclust/evaluation.hpp"
#include "fpclust/fpca.hpp"
#include "fpclust/image_io.hpp"
#include "fpclust/serialize.hpp"
#include "fpclust/sketch_select.hpp"
#include "fpclust/synthetic.hpp"

namespace fpclust {

// ============================================================ config parsing

/// Flat `key=value` lines; `#` starts a comment. Later keys win.
using ConfigMap = std::map<std::string, std::string>;

inline void apply_config_line(ConfigMap& map, const std::string& raw, const std::string& where) {
  std::string line = raw;
  if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
  line = detail::trim(line);
  if (line.empty()) return;
  const auto eq = line.find('=');
  require(eq != std::string::npos && eq > 0, ErrorKind::InvalidConfig, where + ": expected key=value, got '" + line + "'");
  map[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
}

inline ConfigMap parse_config_text(const std::string& text, const std::string& origin = "config") {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) apply_config_line(map, line, origin + ":" + std::to_string(++lineno));
  return map;
}

namespace detail {

inline int config_int(const ConfigMap& map, const std::string& key, int fallback) {
  auto it = map.find(key);
  if (it == map.end()) return fallback;
  int v = 0;
  require(parse_int(it->second, v), ErrorKind::InvalidConfig, key + ": '" + it->second + "' is not an integer");
  return v;
}

inline std::uint64_t config_u64(const ConfigMap& map, const std::string& key, std::uint64_t fallback) {
  auto it = map.find(key);
  if (it == map.end()) return fallback;
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(it->second, &pos);
  } catch (...) {
    pos = std::string::npos;
  }
  require(pos == it->second.size() && !it->second.empty() && it->second[0] != '-', ErrorKind::InvalidConfig,
          key + ": '" + it->second + "' is not a non-negative integer");
  return v;
}

/// Accepts decimals and simple fractions such as `1/3`.
inline double parse_real(const std::string& key, const std::string& s) {
  auto number = [&](const std::string& t) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &pos);
    } catch (...) {
      pos = std::string::npos;
    }
    require(pos == t.size() && !t.empty(), ErrorKind::InvalidConfig, key + ": '" + s + "' is not a number");
    return v;
  };
  if (auto slash = s.find('/'); slash != std::string::npos) {
    const double den = number(trim(s.substr(slash + 1)));
    require(den != 0.0, ErrorKind::InvalidConfig, key + ": zero denominator");
    return number(trim(s.substr(0, slash))) / den;
  }
  return number(s);
}

inline double config_real(const ConfigMap& map, const std::string& key, double fallback) {
  auto it = map.find(key);
  return it == map.end() ? fallback : parse_real(key, it->second);
}

inline std::string config_choice(const ConfigMap& map, const std::string& key, const std::string& fallback,
                                 std::initializer_list<const char*> allowed) {
  auto it = map.find(key);
  const std::string v = it == map.end() ? fallback : it->second;
  for (const char* a : allowed)
    if (v == a) return v;
  std::string options;
  for (const char* a : allowed) options += std::string(options.empty() ? "" : "|") + a;
  fail(ErrorKind::InvalidConfig, key + ": '" + v + "' is not one of " + options);
}

}  // namespace detail

enum class FeatureSource { FpcScores, FourierCoeffs };
enum class Clusterer { Kmeans, Spectral };

struct PipelineConfig {
  std::filesystem::path manifest;
  std::filesystem::path output_dir;
  BasisConfig basis{5};
  int fpca_J = 4;
  FeatureSource features = FeatureSource::FpcScores;
  bool randomized = false;
  int selector_k = 2;
  double selector_epsilon = 1.0 / 3.0;
  std::uint64_t selector_seed = 0;
  Clusterer clusterer = Clusterer::Kmeans;
  KmeansConfig kmeans;
  SpectralConfig spectral;
  std::optional<int> positive_class;

  static const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "manifest",        "output",           "basis.K",        "fpca.J",       "features",
        "selector",        "selector.k",       "selector.epsilon", "selector.seed", "clusterer",
        "cluster.k",       "cluster.seed",     "kmeans.restarts", "kmeans.max_iters", "kmeans.tol",
        "spectral.sigma",  "evaluation.positive_class"};
    return keys;
  }

  /// Relative manifest paths resolve against `base_dir`.
  static PipelineConfig from_map(const ConfigMap& map, const std::filesystem::path& base_dir = {}) {
    for (const auto& [key, value] : map)
      require(known_keys().count(key) > 0, ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
    PipelineConfig c;
    auto it = map.find("manifest");
    require(it != map.end() && !it->second.empty(), ErrorKind::InvalidConfig, "manifest: required");
    c.manifest = std::filesystem::path(it->second);
    if (c.manifest.is_relative() && !base_dir.empty()) c.manifest = base_dir / c.manifest;
    c.manifest = std::filesystem::absolute(c.manifest).lexically_normal();
    if (auto o = map.find("output"); o != map.end()) c.output_dir = o->second;

    c.basis.K = detail::config_int(map, "basis.K", 5);
    try {
      c.basis.validate();
    } catch (const Error& e) {
      fail(ErrorKind::InvalidConfig, std::string("basis.K: ") + e.what());
    }
    c.fpca_J = detail::config_int(map, "fpca.J", 4);
    require(c.fpca_J >= 1, ErrorKind::InvalidConfig, "fpca.J: must be >= 1");
    c.features = detail::config_choice(map, "features", "fpc_scores", {"fpc_scores", "fourier_coeffs"}) == "fpc_scores"
                     ? FeatureSource::FpcScores
                     : FeatureSource::FourierCoeffs;
    c.randomized = detail::config_choice(map, "selector", "none", {"none", "randomized"}) == "randomized";
    c.selector_k = detail::config_int(map, "selector.k", 2);
    c.selector_epsilon = detail::config_real(map, "selector.epsilon", 1.0 / 3.0);
    c.selector_seed = detail::config_u64(map, "selector.seed", 0);
    if (c.randomized) {
      require(c.selector_k >= 1, ErrorKind::InvalidConfig, "selector.k: must be >= 1");
      require(c.selector_epsilon > 0.0 && c.selector_epsilon <= 1.0, ErrorKind::InvalidConfig,
              "selector.epsilon: must lie in (0, 1]");
    }
    c.clusterer = detail::config_choice(map, "clusterer", "kmeans", {"kmeans", "spectral"}) == "kmeans"
                      ? Clusterer::Kmeans
                      : Clusterer::Spectral;
    const int k = detail::config_int(map, "cluster.k", 2);
    const std::uint64_t seed = detail::config_u64(map, "cluster.seed", 0);
    c.kmeans.k = k;
    c.kmeans.seed = seed;
    c.kmeans.restarts = detail::config_int(map, "kmeans.restarts", 20);
    c.kmeans.max_iters = detail::config_int(map, "kmeans.max_iters", 300);
    c.kmeans.tol = detail::config_real(map, "kmeans.tol", 1e-9);
    try {
      c.kmeans.validate();
    } catch (const Error& e) {
      fail(ErrorKind::InvalidConfig, e.what());
    }
    require(k >= 2, ErrorKind::InvalidConfig, "cluster.k: must be >= 2");
    c.spectral.k = k;
    c.spectral.seed = seed;
    c.spectral.inner = c.kmeans;
    if (auto s = map.find("spectral.sigma"); s != map.end() && s->second != "median") {
      c.spectral.sigma = detail::parse_real("spectral.sigma", s->second);
      require(*c.spectral.sigma > 0.0, ErrorKind::InvalidConfig, "spectral.sigma: must be > 0 or 'median'");
    }
    if (map.count("evaluation.positive_class")) {
      c.positive_class = detail::config_int(map, "evaluation.positive_class", 1);
      require(*c.positive_class == 1 || *c.positive_class == 2, ErrorKind::InvalidConfig,
              "evaluation.positive_class: must be 1 or 2");
    }
    return c;
  }

  /// Normalized key=value echo (sorted, absolute manifest, no output key)
  /// sufficient to replay the run.
  std::string echo() const {
    ConfigMap m;
    m["manifest"] = manifest.string();
    m["basis.K"] = std::to_string(basis.K);
    m["fpca.J"] = std::to_string(fpca_J);
    m["features"] = features == FeatureSource::FpcScores ? "fpc_scores" : "fourier_coeffs";
    m["selector"] = randomized ? "randomized" : "none";
    m["selector.k"] = std::to_string(selector_k);
    m["selector.epsilon"] = format_double(selector_epsilon);
    m["selector.seed"] = std::to_string(selector_seed);
    m["clusterer"] = clusterer == Clusterer::Kmeans ? "kmeans" : "spectral";
    m["cluster.k"] = std::to_string(kmeans.k);
    m["cluster.seed"] = std::to_string(kmeans.seed);
    m["kmeans.restarts"] = std::to_string(kmeans.restarts);
    m["kmeans.max_iters"] = std::to_string(kmeans.max_iters);
    m["kmeans.tol"] = format_double(kmeans.tol);
    m["spectral.sigma"] = spectral.sigma ? format_double(*spectral.sigma) : "median";
    if (positive_class) m["evaluation.positive_class"] = std::to_string(*positive_class);
    std::string out;
    for (const auto& [k, v] : m) out += k + "=" + v + "\n";
    return out;
  }
};

// ============================================================ commands

/// Rows: component, eigenvalue, fraction of total variance, cumulative fraction.
inline std::string variance_table_csv(const FpcaModel& model) {
  const Eigen::VectorXd frac = model.variance_explained();
  std::string out = "component,eigenvalue,fraction,cumulative\n";
  double cum = 0.0;
  for (int j = 0; j < model.J; ++j) {
    cum += frac(j);
    out += std::to_string(j + 1) + "," + format_double(model.eigenvalues(j)) + "," + format_double(frac(j)) + "," +
           format_double(cum) + "\n";
  }
  return out;
}

struct FpcaFitOutput {
  FpcaModel model;
  Eigen::MatrixXd scores;
};

/// Writes model.json, scores.csv and variance.csv into `out_dir`.
inline FpcaFitOutput cmd_fpca_fit(const Dataset& ds, const BasisConfig& basis, int J,
                                  const std::filesystem::path& out_dir) {
  const CoefficientMatrix C = fit_coefficients(ds, basis);
  FpcaFitOutput out{fit_fpca(C, J), {}};
  out.scores = transform(out.model, C);
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "model.json", dump(model_to_json(out.model)));
  write_matrix_csv(out_dir / "scores.csv", out.scores);
  write_text(out_dir / "variance.csv", variance_table_csv(out.model));
  return out;
}

inline Eigen::MatrixXd cmd_fpca_transform(const Dataset& ds, const FpcaModel& model) {
  require(ds.height() >= model.basis_config.K && ds.width() >= model.basis_config.K, ErrorKind::InvalidConfig,
          "model basis K exceeds image size");
  return transform(model, fit_coefficients(ds, model.basis_config));
}

struct ReconstructionResult {
  Eigen::MatrixXd image;         // unclamped
  double error = 0.0;            // ||X - X_hat||_F in pixel units
  std::vector<double> sweep;     // error for J_use = 0..J
};

inline ReconstructionResult cmd_reconstruct(const Dataset& ds, const FpcaModel& model, const std::string& id,
                                            int J_use) {
  const auto idx = ds.find(id);
  require(idx.has_value(), ErrorKind::UnknownId, "no image with id '" + id + "'");
  const auto& img = ds.images[*idx];
  require(J_use >= 0 && J_use <= model.J, ErrorKind::ShapeMismatch,
          "J_use=" + std::to_string(J_use) + " outside [0, " + std::to_string(model.J) + "]");
  const CoefficientFitter fitter(model.basis_config, img.height(), img.width());
  const Eigen::VectorXd coeffs = fitter.fit(img.pixels);
  const Eigen::VectorXd scores = model.eigenvectors.transpose() * (coeffs - model.mean_coeffs);

  ReconstructionResult out;
  for (int j = 0; j <= model.J; ++j) {
    const Eigen::MatrixXd x = synthesize_image(reconstruct(model, scores, j), model.basis_config, img.height(),
                                               img.width());
    out.sweep.push_back((img.pixels - x).norm());
    if (j == J_use) out.image = x;
  }
  out.error = out.sweep[J_use];
  return out;
}

struct SummaryRow {
  Eigen::Index features_used = 0;
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;

  std::string csv() const {
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    return "features_used,accuracy,sensitivity,specificity\n" + std::to_string(features_used) + "," + opt(accuracy) +
           "," + opt(sensitivity) + "," + opt(specificity) + "\n";
  }
};

struct PipelineResult {
  SummaryRow summary;
  ClusterAssignment assignment;
  std::optional<SelectionPlan> plan;
  std::optional<EvaluationReport> evaluation;
};

/// load -> fit coefficients -> (FPCA) -> (selection) -> cluster -> (evaluate).
/// Everything except metadata.json is a deterministic function of the config.
inline PipelineResult cmd_pipeline(const PipelineConfig& cfg) {
  require(!cfg.output_dir.empty(), ErrorKind::InvalidConfig, "output: required");
  const auto& out_dir = cfg.output_dir;
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "config.txt", cfg.echo());

  const Dataset ds = load_manifest(cfg.manifest);
  std::vector<std::string> ids;
  for (const auto& img : ds.images) ids.push_back(img.id);

  const CoefficientMatrix C = fit_coefficients(ds, cfg.basis);
  FeatureMatrix features;
  if (cfg.features == FeatureSource::FpcScores) {
    const FpcaModel model = fit_fpca(C, cfg.fpca_J);
    features.values = transform(model, C);
    for (int j = 0; j < model.J; ++j) features.names.push_back("fpc" + std::to_string(j + 1));
    write_text(out_dir / "fpca_model.json", dump(model_to_json(model)));
    write_text(out_dir / "variance.csv", variance_table_csv(model));
  } else {
    features.values = C.values;
    for (int k = 0; k < C.K; ++k)
      for (int l = 0; l < C.K; ++l) features.names.push_back("c" + std::to_string(k + 1) + "_" + std::to_string(l + 1));
  }
  write_matrix_csv(out_dir / "features.csv", features.values);

  PipelineResult result;
  json plan_json;
  if (cfg.randomized) {
    Selection sel = select(features, cfg.selector_k, cfg.selector_epsilon, cfg.selector_seed);
    plan_json = json{{"selector", "randomized"}};
    plan_json.update(plan_to_json(sel.plan));
    plan_json["selected_features"] = sel.reduced.names;
    result.plan = sel.plan;
    features = std::move(sel.reduced);
    write_matrix_csv(out_dir / "reduced.csv", features.values);
  } else {
    plan_json = json{{"selector", "none"}, {"features", features.cols()}};
  }
  write_text(out_dir / "plan.json", dump(plan_json));

  json cluster_report;
  if (cfg.clusterer == Clusterer::Kmeans) {
    KmeansResult km = kmeans_detailed(features.values, cfg.kmeans);
    cluster_report = kmeans_report_json(km, cfg.kmeans);
    result.assignment = std::move(km.assignment);
  } else {
    SpectralResult sp = spectral_detailed(features.values, cfg.spectral);
    cluster_report = spectral_report_json(sp, cfg.spectral);
    result.assignment = std::move(sp.assignment);
  }
  write_text(out_dir / "assignment.csv", assignment_to_csv(ids, result.assignment.labels));
  write_text(out_dir / "cluster_report.json", dump(cluster_report));

  result.summary.features_used = features.cols();
  if (ds.labels) {
    std::optional<int> pos = cfg.positive_class;
    const int L = *std::max_element(ds.labels->begin(), ds.labels->end());
    if (pos && L != 2) pos.reset();
    result.evaluation = align_and_score(*ds.labels, result.assignment, pos);
    write_text(out_dir / "evaluation.json", dump(evaluation_to_json(*result.evaluation)));
    write_text(out_dir / "evaluation.txt", format_report_table(*result.evaluation));
    result.summary.accuracy = result.evaluation->accuracy;
    result.summary.sensitivity = result.evaluation->sensitivity;
    result.summary.specificity = result.evaluation->specificity;
  }
  write_text(out_dir / "summary.csv", result.summary.csv());

  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  write_text(out_dir / "metadata.json", dump(json{{"created_utc", stamp}}));
  return result;
}

/// Writes img<i>.pgm files plus manifest.csv (id,path,label).
inline void write_dataset(const Dataset& ds, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::string manifest = ds.labels ? "id,path,label\n" : "id,path\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto file = ds.images[i].id + ".pgm";
    write_pgm(ds.images[i], out_dir / file);
    manifest += ds.images[i].id + "," + file;
    if (ds.labels) manifest += "," + std::to_string((*ds.labels)[i]);
    manifest += "\n";
  }
  write_text(out_dir / "manifest.csv", manifest);
}

}  // namespace fpclust
