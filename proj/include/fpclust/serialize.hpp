#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fpclust/clustering.hpp"
#include "fpclust/error.hpp"
#include "fpclust/evaluation.hpp"
#include "fpclust/fpca.hpp"
#include "fpclust/image_io.hpp"
#include "fpclust/sketch_select.hpp"

namespace fpclust {

using json = nlohmann::ordered_json;

/// Shortest-round-trip-safe decimal form (17 significant digits).
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::IoFailure, "cannot create " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorKind::IoFailure, "write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  require(std::filesystem::exists(path), ErrorKind::MissingFile, path.string());
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- matrices

/// Headerless CSV, one matrix row per line.
inline std::string matrix_to_csv(const Eigen::MatrixXd& M) {
  std::string out;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out += ',';
      out += format_double(M(i, j));
    }
    out += '\n';
  }
  return out;
}

inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& M) {
  write_text(path, matrix_to_csv(M));
}

inline Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& f : detail::split_csv_line(line)) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(f, &pos);
      } catch (...) {
        pos = 0;
      }
      require(pos == f.size() && !f.empty(), ErrorKind::ShapeMismatch,
              path.string() + ":" + std::to_string(lineno) + ": '" + f + "' is not a number");
      row.push_back(v);
    }
    require(rows.empty() || row.size() == rows.front().size(), ErrorKind::ShapeMismatch,
            path.string() + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorKind::ShapeMismatch, path.string() + ": empty matrix");
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  return M;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Eigen::VectorXd vector_from_json(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

// ---------------------------------------------------------------- FPCA model

/// Eigenvectors are stored column-major: eigenvectors[j] is b_j.
inline json model_to_json(const FpcaModel& model) {
  json eig = json::array();
  for (Eigen::Index j = 0; j < model.eigenvectors.cols(); ++j) eig.push_back(vector_to_json(model.eigenvectors.col(j)));
  return json{{"K", model.basis_config.K},
              {"J", model.J},
              {"n_samples", model.n_samples},
              {"mean", vector_to_json(model.mean_coeffs)},
              {"eigenvalues", vector_to_json(model.eigenvalues)},
              {"spectrum", vector_to_json(model.spectrum)},
              {"eigenvectors", eig}};
}

inline FpcaModel model_from_json(const json& j) {
  try {
    FpcaModel model;
    model.basis_config = BasisConfig{j.at("K").get<int>()};
    model.basis_config.validate();
    model.J = j.at("J").get<int>();
    model.n_samples = j.value("n_samples", 0);
    model.mean_coeffs = vector_from_json(j.at("mean"));
    model.eigenvalues = vector_from_json(j.at("eigenvalues"));
    model.spectrum = j.contains("spectrum") ? vector_from_json(j.at("spectrum")) : model.eigenvalues;
    const auto& eig = j.at("eigenvectors");
    const Eigen::Index D = model.basis_config.size();
    require(static_cast<int>(eig.size()) == model.J && model.mean_coeffs.size() == D &&
                model.eigenvalues.size() == model.J,
            ErrorKind::ShapeMismatch, "model JSON has inconsistent dimensions");
    model.eigenvectors.resize(D, model.J);
    for (int c = 0; c < model.J; ++c) {
      const Eigen::VectorXd col = vector_from_json(eig[c]);
      require(col.size() == D, ErrorKind::ShapeMismatch, "eigenvector length != K^2");
      model.eigenvectors.col(c) = col;
    }
    return model;
  } catch (const json::exception& e) {
    fail(ErrorKind::ShapeMismatch, std::string("malformed model JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------- selection plan

/// sampled_indices are written 1-based.
inline json plan_to_json(const SelectionPlan& plan) {
  json idx = json::array();
  for (auto i : plan.sampled_indices) idx.push_back(i + 1);
  return json{{"k", plan.k},
              {"epsilon", plan.epsilon},
              {"r", plan.r},
              {"seed", plan.seed},
              {"probabilities", vector_to_json(plan.probabilities)},
              {"sampled_indices", idx},
              {"scale", vector_to_json(plan.scale)}};
}

inline SelectionPlan plan_from_json(const json& j) {
  try {
    SelectionPlan plan;
    plan.k = j.at("k").get<int>();
    plan.epsilon = j.at("epsilon").get<double>();
    plan.r = j.at("r").get<int>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.probabilities = vector_from_json(j.at("probabilities"));
    for (const auto& i : j.at("sampled_indices")) plan.sampled_indices.push_back(i.get<Eigen::Index>() - 1);
    plan.scale = vector_from_json(j.at("scale"));
    require(static_cast<int>(plan.sampled_indices.size()) == plan.r && plan.scale.size() == plan.r,
            ErrorKind::ShapeMismatch, "plan JSON has inconsistent r");
    return plan;
  } catch (const json::exception& e) {
    fail(ErrorKind::ShapeMismatch, std::string("malformed plan JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------- assignments

inline std::vector<std::string> default_ids(std::size_t m) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < m; ++i) ids.push_back(std::to_string(i + 1));
  return ids;
}

/// CSV with header `id,label`.
inline std::string assignment_to_csv(const std::vector<std::string>& ids, const std::vector<int>& labels) {
  require(ids.size() == labels.size(), ErrorKind::ShapeMismatch, "id count does not match label count");
  std::string out = "id,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out += ids[i] + "," + std::to_string(labels[i]) + "\n";
  return out;
}

struct LabeledIds {
  std::vector<std::string> ids;
  std::vector<int> labels;
};

/// Reads any CSV whose header contains `id` and `label` columns
/// (assignment files and labeled manifests both qualify).
inline LabeledIds read_labeled_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::MalformedManifest, path.string() + ": empty file");
  const auto header = detail::split_csv_line(detail::trim(line));
  int id_col = -1, label_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "id") id_col = static_cast<int>(c);
    if (header[c] == "label") label_col = static_cast<int>(c);
  }
  require(id_col >= 0 && label_col >= 0, ErrorKind::MalformedManifest,
          path.string() + ": header needs 'id' and 'label' columns");
  LabeledIds out;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    require(f.size() == header.size(), ErrorKind::MalformedManifest, path.string() + ": wrong field count");
    int label = 0;
    require(detail::parse_int(f[label_col], label) && label >= 1, ErrorKind::MalformedManifest,
            path.string() + ": label '" + f[label_col] + "' is not a positive integer");
    out.ids.push_back(f[id_col]);
    out.labels.push_back(label);
  }
  return out;
}

inline json kmeans_report_json(const KmeansResult& result, const KmeansConfig& cfg) {
  json iters = json::array(), objs = json::array();
  for (const auto& r : result.restarts) {
    iters.push_back(r.iterations);
    objs.push_back(r.objective);
  }
  return json{{"method", "kmeans"},
              {"objective", result.assignment.objective},
              {"best_restart", result.best_restart},
              {"iterations_per_restart", iters},
              {"objective_per_restart", objs},
              {"cluster_sizes", result.assignment.cluster_sizes},
              {"config", {{"k", cfg.k}, {"restarts", cfg.restarts}, {"max_iters", cfg.max_iters}, {"tol", cfg.tol},
                          {"seed", cfg.seed}}}};
}

inline json spectral_report_json(const SpectralResult& result, const SpectralConfig& cfg) {
  json j{{"method", "spectral"},
         {"objective", result.assignment.objective},
         {"sigma", result.sigma},
         {"laplacian_eigenvalues", vector_to_json(result.eigenvalues)},
         {"cluster_sizes", result.assignment.cluster_sizes},
         {"embedding", kmeans_report_json(result.embedding_kmeans, cfg.inner)}};
  j["config"] = {{"k", cfg.k}, {"sigma", cfg.sigma ? json(*cfg.sigma) : json("median")}, {"seed", cfg.seed}};
  return j;
}

// ---------------------------------------------------------------- evaluation

inline json evaluation_to_json(const EvaluationReport& rep) {
  json conf = json::array();
  for (Eigen::Index g = 0; g < rep.confusion.rows(); ++g) {
    json row = json::array();
    for (Eigen::Index c = 0; c < rep.confusion.cols(); ++c) row.push_back(rep.confusion(g, c));
    conf.push_back(row);
  }
  json j{{"m", rep.m},
         {"matched", rep.matched},
         {"accuracy", rep.accuracy},
         {"sensitivity", rep.sensitivity ? json(*rep.sensitivity) : json(nullptr)},
         {"specificity", rep.specificity ? json(*rep.specificity) : json(nullptr)},
         {"positive_class", rep.positive_class ? json(*rep.positive_class) : json(nullptr)},
         {"alignment", rep.alignment},
         {"confusion_columns", rep.column_clusters},
         {"confusion", conf},
         {"per_group_rates", vector_to_json(rep.per_group_rates)}};
  return j;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace fpclust
