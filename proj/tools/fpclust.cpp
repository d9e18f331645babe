// fpclust: functional PCA feature extraction, randomized feature selection
// and clustering for grayscale image sets.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "fpclust/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fpclust;

namespace {

void print_variance(const FpcaModel& model) {
  const Eigen::VectorXd frac = model.variance_explained();
  double cum = 0.0;
  std::cout << "component  eigenvalue       explained  cumulative\n";
  for (int j = 0; j < model.J; ++j) {
    cum += frac(j);
    std::printf("%9d  %-15.6g  %8.4f%%  %9.4f%%\n", j + 1, model.eigenvalues(j), 100.0 * frac(j), 100.0 * cum);
  }
}

std::vector<std::string> read_ids_or_default(const std::string& ids_path, std::size_t m) {
  if (ids_path.empty()) return default_ids(m);
  std::vector<std::string> ids;
  std::istringstream in(read_text(ids_path));
  std::string line;
  std::getline(in, line);
  const auto header = detail::split_csv_line(detail::trim(line));
  require(!header.empty() && header[0] == "id", ErrorKind::MalformedManifest, ids_path + ": first column must be 'id'");
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (!line.empty()) ids.push_back(detail::split_csv_line(line)[0]);
  }
  require(ids.size() == m, ErrorKind::ShapeMismatch,
          ids_path + ": has " + std::to_string(ids.size()) + " ids for " + std::to_string(m) + " rows");
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fpclust: 2D functional PCA + randomized feature selection + clustering"};
  app.require_subcommand(1);

  // fpca-fit
  std::string manifest, out_dir, model_path, out_file;
  int K = 5, J = 4;
  auto* fit = app.add_subcommand("fpca-fit", "Fit 2D FPCA on a manifest; writes model.json, scores.csv, variance.csv");
  fit->add_option("--manifest", manifest, "Manifest CSV (id,path[,label])")->required();
  fit->add_option("--K", K, "Fourier functions per axis (odd)");
  fit->add_option("--J", J, "Retained components");
  fit->add_option("--out", out_dir, "Output directory")->required();

  // fpca-transform
  auto* tr = app.add_subcommand("fpca-transform", "Compute FPC scores of a manifest under a fitted model");
  tr->add_option("--manifest", manifest)->required();
  tr->add_option("--model", model_path)->required();
  tr->add_option("--out", out_file, "Scores CSV")->required();

  // reconstruct
  std::string image_id, sweep_path;
  int J_use = 0;
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct one image from its first J_use FPC scores");
  rec->add_option("--manifest", manifest)->required();
  rec->add_option("--model", model_path)->required();
  rec->add_option("--id", image_id)->required();
  rec->add_option("--J-use", J_use)->required();
  rec->add_option("--out", out_file, "Output PGM")->required();
  rec->add_option("--sweep", sweep_path, "Write the error curve over J_use = 0..J as CSV");

  // select
  std::string features_path, plan_path, reduced_path;
  int sel_k = 2;
  std::string epsilon_text = "1/3";
  std::uint64_t seed = 0;
  auto* sel = app.add_subcommand("select", "Randomized leverage-score feature selection");
  sel->add_option("--features", features_path, "Feature matrix CSV (rows = samples)")->required();
  sel->add_option("--k", sel_k);
  sel->add_option("--epsilon", epsilon_text, "Accuracy parameter in (0,1]; fractions like 1/3 accepted");
  sel->add_option("--seed", seed);
  sel->add_option("--plan", plan_path, "Output plan JSON")->required();
  sel->add_option("--reduced", reduced_path, "Output reduced matrix CSV")->required();

  // cluster
  std::string method = "kmeans", ids_path, report_path, sigma_text = "median";
  int clu_k = 2, restarts = 20, max_iters = 300;
  double tol = 1e-9;
  auto* clu = app.add_subcommand("cluster", "Cluster rows of a feature matrix");
  clu->add_option("--features", features_path)->required();
  clu->add_option("--method", method)->check(CLI::IsMember({"kmeans", "spectral"}));
  clu->add_option("--k", clu_k);
  clu->add_option("--seed", seed);
  clu->add_option("--restarts", restarts);
  clu->add_option("--max-iters", max_iters);
  clu->add_option("--tol", tol);
  clu->add_option("--sigma", sigma_text, "Spectral bandwidth or 'median'");
  clu->add_option("--ids", ids_path, "CSV whose first column 'id' names the rows");
  clu->add_option("--out", out_file, "Assignment CSV (id,label)")->required();
  clu->add_option("--report", report_path, "Run report JSON");

  // evaluate
  std::string assignment_path, truth_path;
  int positive_class = 0;
  auto* ev = app.add_subcommand("evaluate", "Score an assignment against ground-truth labels");
  ev->add_option("--assignment", assignment_path)->required();
  ev->add_option("--truth", truth_path, "CSV with id and label columns (e.g. a labeled manifest)")->required();
  ev->add_option("--positive-class", positive_class, "Positive group (binary case) for sensitivity/specificity");
  ev->add_option("--out", out_file, "Report JSON");

  // pipeline
  std::string config_path;
  std::vector<std::string> overrides;
  auto* pipe = app.add_subcommand("pipeline", "Run the configured end-to-end pipeline");
  pipe->add_option("--config", config_path, "key=value config file")->required();
  pipe->add_option("--set", overrides, "Override a config key (key=value); repeatable");
  pipe->add_option("--out", out_dir, "Output directory (overrides 'output')");

  // synth
  std::string kind = "images";
  ImageSpec ispec;
  PlantedSpec fspec;
  auto* syn = app.add_subcommand("synth", "Generate a planted synthetic dataset");
  syn->add_option("--kind", kind)->check(CLI::IsMember({"images", "features"}));
  syn->add_option("--n-images", ispec.N);
  syn->add_option("--height", ispec.height);
  syn->add_option("--width", ispec.width);
  syn->add_option("--K", ispec.K);
  syn->add_option("--groups", ispec.groups);
  syn->add_option("--m", fspec.m);
  syn->add_option("--n", fspec.n);
  syn->add_option("--k", fspec.k);
  syn->add_option("--informative", fspec.informative);
  double separation = 20.0, noise = 1.0;
  syn->add_option("--separation", separation);
  syn->add_option("--noise", noise);
  syn->add_option("--seed", seed);
  syn->add_option("--out", out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*fit) {
      const auto out = cmd_fpca_fit(load_manifest(manifest), BasisConfig{K}, J, out_dir);
      print_variance(out.model);
      std::cout << "wrote " << (fs::path(out_dir) / "model.json").string() << " and scores ("
                << out.scores.rows() << "x" << out.scores.cols() << ")\n";
    } else if (*tr) {
      const FpcaModel model = model_from_json(json::parse(read_text(model_path)));
      write_matrix_csv(out_file, cmd_fpca_transform(load_manifest(manifest), model));
    } else if (*rec) {
      const FpcaModel model = model_from_json(json::parse(read_text(model_path)));
      const auto r = cmd_reconstruct(load_manifest(manifest), model, image_id, J_use);
      write_pgm(r.image, out_file);
      std::cout << "reconstruction_error=" << format_double(r.error) << "\n";
      if (!sweep_path.empty()) {
        std::string csv = "J_use,error\n";
        for (std::size_t j = 0; j < r.sweep.size(); ++j) csv += std::to_string(j) + "," + format_double(r.sweep[j]) + "\n";
        write_text(sweep_path, csv);
      }
    } else if (*sel) {
      const double eps = detail::parse_real("--epsilon", epsilon_text);
      const Selection s = select(FeatureMatrix(read_matrix_csv(features_path)), sel_k, eps, seed);
      write_text(plan_path, dump(plan_to_json(s.plan)));
      write_matrix_csv(reduced_path, s.reduced.values);
      std::cout << "selected r=" << s.plan.r << " features\n";
    } else if (*clu) {
      const Eigen::MatrixXd A = read_matrix_csv(features_path);
      KmeansConfig kc{clu_k, restarts, max_iters, tol, seed};
      ClusterAssignment a;
      json report;
      if (method == "kmeans") {
        auto r = kmeans_detailed(A, kc);
        report = kmeans_report_json(r, kc);
        a = std::move(r.assignment);
      } else {
        SpectralConfig sc{clu_k, std::nullopt, seed, kc};
        if (sigma_text != "median") sc.sigma = detail::parse_real("--sigma", sigma_text);
        auto r = spectral_detailed(A, sc);
        report = spectral_report_json(r, sc);
        a = std::move(r.assignment);
      }
      write_text(out_file, assignment_to_csv(read_ids_or_default(ids_path, a.labels.size()), a.labels));
      if (!report_path.empty()) write_text(report_path, dump(report));
      std::cout << "objective=" << format_double(a.objective) << "\n";
    } else if (*ev) {
      const LabeledIds assigned = read_labeled_csv(assignment_path);
      const LabeledIds truth = read_labeled_csv(truth_path);
      std::map<std::string, int> truth_by_id;
      for (std::size_t i = 0; i < truth.ids.size(); ++i) truth_by_id[truth.ids[i]] = truth.labels[i];
      std::vector<int> t;
      for (const auto& id : assigned.ids) {
        auto it = truth_by_id.find(id);
        require(it != truth_by_id.end(), ErrorKind::UnknownId, "no truth label for id '" + id + "'");
        t.push_back(it->second);
      }
      const int k = *std::max_element(assigned.labels.begin(), assigned.labels.end());
      ClusterAssignment a;
      a.k = k;
      a.labels = assigned.labels;
      const auto rep = align_and_score(t, a, positive_class ? std::optional<int>(positive_class) : std::nullopt);
      std::cout << format_report_table(rep);
      if (!out_file.empty()) write_text(out_file, dump(evaluation_to_json(rep)));
    } else if (*pipe) {
      ConfigMap map = parse_config_text(read_text(config_path), config_path);
      for (const auto& o : overrides) apply_config_line(map, o, "--set");
      if (!out_dir.empty()) map["output"] = out_dir;
      const auto cfg = PipelineConfig::from_map(map, fs::path(config_path).parent_path());
      const auto result = cmd_pipeline(cfg);
      std::cout << result.summary.csv();
    } else if (*syn) {
      if (kind == "images") {
        ispec.separation = separation;
        ispec.noise_sd = noise;
        ispec.seed = seed;
        const auto gen = planted_images(ispec);
        write_dataset(gen.dataset, out_dir);
        std::cout << "wrote " << ispec.N << " images to " << out_dir << "\n";
      } else {
        fspec.separation = separation;
        fspec.noise_sd = noise;
        fspec.seed = seed;
        const auto gen = planted_features(fspec);
        fs::create_directories(out_dir);
        write_matrix_csv(fs::path(out_dir) / "features.csv", gen.A);
        write_text(fs::path(out_dir) / "labels.csv", assignment_to_csv(default_ids(gen.labels.size()), gen.labels));
        std::cout << "wrote " << fspec.m << "x" << fspec.n << " features to " << out_dir << "\n";
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
