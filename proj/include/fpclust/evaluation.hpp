#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fpclust/clustering.hpp"
#include "fpclust/error.hpp"

namespace fpclust {

/// Scores of a clustering against ground truth.
///
/// `confusion` is L x k: rows are true groups, columns are clusters reordered
/// so that column j holds the cluster aligned to group j (unmatched clusters
/// follow in cluster order). `alignment[c]` is the 1-based group matched to
/// cluster c+1, or 0 when the cluster is unmatched.
struct EvaluationReport {
  Eigen::MatrixXi confusion;
  std::vector<int> column_clusters;  // 1-based cluster id shown in each confusion column
  std::vector<int> alignment;
  double accuracy = 0.0;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<int> positive_class;
  Eigen::VectorXd per_group_rates;
  int matched = 0;
  int m = 0;
};

/// Raw counts: rows = true group (1..L), cols = cluster (1..k).
inline Eigen::MatrixXi contingency(const std::vector<int>& truth, const std::vector<int>& clusters, int L, int k) {
  require(truth.size() == clusters.size(), ErrorKind::ShapeMismatch, "truth and assignment lengths differ");
  Eigen::MatrixXi T = Eigen::MatrixXi::Zero(L, k);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(truth[i] >= 1 && truth[i] <= L, ErrorKind::InvalidArg, "truth label out of range");
    require(clusters[i] >= 1 && clusters[i] <= k, ErrorKind::InvalidArg, "cluster label out of range");
    ++T(truth[i] - 1, clusters[i] - 1);
  }
  return T;
}

namespace detail {

// Max-weight perfect matching on a square matrix (Hungarian, O(n^3)).
// Returns assign[row] = column.
inline std::vector<int> hungarian_max(const Eigen::MatrixXi& weight) {
  const int n = static_cast<int>(weight.rows());
  const long long big = weight.size() ? weight.maxCoeff() : 0;
  std::vector<long long> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<long long> minv(n + 1, std::numeric_limits<long long>::max());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      long long delta = std::numeric_limits<long long>::max();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const long long cost = big - weight(i0 - 1, j - 1);
        const long long cur = cost - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assign(n, 0);
  for (int j = 1; j <= n; ++j)
    if (p[j]) assign[p[j] - 1] = j - 1;
  return assign;
}

}  // namespace detail

/// Cluster-to-group map maximizing the number of matched samples on the
/// zero-padded square contingency table. Exhaustive with lexicographic
/// tie-break up to size 8, Hungarian beyond. Result: perm[c] = group index
/// (0-based; values >= L denote padding, i.e. unmatched).
inline std::vector<int> best_alignment(const Eigen::MatrixXi& table) {
  const int L = static_cast<int>(table.rows()), k = static_cast<int>(table.cols());
  const int n = std::max(L, k);
  Eigen::MatrixXi padded = Eigen::MatrixXi::Zero(n, n);  // rows = clusters, cols = groups
  padded.topLeftCorner(k, L) = table.transpose();
  if (n <= 8) {
    std::vector<int> perm(n), best;
    std::iota(perm.begin(), perm.end(), 0);
    int best_score = -1;
    do {
      int score = 0;
      for (int c = 0; c < n; ++c) score += padded(c, perm[c]);
      if (score > best_score) {
        best_score = score;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  return detail::hungarian_max(padded);
}

inline EvaluationReport align_and_score(const std::vector<int>& truth, const ClusterAssignment& assignment,
                                        std::optional<int> positive_class = std::nullopt) {
  require(truth.size() == assignment.labels.size(), ErrorKind::ShapeMismatch,
          "truth has " + std::to_string(truth.size()) + " labels, assignment has " +
              std::to_string(assignment.labels.size()));
  require(!truth.empty(), ErrorKind::ShapeMismatch, "empty truth vector");
  const int L = *std::max_element(truth.begin(), truth.end());
  const int k = assignment.k;
  if (positive_class) {
    require(L == 2, ErrorKind::MissingPositiveClass,
            "sensitivity/specificity need exactly 2 groups (found " + std::to_string(L) + ")");
    require(*positive_class == 1 || *positive_class == 2, ErrorKind::MissingPositiveClass,
            "positive class must be 1 or 2");
  }

  const Eigen::MatrixXi table = contingency(truth, assignment.labels, L, k);
  const std::vector<int> perm = best_alignment(table);

  EvaluationReport rep;
  rep.m = static_cast<int>(truth.size());
  rep.positive_class = positive_class;
  rep.alignment.assign(k, 0);
  for (int c = 0; c < k; ++c)
    if (perm[c] < L) rep.alignment[c] = perm[c] + 1;

  // Column order: clusters matched to groups 1..L first, then unmatched.
  for (int g = 0; g < L; ++g)
    for (int c = 0; c < k; ++c)
      if (rep.alignment[c] == g + 1) rep.column_clusters.push_back(c + 1);
  for (int c = 0; c < k; ++c)
    if (rep.alignment[c] == 0) rep.column_clusters.push_back(c + 1);
  rep.confusion.resize(L, k);
  for (int j = 0; j < k; ++j) rep.confusion.col(j) = table.col(rep.column_clusters[j] - 1);

  rep.per_group_rates = Eigen::VectorXd::Zero(L);
  const Eigen::VectorXi group_sizes = table.rowwise().sum();
  for (int c = 0; c < k; ++c) {
    if (rep.alignment[c] == 0) continue;
    const int g = rep.alignment[c] - 1;
    rep.matched += table(g, c);
    if (group_sizes(g) > 0) rep.per_group_rates(g) = static_cast<double>(table(g, c)) / group_sizes(g);
  }
  rep.accuracy = static_cast<double>(rep.matched) / rep.m;
  if (positive_class) {
    const int pos = *positive_class - 1;
    const int neg = 1 - pos;
    rep.sensitivity = rep.per_group_rates(pos);
    rep.specificity = rep.per_group_rates(neg);
  }
  return rep;
}

/// Accuracy must equal the prevalence-weighted mean of sensitivity and
/// specificity, up to 3-decimal rounding slack.
inline bool consistency_check(double accuracy, double sensitivity, double specificity, int n_pos, int n_neg,
                              double slack = 0.005) {
  if (n_pos + n_neg <= 0) return false;
  const double weighted = (sensitivity * n_pos + specificity * n_neg) / static_cast<double>(n_pos + n_neg);
  return std::abs(accuracy - weighted) <= slack;
}

inline bool consistency_check(const EvaluationReport& report, int n_pos, int n_neg) {
  if (!report.sensitivity || !report.specificity) return false;
  return consistency_check(report.accuracy, *report.sensitivity, *report.specificity, n_pos, n_neg);
}

/// Assigned-by-true count table with both percentage normalizations:
/// share of the true group (column %) and share of the assigned cluster (row %).
inline std::string format_report_table(const EvaluationReport& rep) {
  const int L = static_cast<int>(rep.confusion.rows());
  const int k = static_cast<int>(rep.confusion.cols());
  const Eigen::VectorXi group_sizes = rep.confusion.rowwise().sum();
  const Eigen::VectorXi cluster_sizes = rep.confusion.colwise().sum().transpose();
  std::ostringstream out;
  out << std::fixed << std::setprecision(1);
  out << std::left << std::setw(12) << "Assigned";
  for (int g = 0; g < L; ++g) out << std::setw(30) << ("True group " + std::to_string(g + 1));
  out << "\n";
  for (int j = 0; j < k; ++j) {
    out << std::setw(12) << ("Cluster " + std::to_string(rep.column_clusters[j]));
    for (int g = 0; g < L; ++g) {
      const int n = rep.confusion(g, j);
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(1) << n << " (" << (group_sizes(g) ? 100.0 * n / group_sizes(g) : 0.0)
           << "% col, " << (cluster_sizes(j) ? 100.0 * n / cluster_sizes(j) : 0.0) << "% row)";
      out << std::setw(30) << cell.str();
    }
    out << "\n";
  }
  out << std::setprecision(2) << "Accuracy " << 100.0 * rep.accuracy << "% (" << rep.matched << "/" << rep.m << ")\n";
  out << std::setprecision(3);
  if (rep.sensitivity) out << "Sensitivity " << *rep.sensitivity << "\n";
  if (rep.specificity) out << "Specificity " << *rep.specificity << "\n";
  return out.str();
}

}  // namespace fpclust
