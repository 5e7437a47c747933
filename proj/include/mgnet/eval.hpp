#pragma once

// Classification metrics and the zero-label clustering protocol: k-means
// with k-means++ seeding, then Hungarian alignment of clusters to classes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mgnet {

struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::uint64_t> counts;  // row = truth, col = predicted

  explicit ConfusionMatrix(std::vector<std::string> class_names);
  std::uint64_t& at(std::size_t truth, std::size_t pred);
  std::uint64_t at(std::size_t truth, std::size_t pred) const;
  std::uint64_t total() const;

  static ConfusionMatrix from_predictions(std::vector<std::string> class_names,
                                          std::span<const int> truth,
                                          std::span<const int> predicted);
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// tp/(tp+fp), tp/(tp+fn), harmonic mean; 0/0 counts as 0
std::vector<ClassMetrics> precision_recall_f1(const ConfusionMatrix& cm);
ClassMetrics macro_average(std::span<const ClassMetrics> metrics);

// TSV report: "class\tprecision\trecall\tf1" rows plus a final macro row
void write_metrics_report(const std::filesystem::path& path,
                          const ConfusionMatrix& cm);
void write_confusion(const std::filesystem::path& path,
                     const ConfusionMatrix& cm);

struct KmeansResult {
  std::vector<int> assignments;
  std::vector<std::vector<double>> centroids;
  std::vector<double> objective_history;  // within-cluster sum of squares
};

// Lloyd's algorithm with k-means++ seeding; stops when assignments
// stabilize or after 300 iterations
KmeansResult kmeans(std::span<const std::vector<double>> features, int k,
                    std::uint64_t seed);

// minimum-cost one-to-one assignment on a square cost matrix; returns the
// column assigned to each row
std::vector<int> hungarian_min_assignment(
    const std::vector<std::vector<double>>& cost);

struct AlignResult {
  std::vector<int> cluster_to_class;  // -1 for unmatched clusters
  double accuracy = 0.0;
};

// maximum-total-overlap matching between cluster ids and class ids via the
// Hungarian method on the negated contingency table
AlignResult hungarian_align(std::span<const int> assignments,
                            std::span<const int> labels);

}  // namespace mgnet
