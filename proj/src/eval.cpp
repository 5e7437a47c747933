#include "mgnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "mgnet/errors.hpp"
#include "mgnet/kernels.hpp"
#include "mgnet/rng.hpp"

namespace mgnet {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : classes(std::move(class_names)),
      counts(classes.size() * classes.size(), 0) {}

std::uint64_t& ConfusionMatrix::at(std::size_t truth, std::size_t pred) {
  return counts[truth * classes.size() + pred];
}

std::uint64_t ConfusionMatrix::at(std::size_t truth, std::size_t pred) const {
  return counts[truth * classes.size() + pred];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

ConfusionMatrix ConfusionMatrix::from_predictions(
    std::vector<std::string> class_names, std::span<const int> truth,
    std::span<const int> predicted) {
  if (truth.size() != predicted.size())
    throw ConfigError("truth and prediction lists differ in length");
  ConfusionMatrix cm(std::move(class_names));
  const int n = static_cast<int>(cm.classes.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= n || predicted[i] < 0 || predicted[i] >= n)
      throw ConfigError("class index out of range in confusion matrix");
    ++cm.at(static_cast<std::size_t>(truth[i]),
            static_cast<std::size_t>(predicted[i]));
  }
  return cm;
}

std::vector<ClassMetrics> precision_recall_f1(const ConfusionMatrix& cm) {
  const std::size_t n = cm.classes.size();
  std::vector<ClassMetrics> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t tp = cm.at(i, i), fp = 0, fn = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      fp += cm.at(j, i);
      fn += cm.at(i, j);
    }
    const double p =
        (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double r =
        (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double f = (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0;
    out[i] = {p, r, f};
  }
  return out;
}

ClassMetrics macro_average(std::span<const ClassMetrics> metrics) {
  ClassMetrics m;
  if (metrics.empty()) return m;
  for (const auto& c : metrics) {
    m.precision += c.precision;
    m.recall += c.recall;
    m.f1 += c.f1;
  }
  const double n = static_cast<double>(metrics.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

namespace {

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

void write_metrics_report(const std::filesystem::path& path,
                          const ConfusionMatrix& cm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write metrics report: " + path.string());
  const auto metrics = precision_recall_f1(cm);
  out << "class\tprecision\trecall\tf1\n";
  for (std::size_t i = 0; i < cm.classes.size(); ++i)
    out << cm.classes[i] << '\t' << fmt4(metrics[i].precision) << '\t'
        << fmt4(metrics[i].recall) << '\t' << fmt4(metrics[i].f1) << '\n';
  const ClassMetrics m = macro_average(metrics);
  out << "macro\t" << fmt4(m.precision) << '\t' << fmt4(m.recall) << '\t'
      << fmt4(m.f1) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

void write_confusion(const std::filesystem::path& path,
                     const ConfusionMatrix& cm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write confusion matrix: " + path.string());
  out << "truth";
  for (const auto& c : cm.classes) out << '\t' << c;
  out << '\n';
  for (std::size_t i = 0; i < cm.classes.size(); ++i) {
    out << cm.classes[i];
    for (std::size_t j = 0; j < cm.classes.size(); ++j) out << '\t' << cm.at(i, j);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

KmeansResult kmeans(std::span<const std::vector<double>> features, int k,
                    std::uint64_t seed) {
  if (k < 1) throw ConfigError("k must be >= 1");
  const std::size_t n = features.size();
  if (n < static_cast<std::size_t>(k))
    throw ConfigError("k exceeds the number of samples");
  const std::size_t d = features[0].size();
  for (const auto& f : features)
    if (f.size() != d) throw ConfigError("inconsistent feature dimensions");

  Rng rng(seed);
  KmeansResult result;
  auto& centroids = result.centroids;

  // k-means++ seeding
  centroids.push_back(features[rng.uniform_index(n)]);
  std::vector<double> dist2(n);
  for (std::size_t i = 0; i < n; ++i)
    dist2[i] = kern::sq_diff_sum(features[i].data(), centroids[0].data(), d);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = kern::sum(dist2.data(), n);
    std::size_t pick;
    if (total <= 0.0) {
      pick = rng.uniform_index(n);  // all points coincide with centroids
    } else {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += dist2[i];
        if (acc > r) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(features[pick]);
    for (std::size_t i = 0; i < n; ++i)
      dist2[i] = std::min(dist2[i], kern::sq_diff_sum(features[i].data(),
                                                      centroids.back().data(), d));
  }

  result.assignments.assign(n, -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        const double d2 = kern::sq_diff_sum(features[i].data(),
                                            centroids[static_cast<std::size_t>(c)].data(), d);
        if (d2 < best) {
          best = d2;
          best_c = c;
        }
      }
      objective += best;
      if (result.assignments[i] != best_c) {
        result.assignments[i] = best_c;
        changed = true;
      }
    }
    result.objective_history.push_back(objective);
    if (!changed) break;

    std::vector<std::vector<double>> sums(
        static_cast<std::size_t>(k), std::vector<double>(d, 0.0));
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[static_cast<std::size_t>(result.assignments[i])];
      kern::vadd(s.data(), features[i].data(), s.data(), d);
      ++sizes[static_cast<std::size_t>(result.assignments[i])];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] == 0) continue;  // keep old centroid
      const double inv = 1.0 / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
      for (std::size_t j = 0; j < d; ++j)
        centroids[static_cast<std::size_t>(c)][j] =
            sums[static_cast<std::size_t>(c)][j] * inv;
    }
  }
  return result;
}

// shortest augmenting path formulation with potentials, O(n^3)
std::vector<int> hungarian_min_assignment(
    const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  for (const auto& row : cost)
    if (row.size() != n) throw ConfigError("cost matrix must be square");
  if (n == 0) return {};

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assignment(n, -1);
  for (std::size_t j = 1; j <= n; ++j)
    if (match[j] != 0) assignment[match[j] - 1] = static_cast<int>(j - 1);
  return assignment;
}

AlignResult hungarian_align(std::span<const int> assignments,
                            std::span<const int> labels) {
  if (assignments.empty() || assignments.size() != labels.size())
    throw ConfigError("alignment needs equal-length, nonempty inputs");
  int n_clusters = 0, n_classes = 0;
  for (int a : assignments) {
    if (a < 0) throw ConfigError("negative cluster id");
    n_clusters = std::max(n_clusters, a + 1);
  }
  for (int l : labels) {
    if (l < 0) throw ConfigError("negative class id");
    n_classes = std::max(n_classes, l + 1);
  }

  const std::size_t dim =
      static_cast<std::size_t>(std::max(n_clusters, n_classes));
  std::vector<std::vector<double>> contingency(
      static_cast<std::size_t>(n_clusters),
      std::vector<double>(static_cast<std::size_t>(n_classes), 0.0));
  for (std::size_t i = 0; i < assignments.size(); ++i)
    contingency[static_cast<std::size_t>(assignments[i])]
               [static_cast<std::size_t>(labels[i])] += 1.0;

  // maximize overlap = minimize negated contingency; pad to square with 0
  std::vector<std::vector<double>> cost(dim, std::vector<double>(dim, 0.0));
  for (int c = 0; c < n_clusters; ++c)
    for (int l = 0; l < n_classes; ++l)
      cost[static_cast<std::size_t>(c)][static_cast<std::size_t>(l)] =
          -contingency[static_cast<std::size_t>(c)][static_cast<std::size_t>(l)];
  const auto assignment = hungarian_min_assignment(cost);

  AlignResult result;
  result.cluster_to_class.assign(static_cast<std::size_t>(n_clusters), -1);
  double correct = 0.0;
  for (int c = 0; c < n_clusters; ++c) {
    const int mapped = assignment[static_cast<std::size_t>(c)];
    if (mapped < n_classes) {
      result.cluster_to_class[static_cast<std::size_t>(c)] = mapped;
      correct += contingency[static_cast<std::size_t>(c)]
                            [static_cast<std::size_t>(mapped)];
    }
  }
  result.accuracy = correct / static_cast<double>(assignments.size());
  return result;
}

}  // namespace mgnet
