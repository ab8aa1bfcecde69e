#include "hallucmap/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

namespace hallucmap {

CentroidTable centroid_distance_table(const Eigen::Ref<const Eigen::MatrixXd>& layout,
                                      std::span<const GroupLabel> labels, std::span<const GroupLabel> declared) {
  if (static_cast<Eigen::Index>(labels.size()) != layout.rows()) {
    throw ValidationError("label count " + std::to_string(labels.size()) + " does not match " +
                          std::to_string(layout.rows()) + " layout rows");
  }
  std::map<GroupLabel, std::vector<Eigen::Index>> members;
  for (const auto& label : declared) members[label];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!declared.empty() && !members.contains(labels[i])) {
      throw ValidationError("row " + std::to_string(i) + " carries undeclared label " + labels[i].name());
    }
    members[labels[i]].push_back(static_cast<Eigen::Index>(i));
  }
  for (const auto& [label, rows] : members) {
    if (rows.empty()) throw ValidationError("label " + label.name() + " has no points");
  }
  if (members.size() < 2) throw ValidationError("distance table needs at least two distinct labels");

  CentroidTable table;
  for (const auto& [label, rows] : members) {
    const Eigen::MatrixXd group = layout(rows, Eigen::all);
    ClusterSummary summary{label, centroid(group), static_cast<Eigen::Index>(rows.size()), 0.0};
    double radius = 0.0;
    for (Eigen::Index r = 0; r < group.rows(); ++r) radius += euclidean(group.row(r), summary.centroid);
    summary.mean_radius = radius / static_cast<double>(group.rows());
    table.clusters.push_back(std::move(summary));
  }
  for (std::size_t i = 0; i < table.clusters.size(); ++i) {
    for (std::size_t j = i + 1; j < table.clusters.size(); ++j) {
      table.pairs.push_back({table.clusters[i].label, table.clusters[j].label,
                             euclidean(table.clusters[i].centroid, table.clusters[j].centroid)});
    }
  }
  return table;
}

std::vector<DistancePair> mean_pairs(const std::map<std::uint64_t, std::vector<DistancePair>>& per_seed) {
  if (per_seed.empty()) throw ValidationError("no per-seed tables to average");
  std::vector<DistancePair> mean = per_seed.begin()->second;
  for (auto& p : mean) p.distance = 0.0;
  for (const auto& [seed, pairs] : per_seed) {
    if (pairs.size() != mean.size()) {
      throw ConsistencyError("seed " + std::to_string(seed) + " has a different set of label pairs");
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!(pairs[i].a == mean[i].a) || !(pairs[i].b == mean[i].b)) {
        throw ConsistencyError("seed " + std::to_string(seed) + " has a different set of label pairs");
      }
      mean[i].distance += pairs[i].distance;
    }
  }
  for (auto& p : mean) p.distance /= static_cast<double>(per_seed.size());
  return mean;
}

SweepReport seed_sweep(const Eigen::Ref<const Eigen::MatrixXd>& points, std::span<const GroupLabel> labels,
                       const UmapConfig& config, std::span<const std::uint64_t> seeds,
                       std::span<const std::uint64_t> point_keys, int parallelism) {
  if (seeds.empty()) throw ValidationError("seed sweep needs at least one seed");
  std::vector<std::uint64_t> sorted(seeds.begin(), seeds.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("seed sweep seeds must be pairwise distinct");
  }
  config.validate(points.rows());

  std::vector<std::vector<DistancePair>> tables(sorted.size());
  std::vector<std::exception_ptr> failures(sorted.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t s = next++; s < sorted.size(); s = next++) {
      try {
        UmapConfig run = config;
        run.random_seed = sorted[s];
        const auto layout = umap_fit(points, run, point_keys);
        tables[s] = centroid_distance_table(layout.coords, labels).pairs;
      } catch (...) {
        failures[s] = std::current_exception();
      }
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::clamp<int>(parallelism, 1, static_cast<int>(sorted.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t s = 0; s < sorted.size(); ++s) {
    if (!failures[s]) continue;
    const std::string where = "seed " + std::to_string(sorted[s]) + ": ";
    try {
      std::rethrow_exception(failures[s]);
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    } catch (const std::exception& e) {
      throw NumericError(where + e.what());
    }
  }

  SweepReport report;
  report.seeds = sorted;
  for (std::size_t s = 0; s < sorted.size(); ++s) report.per_seed[sorted[s]] = std::move(tables[s]);
  report.mean_distances = mean_pairs(report.per_seed);
  return report;
}

}  // namespace hallucmap
