#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hallucmap/error.hpp"
#include "hallucmap/labels.hpp"
#include "hallucmap/manifold.hpp"

namespace hallucmap {

/// Coordinatewise mean of the rows of `points`, returned as a column vector.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> centroid(const Eigen::MatrixBase<Derived>& points) {
  if (points.rows() == 0) throw DegenerateInputError("centroid of an empty point set");
  return points.colwise().mean().transpose();
}

template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar euclidean(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q) {
  if (p.size() != q.size()) {
    throw ValidationError("dimension mismatch: " + std::to_string(p.size()) + " vs " + std::to_string(q.size()));
  }
  using Scalar = typename DerivedP::Scalar;
  Scalar sum(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar diff = p.coeff(i) - q.coeff(i);
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

struct ClusterSummary {
  GroupLabel label;
  Eigen::VectorXd centroid;
  Eigen::Index count = 0;
  double mean_radius = 0.0;
};

struct DistancePair {
  GroupLabel a;
  GroupLabel b;
  double distance = 0.0;
};

struct CentroidTable {
  std::vector<ClusterSummary> clusters;  // ascending by label
  std::vector<DistancePair> pairs;       // (a < b), lexicographic
};

/// Per-label centroids of the rows of `layout` and the distance between every
/// unordered pair of labels. When `declared` is non-empty, every declared label
/// must own at least one row and no row may carry an undeclared label.
CentroidTable centroid_distance_table(const Eigen::Ref<const Eigen::MatrixXd>& layout,
                                      std::span<const GroupLabel> labels,
                                      std::span<const GroupLabel> declared = {});

struct SweepReport {
  std::vector<std::uint64_t> seeds;  // ascending
  std::map<std::uint64_t, std::vector<DistancePair>> per_seed;
  std::vector<DistancePair> mean_distances;
};

/// Arithmetic mean of each label pair over the per-seed tables. Throws
/// ConsistencyError when the seeds do not share the same label pairs.
std::vector<DistancePair> mean_pairs(const std::map<std::uint64_t, std::vector<DistancePair>>& per_seed);

/// Projects `points` once per seed (config.random_seed replaced by the seed) and
/// tabulates centroid distances. Up to `parallelism` seeds run concurrently;
/// the report is independent of it. A failing seed aborts the sweep and is
/// named in the error.
SweepReport seed_sweep(const Eigen::Ref<const Eigen::MatrixXd>& points, std::span<const GroupLabel> labels,
                       const UmapConfig& config, std::span<const std::uint64_t> seeds,
                       std::span<const std::uint64_t> point_keys = {}, int parallelism = 1);

}  // namespace hallucmap
