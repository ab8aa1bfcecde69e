#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace hallucmap {

/// How optimize_layout's starting coordinates are produced.
///  - kRandom: seeded uniform draws in [-10, 10] (init_layout).
///  - kPca: projection onto the leading principal axes, rescaled to [-10, 10],
///    plus a small seeded jitter. Keeps the global arrangement of well
///    separated groups that random starts discard.
enum class InitMethod { kRandom, kPca };

struct UmapConfig {
  int n_neighbors = 10;
  double min_dist = 0.2;
  double spread = 1.2;
  double learning_rate = 0.8;
  int n_components = 2;
  int n_epochs = 500;
  int negative_sample_rate = 5;
  std::uint64_t random_seed = 17;
  /// Minimum local neighborhood size. Accepted for completeness; the
  /// projection does not use it.
  int min_neighborhood = 10;
  std::string metric = "euclidean";
  InitMethod init = InitMethod::kRandom;

  /// Checks every bound that does not depend on the data.
  void validate() const;
  /// Additionally checks n_neighbors < n_points.
  void validate(Eigen::Index n_points) const;
};

/// k nearest neighbours of every point, ascending by distance, self excluded.
struct KnnGraph {
  Eigen::MatrixXi indices;    // N x k
  Eigen::MatrixXd distances;  // N x k

  Eigen::Index size() const { return indices.rows(); }
  Eigen::Index k() const { return indices.cols(); }
};

struct SmoothKnn {
  double rho = 0.0;
  double sigma = 1.0;
};

/// Fitted parameters of the low-dimensional kernel 1 / (1 + a d^(2b)).
struct CurveParams {
  double a = 0.0;
  double b = 0.0;
  double rmse = 0.0;
};

/// Symmetric fuzzy membership graph; entries are in (0, 1], diagonal empty.
using FuzzyGraph = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct LayoutMatrix {
  Eigen::MatrixXd coords;  // N x n_components
  std::uint64_t seed = 0;
};

/// Exact neighbours by full scan. Ties are broken by smaller index.
KnnGraph knn_exact(const Eigen::Ref<const Eigen::MatrixXd>& points, int k);

/// Calibrates (rho, sigma) so the membership mass of the neighbourhood equals
/// log2(k). Throws ValidationError when `distances` is not ascending or
/// contains negative values.
///
/// When no sigma in [1e-3 m, 1e3 m] (m = mean distance) attains the target, the
/// bound with the smaller residual is returned. If the mass does not depend on
/// sigma at all (every distance equals rho) the upper bound is returned.
SmoothKnn smooth_knn(std::span<const double> distances, int k);

/// Target mass used by smooth_knn and the residual it minimises.
double membership_mass(std::span<const double> distances, double rho, double sigma);

/// Directed memberships exp(-max(0, d - rho_i) / sigma_i) as a sparse N x N
/// matrix, row i holding the out-edges of point i.
FuzzyGraph local_memberships(const KnnGraph& knn, std::span<const SmoothKnn> calibration);

/// Probabilistic union w + w' - w w' of both edge directions.
FuzzyGraph symmetrize(const FuzzyGraph& directed);

/// Least-squares fit of 1 / (1 + a x^(2b)) to the piecewise target curve on 300
/// points of [0, 3 spread]. Throws NumericError, quoting the final RMSE, when
/// Levenberg-Marquardt does not converge within its iteration budget.
CurveParams fit_ab(double min_dist, double spread);

/// Seeded uniform coordinates in [-10, 10]. Row i is drawn from a stream keyed
/// by point_keys[i] (or i when no keys are given), so reordering points with
/// their keys reorders the rows and nothing else.
LayoutMatrix init_layout(Eigen::Index n_points, int n_components, std::uint64_t seed,
                         std::span<const std::uint64_t> point_keys = {});

/// Principal-axis start; see InitMethod::kPca.
LayoutMatrix pca_layout(const Eigen::Ref<const Eigen::MatrixXd>& points, int n_components, std::uint64_t seed,
                        std::span<const std::uint64_t> point_keys = {});

/// Epoch-scheduled SGD of the layout against the fuzzy graph. Single threaded
/// and deterministic for a given (graph, init, config, keys). Edges are visited
/// and negative samples drawn in key order.
LayoutMatrix optimize_layout(const FuzzyGraph& graph, LayoutMatrix init, const UmapConfig& config,
                             std::span<const std::uint64_t> point_keys = {});

/// Fuzzy graph of the data: knn_exact, smooth_knn, local_memberships, symmetrize.
FuzzyGraph fuzzy_graph(const Eigen::Ref<const Eigen::MatrixXd>& points, int n_neighbors);

/// Full projection of `points` (one row per point) to config.n_components.
LayoutMatrix umap_fit(const Eigen::Ref<const Eigen::MatrixXd>& points, const UmapConfig& config,
                      std::span<const std::uint64_t> point_keys = {});

}  // namespace hallucmap
