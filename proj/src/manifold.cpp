#include "hallucmap/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/SVD>

#include "hallucmap/error.hpp"
#include "hallucmap/rng.hpp"

namespace hallucmap {

namespace {

constexpr double kSigmaTolerance = 1e-5;
constexpr int kSigmaIterations = 64;
constexpr double kGradientClip = 4.0;
constexpr double kInitExtent = 10.0;
constexpr int kFitIterations = 500;

std::uint64_t key_of(std::span<const std::uint64_t> keys, Eigen::Index i) {
  return keys.empty() ? static_cast<std::uint64_t>(i) : keys[static_cast<std::size_t>(i)];
}

void check_keys(std::span<const std::uint64_t> keys, Eigen::Index n) {
  if (!keys.empty() && static_cast<Eigen::Index>(keys.size()) != n) {
    throw ValidationError("point key count " + std::to_string(keys.size()) + " does not match " +
                          std::to_string(n) + " points");
  }
}

/// Indices sorted by key, ties by index.
std::vector<Eigen::Index> key_order(std::span<const std::uint64_t> keys, Eigen::Index n) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  if (!keys.empty()) {
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return key_of(keys, a) < key_of(keys, b); });
  }
  return order;
}

double clip(double v) { return std::clamp(v, -kGradientClip, kGradientClip); }

struct Edge {
  Eigen::Index head;
  Eigen::Index tail;
  double weight;
};

}  // namespace

void UmapConfig::validate() const {
  if (n_neighbors < 2) throw ConfigError("n_neighbors must be at least 2");
  if (!(min_dist > 0.0) || !(min_dist <= spread)) throw ConfigError("require 0 < min_dist <= spread");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (n_components != 2 && n_components != 3) throw ConfigError("n_components must be 2 or 3");
  if (n_epochs < 1) throw ConfigError("n_epochs must be at least 1");
  if (negative_sample_rate < 0) throw ConfigError("negative_sample_rate must be non-negative");
  if (metric != "euclidean") throw ConfigError("unsupported metric '" + metric + "'");
}

void UmapConfig::validate(Eigen::Index n_points) const {
  validate();
  if (n_neighbors >= n_points) {
    throw ConfigError("n_neighbors (" + std::to_string(n_neighbors) + ") must be smaller than the number of points (" +
                      std::to_string(n_points) + ")");
  }
}

KnnGraph knn_exact(const Eigen::Ref<const Eigen::MatrixXd>& points, int k) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k >= n) {
    throw ConfigError("k = " + std::to_string(k) + " requires 1 <= k < N = " + std::to_string(n));
  }
  KnnGraph graph{Eigen::MatrixXi(n, k), Eigen::MatrixXd(n, k)};
  std::vector<std::pair<double, Eigen::Index>> candidates(static_cast<std::size_t>(n - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      candidates[c++] = {(points.row(j) - points.row(i)).squaredNorm(), j};
    }
    // pair ordering gives (distance, index) lexicographic tie breaking
    std::partial_sort(candidates.begin(), candidates.begin() + k, candidates.end());
    for (int r = 0; r < k; ++r) {
      graph.indices(i, r) = static_cast<int>(candidates[static_cast<std::size_t>(r)].second);
      graph.distances(i, r) = std::sqrt(candidates[static_cast<std::size_t>(r)].first);
    }
  }
  return graph;
}

double membership_mass(std::span<const double> distances, double rho, double sigma) {
  double sum = 0.0;
  for (double d : distances) sum += std::exp(-std::max(0.0, d - rho) / sigma);
  return sum;
}

SmoothKnn smooth_knn(std::span<const double> distances, int k) {
  if (distances.empty()) throw ValidationError("smooth_knn needs at least one distance");
  for (std::size_t j = 0; j < distances.size(); ++j) {
    if (!(distances[j] >= 0.0)) throw ValidationError("distances must be non-negative");
    if (j > 0 && distances[j] < distances[j - 1]) throw ValidationError("distances must be sorted ascending");
  }

  const double rho = distances.front();
  const double target = std::log2(static_cast<double>(k));
  double mean = std::accumulate(distances.begin(), distances.end(), 0.0) / static_cast<double>(distances.size());
  if (!(mean > 0.0)) mean = 1.0;
  double lo = 1e-3 * mean;
  double hi = 1e3 * mean;

  if (distances.back() == rho) return {rho, hi};

  auto residual = [&](double sigma) { return membership_mass(distances, rho, sigma) - target; };
  const double r_lo = residual(lo);
  const double r_hi = residual(hi);
  if (r_lo >= 0.0) return {rho, lo};
  if (r_hi <= 0.0) return {rho, hi};

  double best = hi;
  double best_residual = std::abs(r_hi);
  for (int it = 0; it < kSigmaIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = residual(mid);
    if (std::abs(r) < best_residual) {
      best = mid;
      best_residual = std::abs(r);
    }
    if (best_residual <= kSigmaTolerance) break;
    // mass increases with sigma
    (r > 0.0 ? hi : lo) = mid;
  }
  return {rho, best};
}

FuzzyGraph local_memberships(const KnnGraph& knn, std::span<const SmoothKnn> calibration) {
  const Eigen::Index n = knn.size();
  if (static_cast<Eigen::Index>(calibration.size()) != n) {
    throw ValidationError("calibration count does not match the number of points");
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n * knn.k()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& cal = calibration[static_cast<std::size_t>(i)];
    for (Eigen::Index r = 0; r < knn.k(); ++r) {
      const double w = std::exp(-std::max(0.0, knn.distances(i, r) - cal.rho) / cal.sigma);
      if (w > 0.0) triplets.emplace_back(i, knn.indices(i, r), w);
    }
  }
  FuzzyGraph directed(n, n);
  directed.setFromTriplets(triplets.begin(), triplets.end());
  return directed;
}

FuzzyGraph symmetrize(const FuzzyGraph& directed) {
  FuzzyGraph transposed = directed.transpose();
  FuzzyGraph product = directed.cwiseProduct(transposed);
  FuzzyGraph sum = directed + transposed;
  FuzzyGraph result = sum - product;
  for (Eigen::Index row = 0; row < result.outerSize(); ++row) {
    for (FuzzyGraph::InnerIterator it(result, row); it; ++it) {
      if (it.row() == it.col()) it.valueRef() = 0.0;
      it.valueRef() = std::min(it.value(), 1.0);
    }
  }
  result.prune(0.0, 0.0);
  result.makeCompressed();
  return result;
}

CurveParams fit_ab(double min_dist, double spread) {
  if (!(min_dist > 0.0) || !(min_dist <= spread)) throw ConfigError("fit_ab requires 0 < min_dist <= spread");

  constexpr int kSamples = 300;
  const Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(kSamples, 0.0, 3.0 * spread);
  const Eigen::ArrayXd y =
      (x <= min_dist).select(Eigen::ArrayXd::Ones(kSamples), (-(x - min_dist) / spread).exp());
  // x^(2b) and its log-derivative vanish at x = 0.
  const Eigen::ArrayXd log_x = (x > 0.0).select(x.log(), 0.0);

  auto evaluate = [&](double a, double b, Eigen::ArrayXd& residual, Eigen::Matrix<double, Eigen::Dynamic, 2>* jac) {
    const Eigen::ArrayXd xp = (x > 0.0).select((2.0 * b * log_x).exp(), 0.0);
    const Eigen::ArrayXd denom = 1.0 + a * xp;
    residual = 1.0 / denom - y;
    if (jac != nullptr) {
      const Eigen::ArrayXd d2 = denom.square();
      jac->col(0) = (-xp / d2).matrix();
      jac->col(1) = (-a * xp * 2.0 * log_x / d2).matrix();
    }
    return residual.square().sum();
  };

  double a = 1.0;
  double b = 1.0;
  double lambda = 1e-3;
  Eigen::ArrayXd residual(kSamples);
  Eigen::Matrix<double, Eigen::Dynamic, 2> jac(kSamples, 2);
  double sse = evaluate(a, b, residual, &jac);
  bool converged = false;
  for (int it = 0; it < kFitIterations && !converged; ++it) {
    const Eigen::Matrix2d jtj = jac.transpose() * jac;
    const Eigen::Vector2d grad = jac.transpose() * residual.matrix();
    bool accepted = false;
    while (!accepted && lambda < 1e12) {
      Eigen::Matrix2d damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Vector2d step = damped.ldlt().solve(-grad);
      const double a_new = a + step(0);
      const double b_new = b + step(1);
      Eigen::ArrayXd trial(kSamples);
      if (a_new > 0.0 && b_new > 0.0) {
        const double sse_new = evaluate(a_new, b_new, trial, nullptr);
        if (sse_new <= sse) {
          const double rel = std::abs(step(0)) / a + std::abs(step(1)) / b;
          converged = rel < 1e-12 || (sse - sse_new) <= 1e-16 * std::max(sse, 1e-300);
          a = a_new;
          b = b_new;
          sse = evaluate(a, b, residual, &jac);
          lambda = std::max(lambda * 0.3, 1e-12);
          accepted = true;
          continue;
        }
      }
      lambda *= 10.0;
    }
    if (!accepted) converged = true;  // no descent direction left at machine precision
  }

  const double rmse = std::sqrt(sse / kSamples);
  if (!converged || !std::isfinite(rmse) || !std::isfinite(a) || !std::isfinite(b)) {
    std::ostringstream msg;
    msg << "curve fit for min_dist=" << min_dist << ", spread=" << spread << " did not converge (rmse=" << rmse
        << ")";
    throw NumericError(msg.str());
  }
  return {a, b, rmse};
}

LayoutMatrix init_layout(Eigen::Index n_points, int n_components, std::uint64_t seed,
                         std::span<const std::uint64_t> point_keys) {
  if (n_points < 1) throw ValidationError("init_layout needs at least one point");
  if (n_components < 1) throw ConfigError("n_components must be positive");
  check_keys(point_keys, n_points);
  LayoutMatrix layout{Eigen::MatrixXd(n_points, n_components), seed};
  for (Eigen::Index i = 0; i < n_points; ++i) {
    CounterRng rng(combine_keys(seed, key_of(point_keys, i)));
    for (int c = 0; c < n_components; ++c) layout.coords(i, c) = rng.uniform(-kInitExtent, kInitExtent);
  }
  return layout;
}

LayoutMatrix pca_layout(const Eigen::Ref<const Eigen::MatrixXd>& points, int n_components, std::uint64_t seed,
                        std::span<const std::uint64_t> point_keys) {
  const Eigen::Index n = points.rows();
  if (n < 1) throw ValidationError("pca_layout needs at least one point");
  check_keys(point_keys, n);
  // The decomposition sees the rows in key order so that it does not depend
  // on how the caller ordered them.
  const auto order = key_order(point_keys, n);
  const Eigen::MatrixXd ordered = points(order, Eigen::all);
  const Eigen::RowVectorXd mean = ordered.colwise().mean();
  const Eigen::MatrixXd centered = ordered.rowwise() - mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::Index rank = std::min<Eigen::Index>(n_components, svd.matrixV().cols());

  Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(n, n_components);
  for (Eigen::Index c = 0; c < rank; ++c) {
    Eigen::VectorXd axis = svd.matrixV().col(c);
    Eigen::Index pivot = 0;
    axis.cwiseAbs().maxCoeff(&pivot);
    if (axis(pivot) < 0.0) axis = -axis;
    for (Eigen::Index i = 0; i < n; ++i) {
      double dot = 0.0;
      for (Eigen::Index d = 0; d < points.cols(); ++d) dot += (points(i, d) - mean(d)) * axis(d);
      coords(i, c) = dot;
    }
  }
  const double extent = coords.cwiseAbs().maxCoeff();
  if (extent > 0.0) coords *= kInitExtent / extent;

  for (Eigen::Index i = 0; i < n; ++i) {
    CounterRng rng(combine_keys(seed, key_of(point_keys, i)));
    for (int c = 0; c < n_components; ++c) coords(i, c) += 1e-3 * rng.normal();
  }
  return {std::move(coords), seed};
}

LayoutMatrix optimize_layout(const FuzzyGraph& graph, LayoutMatrix init, const UmapConfig& config,
                             std::span<const std::uint64_t> point_keys) {
  config.validate();
  const Eigen::Index n = init.coords.rows();
  if (graph.rows() != n || graph.cols() != n) {
    throw ValidationError("graph has " + std::to_string(graph.rows()) + " points but the layout has " +
                          std::to_string(n));
  }
  check_keys(point_keys, n);
  const int dim = static_cast<int>(init.coords.cols());
  const auto curve = fit_ab(config.min_dist, config.spread);
  const double a = curve.a;
  const double b = curve.b;

  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(graph.nonZeros()));
  for (Eigen::Index row = 0; row < graph.outerSize(); ++row) {
    for (FuzzyGraph::InnerIterator it(graph, row); it; ++it) {
      if (it.row() != it.col() && it.value() > 0.0) edges.push_back({it.row(), it.col(), it.value()});
    }
  }
  std::sort(edges.begin(), edges.end(), [&](const Edge& l, const Edge& r) {
    const auto lk = std::pair(key_of(point_keys, l.head), key_of(point_keys, l.tail));
    const auto rk = std::pair(key_of(point_keys, r.head), key_of(point_keys, r.tail));
    return lk < rk;
  });
  const auto by_key = key_order(point_keys, n);

  double max_weight = 0.0;
  for (const auto& e : edges) max_weight = std::max(max_weight, e.weight);

  const std::size_t m = edges.size();
  const double neg_rate = static_cast<double>(config.negative_sample_rate);
  std::vector<double> epochs_per_sample(m), next_sample(m), epochs_per_negative(m), next_negative(m);
  for (std::size_t e = 0; e < m; ++e) {
    epochs_per_sample[e] = max_weight / edges[e].weight;
    next_sample[e] = epochs_per_sample[e];
    epochs_per_negative[e] = neg_rate > 0.0 ? epochs_per_sample[e] / neg_rate : 0.0;
    next_negative[e] = epochs_per_negative[e];
  }

  Eigen::MatrixXd& y = init.coords;
  CounterRng rng(combine_keys(config.random_seed, 0x6e65676174697665ULL));
  const double alpha0 = config.learning_rate;
  const double n_epochs = static_cast<double>(config.n_epochs);

  for (int epoch = 0; epoch < config.n_epochs; ++epoch) {
    const double alpha = alpha0 * (1.0 - static_cast<double>(epoch) / n_epochs);
    for (std::size_t e = 0; e < m; ++e) {
      if (next_sample[e] > epoch) continue;
      const Eigen::Index j = edges[e].head;
      const Eigen::Index k = edges[e].tail;

      double dist_sq = (y.row(j) - y.row(k)).squaredNorm();
      double coeff = 0.0;
      if (dist_sq > 0.0) {
        coeff = -2.0 * a * b * std::pow(dist_sq, b - 1.0) / (a * std::pow(dist_sq, b) + 1.0);
      }
      for (int d = 0; d < dim; ++d) {
        const double g = clip(coeff * (y(j, d) - y(k, d)));
        y(j, d) += g * alpha;
        y(k, d) -= g * alpha;
      }
      next_sample[e] += epochs_per_sample[e];

      if (neg_rate <= 0.0) continue;
      const auto n_neg = static_cast<long>((epoch - next_negative[e]) / epochs_per_negative[e]);
      for (long p = 0; p < n_neg; ++p) {
        const Eigen::Index s = by_key[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n)))];
        if (s == j) continue;
        dist_sq = (y.row(j) - y.row(s)).squaredNorm();
        coeff = 0.0;
        if (dist_sq > 0.0) coeff = 2.0 * b / ((0.001 + dist_sq) * (a * std::pow(dist_sq, b) + 1.0));
        for (int d = 0; d < dim; ++d) {
          const double g = coeff > 0.0 ? clip(coeff * (y(j, d) - y(s, d))) : kGradientClip;
          y(j, d) += g * alpha;
        }
      }
      if (n_neg > 0) next_negative[e] += static_cast<double>(n_neg) * epochs_per_negative[e];
    }
    if (!y.allFinite()) {
      throw NumericError("non-finite layout coordinate after epoch " + std::to_string(epoch));
    }
  }
  init.seed = config.random_seed;
  return init;
}

FuzzyGraph fuzzy_graph(const Eigen::Ref<const Eigen::MatrixXd>& points, int n_neighbors) {
  const auto knn = knn_exact(points, n_neighbors);
  std::vector<SmoothKnn> calibration(static_cast<std::size_t>(knn.size()));
  std::vector<double> row(static_cast<std::size_t>(knn.k()));
  for (Eigen::Index i = 0; i < knn.size(); ++i) {
    for (Eigen::Index r = 0; r < knn.k(); ++r) row[static_cast<std::size_t>(r)] = knn.distances(i, r);
    calibration[static_cast<std::size_t>(i)] = smooth_knn(row, n_neighbors);
  }
  return symmetrize(local_memberships(knn, calibration));
}

LayoutMatrix umap_fit(const Eigen::Ref<const Eigen::MatrixXd>& points, const UmapConfig& config,
                      std::span<const std::uint64_t> point_keys) {
  config.validate(points.rows());
  check_keys(point_keys, points.rows());
  if (!points.allFinite()) throw ValidationError("input points contain non-finite values");
  const auto graph = fuzzy_graph(points, config.n_neighbors);
  auto init = config.init == InitMethod::kPca
                  ? pca_layout(points, config.n_components, config.random_seed, point_keys)
                  : init_layout(points.rows(), config.n_components, config.random_seed, point_keys);
  return optimize_layout(graph, std::move(init), config, point_keys);
}

}  // namespace hallucmap
