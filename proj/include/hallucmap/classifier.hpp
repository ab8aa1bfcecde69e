#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hallucmap/labels.hpp"
#include "hallucmap/manifold.hpp"

namespace hallucmap {

enum class Space { kEmbedding, kLayout };

std::string to_string(Space space);
Space parse_space(const std::string& name);

/// Nearest-centroid classifier state. Layout-space models also retain the
/// training embeddings and their layout so new vectors can be placed.
struct CentroidModel {
  Space space = Space::kEmbedding;
  std::vector<GroupLabel> labels;  // ascending, distinct
  Eigen::MatrixXd centroids;       // one row per label
  std::optional<UmapConfig> umap_config;
  Eigen::MatrixXd train_embeddings;
  Eigen::MatrixXd train_layout;

  Eigen::Index dim() const { return centroids.cols(); }
};

struct Prediction {
  GroupLabel label;
  std::map<GroupLabel, double> distances;
  double margin = 0.0;  // second-nearest minus nearest
};

enum class Verdict { kCorrect, kHallucinated };

/// Fits one centroid per label over the rows of `vectors`. Labels listed in
/// `declared` must each own at least one row.
CentroidModel fit_centroids(const Eigen::Ref<const Eigen::MatrixXd>& vectors, std::span<const GroupLabel> labels,
                            Space space = Space::kEmbedding, std::span<const GroupLabel> declared = {});

/// Layout-space model: centroids of `layout` rows, with the training data kept
/// for place_in_layout.
CentroidModel fit_layout_model(const Eigen::Ref<const Eigen::MatrixXd>& embeddings,
                               const Eigen::Ref<const Eigen::MatrixXd>& layout, std::span<const GroupLabel> labels,
                               const UmapConfig& config);

/// Nearest centroid; equal distances resolve to the lexicographically smaller label.
Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& v, const CentroidModel& model);

/// Out-of-sample placement: membership-weighted mean of the layout positions of
/// the k nearest training embeddings (k = umap_config.n_neighbors, capped at
/// the training size). An exact match returns that point's position.
Eigen::VectorXd place_in_layout(const Eigen::Ref<const Eigen::VectorXd>& embedding, const CentroidModel& model);

/// Places an embedding-space vector and predicts in layout space.
Prediction predict_from_embedding(const Eigen::Ref<const Eigen::VectorXd>& embedding, const CentroidModel& model);

Verdict binary_decision(const Prediction& prediction);
std::string to_string(Verdict verdict);

void save_model(const CentroidModel& model, const std::filesystem::path& path);
CentroidModel load_model(const std::filesystem::path& path);

}  // namespace hallucmap
