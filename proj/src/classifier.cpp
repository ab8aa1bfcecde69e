#include "hallucmap/classifier.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "hallucmap/geometry.hpp"
#include "json_io.hpp"

namespace hallucmap {

namespace {

using detail::json;

CentroidModel centroids_of(const Eigen::Ref<const Eigen::MatrixXd>& vectors, std::span<const GroupLabel> labels,
                           std::span<const GroupLabel> declared) {
  if (static_cast<Eigen::Index>(labels.size()) != vectors.rows()) {
    throw ValidationError("label count does not match the number of vectors");
  }
  std::map<GroupLabel, std::vector<Eigen::Index>> groups;
  for (const auto& label : declared) groups[label];
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<Eigen::Index>(i));
  if (groups.size() < 2) throw ValidationError("a centroid model needs at least two labels");

  CentroidModel model;
  model.centroids.resize(static_cast<Eigen::Index>(groups.size()), vectors.cols());
  Eigen::Index row = 0;
  for (const auto& [label, members] : groups) {
    if (members.empty()) throw ValidationError("label " + label.name() + " has no training vectors");
    model.labels.push_back(label);
    model.centroids.row(row++) = centroid(vectors(members, Eigen::all)).transpose();
  }
  return model;
}

}  // namespace

std::string to_string(Space space) { return space == Space::kLayout ? "layout" : "embedding"; }

Space parse_space(const std::string& name) {
  if (name == "embedding") return Space::kEmbedding;
  if (name == "layout") return Space::kLayout;
  throw ConfigError("unknown classification space '" + name + "'");
}

CentroidModel fit_centroids(const Eigen::Ref<const Eigen::MatrixXd>& vectors, std::span<const GroupLabel> labels,
                            Space space, std::span<const GroupLabel> declared) {
  auto model = centroids_of(vectors, labels, declared);
  model.space = space;
  return model;
}

CentroidModel fit_layout_model(const Eigen::Ref<const Eigen::MatrixXd>& embeddings,
                               const Eigen::Ref<const Eigen::MatrixXd>& layout, std::span<const GroupLabel> labels,
                               const UmapConfig& config) {
  if (embeddings.rows() != layout.rows()) {
    throw ValidationError("embedding and layout row counts differ");
  }
  auto model = centroids_of(layout, labels, {});
  model.space = Space::kLayout;
  model.umap_config = config;
  model.train_embeddings = embeddings;
  model.train_layout = layout;
  return model;
}

Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& v, const CentroidModel& model) {
  if (v.size() != model.dim()) {
    throw ValidationError("vector has dimension " + std::to_string(v.size()) + ", model expects " +
                          std::to_string(model.dim()));
  }
  if (model.labels.size() < 2) throw ValidationError("model has fewer than two labels");

  std::size_t best = 0;
  double nearest = std::numeric_limits<double>::infinity();
  double second = std::numeric_limits<double>::infinity();
  std::map<GroupLabel, double> distances;
  // labels are ascending, so strict comparison keeps the smaller label on ties
  for (std::size_t i = 0; i < model.labels.size(); ++i) {
    const double d = euclidean(v, model.centroids.row(static_cast<Eigen::Index>(i)));
    distances.emplace(model.labels[i], d);
    if (d < nearest) {
      second = nearest;
      nearest = d;
      best = i;
    } else if (d < second) {
      second = d;
    }
  }
  return {model.labels[best], std::move(distances), second - nearest};
}

Eigen::VectorXd place_in_layout(const Eigen::Ref<const Eigen::VectorXd>& embedding, const CentroidModel& model) {
  if (model.space != Space::kLayout || !model.umap_config || model.train_layout.rows() == 0) {
    throw UsageError("model has no training layout to place vectors in");
  }
  const auto& train = model.train_embeddings;
  if (embedding.size() != train.cols()) {
    throw ValidationError("embedding has dimension " + std::to_string(embedding.size()) + ", training data has " +
                          std::to_string(train.cols()));
  }
  const Eigen::Index n = train.rows();
  const auto k = static_cast<std::size_t>(std::min<Eigen::Index>(model.umap_config->n_neighbors, n));

  std::vector<std::pair<double, Eigen::Index>> candidates(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) candidates[static_cast<std::size_t>(i)] = {euclidean(embedding, train.row(i)), i};
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end());

  Eigen::VectorXd position = Eigen::VectorXd::Zero(model.train_layout.cols());
  if (candidates.front().first == 0.0) {
    double count = 0.0;
    for (std::size_t r = 0; r < k && candidates[r].first == 0.0; ++r, count += 1.0) {
      position += model.train_layout.row(candidates[r].second).transpose();
    }
    return position / count;
  }

  std::vector<double> distances(k);
  for (std::size_t r = 0; r < k; ++r) distances[r] = candidates[r].first;
  const auto cal = smooth_knn(distances, static_cast<int>(k));
  double total = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    const double w = std::exp(-std::max(0.0, distances[r] - cal.rho) / cal.sigma);
    position += w * model.train_layout.row(candidates[r].second).transpose();
    total += w;
  }
  return position / total;
}

Prediction predict_from_embedding(const Eigen::Ref<const Eigen::VectorXd>& embedding, const CentroidModel& model) {
  if (model.space == Space::kEmbedding) return predict(embedding, model);
  return predict(place_in_layout(embedding, model), model);
}

Verdict binary_decision(const Prediction& prediction) {
  return prediction.label.is_hallucinated() ? Verdict::kHallucinated : Verdict::kCorrect;
}

std::string to_string(Verdict verdict) { return verdict == Verdict::kHallucinated ? "hallucinated" : "correct"; }

void save_model(const CentroidModel& model, const std::filesystem::path& path) {
  json labels = json::array();
  for (const auto& l : model.labels) labels.push_back(l.name());
  json j = {{"space", to_string(model.space)},
            {"labels", std::move(labels)},
            {"centroids", detail::matrix_to_json(model.centroids)}};
  if (model.umap_config) j["umap_config"] = detail::umap_config_to_json(*model.umap_config);
  if (model.space == Space::kLayout) {
    j["train_embeddings"] = detail::matrix_to_json(model.train_embeddings);
    j["train_layout"] = detail::matrix_to_json(model.train_layout);
  }
  detail::write_json_file(path, j);
}

CentroidModel load_model(const std::filesystem::path& path) {
  const auto j = detail::read_json_file(path);
  CentroidModel model;
  try {
    model.space = parse_space(j.at("space").get<std::string>());
    for (const auto& l : j.at("labels")) model.labels.push_back(parse_group_label(l.get<std::string>()));
    model.centroids = detail::matrix_from_json(j.at("centroids"), "centroids");
    if (j.contains("umap_config")) {
      UmapConfig config;
      detail::update_umap_config(config, j.at("umap_config"));
      model.umap_config = config;
    }
    if (j.contains("train_embeddings")) {
      model.train_embeddings = detail::matrix_from_json(j.at("train_embeddings"), "train_embeddings");
    }
    if (j.contains("train_layout")) model.train_layout = detail::matrix_from_json(j.at("train_layout"), "train_layout");
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (static_cast<Eigen::Index>(model.labels.size()) != model.centroids.rows() || model.labels.size() < 2) {
    throw ValidationError(path.string() + ": labels and centroids disagree");
  }
  if (!std::is_sorted(model.labels.begin(), model.labels.end()) ||
      std::adjacent_find(model.labels.begin(), model.labels.end()) != model.labels.end()) {
    throw ValidationError(path.string() + ": labels must be distinct and ascending");
  }
  return model;
}

}  // namespace hallucmap
