#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "hallucmap/error.hpp"
#include "hallucmap/manifold.hpp"

namespace hallucmap::detail {

using nlohmann::json;

inline json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& rows, const std::string& what) {
  if (!rows.is_array()) throw ParseError(what + " must be an array of rows");
  if (rows.empty()) return {};
  const auto cols = rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (!row.is_array() || row.size() != cols) throw ParseError(what + " rows must share one length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw ParseError(what + " entries must be numbers");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

inline std::string init_name(InitMethod init) { return init == InitMethod::kPca ? "pca" : "random"; }

inline InitMethod parse_init(const std::string& name) {
  if (name == "random") return InitMethod::kRandom;
  if (name == "pca") return InitMethod::kPca;
  throw ConfigError("unknown init method '" + name + "'");
}

inline json umap_config_to_json(const UmapConfig& c) {
  return {{"n_neighbors", c.n_neighbors},   {"min_dist", c.min_dist},
          {"spread", c.spread},             {"learning_rate", c.learning_rate},
          {"n_components", c.n_components}, {"n_epochs", c.n_epochs},
          {"negative_sample_rate", c.negative_sample_rate},
          {"random_seed", c.random_seed},   {"min_neighborhood", c.min_neighborhood},
          {"metric", c.metric},             {"init", init_name(c.init)}};
}

/// Fields absent from `j` keep the values already in `c`.
inline void update_umap_config(UmapConfig& c, const json& j) {
  if (!j.is_object()) throw ConfigError("umap settings must be an object");
  try {
    c.n_neighbors = j.value("n_neighbors", c.n_neighbors);
    c.min_dist = j.value("min_dist", c.min_dist);
    c.spread = j.value("spread", c.spread);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.n_components = j.value("n_components", c.n_components);
    c.n_epochs = j.value("n_epochs", c.n_epochs);
    c.negative_sample_rate = j.value("negative_sample_rate", c.negative_sample_rate);
    c.random_seed = j.value("random_seed", c.random_seed);
    c.min_neighborhood = j.value("min_neighborhood", c.min_neighborhood);
    c.metric = j.value("metric", c.metric);
    if (j.contains("init")) c.init = parse_init(j.at("init").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid umap settings: ") + e.what());
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(1) + "\n");
}

}  // namespace hallucmap::detail
