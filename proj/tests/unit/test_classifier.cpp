#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "hallucmap/classifier.hpp"
#include "hallucmap/geometry.hpp"
#include "oracles.hpp"

using namespace hallucmap;

namespace {

const GroupLabel kGt = GroupLabel::ground_truth();
const GroupLabel kMc = GroupLabel::model_correct();
const GroupLabel kFab = GroupLabel::hallucinated(HallucinationType::kFabrication);
const GroupLabel kMis = GroupLabel::hallucinated(HallucinationType::kMisinterpretation);

struct Blobs {
  Eigen::MatrixXd centers;
  Eigen::MatrixXd points;
  std::vector<GroupLabel> labels;
};

Blobs three_blobs(int per_blob, double sigma, std::uint32_t seed) {
  Blobs b;
  b.centers = Eigen::MatrixXd::Zero(3, 8);
  b.centers(1, 0) = 10 * sigma * 2;
  b.centers(2, 3) = 10 * sigma * 2;
  b.points = oracle::blobs(b.centers, per_blob, sigma, seed);
  const std::vector<GroupLabel> order = {kGt, kMc, kFab};
  for (int i = 0; i < 3 * per_blob; ++i) b.labels.push_back(order[static_cast<std::size_t>(i / per_blob)]);
  return b;
}

}  // namespace

TEST_CASE("fit_centroids") {
  SUBCASE("singletons are their own centroids") {
    Eigen::MatrixXd x(2, 3);
    x << 1, 2, 3, -1, 0, 4;
    const std::vector<GroupLabel> labels = {kMc, kGt};
    const auto m = fit_centroids(x, labels);
    CHECK(m.labels == std::vector<GroupLabel>{kGt, kMc});
    CHECK(m.centroids.row(0) == x.row(1));
    CHECK(m.centroids.row(1) == x.row(0));
    CHECK(m.space == Space::kEmbedding);
  }
  SUBCASE("deterministic") {
    const auto b = three_blobs(30, 0.5, 3);
    CHECK(fit_centroids(b.points, b.labels).centroids == fit_centroids(b.points, b.labels).centroids);
  }
  SUBCASE("blob centroids lie within 3 sigma / sqrt(n) of the centres") {
    // Each coordinate error is N(0, sigma^2 / n): about 0.27% of them exceed
    // the bound, so count over many draws rather than trusting one.
    const double sigma = 0.5;
    const int n = 200;
    const std::vector<int> row_of = {0, 2, 1};  // gt, fabrication, model_correct
    int coords = 0, outside = 0;
    double worst = 0.0;
    for (std::uint32_t seed = 1; seed <= 40; ++seed) {
      const auto b = three_blobs(n, sigma, seed);
      const auto m = fit_centroids(b.points, b.labels);
      for (int blob = 0; blob < 3; ++blob) {
        const Eigen::RowVectorXd diff = m.centroids.row(row_of[blob]) - b.centers.row(blob);
        for (Eigen::Index d = 0; d < diff.size(); ++d) {
          const double z = std::abs(diff(d)) * std::sqrt(n) / sigma;
          outside += z > 3.0;
          worst = std::max(worst, z);
          ++coords;
        }
      }
    }
    CHECK(outside <= coords / 100);
    CHECK(worst < 5.0);
  }
  SUBCASE("errors") {
    Eigen::MatrixXd x(2, 2);
    x << 0, 0, 1, 1;
    const std::vector<GroupLabel> same = {kGt, kGt};
    CHECK_THROWS_AS(fit_centroids(x, same), ValidationError);
    const std::vector<GroupLabel> labels = {kGt, kMc};
    const std::vector<GroupLabel> declared = {kFab};
    CHECK_THROWS_AS(fit_centroids(x, labels, Space::kEmbedding, declared), ValidationError);
    const std::vector<GroupLabel> too_few = {kGt};
    CHECK_THROWS_AS(fit_centroids(x, too_few), ValidationError);
  }
}

TEST_CASE("predict") {
  CentroidModel m;
  m.labels = {kGt, kFab, kMc};
  m.centroids.resize(3, 2);
  m.centroids << 0, 0, 4, 0, 0, 3;

  SUBCASE("a centroid maps to itself with margin to the runner-up") {
    const auto p = predict(Eigen::Vector2d(0, 3), m);
    CHECK(p.label == kMc);
    CHECK(p.margin == 3.0);
    CHECK(p.distances.size() == 3);
    CHECK(p.distances.at(kFab) == 5.0);
  }
  SUBCASE("ties go to the lexicographically smaller label") {
    const auto p = predict(Eigen::Vector2d(2, 0), m);
    CHECK(p.label == kGt);
    CHECK(p.margin == 0.0);
    CentroidModel twin;
    twin.labels = {kFab, kMis};
    twin.centroids.resize(2, 1);
    twin.centroids << -1, 1;
    CHECK(predict(Eigen::VectorXd::Zero(1), twin).label == kFab);
  }
  SUBCASE("dimension mismatch") { CHECK_THROWS_AS(predict(Eigen::Vector3d(0, 0, 0), m), ValidationError); }
  SUBCASE("blob points go to their generating blob") {
    const auto b = three_blobs(100, 0.5, 9);
    const auto model = fit_centroids(b.points, b.labels);
    int hits = 0;
    for (Eigen::Index i = 0; i < b.points.rows(); ++i) {
      hits += predict(b.points.row(i).transpose(), model).label == b.labels[static_cast<std::size_t>(i)];
    }
    CHECK(hits >= 0.95 * b.points.rows());
  }
  SUBCASE("properties on random queries") {
    std::mt19937_64 gen(21);
    std::normal_distribution<double> normal;
    const Eigen::Matrix2d rot = Eigen::Rotation2Dd(0.9).toRotationMatrix();
    const Eigen::Vector2d shift(3, -8);
    CentroidModel moved = m, scaled = m;
    moved.centroids = (m.centroids * rot.transpose()).rowwise() + shift.transpose();
    scaled.centroids = 2.5 * m.centroids;
    for (int i = 0; i < 2000; ++i) {
      const Eigen::Vector2d v(3 * normal(gen), 3 * normal(gen));
      const auto p = predict(v, m);
      for (const auto& [label, d] : p.distances) CHECK(p.distances.at(p.label) <= d);
      CHECK(p.margin >= 0.0);
      CHECK(predict(rot * v + shift, moved).label == p.label);
      CHECK(predict(2.5 * v, scaled).label == p.label);
    }
  }
}

TEST_CASE("binary_decision") {
  CentroidModel m;
  m.labels = {kGt, kFab, kMis, kMc};
  m.centroids.resize(4, 1);
  m.centroids << 0, 10, 12, 1;
  CHECK(binary_decision(predict(Eigen::VectorXd::Constant(1, 9.0), m)) == Verdict::kHallucinated);
  CHECK(binary_decision(predict(Eigen::VectorXd::Constant(1, 1.2), m)) == Verdict::kCorrect);
  CHECK(to_string(Verdict::kHallucinated) == "hallucinated");

  SUBCASE("merging hallucination subtypes never flips a correct verdict") {
    CentroidModel merged;
    merged.labels = {kGt, kFab, kMc};
    merged.centroids.resize(3, 1);
    merged.centroids << 0, 11, 1;
    for (double x = -5; x < 20; x += 0.01) {
      const Eigen::VectorXd v = Eigen::VectorXd::Constant(1, x);
      if (binary_decision(predict(v, m)) == Verdict::kCorrect) CHECK(binary_decision(predict(v, merged)) == Verdict::kCorrect);
    }
  }
}

TEST_CASE("place_in_layout") {
  Eigen::MatrixXd emb(4, 2);
  emb << 0, 0, 2, 0, 10, 10, 12, 10;
  Eigen::MatrixXd lay(4, 2);
  lay << 1, 1, 3, 5, -4, -4, -6, -2;
  const std::vector<GroupLabel> labels = {kGt, kGt, kFab, kFab};
  UmapConfig config;
  config.n_neighbors = 2;
  const auto model = fit_layout_model(emb, lay, labels, config);

  SUBCASE("exact match returns its layout position") {
    CHECK(place_in_layout(Eigen::Vector2d(10, 10), model) == Eigen::Vector2d(-4, -4));
  }
  SUBCASE("midway between two symmetric neighbours gives the midpoint") {
    const auto p = place_in_layout(Eigen::Vector2d(1, 0), model);
    CHECK(p(0) == doctest::Approx(2.0));
    CHECK(p(1) == doctest::Approx(3.0));
  }
  SUBCASE("layout prediction") {
    CHECK(predict_from_embedding(Eigen::Vector2d(11, 9), model).label == kFab);
    CHECK(predict_from_embedding(Eigen::Vector2d(0.5, 0.2), model).label == kGt);
  }
  SUBCASE("embedding models cannot place") {
    const auto flat = fit_centroids(emb, labels);
    CHECK_THROWS_AS(place_in_layout(Eigen::Vector2d(0, 0), flat), UsageError);
  }
  SUBCASE("held-out blob points agree across spaces") {
    const auto b = three_blobs(60, 0.5, 17);
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < b.points.rows(); ++i) (i % 5 == 0 ? test : train).push_back(i);
    const Eigen::MatrixXd x_train = b.points(train, Eigen::all);
    std::vector<GroupLabel> l_train;
    for (auto i : train) l_train.push_back(b.labels[static_cast<std::size_t>(i)]);
    UmapConfig umap;
    umap.n_epochs = 200;
    const auto layout = umap_fit(x_train, umap);
    const auto layout_model = fit_layout_model(x_train, layout.coords, l_train, umap);
    const auto flat = fit_centroids(x_train, l_train);
    int agree = 0;
    for (auto i : test) {
      const Eigen::VectorXd v = b.points.row(i).transpose();
      agree += predict(v, flat).label == predict_from_embedding(v, layout_model).label;
    }
    CHECK(agree >= 0.9 * static_cast<double>(test.size()));
  }
}

TEST_CASE("model persistence") {
  const auto dir = std::filesystem::temp_directory_path() / "hallucmap_model_rt";
  std::filesystem::create_directories(dir);
  const auto b = three_blobs(10, 0.5, 2);

  const auto flat = fit_centroids(b.points, b.labels);
  save_model(flat, dir / "flat.json");
  const auto flat_back = load_model(dir / "flat.json");
  CHECK(flat_back.space == Space::kEmbedding);
  CHECK(flat_back.labels == flat.labels);
  CHECK(flat_back.centroids == flat.centroids);
  CHECK_FALSE(flat_back.umap_config.has_value());

  UmapConfig umap;
  umap.n_epochs = 20;
  umap.n_neighbors = 5;
  const auto layout = umap_fit(b.points, umap);
  const auto lm = fit_layout_model(b.points, layout.coords, b.labels, umap);
  save_model(lm, dir / "layout.json");
  const auto lm_back = load_model(dir / "layout.json");
  CHECK(lm_back.space == Space::kLayout);
  REQUIRE(lm_back.umap_config.has_value());
  CHECK(lm_back.umap_config->n_neighbors == 5);
  CHECK(lm_back.train_layout == lm.train_layout);
  CHECK(lm_back.train_embeddings == lm.train_embeddings);
  const Eigen::VectorXd q = b.points.row(3).transpose();
  CHECK(predict_from_embedding(q, lm_back).label == predict_from_embedding(q, lm).label);

  std::ofstream(dir / "bad.json") << R"({"space":"layout","labels":["ground_truth"],"centroids":[[1]]})";
  CHECK_THROWS(load_model(dir / "bad.json"));
  std::filesystem::remove_all(dir);
}
