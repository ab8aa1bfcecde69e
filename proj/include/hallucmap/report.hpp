#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hallucmap/geometry.hpp"
#include "hallucmap/labels.hpp"

namespace hallucmap {

/// Caption fields of a distance table.
struct TableCaption {
  std::string steps;  // seed value, or a description of the averaged seeds
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

/// Fixed-width text table with columns Index | Key | Average Distance.
std::string render_distance_table(std::span<const DistancePair> pairs, const TableCaption& caption);

/// One table per seed followed by the table of means.
std::string render_sweep_tables(const SweepReport& report, Eigen::Index rows, Eigen::Index cols);

struct PlotStyle {
  /// Colors keyed by label name; labels without an entry get palette colors
  /// in ascending label order.
  std::map<std::string, std::string> colors;
  std::string centroid_color = "red";
  double point_radius = 3.0;
  double centroid_radius = 7.0;
  int width = 800;
  int height = 600;
  double padding = 40.0;
  /// Layout columns drawn on the x and y axes.
  int x_axis = 0;
  int y_axis = 1;
};

/// SVG scatter plot: one circle per point colored by label, then one centroid
/// marker per cluster, then a legend. Output depends only on the inputs.
std::string render_scatter_svg(const Eigen::Ref<const Eigen::MatrixXd>& layout, std::span<const GroupLabel> labels,
                               std::span<const ClusterSummary> clusters, const PlotStyle& style = {});

std::string report_to_json(const SweepReport& report);
SweepReport report_from_json(const std::string& text);

void write_report_json(const SweepReport& report, const std::filesystem::path& path);
SweepReport read_report_json(const std::filesystem::path& path);

/// A projection with the row ids and labels it was computed for.
struct LabeledLayout {
  LayoutMatrix layout;
  std::vector<std::string> ids;
  std::vector<GroupLabel> labels;
};

/// {"seed", "n_components", "ids", "labels", "coords"}
std::string layout_to_json(const LabeledLayout& layout);
void write_layout_json(const LabeledLayout& layout, const std::filesystem::path& path);
LabeledLayout read_layout_json(const std::filesystem::path& path);

}  // namespace hallucmap
