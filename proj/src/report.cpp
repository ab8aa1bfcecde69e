#include "hallucmap/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>

#include "json_io.hpp"

namespace hallucmap {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::array<const char*, 9> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b",
                                                 "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0U) != 0x80U;
  }));
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s + std::string(width - std::min(width, display_width(s)), ' ');
}

std::string pad_left(const std::string& s, std::size_t width) {
  return std::string(width - std::min(width, display_width(s)), ' ') + s;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s == "-0.00" || s == "-0.0000") s.erase(0, 1);
  return s;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

ordered_json pairs_to_json(const std::vector<DistancePair>& pairs) {
  ordered_json rows = ordered_json::array();
  for (const auto& p : pairs) rows.push_back({{"a", p.a.name()}, {"b", p.b.name()}, {"d", p.distance}});
  return rows;
}

std::vector<DistancePair> pairs_from_json(const ordered_json& rows) {
  std::vector<DistancePair> pairs;
  for (const auto& row : rows) {
    pairs.push_back({parse_group_label(row.at("a").get<std::string>()),
                     parse_group_label(row.at("b").get<std::string>()), row.at("d").get<double>()});
  }
  return pairs;
}

}  // namespace

std::string render_distance_table(std::span<const DistancePair> pairs, const TableCaption& caption) {
  const std::array<std::string, 3> header = {"Index", "Key", "Average Distance"};
  std::vector<std::array<std::string, 3>> rows;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    rows.push_back({std::to_string(i + 1), pairs[i].a.name() + " → " + pairs[i].b.name(),
                    fixed(pairs[i].distance, 4)});
  }
  std::array<std::size_t, 3> width{};
  for (std::size_t c = 0; c < 3; ++c) {
    width[c] = display_width(header[c]);
    for (const auto& row : rows) width[c] = std::max(width[c], display_width(row[c]));
  }
  std::string rule = "+";
  for (auto w : width) rule += std::string(w + 2, '-') + "+";
  rule += "\n";

  std::string out = "Centroids average distances for different random seed initializations. Steps = " +
                    caption.steps + ". Test data shape = (" + std::to_string(caption.rows) + ", " +
                    std::to_string(caption.cols) + ")\n";
  out += rule;
  out += "| " + pad_right(header[0], width[0]) + " | " + pad_right(header[1], width[1]) + " | " +
         pad_right(header[2], width[2]) + " |\n";
  out += rule;
  for (const auto& row : rows) {
    out += "| " + pad_left(row[0], width[0]) + " | " + pad_right(row[1], width[1]) + " | " +
           pad_left(row[2], width[2]) + " |\n";
  }
  out += rule;
  return out;
}

std::string render_sweep_tables(const SweepReport& report, Eigen::Index rows, Eigen::Index cols) {
  std::string out;
  std::string seed_list;
  for (auto seed : report.seeds) {
    out += render_distance_table(report.per_seed.at(seed), {std::to_string(seed), rows, cols});
    out += "\n";
    seed_list += (seed_list.empty() ? "" : ", ") + std::to_string(seed);
  }
  out += render_distance_table(report.mean_distances, {"mean over seeds " + seed_list, rows, cols});
  return out;
}

std::string render_scatter_svg(const Eigen::Ref<const Eigen::MatrixXd>& layout, std::span<const GroupLabel> labels,
                               std::span<const ClusterSummary> clusters, const PlotStyle& style) {
  if (layout.rows() == 0) throw ValidationError("cannot plot an empty layout");
  if (static_cast<Eigen::Index>(labels.size()) != layout.rows()) {
    throw ValidationError("label count does not match layout rows");
  }
  if (style.x_axis < 0 || style.y_axis < 0 || style.x_axis >= layout.cols() || style.y_axis >= layout.cols() ||
      style.x_axis == style.y_axis) {
    throw ValidationError("plot axes must be two distinct layout columns");
  }
  if (style.width <= 0 || style.height <= 0) throw ValidationError("canvas dimensions must be positive");

  std::set<GroupLabel> distinct(labels.begin(), labels.end());
  for (const auto& c : clusters) distinct.insert(c.label);
  std::map<GroupLabel, std::string> color;
  std::size_t next_palette = 0;
  std::set<std::string> used;
  for (const auto& label : distinct) {
    auto it = style.colors.find(label.name());
    std::string chosen;
    if (it != style.colors.end()) {
      chosen = it->second;
    } else {
      while (next_palette < kPalette.size() && used.contains(kPalette[next_palette])) ++next_palette;
      chosen = next_palette < kPalette.size() ? kPalette[next_palette++] : "#000000";
    }
    if (!used.insert(chosen).second) throw ValidationError("labels must have distinct colors");
    color.emplace(label, chosen);
  }

  const Eigen::VectorXd xs = layout.col(style.x_axis);
  const Eigen::VectorXd ys = layout.col(style.y_axis);
  double x_min = xs.minCoeff(), x_max = xs.maxCoeff();
  double y_min = ys.minCoeff(), y_max = ys.maxCoeff();
  for (const auto& c : clusters) {
    x_min = std::min(x_min, c.centroid(style.x_axis));
    x_max = std::max(x_max, c.centroid(style.x_axis));
    y_min = std::min(y_min, c.centroid(style.y_axis));
    y_max = std::max(y_max, c.centroid(style.y_axis));
  }
  const double x_span = x_max > x_min ? x_max - x_min : 1.0;
  const double y_span = y_max > y_min ? y_max - y_min : 1.0;
  const double plot_w = style.width - 2.0 * style.padding;
  const double plot_h = style.height - 2.0 * style.padding;
  auto sx = [&](double x) { return style.padding + (x - x_min) / x_span * plot_w; };
  auto sy = [&](double y) { return style.padding + (y_max - y) / y_span * plot_h; };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + std::to_string(style.width) +
         "\" height=\"" + std::to_string(style.height) + "\" viewBox=\"0 0 " + std::to_string(style.width) + " " +
         std::to_string(style.height) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(style.width) + "\" height=\"" +
         std::to_string(style.height) + "\" fill=\"white\"/>\n";
  out += "<text x=\"" + fixed(style.width / 2.0, 2) + "\" y=\"" + fixed(style.height - 10.0, 2) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">axis " +
         std::to_string(style.x_axis + 1) + "</text>\n";
  out += "<text x=\"12\" y=\"" + fixed(style.height / 2.0, 2) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 12 " +
         fixed(style.height / 2.0, 2) + ")\">axis " + std::to_string(style.y_axis + 1) + "</text>\n";

  out += "<g class=\"points\">\n";
  for (Eigen::Index i = 0; i < layout.rows(); ++i) {
    const auto& label = labels[static_cast<std::size_t>(i)];
    out += "<circle class=\"point\" data-label=\"" + xml_escape(label.name()) + "\" cx=\"" + fixed(sx(xs(i)), 2) +
           "\" cy=\"" + fixed(sy(ys(i)), 2) + "\" r=\"" + fixed(style.point_radius, 2) + "\" fill=\"" +
           xml_escape(color.at(label)) + "\" fill-opacity=\"0.7\"/>\n";
  }
  out += "</g>\n<g class=\"centroids\">\n";
  for (const auto& c : clusters) {
    out += "<circle class=\"centroid\" data-label=\"" + xml_escape(c.label.name()) + "\" cx=\"" +
           fixed(sx(c.centroid(style.x_axis)), 2) + "\" cy=\"" + fixed(sy(c.centroid(style.y_axis)), 2) +
           "\" r=\"" + fixed(style.centroid_radius, 2) + "\" fill=\"" + xml_escape(style.centroid_color) +
           "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  }
  out += "</g>\n<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  double ly = style.padding / 2.0;
  for (const auto& [label, fill] : color) {
    out += "<g class=\"legend-entry\"><rect x=\"" + fixed(style.padding, 2) + "\" y=\"" + fixed(ly - 9.0, 2) +
           "\" width=\"10\" height=\"10\" fill=\"" + xml_escape(fill) + "\"/><text x=\"" +
           fixed(style.padding + 16.0, 2) + "\" y=\"" + fixed(ly, 2) + "\">" + xml_escape(label.name()) +
           "</text></g>\n";
    ly += 16.0;
  }
  out += "<g class=\"legend-entry\"><rect x=\"" + fixed(style.padding, 2) + "\" y=\"" + fixed(ly - 9.0, 2) +
         "\" width=\"10\" height=\"10\" fill=\"" + xml_escape(style.centroid_color) + "\"/><text x=\"" +
         fixed(style.padding + 16.0, 2) + "\" y=\"" + fixed(ly, 2) + "\">centroid</text></g>\n";
  out += "</g>\n</svg>\n";
  return out;
}

std::string report_to_json(const SweepReport& report) {
  ordered_json per_seed = ordered_json::object();
  for (auto seed : report.seeds) per_seed[std::to_string(seed)] = pairs_to_json(report.per_seed.at(seed));
  ordered_json j = {{"seeds", report.seeds}, {"per_seed", per_seed}, {"mean", pairs_to_json(report.mean_distances)}};
  return j.dump(1) + "\n";
}

SweepReport report_from_json(const std::string& text) {
  SweepReport report;
  try {
    const auto j = ordered_json::parse(text);
    report.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (auto seed : report.seeds) report.per_seed[seed] = pairs_from_json(j.at("per_seed").at(std::to_string(seed)));
    report.mean_distances = pairs_from_json(j.at("mean"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid report JSON: ") + e.what());
  }
  return report;
}

void write_report_json(const SweepReport& report, const std::filesystem::path& path) {
  if (report.seeds.empty()) throw ValidationError("refusing to write a report without seeds");
  detail::write_text_file(path, report_to_json(report));
}

SweepReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return report_from_json(buffer.str());
}

std::string layout_to_json(const LabeledLayout& layout) {
  ordered_json labels = ordered_json::array();
  for (const auto& l : layout.labels) labels.push_back(l.name());
  ordered_json coords = ordered_json::array();
  const auto& m = layout.layout.coords;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    coords.push_back(std::move(row));
  }
  ordered_json j = {{"seed", layout.layout.seed},
                    {"n_components", m.cols()},
                    {"ids", layout.ids},
                    {"labels", std::move(labels)},
                    {"coords", std::move(coords)}};
  return j.dump() + "\n";
}

void write_layout_json(const LabeledLayout& layout, const std::filesystem::path& path) {
  const auto n = layout.layout.coords.rows();
  if (static_cast<Eigen::Index>(layout.ids.size()) != n || static_cast<Eigen::Index>(layout.labels.size()) != n) {
    throw ValidationError("layout rows, ids and labels differ in length");
  }
  detail::write_text_file(path, layout_to_json(layout));
}

LabeledLayout read_layout_json(const std::filesystem::path& path) {
  const auto j = detail::read_json_file(path);
  LabeledLayout out;
  try {
    out.layout.seed = j.at("seed").get<std::uint64_t>();
    out.ids = j.at("ids").get<std::vector<std::string>>();
    for (const auto& l : j.at("labels")) out.labels.push_back(parse_group_label(l.get<std::string>()));
    out.layout.coords = detail::matrix_from_json(j.at("coords"), "coords");
    if (out.layout.coords.cols() != j.at("n_components").get<Eigen::Index>()) {
      throw ValidationError(path.string() + ": n_components does not match coords");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (static_cast<Eigen::Index>(out.ids.size()) != out.layout.coords.rows() ||
      static_cast<Eigen::Index>(out.labels.size()) != out.layout.coords.rows()) {
    throw ValidationError(path.string() + ": coords, ids and labels differ in length");
  }
  return out;
}

}  // namespace hallucmap
