#include "loadprof/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace loadprof {

namespace fs = std::filesystem;

const char* to_string(SeriesRole role) {
  switch (role) {
    case SeriesRole::member: return "member";
    case SeriesRole::centroid: return "centroid";
    case SeriesRole::reference: return "reference";
  }
  return "?";
}

std::optional<SeriesRole> parse_series_role(std::string_view text) {
  for (auto r : {SeriesRole::member, SeriesRole::centroid, SeriesRole::reference}) {
    if (text == to_string(r)) return r;
  }
  return std::nullopt;
}

namespace {

std::vector<double> hours_axis() {
  std::vector<double> x(kHoursPerDay);
  for (std::size_t h = 0; h < kHoursPerDay; ++h) x[h] = static_cast<double>(h);
  return x;
}

PlotSeries hourly_series(std::string name, SeriesRole role, const HourlyValues& values) {
  return {std::move(name), role, hours_axis(), std::vector<double>(values.begin(), values.end())};
}

std::string series_name(const DayProfile& p) {
  if (p.label.empty() || p.label == kAllValidDays) return p.id;
  return p.id + " [" + p.label + "]";
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// Roughly five round-valued ticks covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
    ticks.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
  }
  return ticks;
}

}  // namespace

PlotBundle render_cluster_panels(const ClusteringResult& result,
                                 std::span<const DayProfile> profiles) {
  if (result.assignments.size() != profiles.size()) {
    throw Error(ErrorKind::invalid_argument, "cluster panels: result does not match profiles");
  }
  PlotBundle bundle;
  for (std::size_t c = 0; c < result.centroids.size(); ++c) {
    const auto& centroid = result.centroids[c];
    Panel panel;
    panel.name = centroid.id;
    panel.x_label = "hour of day";
    panel.y_label = centroid.units == Units::kwh ? "kWh" : "fraction of daily total";
    std::size_t members = 0;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      if (result.assignments[i] != c) continue;
      panel.series.push_back(hourly_series(series_name(profiles[i]), SeriesRole::member,
                                           profiles[i].values));
      ++members;
    }
    panel.series.push_back(hourly_series(centroid.id, SeriesRole::centroid, centroid.values));
    panel.title = centroid.id + " (" + std::to_string(members) + " members)";
    bundle.panels.push_back(std::move(panel));
  }
  return bundle;
}

PlotBundle render_elbow(const ElbowReport& report) {
  if (report.entries.size() < 3) {
    throw Error(ErrorKind::invalid_argument, "elbow plot needs at least three k values");
  }
  Panel panel;
  panel.name = "elbow";
  panel.title = "Within-cluster sum of squares by cluster count";
  panel.x_label = "number of clusters";
  panel.y_label = "WCSS";
  PlotSeries curve{"wcss", SeriesRole::member, {}, {}};
  double suggested_wcss = 0.0;
  for (const auto& e : report.entries) {
    curve.x.push_back(static_cast<double>(e.k));
    curve.y.push_back(e.wcss);
    if (e.k == report.suggested_k) suggested_wcss = e.wcss;
  }
  panel.series.push_back(std::move(curve));
  panel.series.push_back({report.degenerate ? "suggested_k (degenerate curve)" : "suggested_k",
                          SeriesRole::centroid,
                          {static_cast<double>(report.suggested_k)},
                          {suggested_wcss}});
  PlotBundle bundle;
  bundle.panels.push_back(std::move(panel));
  return bundle;
}

ReferenceProfileSet read_reference_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::malformed_header, source_name + ": empty reference file");
  }
  const auto header = split_csv_line(line);
  std::size_t points = 0;
  std::string prefix;
  if (header.size() == 1 + 2 * kHoursPerDay) {
    points = 2 * kHoursPerDay;
    prefix = "p";
  } else if (header.size() == 1 + kHoursPerDay) {
    points = kHoursPerDay;
    prefix = "h";
  }
  bool ok = points > 0 && trim(header[0]) == "name";
  for (std::size_t i = 0; ok && i < points; ++i) ok = trim(header[1 + i]) == hour_column(prefix, i);
  if (!ok) {
    throw Error(ErrorKind::malformed_header,
                source_name + ":1: expected name,p00..p47 or name,h00..h23");
  }

  ReferenceProfileSet refs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    auto fail = [&] {
      return Error(ErrorKind::malformed_input,
                   source_name + ":" + std::to_string(line_no) + ": bad reference row");
    };
    if (cells.size() != 1 + points || trim(cells[0]).empty()) throw fail();
    ReferenceProfile ref{std::string(trim(cells[0])), {}};
    for (std::size_t i = 0; i < points; ++i) {
      const auto v = parse_double(cells[1 + i]);
      if (!v || *v < 0.0) throw fail();
      ref.points.push_back(*v);
    }
    refs.push_back(std::move(ref));
  }
  if (refs.empty()) throw Error(ErrorKind::malformed_input, source_name + ": no reference rows");
  return refs;
}

DayProfile to_hourly(const ReferenceProfile& reference) {
  DayProfile p{{}, Units::kwh, reference.name, "reference"};
  if (reference.points.size() == kHoursPerDay) {
    std::copy(reference.points.begin(), reference.points.end(), p.values.begin());
  } else if (reference.points.size() == 2 * kHoursPerDay) {
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      p.values[h] = 0.5 * (reference.points[2 * h] + reference.points[2 * h + 1]);
    }
  } else {
    throw Error(ErrorKind::malformed_input,
                "reference " + reference.name + " must have 24 or 48 points");
  }
  return p;
}

OverlayResult overlay_reference(std::span<const DayProfile> centroids,
                                const ReferenceProfileSet& references) {
  OverlayResult out;
  std::vector<DayProfile> refs;
  for (const auto& r : references) {
    try {
      refs.push_back(normalize(to_hourly(r)));
    } catch (const Error& e) {
      throw Error(ErrorKind::malformed_input, "reference " + r.name + ": " + e.what());
    }
  }
  Panel panel;
  panel.name = "reference_overlay";
  panel.title = "Cluster centroids against reference profiles";
  panel.x_label = "hour of day";
  panel.y_label = "fraction of daily total";
  for (const auto& c : centroids) {
    const auto shape = c.units == Units::shape ? c : normalize(c);
    panel.series.push_back(hourly_series(c.id, SeriesRole::centroid, shape.values));
    for (const auto& r : refs) {
      out.distances.push_back({c.id, r.id, distance(shape, r, SimilarityMode::shape)});
    }
  }
  for (const auto& r : refs) {
    panel.series.push_back(hourly_series(r.id, SeriesRole::reference, r.values));
  }
  out.bundle.panels.push_back(std::move(panel));
  return out;
}

std::string panel_to_csv(const Panel& panel) {
  std::string out = "series,role,x,y\n";
  for (const auto& s : panel.series) {
    if (s.x.size() != s.y.size()) {
      throw Error(ErrorKind::invalid_argument, "series " + s.name + ": x and y differ in length");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i > 0 && !(s.x[i] > s.x[i - 1])) {
        throw Error(ErrorKind::invalid_argument, "series " + s.name + ": x not increasing");
      }
      out += s.name;
      out += ',';
      out += to_string(s.role);
      out += ',' + format_double(s.x[i]) + ',' + format_double(s.y[i]) + '\n';
    }
  }
  return out;
}

std::vector<PlotSeries> series_from_csv(std::string_view csv, const std::string& source_name) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || trim(line) != "series,role,x,y") {
    throw Error(ErrorKind::malformed_header, source_name + ":1: bad plot-data header");
  }
  std::vector<PlotSeries> series;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    auto fail = [&] {
      return Error(ErrorKind::malformed_input,
                   source_name + ":" + std::to_string(line_no) + ": bad plot-data row");
    };
    if (cells.size() != 4) throw fail();
    const auto role = parse_series_role(cells[1]);
    const auto x = parse_double(cells[2]);
    const auto y = parse_double(cells[3]);
    if (!role || !x || !y) throw fail();
    if (series.empty() || series.back().name != cells[0] || series.back().role != *role) {
      series.push_back({cells[0], *role, {}, {}});
    }
    series.back().x.push_back(*x);
    series.back().y.push_back(*y);
  }
  return series;
}

std::string render_svg(const Panel& layout, std::span<const PlotSeries> series) {
  constexpr double width = 640, height = 420;
  constexpr double left = 70, right = 170, top = 40, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x_lo = x_hi = s.x[i];
        y_hi = s.y[i];
        first = false;
      }
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_hi = std::max(y_hi, s.y[i]);
      y_lo = std::min(y_lo, s.y[i]);
    }
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1;
  if (y_hi <= y_lo) y_hi = y_lo + 1;
  y_hi += 0.05 * (y_hi - y_lo);

  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return top + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<!-- loadprof " << kVersion << " -->\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fixed(left + plot_w / 2) << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << xml_escape(layout.title) << "</text>\n";

  // Axes, grid and ticks.
  svg << "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"black\">\n";
  for (double t : nice_ticks(y_lo, y_hi)) {
    svg << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(py(t)) << "\" x2=\""
        << fixed(left + plot_w) << "\" y2=\"" << fixed(py(t))
        << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    svg << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(py(t) + 3)
        << "\" text-anchor=\"end\">" << tick_text(t) << "</text>\n";
  }
  for (double t : nice_ticks(x_lo, x_hi)) {
    svg << "<text x=\"" << fixed(px(t)) << "\" y=\"" << fixed(top + plot_h + 14)
        << "\" text-anchor=\"middle\">" << tick_text(t) << "</text>\n";
  }
  svg << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top + plot_h) << "\" x2=\""
      << fixed(left + plot_w) << "\" y2=\"" << fixed(top + plot_h) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top) << "\" x2=\"" << fixed(left)
      << "\" y2=\"" << fixed(top + plot_h) << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << fixed(left + plot_w / 2) << "\" y=\"" << fixed(height - 12)
      << "\" text-anchor=\"middle\">" << xml_escape(layout.x_label) << "</text>\n";
  svg << "<text transform=\"translate(16," << fixed(top + plot_h / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(layout.y_label) << "</text>\n";
  svg << "</g>\n";

  auto style = [](SeriesRole role) -> std::string {
    switch (role) {
      case SeriesRole::member: return "stroke=\"black\" stroke-width=\"0.8\" stroke-opacity=\"0.6\"";
      case SeriesRole::centroid: return "stroke=\"red\" stroke-width=\"2.5\"";
      case SeriesRole::reference:
        return "stroke=\"#1f5fbf\" stroke-width=\"1.8\" stroke-dasharray=\"6 3\"";
    }
    return {};
  };

  // Members first so centroids and references draw on top.
  std::size_t legend_row = 0;
  for (auto pass : {SeriesRole::member, SeriesRole::reference, SeriesRole::centroid}) {
    for (const auto& s : series) {
      if (s.role != pass) continue;
      svg << "<g " << style(s.role) << " fill=\"none\"><title>" << xml_escape(s.name)
          << "</title>";
      if (s.x.size() == 1) {
        svg << "<circle cx=\"" << fixed(px(s.x[0])) << "\" cy=\"" << fixed(py(s.y[0]))
            << "\" r=\"5\"/>";
      } else {
        svg << "<polyline points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          if (i > 0) svg << ' ';
          svg << fixed(px(s.x[i])) << ',' << fixed(py(s.y[i]));
        }
        svg << "\"/>";
      }
      svg << "</g>\n";
      if (s.role != SeriesRole::member || series.size() <= 12) {
        const double ly = top + 10 + 16 * static_cast<double>(legend_row++);
        svg << "<g " << style(s.role) << "><line x1=\"" << fixed(left + plot_w + 10) << "\" y1=\""
            << fixed(ly) << "\" x2=\"" << fixed(left + plot_w + 30) << "\" y2=\"" << fixed(ly)
            << "\"/></g>\n";
        svg << "<text x=\"" << fixed(left + plot_w + 35) << "\" y=\"" << fixed(ly + 3)
            << "\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(s.name)
            << "</text>\n";
      }
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_reference_distances(std::ostream& out, std::span<const ReferenceDistance> distances) {
  out << "centroid,reference,distance\n";
  for (const auto& d : distances) {
    out << d.centroid << ',' << d.reference << ',' << format_double(d.distance) << '\n';
  }
}

std::vector<fs::path> write_bundle(const PlotBundle& bundle, const fs::path& directory,
                                   const std::string& run_id) {
  fs::create_directories(directory);
  std::vector<fs::path> written;
  for (const auto& panel : bundle.panels) {
    const auto stem = run_id + "_" + panel.name;
    const auto csv = panel_to_csv(panel);
    const auto csv_path = directory / (stem + ".csv");
    std::ofstream(csv_path, std::ios::binary) << csv;
    const auto series = series_from_csv(csv, csv_path.string());
    const auto svg_path = directory / (stem + ".svg");
    std::ofstream(svg_path, std::ios::binary) << render_svg(panel, series);
    written.push_back(csv_path);
    written.push_back(svg_path);
  }
  return written;
}

}  // namespace loadprof
