#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "loadprof/cluster.hpp"
#include "loadprof/profile.hpp"

namespace loadprof {

enum class SeriesRole { member, centroid, reference };
const char* to_string(SeriesRole role);
std::optional<SeriesRole> parse_series_role(std::string_view text);

struct PlotSeries {
  std::string name;
  SeriesRole role = SeriesRole::member;
  std::vector<double> x;  // strictly increasing
  std::vector<double> y;
};

struct Panel {
  std::string name;  // file-name component
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

struct PlotBundle {
  std::vector<Panel> panels;
};

/// One panel per cluster: every member profile plus the centroid.
PlotBundle render_cluster_panels(const ClusteringResult& result,
                                 std::span<const DayProfile> profiles);

/// WCSS against k with the suggested k as a single-point series. Needs at
/// least three entries.
PlotBundle render_elbow(const ElbowReport& report);

/// Reference load profiles at hourly (24) or half-hourly (48) resolution.
struct ReferenceProfile {
  std::string name;
  std::vector<double> points;
};

using ReferenceProfileSet = std::vector<ReferenceProfile>;

/// Header `name,p00..p47` or `name,h00..h23`.
ReferenceProfileSet read_reference_csv(std::istream& in, const std::string& source_name);

/// Half-hourly points are averaged in pairs.
DayProfile to_hourly(const ReferenceProfile& reference);

struct ReferenceDistance {
  std::string centroid;
  std::string reference;
  double distance = 0.0;
};

struct OverlayResult {
  PlotBundle bundle;
  std::vector<ReferenceDistance> distances;  // centroid-major
};

/// Overlays sum-normalised centroids and references and tabulates their
/// shape-mode distances.
OverlayResult overlay_reference(std::span<const DayProfile> centroids,
                                const ReferenceProfileSet& references);

/// `series,role,x,y`, one row per point.
std::string panel_to_csv(const Panel& panel);
/// Inverse of panel_to_csv; titles and labels are not part of the CSV.
std::vector<PlotSeries> series_from_csv(std::string_view csv, const std::string& source_name);

/// Renders series parsed from a panel's CSV. The first line after the XML
/// declaration is a version comment.
std::string render_svg(const Panel& layout, std::span<const PlotSeries> series);

/// `centroid,reference,distance`.
void write_reference_distances(std::ostream& out, std::span<const ReferenceDistance> distances);

/// Writes `<run_id>_<panel>.csv` and the `.svg` drawn from that CSV for every
/// panel. Returns the paths written.
std::vector<std::filesystem::path> write_bundle(const PlotBundle& bundle,
                                                const std::filesystem::path& directory,
                                                const std::string& run_id);

}  // namespace loadprof
