#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "loadprof/manifest.hpp"
#include "loadprof/report.hpp"
#include "support.hpp"

using namespace loadprof;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  std::vector<DayProfile> profiles;
  ClusteringResult result;
  Fixture() {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 12; ++i) profiles.push_back(testing::random_profile(rng, 0.1, 3, "p" + std::to_string(i)));
    KMeansConfig cfg;
    cfg.restarts = 20;
    result = kmeans_best(profiles, cfg);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("loadprof_report_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("one panel per cluster") {
    Fixture f;
    const auto bundle = render_cluster_panels(f.result, f.profiles);
    REQUIRE(bundle.panels.size() == 4);
    std::size_t members = 0;
    for (const auto& panel : bundle.panels) {
      CHECK(panel.series.back().role == SeriesRole::centroid);
      members += panel.series.size() - 1;
    }
    CHECK(members == f.profiles.size());
  }

  TEST_CASE("singleton cluster draws the member under its centroid") {
    std::vector<DayProfile> profiles{testing::constant_profile(1.0, "a"), testing::constant_profile(1.1, "b"),
                                     testing::constant_profile(9.0, "c")};
    const auto r = brute_force_optimum(profiles, 2);
    for (const auto& panel : render_cluster_panels(r, profiles).panels) {
      if (panel.series.size() != 2) continue;
      CHECK(panel.series[0].y == panel.series[1].y);
    }
  }

  TEST_CASE("panel CSV round trips exactly") {
    Fixture f;
    for (const auto& panel : render_cluster_panels(f.result, f.profiles).panels) {
      const auto csv = panel_to_csv(panel);
      CHECK(csv.rfind("series,role,x,y\n", 0) == 0);
      const auto back = series_from_csv(csv, "panel.csv");
      REQUIRE(back.size() == panel.series.size());
      for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].name == panel.series[i].name);
        CHECK(back[i].role == panel.series[i].role);
        CHECK(back[i].x == panel.series[i].x);
        CHECK(back[i].y == panel.series[i].y);
      }
    }
  }

  TEST_CASE("elbow figure") {
    ElbowReport report;
    const double w[] = {100, 60, 20, 15, 12, 10, 9, 8.5, 8};
    for (std::size_t k = 2; k <= 10; ++k) report.entries.push_back({k, w[k - 2]});
    report.suggested_k = 4;
    const auto bundle = render_elbow(report);
    REQUIRE(bundle.panels.size() == 1);
    const auto& panel = bundle.panels[0];
    CHECK(panel.series[0].x.size() == 9);
    REQUIRE(panel.series.size() == 2);
    CHECK(panel.series[1].x == std::vector<double>{4.0});
    CHECK(panel.series[1].y == std::vector<double>{20.0});

    report.degenerate = true;
    const auto flat = render_elbow(report);
    CHECK(flat.panels[0].series[1].name.find("degenerate") != std::string::npos);

    report.entries.resize(2);
    CHECK_THROWS_AS(render_elbow(report), Error);
  }

  TEST_CASE("reference profiles") {
    std::string csv = "name";
    for (int i = 0; i < 48; ++i) csv += ",p" + std::string(i < 10 ? "0" : "") + std::to_string(i);
    csv += "\nflat";
    for (int i = 0; i < 48; ++i) csv += "," + std::to_string(i % 2 == 0 ? 1 : 3);
    csv += "\n";
    std::istringstream in(csv);
    const auto refs = read_reference_csv(in, "refs.csv");
    REQUIRE(refs.size() == 1);
    const auto hourly = to_hourly(refs[0]);
    for (auto v : hourly.values) CHECK(v == 2.0);

    std::istringstream bad("name,p00,p01\nx,1,2\n");
    CHECK_THROWS_AS(read_reference_csv(bad, "bad.csv"), Error);
    std::istringstream short_row("name,h00,h01,h02,h03,h04,h05,h06,h07,h08,h09,h10,h11,h12,h13,h14,h15,h16,h17,h18,h19,h20,h21,h22,h23\nx,1\n");
    CHECK_THROWS_AS(read_reference_csv(short_row, "short.csv"), Error);
  }

  TEST_CASE("overlay distances") {
    Fixture f;
    ReferenceProfileSet refs;
    for (const auto& c : f.result.centroids) {
      refs.push_back({c.id, std::vector<double>(c.values.begin(), c.values.end())});
    }
    const auto overlay = overlay_reference(f.result.centroids, refs);
    REQUIRE(overlay.distances.size() == 16);
    for (const auto& d : overlay.distances) {
      if (d.centroid == d.reference) CHECK(d.distance <= 1e-15);
    }
    // Swapping roles gives the same table.
    const auto swapped = overlay_reference(f.result.centroids, refs);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(overlay.distances[i * 4 + j].distance == doctest::Approx(swapped.distances[j * 4 + i].distance).epsilon(1e-12));
      }
    }
    CHECK(overlay.bundle.panels.at(0).name == "reference_overlay");
  }

  TEST_CASE("bundle files are deterministic and figures come from their CSV") {
    Fixture f;
    const auto bundle = render_cluster_panels(f.result, f.profiles);
    const auto a = scratch("a");
    const auto b = scratch("b");
    const auto written = write_bundle(bundle, a, "run");
    write_bundle(bundle, b, "run");
    CHECK(written.size() == 8);
    for (const auto& path : written) {
      CHECK(slurp(path) == slurp(b / path.filename()));
    }
    const auto svg = slurp(a / "run_cluster1.svg");
    CHECK(svg.find("<!-- loadprof ") != std::string::npos);
    const auto series = series_from_csv(slurp(a / "run_cluster1.csv"), "run_cluster1.csv");
    CHECK(render_svg(bundle.panels[0], series) == svg);
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("manifest records digests") {
    const auto dir = scratch("manifest");
    std::ofstream(dir / "x.csv") << "abc";
    auto m = RunManifest::load_or_create(dir);
    m.run_id = "r";
    m.seed = 7;
    const std::vector<fs::path> outputs{dir / "x.csv"};
    m.record("stage", dir, outputs);
    m.save(dir);
    const auto doc = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(doc["seed"] == 7);
    const auto text = doc.dump();
    CHECK(text.find("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad") != std::string::npos);
    CHECK(text.find("x.csv") != std::string::npos);
    const auto reloaded = RunManifest::load_or_create(dir);
    CHECK(reloaded.stages.at("stage").at(0).path == "x.csv");
    fs::remove_all(dir);
  }
}
