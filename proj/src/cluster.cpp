#include "loadprof/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include <json.hpp>

namespace loadprof {

namespace {

using Point = HourlyValues;

double squared_distance(const Point& a, const Point& b) {
  double sq = 0.0;
  for (std::size_t h = 0; h < kHoursPerDay; ++h) {
    const double d = a[h] - b[h];
    sq += d * d;
  }
  return sq;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform in [0, bound) by rejection, so draws do not depend on the
// standard library's distribution implementation.
std::size_t uniform_below(std::mt19937_64& rng, std::size_t bound) {
  const std::uint64_t n = bound;
  const std::uint64_t threshold = (0 - n) % n;
  while (true) {
    const std::uint64_t r = rng();
    if (r >= threshold) return static_cast<std::size_t>(r % n);
  }
}

std::vector<std::size_t> distinct_indices(std::span<const DayProfile> profiles) {
  std::vector<std::size_t> order(profiles.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return profiles[a].values < profiles[b].values;
  });
  std::vector<std::size_t> firsts;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || profiles[order[i]].values != profiles[order[i - 1]].values) {
      firsts.push_back(order[i]);
    }
  }
  std::sort(firsts.begin(), firsts.end());
  return firsts;
}

void validate_k(std::span<const DayProfile> profiles, std::size_t k) {
  if (k < 1) throw Error(ErrorKind::invalid_argument, "k must be at least 1");
  const auto distinct = distinct_count(profiles);
  if (k > distinct) {
    throw Error(ErrorKind::invalid_argument, "k=" + std::to_string(k) + " exceeds the " +
                                                 std::to_string(distinct) + " distinct profiles");
  }
}

std::vector<Point> member_means(std::span<const DayProfile> profiles,
                                std::span<const std::size_t> assignments, std::size_t k) {
  std::vector<Point> sums(k, Point{});
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    auto& s = sums[assignments[i]];
    for (std::size_t h = 0; h < kHoursPerDay; ++h) s[h] += profiles[i].values[h];
    ++counts[assignments[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (auto& v : sums[c]) v /= static_cast<double>(counts[c]);
  }
  return sums;
}

double total_wcss(std::span<const DayProfile> profiles, std::span<const std::size_t> assignments,
                  const std::vector<Point>& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    total += squared_distance(profiles[i].values, centroids[assignments[i]]);
  }
  return total;
}

// Relabels clusters so centroids are in ascending (first hour, then
// lexicographic) order and fills in the derived fields.
ClusteringResult finish(std::span<const DayProfile> profiles, std::vector<std::size_t> assignments,
                        const std::vector<Point>& centroids) {
  const auto k = centroids.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return centroids[a] < centroids[b]; });
  std::vector<std::size_t> relabel(k);
  for (std::size_t c = 0; c < k; ++c) relabel[order[c]] = c;

  ClusteringResult result;
  for (auto& a : assignments) a = relabel[a];
  result.assignments = std::move(assignments);
  const auto units = profiles.empty() ? Units::kwh : profiles.front().units;
  for (std::size_t c = 0; c < k; ++c) {
    result.centroids.push_back(
        DayProfile{centroids[order[c]], units, "cluster" + std::to_string(c + 1), "centroid"});
  }
  auto breakdown = wcss(profiles, result.assignments, result.centroids);
  result.per_cluster_wcss = std::move(breakdown.per_cluster);
  result.total_wcss = breakdown.total;
  return result;
}

}  // namespace

void KMeansConfig::validate() const {
  if (k < 1) throw Error(ErrorKind::invalid_argument, "k must be at least 1");
  if (restarts < 1) throw Error(ErrorKind::invalid_argument, "restarts must be at least 1");
  if (max_iterations < 1) {
    throw Error(ErrorKind::invalid_argument, "max_iterations must be at least 1");
  }
}

std::size_t distinct_count(std::span<const DayProfile> profiles) {
  return distinct_indices(profiles).size();
}

ClusteringResult kmeans_once(std::span<const DayProfile> profiles, std::size_t k,
                             std::uint64_t seed, std::size_t max_iterations) {
  validate_k(profiles, k);
  const auto n = profiles.size();

  // Forgy initialisation: partial Fisher-Yates over the distinct profiles.
  auto candidates = distinct_indices(profiles);
  std::mt19937_64 rng(seed);
  std::vector<Point> centroids;
  centroids.reserve(k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto pick = c + uniform_below(rng, candidates.size() - c);
    std::swap(candidates[c], candidates[pick]);
    centroids.push_back(profiles[candidates[c]].values);
  }

  std::vector<std::size_t> assignments(n, k);
  std::vector<std::size_t> next(n);
  std::vector<double> dist(n);
  std::vector<double> trace;
  std::size_t violations = 0;
  std::size_t iterations = 0;

  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(profiles[i].values, centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = squared_distance(profiles[i].values, centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      next[i] = best;
      dist[i] = best_d;
      ++counts[best];
    }

    // An empty cluster takes the point farthest from its centroid among
    // clusters that can spare one.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t donor = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[next[i]] < 2) continue;
        if (donor == n || dist[i] > dist[donor]) donor = i;
      }
      --counts[next[donor]];
      next[donor] = c;
      ++counts[c];
      dist[donor] = 0.0;
      centroids[c] = profiles[donor].values;
    }

    if (next == assignments) break;
    assignments = next;
    ++iterations;
    centroids = member_means(profiles, assignments, k);
    const double w = total_wcss(profiles, assignments, centroids);
    if (!trace.empty() && w > trace.back() * (1.0 + kMonotonicityRelativeSlack)) ++violations;
    trace.push_back(w);
  }

  auto result = finish(profiles, std::move(assignments), centroids);
  result.iterations_used = iterations;
  result.wcss_trace = std::move(trace);
  result.monotonicity_violations = violations;
  return result;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t restart) {
  return splitmix64(seed ^ (restart * 0x9E3779B97F4A7C15ULL));
}

ClusteringResult kmeans_best(std::span<const DayProfile> profiles, const KMeansConfig& config) {
  config.validate();
  validate_k(profiles, config.k);
  std::vector<ClusteringResult> runs(config.restarts);
  parallel_for(config.restarts, config.threads, [&](std::size_t r) {
    runs[r] = kmeans_once(profiles, config.k, derive_seed(config.seed, r), config.max_iterations);
  });
  std::size_t best = 0;
  std::size_t violations = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    violations += runs[r].monotonicity_violations;
    if (runs[r].total_wcss < runs[best].total_wcss) best = r;
  }
  auto result = std::move(runs[best]);
  result.winning_restart = best;
  result.monotonicity_violations = violations;
  return result;
}

WcssBreakdown wcss(std::span<const DayProfile> profiles, std::span<const std::size_t> assignments,
                   std::span<const DayProfile> centroids) {
  if (assignments.size() != profiles.size()) {
    throw Error(ErrorKind::invalid_argument, "wcss: one assignment per profile required");
  }
  WcssBreakdown out;
  out.per_cluster.assign(centroids.size(), 0.0);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (assignments[i] >= centroids.size()) {
      throw Error(ErrorKind::invalid_argument, "wcss: assignment " + std::to_string(i) +
                                                   " references missing centroid " +
                                                   std::to_string(assignments[i]));
    }
    out.per_cluster[assignments[i]] +=
        squared_distance(profiles[i].values, centroids[assignments[i]].values);
  }
  for (double w : out.per_cluster) out.total += w;
  return out;
}

ElbowReport elbow_scan(std::span<const DayProfile> profiles, std::size_t k_min, std::size_t k_max,
                       const KMeansConfig& config, bool allow_k_min_below_2) {
  if (k_min < 1 || (k_min < 2 && !allow_k_min_below_2)) {
    throw Error(ErrorKind::invalid_argument, "elbow: k_min must be at least 2");
  }
  if (k_max < k_min + 2) {
    throw Error(ErrorKind::invalid_argument, "elbow: need at least three k values");
  }
  if (k_max > profiles.size()) {
    throw Error(ErrorKind::invalid_argument, "elbow: k_max exceeds the number of profiles");
  }
  const auto distinct = distinct_count(profiles);

  ElbowReport report;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    double w = 0.0;
    if (k <= distinct) {
      auto cfg = config;
      cfg.k = k;
      const auto best = kmeans_best(profiles, cfg);
      w = best.total_wcss;
      report.monotonicity_violations += best.monotonicity_violations;
    }
    if (!report.entries.empty() && w > report.entries.back().wcss) report.non_monotone.push_back(k);
    report.entries.push_back({k, w});
  }

  const auto m = report.entries.size();
  report.second_differences.assign(m, std::nullopt);
  double best = -std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (const auto& e : report.entries) scale = std::max(scale, std::abs(e.wcss));
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double d2 =
        report.entries[i - 1].wcss - 2.0 * report.entries[i].wcss + report.entries[i + 1].wcss;
    report.second_differences[i] = d2;
    if (d2 > best) {
      best = d2;
      report.suggested_k = report.entries[i].k;
    }
  }
  report.degenerate = !(best > 1e-12 * std::max(scale, 1.0));
  return report;
}

std::uint64_t stirling2(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  // Row-by-row recurrence S(i,j) = j*S(i-1,j) + S(i-1,j-1), saturating.
  constexpr auto cap = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> row(k + 1, 0);
  row[0] = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = std::min(i, k); j >= 1; --j) {
      const auto a = row[j];
      std::uint64_t term = 0;
      if (a != 0 && j > cap / a) {
        term = cap;
      } else {
        term = a * j;
      }
      row[j] = term > cap - row[j - 1] ? cap : term + row[j - 1];
    }
    row[0] = 0;
  }
  return row[k];
}

ClusteringResult brute_force_optimum(std::span<const DayProfile> profiles, std::size_t k) {
  const auto n = profiles.size();
  if (k < 1 || k > n) throw Error(ErrorKind::invalid_argument, "brute force: need 1 <= k <= n");
  if (stirling2(n, k) > kBruteForceLimit) {
    throw Error(ErrorKind::instance_too_large, "brute force: too many partitions for n=" +
                                                   std::to_string(n) + ", k=" + std::to_string(k));
  }

  // Restricted growth strings: labels[0] = 0, labels[i] <= 1 + max(labels[0..i)).
  std::vector<std::size_t> labels(n, 0);
  std::vector<std::size_t> best_labels;
  double best = std::numeric_limits<double>::infinity();

  auto evaluate = [&] {
    const auto centroids = member_means(profiles, labels, k);
    const double w = total_wcss(profiles, labels, centroids);
    if (w < best) {
      best = w;
      best_labels = labels;
    }
  };

  // Depth-first over positions, tracking the number of blocks used so far.
  auto recurse = [&](auto&& self, std::size_t i, std::size_t used) -> void {
    if (i == n) {
      if (used == k) evaluate();
      return;
    }
    // Not enough positions left to open the remaining blocks.
    if (k - used > n - i) return;
    for (std::size_t b = 0; b < used; ++b) {
      labels[i] = b;
      self(self, i + 1, used);
    }
    if (used < k) {
      labels[i] = used;
      self(self, i + 1, used + 1);
    }
  };
  labels[0] = 0;
  recurse(recurse, 1, 1);

  const auto centroids = member_means(profiles, best_labels, k);
  return finish(profiles, std::move(best_labels), centroids);
}

std::string clustering_to_json(const ClusteringResult& result, const KMeansConfig& config,
                               std::span<const DayProfile> profiles) {
  nlohmann::ordered_json doc;
  doc["config"] = {{"k", config.k},
                   {"restarts", config.restarts},
                   {"max_iterations", config.max_iterations},
                   {"seed", config.seed},
                   {"convergence", "assignments-unchanged"}};
  auto assignments = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.assignments.size(); ++i) {
    nlohmann::ordered_json entry;
    entry["id"] = i < profiles.size() ? profiles[i].id : std::to_string(i);
    entry["label"] = i < profiles.size() ? profiles[i].label : std::string();
    entry["cluster"] = result.assignments[i];
    assignments.push_back(entry);
  }
  doc["assignments"] = assignments;
  auto centroids = nlohmann::ordered_json::array();
  for (const auto& c : result.centroids) {
    centroids.push_back({{"name", c.id},
                         {"units", to_string(c.units)},
                         {"values", std::vector<double>(c.values.begin(), c.values.end())}});
  }
  doc["centroids"] = centroids;
  doc["per_cluster_wcss"] = result.per_cluster_wcss;
  doc["total_wcss"] = result.total_wcss;
  doc["winning_restart"] = result.winning_restart;
  doc["iterations_used"] = result.iterations_used;
  return doc.dump(2) + "\n";
}

StoredClustering clustering_from_json(std::string_view text) {
  StoredClustering stored;
  try {
    const auto doc = nlohmann::json::parse(text);
    const auto& cfg = doc.at("config");
    stored.config.k = cfg.at("k").get<std::size_t>();
    stored.config.restarts = cfg.at("restarts").get<std::size_t>();
    stored.config.max_iterations = cfg.at("max_iterations").get<std::size_t>();
    stored.config.seed = cfg.at("seed").get<std::uint64_t>();
    for (const auto& a : doc.at("assignments")) {
      stored.profile_ids.push_back(a.at("id").get<std::string>());
      stored.result.assignments.push_back(a.at("cluster").get<std::size_t>());
    }
    for (const auto& c : doc.at("centroids")) {
      DayProfile p;
      p.id = c.at("name").get<std::string>();
      p.label = "centroid";
      const auto units = parse_units(c.at("units").get<std::string>());
      if (!units) throw Error(ErrorKind::malformed_input, "cluster json: bad units");
      p.units = *units;
      const auto values = c.at("values").get<std::vector<double>>();
      if (values.size() != kHoursPerDay) {
        throw Error(ErrorKind::malformed_input, "cluster json: centroid needs 24 values");
      }
      std::copy(values.begin(), values.end(), p.values.begin());
      stored.result.centroids.push_back(std::move(p));
    }
    stored.result.per_cluster_wcss = doc.at("per_cluster_wcss").get<std::vector<double>>();
    stored.result.total_wcss = doc.at("total_wcss").get<double>();
    stored.result.winning_restart = doc.at("winning_restart").get<std::size_t>();
    stored.result.iterations_used = doc.value("iterations_used", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_input, std::string("cluster json: ") + e.what());
  }
  return stored;
}

void write_elbow_csv(std::ostream& out, const ElbowReport& report) {
  out << "k,wcss,second_difference\n";
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    out << report.entries[i].k << ',' << format_double(report.entries[i].wcss) << ',';
    if (report.second_differences[i]) out << format_double(*report.second_differences[i]);
    out << '\n';
  }
  out << "suggested_k," << report.suggested_k << ',' << (report.degenerate ? "degenerate" : "")
      << '\n';
}

ElbowReport read_elbow_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "k,wcss,second_difference") {
    throw Error(ErrorKind::malformed_header, source_name + ":1: bad elbow header");
  }
  ElbowReport report;
  bool saw_suggestion = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    auto fail = [&] {
      return Error(ErrorKind::malformed_input,
                   source_name + ":" + std::to_string(line_no) + ": bad elbow row");
    };
    if (cells.size() != 3) throw fail();
    if (cells[0] == "suggested_k") {
      const auto k = parse_integer(cells[1]);
      if (!k) throw fail();
      report.suggested_k = static_cast<std::size_t>(*k);
      report.degenerate = trim(cells[2]) == "degenerate";
      saw_suggestion = true;
      continue;
    }
    const auto k = parse_integer(cells[0]);
    const auto w = parse_double(cells[1]);
    if (!k || !w) throw fail();
    if (!report.entries.empty() && *w > report.entries.back().wcss) {
      report.non_monotone.push_back(static_cast<std::size_t>(*k));
    }
    report.entries.push_back({static_cast<std::size_t>(*k), *w});
    report.second_differences.push_back(trim(cells[2]).empty() ? std::nullopt
                                                               : parse_double(cells[2]));
  }
  if (!saw_suggestion) throw Error(ErrorKind::malformed_input, source_name + ": no suggested_k");
  return report;
}

}  // namespace loadprof
