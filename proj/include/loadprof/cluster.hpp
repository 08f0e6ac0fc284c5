#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "loadprof/common.hpp"
#include "loadprof/profile.hpp"

namespace loadprof {

struct KMeansConfig {
  std::size_t k = 4;
  std::size_t restarts = 1000;
  std::size_t max_iterations = 100;
  std::uint64_t seed = 0;
  /// Worker cap. Results do not depend on it.
  std::size_t threads = 1;

  /// Throws invalid_argument for k < 1, restarts < 1 or max_iterations < 1.
  void validate() const;
};

struct ClusteringResult {
  std::vector<std::size_t> assignments;
  std::vector<DayProfile> centroids;
  std::vector<double> per_cluster_wcss;
  double total_wcss = 0.0;
  std::size_t winning_restart = 0;
  std::size_t iterations_used = 0;
  /// Total WCSS after each Lloyd update of the winning run.
  std::vector<double> wcss_trace;
  /// Lloyd iterations, summed over every run behind this result, where the
  /// total WCSS rose above its previous value.
  std::size_t monotonicity_violations = 0;
};

/// Slack for the per-iteration monotonicity check, relative to the previous
/// WCSS. Lloyd steps cannot increase the objective; anything above this is a
/// defect, not rounding.
inline constexpr double kMonotonicityRelativeSlack = 1e-12;

/// Number of profiles with pairwise distinct values.
std::size_t distinct_count(std::span<const DayProfile> profiles);

/// One Lloyd run from k distinct profiles drawn by the seeded generator.
ClusteringResult kmeans_once(std::span<const DayProfile> profiles, std::size_t k,
                             std::uint64_t seed, std::size_t max_iterations = 100);

/// Seed of restart `restart`: splitmix64(seed ^ (restart * golden ratio)).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t restart);

/// Best of `config.restarts` kmeans_once runs by total WCSS; ties go to the
/// lowest restart index.
ClusteringResult kmeans_best(std::span<const DayProfile> profiles, const KMeansConfig& config);

struct WcssBreakdown {
  std::vector<double> per_cluster;
  double total = 0.0;
};

WcssBreakdown wcss(std::span<const DayProfile> profiles, std::span<const std::size_t> assignments,
                   std::span<const DayProfile> centroids);

struct ElbowEntry {
  std::size_t k = 0;
  double wcss = 0.0;
};

struct ElbowReport {
  std::vector<ElbowEntry> entries;
  /// Aligned with entries; nullopt at both ends of the range.
  std::vector<std::optional<double>> second_differences;
  std::size_t suggested_k = 0;
  /// Set when the curve has no curvature to pick an elbow from.
  bool degenerate = false;
  /// k values whose best WCSS exceeded the best WCSS at k - 1.
  std::vector<std::size_t> non_monotone;
  std::size_t monotonicity_violations = 0;  // summed over every restart of every k
};

/// Runs kmeans_best for every k in [k_min, k_max] and suggests the k with
/// the largest second difference. k beyond the number of distinct profiles
/// scores zero without clustering.
ElbowReport elbow_scan(std::span<const DayProfile> profiles, std::size_t k_min, std::size_t k_max,
                       const KMeansConfig& config, bool allow_k_min_below_2 = false);

/// Number of partitions of n items into k nonempty blocks, saturating.
std::uint64_t stirling2(std::size_t n, std::size_t k);

inline constexpr std::uint64_t kBruteForceLimit = 10'000'000;

/// Exact minimum-WCSS partition by enumeration of all set partitions.
ClusteringResult brute_force_optimum(std::span<const DayProfile> profiles, std::size_t k);

/// {config, assignments, centroids, per_cluster_wcss, total_wcss,
/// winning_restart}. `profiles` supplies the ids listed with assignments.
std::string clustering_to_json(const ClusteringResult& result, const KMeansConfig& config,
                               std::span<const DayProfile> profiles);

struct StoredClustering {
  KMeansConfig config;
  std::vector<std::string> profile_ids;
  ClusteringResult result;
};

StoredClustering clustering_from_json(std::string_view text);

/// `k,wcss,second_difference` rows then a `suggested_k,<k>` line.
void write_elbow_csv(std::ostream& out, const ElbowReport& report);
ElbowReport read_elbow_csv(std::istream& in, const std::string& source_name);

}  // namespace loadprof
