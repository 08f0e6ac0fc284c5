#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "loadprof/cluster.hpp"
#include "loadprof/ingest.hpp"
#include "loadprof/profile.hpp"

namespace testing {

using namespace loadprof;

inline Date ymd(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

inline DayRecord full_day(const std::string& id, Date date, double value) {
  DayRecord day{id, date, {}};
  for (auto& slot : day.readings) slot = value;
  return day;
}

inline DayRecord day_from(const std::string& id, Date date, const HourlyValues& values) {
  DayRecord day{id, date, {}};
  for (std::size_t h = 0; h < kHoursPerDay; ++h) day.readings[h] = values[h];
  return day;
}

inline DayProfile constant_profile(double value, std::string id = "p") {
  DayProfile p;
  p.values.fill(value);
  p.id = std::move(id);
  return p;
}

inline DayProfile random_profile(std::mt19937_64& rng, double lo = 0.0, double hi = 5.0,
                                 std::string id = "p") {
  std::uniform_real_distribution<double> u(lo, hi);
  DayProfile p;
  for (auto& v : p.values) v = u(rng);
  p.id = std::move(id);
  return p;
}

// Naive double loop: for every cluster, every profile, every hour.
inline double naive_wcss(const std::vector<DayProfile>& profiles,
                         const std::vector<std::size_t>& assignments,
                         const std::vector<DayProfile>& centroids) {
  double total = 0.0;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      if (assignments[i] != c) continue;
      for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        const double d = profiles[i].values[h] - centroids[c].values[h];
        total += d * d;
      }
    }
  }
  return total;
}

inline std::vector<DayProfile> member_means(const std::vector<DayProfile>& profiles,
                                            const std::vector<std::size_t>& assignments,
                                            std::size_t k) {
  std::vector<DayProfile> out(k);
  std::vector<double> counts(k, 0.0);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    counts[assignments[i]] += 1.0;
    for (std::size_t h = 0; h < kHoursPerDay; ++h) out[assignments[i]].values[h] += profiles[i].values[h];
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (auto& v : out[c].values) v /= counts[c];
  }
  return out;
}

}  // namespace testing
