#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "loadprof/common.hpp"

namespace loadprof {

struct Archetype {
  std::string name;
  /// Relative hourly level; a member's day is amplitude * shape + noise.
  HourlyValues shape{};
  double amplitude_min = 1.0;  // kWh per hour at shape level 1
  double amplitude_max = 1.0;
  std::size_t members = 1;
};

struct MaskingSpec {
  /// Fraction of days that lose readings.
  double corrupted_day_fraction = 0.0;
  /// Fraction of the 24 hours removed from a corrupted day (at least one).
  double hour_fraction = 0.0;
};

struct WeatherModel {
  double temperature_mean = 10.0;        // deg C
  double temperature_annual_swing = 7.0;  // half peak-to-peak
  double temperature_daily_swing = 3.0;
  double temperature_day_sigma = 2.5;  // day-to-day departure from the seasonal curve
  int coldest_day_of_year = 15;
  double wind_min = 0.0;  // m/s, daily level drawn uniformly
  double wind_max = 10.0;
  double rain_probability = 0.1;
  double rain_max = 2.0;  // mm per hour
};

struct SynthSpec {
  std::vector<Archetype> archetypes;
  double noise_sigma = 0.0;  // kWh
  MaskingSpec masking;
  Date start{std::chrono::year{1990}, std::chrono::January, std::chrono::day{1}};
  std::size_t days = 365;
  WeatherModel weather;
  std::uint64_t seed = 0;

  /// Throws invalid_argument on empty archetypes, zero members, negative
  /// shapes, bad amplitude ranges or masking fractions outside [0, 1).
  void validate() const;

  std::size_t property_count() const;
  /// Member-weighted mean of the archetype amplitude midpoints.
  double mean_amplitude() const;

  /// One evening-peaked unrestricted shape with 48 members and three
  /// night-load variants with 15 each; noise 5% of the mean amplitude; 10%
  /// of days lose a quarter of their hours.
  static SynthSpec defaults(std::uint64_t seed = 0);

  /// key=value overrides on top of defaults(): seed, start, days,
  /// noise_sigma (absolute) or noise_fraction (of mean amplitude),
  /// corrupted_day_fraction, masked_hour_fraction, memberships
  /// (comma-joined, one per default archetype).
  static SynthSpec parse(std::string_view text);
};

struct MaskedCell {
  std::size_t day = 0;  // offset from SynthSpec::start
  std::size_t hour = 0;
};

struct PropertyTruth {
  std::string property_id;
  std::size_t archetype = 0;
  double amplitude = 0.0;
  std::vector<HourlyValues> true_days;  // before masking
  std::vector<MaskedCell> masked;       // sorted by (day, hour)
  std::vector<bool> corrupted;          // per day
  HourlyValues true_mean{};             // over all days
  HourlyValues valid_mean{};            // over uncorrupted days, in date order
};

struct GroundTruthLedger {
  std::uint64_t seed = 0;
  Date start;
  std::size_t days = 0;
  std::vector<std::string> archetype_names;
  std::vector<PropertyTruth> properties;  // sorted by property_id
  std::vector<double> daily_mean_temperature;
  std::vector<double> daily_mean_wind;

  const PropertyTruth* find(const std::string& property_id) const;
};

struct SynthOutput {
  /// property_id -> canonical dwelling CSV text.
  std::map<std::string, std::string> files;
  GroundTruthLedger ledger;
};

SynthOutput generate(const SynthSpec& spec);

std::string ledger_to_json(const GroundTruthLedger& ledger);

/// Writes `<property_id>.csv` for every property plus `ledger.json`.
void write_synth_output(const SynthOutput& output, const std::filesystem::path& directory);

struct RecoveryScore {
  double purity = 0.0;
  double rand_index = 0.0;
};

/// Agreement between cluster assignments and the planted archetypes.
/// `profile_ids[i]` names the property behind assignment i.
RecoveryScore score_recovery(std::span<const std::size_t> assignments,
                             std::span<const std::string> profile_ids,
                             const GroundTruthLedger& ledger);

}  // namespace loadprof
