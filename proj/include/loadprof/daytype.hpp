#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "loadprof/common.hpp"
#include "loadprof/ingest.hpp"

namespace loadprof {

enum class DayClass { weekday, weekend, holiday };
enum class Season { winter, spring, summer, autumn };
enum class Axis { day_class, season, temperature, wind };

const char* to_string(DayClass c);
const char* to_string(Season s);
const char* to_string(Axis a);
std::optional<DayClass> parse_day_class(std::string_view text);
std::optional<Season> parse_season(std::string_view text);
std::optional<Axis> parse_axis(std::string_view text);

/// Values below `upper` fall in this band; the last band has no bound.
struct Band {
  std::string name;
  std::optional<double> upper;
};

struct DayTypeScheme {
  std::set<Axis> enabled_axes{Axis::day_class, Axis::season};
  /// ISO weekday numbers (Mon=1 .. Sun=7) that count as weekend.
  std::set<unsigned> weekend_days{6, 7};
  std::set<Date> holidays;
  /// Indexed by month - 1. Defaults to meteorological quarters.
  std::array<Season, 12> season_of_month{
      Season::winter, Season::winter, Season::spring, Season::spring,
      Season::spring, Season::summer, Season::summer, Season::summer,
      Season::autumn, Season::autumn, Season::autumn, Season::winter};
  std::vector<Band> temperature_bands{{"cool", 10.0}, {"mild", 15.0}, {"hot", std::nullopt}};
  std::vector<Band> wind_bands{{"calm", 5.0}, {"windy", std::nullopt}};

  bool enabled(Axis a) const { return enabled_axes.contains(a); }

  /// Throws invalid_argument unless bounds strictly increase, only the last
  /// band is unbounded and at least one axis is enabled.
  void validate() const;

  /// key=value text. Keys: axes, weekend_days, seasons, temperature_bands,
  /// wind_bands, holidays_file (resolved against `base_dir`).
  static DayTypeScheme parse(std::string_view text, const std::filesystem::path& base_dir = {});
  static DayTypeScheme load(const std::filesystem::path& path);
};

/// Bands as `name:bound` comma-joined; the final entry may omit the bound.
std::vector<Band> parse_bands(std::string_view text);

/// One ISO date per line; blank lines and `#` comments ignored.
std::set<Date> load_holidays(const std::filesystem::path& path);
std::set<Date> parse_holidays(std::string_view text);

struct DayTypeLabel {
  std::optional<DayClass> day_class;
  std::optional<Season> season;
  std::optional<std::string> temperature_band;
  std::optional<std::string> wind_band;

  auto operator<=>(const DayTypeLabel&) const = default;
  bool operator==(const DayTypeLabel&) const = default;
};

/// e.g. "weekend/winter/hot/calm"; disabled axes are skipped.
std::string to_string(const DayTypeLabel& label);

/// Mean of the present hourly values, or nullopt if none are present.
std::optional<double> daily_mean(const HourlySlots& series);

std::string band_for(const std::vector<Band>& bands, double value);

DayTypeLabel label_day(const Date& date, const EnvironmentRecord* environment,
                       const DayTypeScheme& scheme);

struct DayKey {
  std::string property_id;
  Date date;

  auto operator<=>(const DayKey&) const = default;
  bool operator==(const DayKey&) const = default;
};

using Labeling = std::map<DayKey, DayTypeLabel>;

struct PartitionResult {
  std::map<DayTypeLabel, std::vector<DayKey>> cells;
  std::vector<DayKey> dropped;
};

/// Labels every day of the dataset. Unlabelable days are dropped when
/// `drop_unlabeled` is set, otherwise the first one raises unlabeled_day.
PartitionResult partition(const Dataset& dataset, const DayTypeScheme& scheme,
                          bool drop_unlabeled = false);

Labeling label_dataset(const Dataset& dataset, const DayTypeScheme& scheme,
                       bool drop_unlabeled = false);

/// `property_id,date,day_class,season,temperature_band,wind_band`.
void write_labels_csv(std::ostream& out, const Labeling& labels);
Labeling read_labels_csv(std::istream& in, const std::string& source_name);

}  // namespace loadprof
