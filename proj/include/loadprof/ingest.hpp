#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "loadprof/common.hpp"

namespace loadprof {

/// One hourly line of a dwelling file.
struct RawHourRow {
  std::string property_id;
  Date date;
  int hour = 0;
  std::optional<double> kwh;
  std::optional<double> temperature;
  std::optional<double> wind_speed;
  std::optional<double> rainfall;
};

/// A cell that was present in the file but could not be used.
struct ParseIssue {
  std::size_t line = 0;
  std::string column;
  std::string cell;
};

struct ParseReport {
  std::string file;
  std::vector<ParseIssue> issues;
};

struct ParsedFile {
  std::vector<RawHourRow> rows;
  ParseReport report;
};

/// Maps canonical column names (date, hour, kwh, temperature, wind_speed,
/// rainfall) onto the columns of a nonconforming file, either by header name
/// or by zero-based position.
class SchemaMap {
 public:
  using Source = std::variant<std::string, std::size_t>;

  /// key=value lines; `#` starts a comment. A purely numeric value is a
  /// column position, anything else a header name.
  static SchemaMap parse(std::string_view text);
  static SchemaMap load(const std::filesystem::path& path);

  void set(const std::string& canonical, Source source);
  const std::map<std::string, Source>& entries() const { return entries_; }

 private:
  std::map<std::string, Source> entries_;
};

inline constexpr std::array<std::string_view, 6> kCanonicalColumns = {
    "date", "hour", "kwh", "temperature", "wind_speed", "rainfall"};

ParsedFile parse_dwelling_stream(std::istream& in, const std::string& source_name,
                                 const std::string& property_id,
                                 const SchemaMap* schema = nullptr);

ParsedFile parse_dwelling_file(const std::filesystem::path& path,
                               const std::string& property_id,
                               const SchemaMap* schema = nullptr);

/// One property-day of readings.
struct DayRecord {
  std::string property_id;
  Date date;
  HourlySlots readings{};

  std::size_t present_count() const;
  bool complete() const { return present_count() == kHoursPerDay; }
  /// Requires complete().
  HourlyValues values() const;
};

/// Weather reported alongside one property's reading for one hour.
struct EnvironmentReading {
  std::string property_id;
  Date date;
  int hour = 0;
  std::optional<double> temperature;
  std::optional<double> wind_speed;
  std::optional<double> rainfall;
};

/// Site-wide weather for one date.
struct EnvironmentRecord {
  Date date;
  HourlySlots temperature{};
  HourlySlots wind{};
  HourlySlots rainfall{};
};

struct ReshapeResult {
  std::vector<DayRecord> days;
  std::vector<EnvironmentReading> environment;
};

ReshapeResult reshape(std::span<const RawHourRow> rows, const std::string& property_id);

/// Raised when properties disagree on a weather value for the same hour.
struct MergeFlag {
  Date date;
  int hour = 0;
  std::string series;
  std::vector<std::string> property_ids;
  std::vector<double> values;
  double merged = 0.0;
};

struct MergeResult {
  std::map<Date, EnvironmentRecord> records;
  std::vector<MergeFlag> flags;
};

inline constexpr double kEnvironmentAgreementTolerance = 1e-6;

MergeResult merge_environment(std::span<const EnvironmentReading> fragments);

/// Immutable collection of property-days plus the site environment.
class Dataset {
 public:
  Dataset() = default;
  /// Sorts days by (property_id, date); throws on a duplicate pair.
  Dataset(std::vector<DayRecord> days, std::map<Date, EnvironmentRecord> environment);

  const std::vector<DayRecord>& days() const { return days_; }
  const std::map<Date, EnvironmentRecord>& environment() const { return environment_; }
  const std::set<std::string>& property_ids() const { return property_ids_; }
  const EnvironmentRecord* environment_for(const Date& date) const;

 private:
  std::vector<DayRecord> days_;
  std::map<Date, EnvironmentRecord> environment_;
  std::set<std::string> property_ids_;
};

struct LoadOptions {
  std::size_t threads = 1;
  const SchemaMap* schema = nullptr;
};

struct LoadSummary {
  std::size_t files = 0;
  std::size_t rows = 0;
  std::size_t day_records = 0;
};

struct LoadResult {
  Dataset dataset;
  LoadSummary summary;
  std::vector<ParseReport> parse_reports;
  std::vector<MergeFlag> merge_flags;
};

/// Loads every `<property_id>.csv` in `directory`. Per-file failures are
/// collected and rethrown as one aggregated error naming each file.
LoadResult load_dataset(const std::filesystem::path& directory, const LoadOptions& options = {});

/// Same as load_dataset over (property_id -> file contents).
LoadResult load_dataset_from_memory(const std::map<std::string, std::string>& files,
                                    const LoadOptions& options = {});

// Run-directory storage of an assembled dataset.

/// `property_id,date,h00..h23`; absent slots are empty cells.
void write_days_csv(std::ostream& out, std::span<const DayRecord> days);
std::vector<DayRecord> read_days_csv(std::istream& in, const std::string& source_name);

/// `date,hour,temperature,wind_speed,rainfall`; only hours with a value.
void write_environment_csv(std::ostream& out, const std::map<Date, EnvironmentRecord>& env);
std::map<Date, EnvironmentRecord> read_environment_csv(std::istream& in,
                                                       const std::string& source_name);

void save_dataset(const Dataset& dataset, const std::filesystem::path& directory);
Dataset read_dataset(const std::filesystem::path& directory);

}  // namespace loadprof
