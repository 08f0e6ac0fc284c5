#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loadprof/common.hpp"
#include "loadprof/daytype.hpp"
#include "loadprof/ingest.hpp"

namespace loadprof {

struct PropertyValidity {
  std::string property_id;
  std::size_t valid_days = 0;
  std::size_t error_days = 0;

  std::size_t total_days() const { return valid_days + error_days; }
};

struct CountStats {
  std::size_t min = 0;
  std::size_t max = 0;
  double mean = 0.0;
};

/// Per-property day counts and their spread across properties.
struct ValidityReport {
  std::vector<PropertyValidity> properties;  // sorted by property_id
  CountStats valid;
  CountStats all;
  std::size_t total_valid_rows = 0;
  std::size_t total_error_rows = 0;
};

ValidityReport validity_report(std::span<const DayRecord> days);

/// Min/max/mean table with "Valid readings" and "All readings" rows; means
/// to one decimal place.
std::string format_validity_table(const ValidityReport& report);

/// `property_id,valid_days,error_days,total_days`.
void write_validity_csv(std::ostream& out, const ValidityReport& report);

struct SplitResult {
  std::vector<DayRecord> valid;
  std::vector<DayRecord> errors;
  ValidityReport report;
};

/// A day is valid iff all 24 readings are present.
SplitResult split_valid(const Dataset& dataset);

struct AverageKey {
  std::string property_id;
  std::optional<DayTypeLabel> label;

  auto operator<=>(const AverageKey&) const = default;
  bool operator==(const AverageKey&) const = default;
};

/// Per-hour mean readings of valid days, per property and optionally per
/// day type. A missing entry means the cell had no valid days.
class HourlyAverageTable {
 public:
  void set(AverageKey key, HourlySlots averages) { entries_[std::move(key)] = averages; }
  const HourlySlots* find(const std::string& property_id,
                          const std::optional<DayTypeLabel>& label = std::nullopt) const;
  const std::map<AverageKey, HourlySlots>& entries() const { return entries_; }

 private:
  std::map<AverageKey, HourlySlots> entries_;
};

/// Always builds the unconditioned entry of each property; with `labels`
/// also one entry per (property, label) cell.
HourlyAverageTable build_average_table(std::span<const DayRecord> days,
                                       const Labeling* labels = nullptr);

enum class ImputationMethod { unconditioned, day_type_conditioned };
const char* to_string(ImputationMethod method);

struct ImputationOutcome {
  DayRecord day;
  double fraction = 0.0;
  std::vector<std::size_t> filled_hours;
  ImputationMethod method = ImputationMethod::unconditioned;
};

/// Scales the average day by observed/expected over the present hours and
/// fills each absent hour from it. Throws not_imputable (no present hours),
/// missing_average (no table entry), degenerate_day (zero expected or
/// observed total).
ImputationOutcome impute_day(const DayRecord& day, const HourlyAverageTable& table,
                             const std::optional<DayTypeLabel>& label = std::nullopt);

enum class CleaningPolicy { omit, impute, impute_by_daytype };
const char* to_string(CleaningPolicy policy);
std::optional<CleaningPolicy> parse_cleaning_policy(std::string_view text);

struct ImputationLogEntry {
  std::string property_id;
  Date date;
  ImputationMethod method = ImputationMethod::unconditioned;
  double fraction = 0.0;
  std::vector<std::size_t> filled_hours;
};

enum class CleanEventKind { dropped, fallback_unconditioned };

struct CleanEvent {
  std::string property_id;
  Date date;
  CleanEventKind kind = CleanEventKind::dropped;
  std::string detail;
};

struct CleanResult {
  Dataset dataset;
  ValidityReport report;
  std::vector<ImputationLogEntry> log;
  std::vector<CleanEvent> events;
};

/// omit keeps valid days only; the impute policies repair every invalid day
/// with at least one reading and log each day they cannot repair.
CleanResult clean(const Dataset& dataset, CleaningPolicy policy,
                  const Labeling* labels = nullptr);

/// `property_id,date,method,fraction,filled_hours`; hours joined with ';'.
void write_imputation_log(std::ostream& out, std::span<const ImputationLogEntry> log);
/// `property_id,date,event,detail`.
void write_clean_events(std::ostream& out, std::span<const CleanEvent> events);

}  // namespace loadprof
