#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace loadprof {

inline constexpr std::size_t kHoursPerDay = 24;

inline constexpr std::string_view kVersion = "0.1.0";

using Date = std::chrono::year_month_day;

/// 24 hourly slots, each either a reading or absent.
using HourlySlots = std::array<std::optional<double>, kHoursPerDay>;

/// 24 hourly values, all present.
using HourlyValues = std::array<double, kHoursPerDay>;

enum class ErrorKind {
  missing_file,
  malformed_header,
  duplicate_timestamp,
  empty_directory,
  aggregated,
  not_imputable,
  degenerate_day,
  missing_average,
  unlabeled_day,
  empty_set,
  zero_profile,
  unit_mismatch,
  invalid_argument,
  instance_too_large,
  malformed_input,
  missing_stage,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parses YYYY-MM-DD. Returns nullopt for anything else, including
/// impossible calendar dates.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(const Date& date);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Strict full-string parse; nullopt on trailing garbage or non-finite.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);

/// Splits one CSV line on commas. Quoted fields are not supported; the
/// formats this toolkit reads never quote.
std::vector<std::string> split_csv_line(std::string_view line);

std::string_view trim(std::string_view text);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// processed exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

/// Column header "h00".."h23" (or with another prefix).
std::string hour_column(std::string_view prefix, std::size_t hour);

}  // namespace loadprof
