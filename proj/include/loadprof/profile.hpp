#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "loadprof/common.hpp"
#include "loadprof/daytype.hpp"
#include "loadprof/ingest.hpp"

namespace loadprof {

enum class Units { kwh, shape };
enum class SimilarityMode { amplitude, shape };

const char* to_string(Units units);
const char* to_string(SimilarityMode mode);
std::optional<Units> parse_units(std::string_view text);
std::optional<SimilarityMode> parse_similarity_mode(std::string_view text);

inline constexpr std::string_view kAllValidDays = "all valid";

/// A representative day: 24 hourly values plus where they came from.
struct DayProfile {
  HourlyValues values{};
  Units units = Units::kwh;
  std::string id;     // property id, or a cluster / reference name
  std::string label;  // day set, e.g. "all valid" or "weekend/winter"
};

/// Per-hour mean of complete days.
DayProfile average_profile(std::span<const DayRecord> days, std::string id,
                           std::string label = std::string(kAllValidDays));

/// Divides by the daily total so the values sum to one.
DayProfile normalize(const DayProfile& profile);

/// Euclidean distance over raw values (amplitude) or sum-normalised values
/// (shape). Amplitude mode requires kWh profiles on both sides.
double distance(const DayProfile& a, const DayProfile& b, SimilarityMode mode);

/// Index of the closest profile in `candidates`; ties go to the lowest index.
std::size_t nearest(std::span<const DayProfile> candidates, const DayProfile& query,
                    SimilarityMode mode);

enum class Grouping { per_property, per_property_label };
const char* to_string(Grouping grouping);
std::optional<Grouping> parse_grouping(std::string_view text);

struct ProfileMatrix {
  std::vector<DayProfile> profiles;  // ordered by (id, label)
  std::vector<std::string> dropped;  // one line per empty cell
};

/// One profile per property (or per property and day type), built from the
/// complete days of a cleaned dataset. Shape mode normalises each row.
ProfileMatrix profile_matrix(const Dataset& dataset, Grouping grouping, SimilarityMode mode,
                             const Labeling* labels = nullptr);

/// `id,label,h00..h23,units`.
void write_profiles_csv(std::ostream& out, std::span<const DayProfile> profiles);
std::vector<DayProfile> read_profiles_csv(std::istream& in, const std::string& source_name);

}  // namespace loadprof
