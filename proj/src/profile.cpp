#include "loadprof/profile.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>

namespace loadprof {

const char* to_string(Units units) { return units == Units::kwh ? "kwh" : "shape"; }

const char* to_string(SimilarityMode mode) {
  return mode == SimilarityMode::amplitude ? "amplitude" : "shape";
}

std::optional<Units> parse_units(std::string_view text) {
  if (text == "kwh") return Units::kwh;
  if (text == "shape") return Units::shape;
  return std::nullopt;
}

std::optional<SimilarityMode> parse_similarity_mode(std::string_view text) {
  if (text == "amplitude") return SimilarityMode::amplitude;
  if (text == "shape") return SimilarityMode::shape;
  return std::nullopt;
}

const char* to_string(Grouping grouping) {
  return grouping == Grouping::per_property ? "property" : "property-label";
}

std::optional<Grouping> parse_grouping(std::string_view text) {
  if (text == "property") return Grouping::per_property;
  if (text == "property-label") return Grouping::per_property_label;
  return std::nullopt;
}

DayProfile average_profile(std::span<const DayRecord> days, std::string id, std::string label) {
  if (days.empty()) throw Error(ErrorKind::empty_set, "average_profile: no days for " + id);
  HourlyValues sum{};
  for (const auto& day : days) {
    const auto values = day.values();
    for (std::size_t h = 0; h < kHoursPerDay; ++h) sum[h] += values[h];
  }
  DayProfile profile{{}, Units::kwh, std::move(id), std::move(label)};
  for (std::size_t h = 0; h < kHoursPerDay; ++h) {
    profile.values[h] = sum[h] / static_cast<double>(days.size());
  }
  return profile;
}

DayProfile normalize(const DayProfile& profile) {
  double total = 0.0;
  for (double v : profile.values) total += v;
  if (!(total > 0.0)) {
    throw Error(ErrorKind::zero_profile, "cannot normalise all-zero profile " + profile.id);
  }
  DayProfile out = profile;
  out.units = Units::shape;
  for (auto& v : out.values) v /= total;
  return out;
}

double distance(const DayProfile& a, const DayProfile& b, SimilarityMode mode) {
  const HourlyValues* x = &a.values;
  const HourlyValues* y = &b.values;
  DayProfile na;
  DayProfile nb;
  if (mode == SimilarityMode::amplitude) {
    if (a.units != Units::kwh || b.units != Units::kwh) {
      throw Error(ErrorKind::unit_mismatch, "amplitude distance needs kWh profiles");
    }
  } else {
    if (a.units == Units::kwh) {
      na = normalize(a);
      x = &na.values;
    }
    if (b.units == Units::kwh) {
      nb = normalize(b);
      y = &nb.values;
    }
  }
  double sq = 0.0;
  for (std::size_t h = 0; h < kHoursPerDay; ++h) {
    const double d = (*x)[h] - (*y)[h];
    sq += d * d;
  }
  return std::sqrt(sq);
}

std::size_t nearest(std::span<const DayProfile> candidates, const DayProfile& query,
                    SimilarityMode mode) {
  if (candidates.empty()) throw Error(ErrorKind::empty_set, "nearest: no candidates");
  std::size_t best = 0;
  double best_d = distance(candidates[0], query, mode);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double d = distance(candidates[i], query, mode);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

ProfileMatrix profile_matrix(const Dataset& dataset, Grouping grouping, SimilarityMode mode,
                             const Labeling* labels) {
  if (grouping == Grouping::per_property_label && labels == nullptr) {
    throw Error(ErrorKind::invalid_argument, "per-(property,label) grouping needs day labels");
  }
  // Cell key: (property_id, label text); std::map gives the output ordering.
  std::map<std::pair<std::string, std::string>, std::vector<DayRecord>> cells;
  for (const auto& id : dataset.property_ids()) {
    if (grouping == Grouping::per_property) cells[{id, std::string(kAllValidDays)}];
  }
  for (const auto& day : dataset.days()) {
    std::string label(kAllValidDays);
    if (grouping == Grouping::per_property_label) {
      const auto it = labels->find(DayKey{day.property_id, day.date});
      if (it == labels->end()) continue;
      label = to_string(it->second);
    }
    auto& cell = cells[{day.property_id, label}];
    if (day.complete()) cell.push_back(day);
  }

  ProfileMatrix matrix;
  for (const auto& [key, days] : cells) {
    if (days.empty()) {
      matrix.dropped.push_back(key.first + " [" + key.second + "]: no complete days");
      continue;
    }
    auto profile = average_profile(days, key.first, key.second);
    if (mode == SimilarityMode::shape) {
      try {
        profile = normalize(profile);
      } catch (const Error& e) {
        matrix.dropped.push_back(key.first + " [" + key.second + "]: " + e.what());
        continue;
      }
    }
    matrix.profiles.push_back(std::move(profile));
  }
  return matrix;
}

namespace {

std::string profiles_header() {
  std::string header = "id,label";
  for (std::size_t h = 0; h < kHoursPerDay; ++h) header += "," + hour_column("h", h);
  return header + ",units";
}

}  // namespace

void write_profiles_csv(std::ostream& out, std::span<const DayProfile> profiles) {
  out << profiles_header() << '\n';
  for (const auto& p : profiles) {
    out << p.id << ',' << p.label;
    for (double v : p.values) out << ',' << format_double(v);
    out << ',' << to_string(p.units) << '\n';
  }
}

std::vector<DayProfile> read_profiles_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != profiles_header()) {
    throw Error(ErrorKind::malformed_header, source_name + ":1: bad profile header");
  }
  std::vector<DayProfile> profiles;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    auto fail = [&] {
      return Error(ErrorKind::malformed_input,
                   source_name + ":" + std::to_string(line_no) + ": bad profile row");
    };
    if (cells.size() != 3 + kHoursPerDay) throw fail();
    DayProfile p;
    p.id = cells[0];
    p.label = cells[1];
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      const auto v = parse_double(cells[2 + h]);
      if (!v || *v < 0.0) throw fail();
      p.values[h] = *v;
    }
    const auto units = parse_units(trim(cells.back()));
    if (!units) throw fail();
    p.units = *units;
    profiles.push_back(std::move(p));
  }
  return profiles;
}

}  // namespace loadprof
