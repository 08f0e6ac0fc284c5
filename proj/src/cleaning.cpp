#include "loadprof/cleaning.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <tuple>

namespace loadprof {

namespace {

CountStats count_stats(const std::vector<std::size_t>& counts) {
  CountStats stats;
  if (counts.empty()) return stats;
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  stats.min = *lo;
  stats.max = *hi;
  std::size_t total = 0;
  for (auto c : counts) total += c;
  stats.mean = static_cast<double>(total) / static_cast<double>(counts.size());
  return stats;
}

}  // namespace

ValidityReport validity_report(std::span<const DayRecord> days) {
  std::map<std::string, PropertyValidity> per_property;
  for (const auto& day : days) {
    auto& p = per_property[day.property_id];
    p.property_id = day.property_id;
    if (day.complete()) {
      ++p.valid_days;
    } else {
      ++p.error_days;
    }
  }
  ValidityReport report;
  std::vector<std::size_t> valid_counts;
  std::vector<std::size_t> all_counts;
  for (auto& [id, p] : per_property) {
    report.total_valid_rows += p.valid_days;
    report.total_error_rows += p.error_days;
    valid_counts.push_back(p.valid_days);
    all_counts.push_back(p.total_days());
    report.properties.push_back(std::move(p));
  }
  report.valid = count_stats(valid_counts);
  report.all = count_stats(all_counts);
  return report;
}

std::string format_validity_table(const ValidityReport& report) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-16s %10s %10s %10s\n", "", "Minimum", "Maximum", "Mean");
  out += buf;
  auto row = [&](const char* name, const CountStats& s) {
    std::snprintf(buf, sizeof(buf), "%-16s %10zu %10zu %10.1f\n", name, s.min, s.max, s.mean);
    out += buf;
  };
  row("Valid readings", report.valid);
  row("All readings", report.all);
  std::snprintf(buf, sizeof(buf), "%zu properties, %zu valid rows, %zu rows with errors\n",
                report.properties.size(), report.total_valid_rows, report.total_error_rows);
  out += buf;
  return out;
}

void write_validity_csv(std::ostream& out, const ValidityReport& report) {
  out << "property_id,valid_days,error_days,total_days\n";
  for (const auto& p : report.properties) {
    out << p.property_id << ',' << p.valid_days << ',' << p.error_days << ',' << p.total_days()
        << '\n';
  }
}

SplitResult split_valid(const Dataset& dataset) {
  if (dataset.days().empty()) throw Error(ErrorKind::empty_set, "split_valid: empty dataset");
  SplitResult result;
  for (const auto& day : dataset.days()) {
    (day.complete() ? result.valid : result.errors).push_back(day);
  }
  result.report = validity_report(dataset.days());
  return result;
}

const HourlySlots* HourlyAverageTable::find(const std::string& property_id,
                                            const std::optional<DayTypeLabel>& label) const {
  const auto it = entries_.find(AverageKey{property_id, label});
  return it == entries_.end() ? nullptr : &it->second;
}

HourlyAverageTable build_average_table(std::span<const DayRecord> days, const Labeling* labels) {
  struct Accumulator {
    HourlyValues sum{};
    std::array<std::size_t, kHoursPerDay> count{};
  };
  std::map<AverageKey, Accumulator> cells;
  auto add = [](Accumulator& acc, const DayRecord& day) {
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      if (day.readings[h]) {
        acc.sum[h] += *day.readings[h];
        ++acc.count[h];
      }
    }
  };
  for (const auto& day : days) {
    if (!day.complete()) continue;
    add(cells[AverageKey{day.property_id, std::nullopt}], day);
    if (labels != nullptr) {
      if (const auto it = labels->find(DayKey{day.property_id, day.date}); it != labels->end()) {
        add(cells[AverageKey{day.property_id, it->second}], day);
      }
    }
  }
  HourlyAverageTable table;
  for (auto& [key, acc] : cells) {
    HourlySlots averages{};
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      if (acc.count[h] > 0) averages[h] = acc.sum[h] / static_cast<double>(acc.count[h]);
    }
    table.set(key, averages);
  }
  return table;
}

const char* to_string(ImputationMethod method) {
  return method == ImputationMethod::unconditioned ? "unconditioned" : "day_type_conditioned";
}

ImputationOutcome impute_day(const DayRecord& day, const HourlyAverageTable& table,
                             const std::optional<DayTypeLabel>& label) {
  const auto where = day.property_id + " " + format_date(day.date);
  const auto present = day.present_count();
  if (present == 0) throw Error(ErrorKind::not_imputable, where + ": no readings present");
  if (present == kHoursPerDay) {
    throw Error(ErrorKind::invalid_argument, where + ": nothing to impute");
  }
  const auto* averages = table.find(day.property_id, label);
  if (averages == nullptr) {
    throw Error(ErrorKind::missing_average,
                where + ": no average entry" + (label ? " for " + to_string(*label) : ""));
  }

  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t h = 0; h < kHoursPerDay; ++h) {
    if (!(*averages)[h]) throw Error(ErrorKind::missing_average, where + ": incomplete average");
    if (day.readings[h]) {
      observed += *day.readings[h];
      expected += *(*averages)[h];
    }
  }
  if (expected <= 0.0) {
    throw Error(ErrorKind::degenerate_day, where + ": zero average over present hours");
  }
  if (observed <= 0.0) {
    throw Error(ErrorKind::degenerate_day, where + ": zero usage over present hours");
  }

  ImputationOutcome outcome;
  outcome.day = day;
  outcome.fraction = observed / expected;
  outcome.method = label ? ImputationMethod::day_type_conditioned : ImputationMethod::unconditioned;
  for (std::size_t h = 0; h < kHoursPerDay; ++h) {
    if (!day.readings[h]) {
      outcome.day.readings[h] = outcome.fraction * *(*averages)[h];
      outcome.filled_hours.push_back(h);
    }
  }
  return outcome;
}

const char* to_string(CleaningPolicy policy) {
  switch (policy) {
    case CleaningPolicy::omit: return "omit";
    case CleaningPolicy::impute: return "impute";
    case CleaningPolicy::impute_by_daytype: return "impute_by_daytype";
  }
  return "?";
}

std::optional<CleaningPolicy> parse_cleaning_policy(std::string_view text) {
  for (auto p : {CleaningPolicy::omit, CleaningPolicy::impute, CleaningPolicy::impute_by_daytype}) {
    if (text == to_string(p)) return p;
  }
  return std::nullopt;
}

CleanResult clean(const Dataset& dataset, CleaningPolicy policy, const Labeling* labels) {
  const auto split = split_valid(dataset);
  CleanResult result;
  result.report = split.report;

  if (policy == CleaningPolicy::omit) {
    for (const auto& day : split.errors) {
      result.events.push_back({day.property_id, day.date, CleanEventKind::dropped, "incomplete"});
    }
    result.dataset = Dataset(split.valid, dataset.environment());
    return result;
  }

  const bool by_daytype = policy == CleaningPolicy::impute_by_daytype;
  if (by_daytype && labels == nullptr) {
    throw Error(ErrorKind::invalid_argument, "impute_by_daytype requires day labels");
  }
  const auto table = build_average_table(dataset.days(), by_daytype ? labels : nullptr);

  std::vector<DayRecord> kept = split.valid;
  for (const auto& day : split.errors) {
    std::optional<DayTypeLabel> label;
    if (by_daytype) {
      const auto it = labels->find(DayKey{day.property_id, day.date});
      if (it == labels->end()) {
        throw Error(ErrorKind::unlabeled_day,
                    day.property_id + " " + format_date(day.date) + ": no day-type label");
      }
      label = it->second;
      if (table.find(day.property_id, label) == nullptr) {
        result.events.push_back({day.property_id, day.date,
                                 CleanEventKind::fallback_unconditioned,
                                 "no valid days for " + to_string(*label)});
        label.reset();
      }
    }
    try {
      auto outcome = impute_day(day, table, label);
      result.log.push_back({day.property_id, day.date, outcome.method, outcome.fraction,
                            outcome.filled_hours});
      kept.push_back(std::move(outcome.day));
    } catch (const Error& e) {
      result.events.push_back({day.property_id, day.date, CleanEventKind::dropped,
                               std::string(to_string(e.kind()))});
    }
  }
  result.dataset = Dataset(std::move(kept), dataset.environment());
  std::sort(result.log.begin(), result.log.end(), [](const auto& a, const auto& b) {
    return std::tie(a.property_id, a.date) < std::tie(b.property_id, b.date);
  });
  std::sort(result.events.begin(), result.events.end(), [](const auto& a, const auto& b) {
    return std::tie(a.property_id, a.date, a.kind) < std::tie(b.property_id, b.date, b.kind);
  });
  return result;
}

void write_imputation_log(std::ostream& out, std::span<const ImputationLogEntry> log) {
  out << "property_id,date,method,fraction,filled_hours\n";
  for (const auto& e : log) {
    out << e.property_id << ',' << format_date(e.date) << ',' << to_string(e.method) << ','
        << format_double(e.fraction) << ',';
    for (std::size_t i = 0; i < e.filled_hours.size(); ++i) {
      if (i > 0) out << ';';
      out << e.filled_hours[i];
    }
    out << '\n';
  }
}

void write_clean_events(std::ostream& out, std::span<const CleanEvent> events) {
  out << "property_id,date,event,detail\n";
  for (const auto& e : events) {
    out << e.property_id << ',' << format_date(e.date) << ','
        << (e.kind == CleanEventKind::dropped ? "dropped" : "fallback_unconditioned") << ','
        << e.detail << '\n';
  }
}

}  // namespace loadprof
