#include "loadprof/daytype.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace loadprof {

namespace fs = std::filesystem;

const char* to_string(DayClass c) {
  switch (c) {
    case DayClass::weekday: return "weekday";
    case DayClass::weekend: return "weekend";
    case DayClass::holiday: return "holiday";
  }
  return "?";
}

const char* to_string(Season s) {
  switch (s) {
    case Season::winter: return "winter";
    case Season::spring: return "spring";
    case Season::summer: return "summer";
    case Season::autumn: return "autumn";
  }
  return "?";
}

const char* to_string(Axis a) {
  switch (a) {
    case Axis::day_class: return "day_class";
    case Axis::season: return "season";
    case Axis::temperature: return "temperature";
    case Axis::wind: return "wind";
  }
  return "?";
}

std::optional<DayClass> parse_day_class(std::string_view text) {
  for (auto c : {DayClass::weekday, DayClass::weekend, DayClass::holiday}) {
    if (text == to_string(c)) return c;
  }
  return std::nullopt;
}

std::optional<Season> parse_season(std::string_view text) {
  for (auto s : {Season::winter, Season::spring, Season::summer, Season::autumn}) {
    if (text == to_string(s)) return s;
  }
  return std::nullopt;
}

std::optional<Axis> parse_axis(std::string_view text) {
  for (auto a : {Axis::day_class, Axis::season, Axis::temperature, Axis::wind}) {
    if (text == to_string(a)) return a;
  }
  return std::nullopt;
}

namespace {

void validate_bands(const std::vector<Band>& bands, const char* axis) {
  if (bands.empty()) {
    throw Error(ErrorKind::invalid_argument, std::string(axis) + " bands: empty list");
  }
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const bool last = i + 1 == bands.size();
    if (last != !bands[i].upper.has_value()) {
      throw Error(ErrorKind::invalid_argument,
                  std::string(axis) + " bands: only the last band may be unbounded");
    }
    if (i > 0 && !last && *bands[i].upper <= *bands[i - 1].upper) {
      throw Error(ErrorKind::invalid_argument,
                  std::string(axis) + " bands: bounds must strictly increase");
    }
  }
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& item : split_csv_line(text)) {
    const auto t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

}  // namespace

void DayTypeScheme::validate() const {
  if (enabled_axes.empty()) throw Error(ErrorKind::invalid_argument, "scheme enables no axes");
  validate_bands(temperature_bands, "temperature");
  validate_bands(wind_bands, "wind");
  for (auto d : weekend_days) {
    if (d < 1 || d > 7) throw Error(ErrorKind::invalid_argument, "weekend day outside 1..7");
  }
}

std::vector<Band> parse_bands(std::string_view text) {
  std::vector<Band> bands;
  for (const auto& item : split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      bands.push_back({item, std::nullopt});
      continue;
    }
    const auto bound_text = trim(std::string_view(item).substr(colon + 1));
    Band band{std::string(trim(std::string_view(item).substr(0, colon))), std::nullopt};
    if (bound_text != "inf") {
      band.upper = parse_double(bound_text);
      if (!band.upper) {
        throw Error(ErrorKind::malformed_input, "bad band bound in '" + item + "'");
      }
    }
    bands.push_back(std::move(band));
  }
  return bands;
}

std::set<Date> parse_holidays(std::string_view text) {
  std::set<Date> days;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto content = std::string_view(line);
    if (const auto hash = content.find('#'); hash != std::string_view::npos) {
      content = content.substr(0, hash);
    }
    content = trim(content);
    if (content.empty()) continue;
    const auto date = parse_date(content);
    if (!date) {
      throw Error(ErrorKind::malformed_input,
                  "holiday file line " + std::to_string(line_no) + ": bad date");
    }
    days.insert(*date);
  }
  return days;
}

std::set<Date> load_holidays(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::missing_file, path.string() + ": cannot open holiday file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_holidays(buffer.str());
}

DayTypeScheme DayTypeScheme::parse(std::string_view text, const fs::path& base_dir) {
  DayTypeScheme scheme;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto content = std::string_view(line);
    if (const auto hash = content.find('#'); hash != std::string_view::npos) {
      content = content.substr(0, hash);
    }
    content = trim(content);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::malformed_input,
                  "scheme line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(content.substr(0, eq));
    const auto value = trim(content.substr(eq + 1));

    if (key == "axes") {
      scheme.enabled_axes.clear();
      for (const auto& name : split_list(value)) {
        const auto axis = parse_axis(name);
        if (!axis) throw Error(ErrorKind::malformed_input, "unknown axis '" + name + "'");
        scheme.enabled_axes.insert(*axis);
      }
    } else if (key == "weekend_days") {
      scheme.weekend_days.clear();
      for (const auto& d : split_list(value)) {
        const auto n = parse_integer(d);
        if (!n) throw Error(ErrorKind::malformed_input, "bad weekday '" + d + "'");
        scheme.weekend_days.insert(static_cast<unsigned>(*n));
      }
    } else if (key == "seasons") {
      // month:season pairs; unspecified months keep their default.
      for (const auto& pair : split_list(value)) {
        const auto colon = pair.find(':');
        const auto month = parse_integer(std::string_view(pair).substr(0, colon));
        const auto season = colon == std::string::npos
                                ? std::nullopt
                                : parse_season(trim(std::string_view(pair).substr(colon + 1)));
        if (!month || *month < 1 || *month > 12 || !season) {
          throw Error(ErrorKind::malformed_input, "bad season entry '" + pair + "'");
        }
        scheme.season_of_month[static_cast<std::size_t>(*month - 1)] = *season;
      }
    } else if (key == "temperature_bands") {
      scheme.temperature_bands = parse_bands(value);
    } else if (key == "wind_bands") {
      scheme.wind_bands = parse_bands(value);
    } else if (key == "holidays_file") {
      fs::path p{std::string(value)};
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      scheme.holidays = load_holidays(p);
    } else {
      throw Error(ErrorKind::malformed_input, "unknown scheme key '" + std::string(key) + "'");
    }
  }
  scheme.validate();
  return scheme;
}

DayTypeScheme DayTypeScheme::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::missing_file, path.string() + ": cannot open scheme file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.parent_path());
}

std::string to_string(const DayTypeLabel& label) {
  std::string out;
  auto add = [&](std::string_view part) {
    if (!out.empty()) out += '/';
    out += part;
  };
  if (label.day_class) add(to_string(*label.day_class));
  if (label.season) add(to_string(*label.season));
  if (label.temperature_band) add(*label.temperature_band);
  if (label.wind_band) add(*label.wind_band);
  return out;
}

std::optional<double> daily_mean(const HourlySlots& series) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : series) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::string band_for(const std::vector<Band>& bands, double value) {
  for (const auto& band : bands) {
    if (!band.upper || value < *band.upper) return band.name;
  }
  return bands.back().name;
}

DayTypeLabel label_day(const Date& date, const EnvironmentRecord* environment,
                       const DayTypeScheme& scheme) {
  DayTypeLabel label;
  if (scheme.enabled(Axis::day_class)) {
    if (scheme.holidays.contains(date)) {
      label.day_class = DayClass::holiday;
    } else {
      const auto iso = std::chrono::weekday{std::chrono::sys_days{date}}.iso_encoding();
      label.day_class = scheme.weekend_days.contains(iso) ? DayClass::weekend : DayClass::weekday;
    }
  }
  if (scheme.enabled(Axis::season)) {
    label.season = scheme.season_of_month[static_cast<unsigned>(date.month()) - 1];
  }
  auto environment_band = [&](Axis axis, const HourlySlots EnvironmentRecord::*series,
                              const std::vector<Band>& bands) -> std::optional<std::string> {
    if (!scheme.enabled(axis)) return std::nullopt;
    const auto mean = environment ? daily_mean(environment->*series) : std::nullopt;
    if (!mean) {
      throw Error(ErrorKind::unlabeled_day, format_date(date) + ": no " + to_string(axis) +
                                                " data for an enabled axis");
    }
    return band_for(bands, *mean);
  };
  label.temperature_band =
      environment_band(Axis::temperature, &EnvironmentRecord::temperature, scheme.temperature_bands);
  label.wind_band = environment_band(Axis::wind, &EnvironmentRecord::wind, scheme.wind_bands);
  return label;
}

PartitionResult partition(const Dataset& dataset, const DayTypeScheme& scheme,
                          bool drop_unlabeled) {
  PartitionResult result;
  for (const auto& [key, label] : label_dataset(dataset, scheme, drop_unlabeled)) {
    result.cells[label].push_back(key);
  }
  if (drop_unlabeled) {
    std::map<Date, bool> labelable;
    for (const auto& day : dataset.days()) {
      auto [it, inserted] = labelable.try_emplace(day.date, true);
      if (inserted) {
        try {
          label_day(day.date, dataset.environment_for(day.date), scheme);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::unlabeled_day) throw;
          it->second = false;
        }
      }
      if (!it->second) result.dropped.push_back({day.property_id, day.date});
    }
  }
  return result;
}

Labeling label_dataset(const Dataset& dataset, const DayTypeScheme& scheme, bool drop_unlabeled) {
  Labeling labels;
  std::map<Date, std::optional<DayTypeLabel>> by_date;
  for (const auto& day : dataset.days()) {
    auto [it, inserted] = by_date.try_emplace(day.date);
    if (inserted) {
      try {
        it->second = label_day(day.date, dataset.environment_for(day.date), scheme);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::unlabeled_day || !drop_unlabeled) throw;
      }
    }
    if (it->second) labels.emplace(DayKey{day.property_id, day.date}, *it->second);
  }
  return labels;
}

void write_labels_csv(std::ostream& out, const Labeling& labels) {
  out << "property_id,date,day_class,season,temperature_band,wind_band\n";
  for (const auto& [key, label] : labels) {
    out << key.property_id << ',' << format_date(key.date) << ','
        << (label.day_class ? to_string(*label.day_class) : "") << ','
        << (label.season ? to_string(*label.season) : "") << ','
        << label.temperature_band.value_or("") << ',' << label.wind_band.value_or("") << '\n';
  }
}

Labeling read_labels_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line) ||
      trim(line) != "property_id,date,day_class,season,temperature_band,wind_band") {
    throw Error(ErrorKind::malformed_header, source_name + ":1: bad label header");
  }
  Labeling labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    auto fail = [&] {
      return Error(ErrorKind::malformed_input, source_name + ":" + std::to_string(line_no) +
                                                   ": bad label row");
    };
    if (cells.size() != 6) throw fail();
    const auto date = parse_date(cells[1]);
    if (!date) throw fail();
    DayTypeLabel label;
    if (!cells[2].empty() && !(label.day_class = parse_day_class(cells[2]))) throw fail();
    if (!cells[3].empty() && !(label.season = parse_season(cells[3]))) throw fail();
    if (!cells[4].empty()) label.temperature_band = cells[4];
    if (!cells[5].empty()) label.wind_band = cells[5];
    labels.emplace(DayKey{cells[0], *date}, std::move(label));
  }
  return labels;
}

}  // namespace loadprof
