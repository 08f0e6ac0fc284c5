#include "loadprof/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

namespace loadprof {

namespace fs = std::filesystem;

namespace {

enum Column { kDate, kHour, kKwh, kTemperature, kWind, kRainfall, kColumnCount };

std::string location(const std::string& file, std::size_t line) {
  return file + ":" + std::to_string(line);
}

bool is_sentinel(std::string_view cell) { return cell == "NA"; }

// Resolved positions of the canonical columns; weather columns may be absent.
using ColumnPositions = std::array<std::optional<std::size_t>, kColumnCount>;

ColumnPositions resolve_header(const std::vector<std::string>& header, const SchemaMap* schema,
                               const std::string& source_name) {
  ColumnPositions positions{};
  if (schema == nullptr) {
    bool matches = header.size() == kCanonicalColumns.size();
    for (std::size_t i = 0; matches && i < header.size(); ++i) {
      matches = trim(header[i]) == kCanonicalColumns[i];
    }
    if (!matches) {
      throw Error(ErrorKind::malformed_header,
                  location(source_name, 1) + ": expected header "
                      "'date,hour,kwh,temperature,wind_speed,rainfall'");
    }
    for (std::size_t i = 0; i < kColumnCount; ++i) positions[i] = i;
    return positions;
  }

  auto find_name = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    const std::string canonical(kCanonicalColumns[c]);
    const auto it = schema->entries().find(canonical);
    if (it == schema->entries().end()) {
      positions[c] = find_name(canonical);
    } else if (const auto* pos = std::get_if<std::size_t>(&it->second)) {
      if (*pos < header.size()) positions[c] = *pos;
    } else {
      positions[c] = find_name(std::get<std::string>(it->second));
    }
    if (c <= kKwh && !positions[c]) {
      throw Error(ErrorKind::malformed_header,
                  location(source_name, 1) + ": no column for '" + canonical + "'");
    }
  }
  return positions;
}

}  // namespace

SchemaMap SchemaMap::parse(std::string_view text) {
  SchemaMap map;
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
                  "schema map line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key(trim(content.substr(0, eq)));
    const std::string value(trim(content.substr(eq + 1)));
    if (std::find(kCanonicalColumns.begin(), kCanonicalColumns.end(), key) ==
        kCanonicalColumns.end()) {
      throw Error(ErrorKind::malformed_input, "schema map: unknown column '" + key + "'");
    }
    if (const auto pos = parse_integer(value); pos && *pos >= 0) {
      map.set(key, static_cast<std::size_t>(*pos));
    } else {
      map.set(key, value);
    }
  }
  return map;
}

SchemaMap SchemaMap::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::missing_file, "cannot open schema map " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void SchemaMap::set(const std::string& canonical, Source source) {
  entries_[canonical] = std::move(source);
}

ParsedFile parse_dwelling_stream(std::istream& in, const std::string& source_name,
                                 const std::string& property_id, const SchemaMap* schema) {
  ParsedFile parsed;
  parsed.report.file = source_name;

  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::malformed_header, location(source_name, 1) + ": empty file");
  }
  const auto positions = resolve_header(split_csv_line(line), schema, source_name);

  std::map<std::pair<Date, int>, std::size_t> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    auto cell = [&](Column c) -> std::string_view {
      const auto pos = positions[c];
      if (!pos || *pos >= cells.size()) return {};
      return trim(cells[*pos]);
    };
    auto note = [&](Column c) {
      parsed.report.issues.push_back(
          {line_no, std::string(kCanonicalColumns[c]), std::string(cell(c))});
    };

    const auto date = parse_date(cell(kDate));
    const auto hour = parse_integer(cell(kHour));
    if (!date || !hour || *hour < 0 || *hour >= static_cast<long long>(kHoursPerDay)) {
      // Without a timestamp the row has nowhere to go.
      note(!date ? kDate : kHour);
      continue;
    }

    const auto key = std::make_pair(*date, static_cast<int>(*hour));
    if (const auto [it, inserted] = seen.emplace(key, line_no); !inserted) {
      throw Error(ErrorKind::duplicate_timestamp,
                  location(source_name, line_no) + ": duplicate timestamp " +
                      format_date(*date) + " hour " + std::to_string(*hour) +
                      " (first at line " + std::to_string(it->second) + ")");
    }

    auto value = [&](Column c, bool non_negative) -> std::optional<double> {
      const auto text = cell(c);
      if (text.empty()) return std::nullopt;
      if (is_sentinel(text)) {
        note(c);
        return std::nullopt;
      }
      const auto v = parse_double(text);
      if (!v || (non_negative && *v < 0.0)) {
        note(c);
        return std::nullopt;
      }
      return v;
    };

    RawHourRow row;
    row.property_id = property_id;
    row.date = *date;
    row.hour = static_cast<int>(*hour);
    row.kwh = value(kKwh, true);
    row.temperature = value(kTemperature, false);
    row.wind_speed = value(kWind, true);
    row.rainfall = value(kRainfall, true);
    parsed.rows.push_back(std::move(row));
  }
  return parsed;
}

ParsedFile parse_dwelling_file(const fs::path& path, const std::string& property_id,
                               const SchemaMap* schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::missing_file, path.string() + ": cannot open file");
  return parse_dwelling_stream(in, path.string(), property_id, schema);
}

std::size_t DayRecord::present_count() const {
  return static_cast<std::size_t>(
      std::count_if(readings.begin(), readings.end(), [](const auto& r) { return r.has_value(); }));
}

HourlyValues DayRecord::values() const {
  HourlyValues out{};
  for (std::size_t h = 0; h < kHoursPerDay; ++h) {
    if (!readings[h]) {
      throw Error(ErrorKind::invalid_argument,
                  "day " + property_id + " " + format_date(date) + " is incomplete");
    }
    out[h] = *readings[h];
  }
  return out;
}

ReshapeResult reshape(std::span<const RawHourRow> rows, const std::string& property_id) {
  std::map<Date, DayRecord> by_date;
  ReshapeResult result;
  for (const auto& row : rows) {
    if (row.property_id != property_id) {
      throw Error(ErrorKind::invalid_argument,
                  "reshape: row for '" + row.property_id + "' passed as '" + property_id + "'");
    }
    auto [it, inserted] = by_date.try_emplace(row.date);
    if (inserted) {
      it->second.property_id = property_id;
      it->second.date = row.date;
    }
    it->second.readings[static_cast<std::size_t>(row.hour)] = row.kwh;
    if (row.temperature || row.wind_speed || row.rainfall) {
      result.environment.push_back(
          {property_id, row.date, row.hour, row.temperature, row.wind_speed, row.rainfall});
    }
  }
  result.days.reserve(by_date.size());
  for (auto& [date, day] : by_date) result.days.push_back(std::move(day));
  return result;
}

MergeResult merge_environment(std::span<const EnvironmentReading> fragments) {
  struct Reports {
    std::vector<std::pair<std::string, double>> temperature, wind, rainfall;
  };
  std::map<std::pair<Date, int>, Reports> grouped;
  for (const auto& r : fragments) {
    auto& slot = grouped[{r.date, r.hour}];
    if (r.temperature) slot.temperature.emplace_back(r.property_id, *r.temperature);
    if (r.wind_speed) slot.wind.emplace_back(r.property_id, *r.wind_speed);
    if (r.rainfall) slot.rainfall.emplace_back(r.property_id, *r.rainfall);
  }

  MergeResult result;
  auto merge = [&](const Date& date, int hour, const char* series,
                   std::vector<std::pair<std::string, double>>& reports) -> std::optional<double> {
    if (reports.empty()) return std::nullopt;
    std::sort(reports.begin(), reports.end());
    const auto [lo, hi] = std::minmax_element(
        reports.begin(), reports.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    if (hi->second - lo->second <= kEnvironmentAgreementTolerance) {
      return reports.front().second;
    }
    double sum = 0.0;
    MergeFlag flag{date, hour, series, {}, {}, 0.0};
    for (const auto& [id, v] : reports) {
      sum += v;
      flag.property_ids.push_back(id);
      flag.values.push_back(v);
    }
    flag.merged = sum / static_cast<double>(reports.size());
    result.flags.push_back(flag);
    return flag.merged;
  };

  for (auto& [key, reports] : grouped) {
    const auto& [date, hour] = key;
    auto [it, inserted] = result.records.try_emplace(date);
    it->second.date = date;
    const auto h = static_cast<std::size_t>(hour);
    it->second.temperature[h] = merge(date, hour, "temperature", reports.temperature);
    it->second.wind[h] = merge(date, hour, "wind_speed", reports.wind);
    it->second.rainfall[h] = merge(date, hour, "rainfall", reports.rainfall);
  }
  return result;
}

Dataset::Dataset(std::vector<DayRecord> days, std::map<Date, EnvironmentRecord> environment)
    : days_(std::move(days)), environment_(std::move(environment)) {
  std::sort(days_.begin(), days_.end(), [](const DayRecord& a, const DayRecord& b) {
    return std::tie(a.property_id, a.date) < std::tie(b.property_id, b.date);
  });
  for (std::size_t i = 0; i < days_.size(); ++i) {
    if (i > 0 && days_[i].property_id == days_[i - 1].property_id &&
        days_[i].date == days_[i - 1].date) {
      throw Error(ErrorKind::duplicate_timestamp, "duplicate day " + days_[i].property_id + " " +
                                                      format_date(days_[i].date));
    }
    property_ids_.insert(days_[i].property_id);
  }
}

const EnvironmentRecord* Dataset::environment_for(const Date& date) const {
  const auto it = environment_.find(date);
  return it == environment_.end() ? nullptr : &it->second;
}

namespace {

struct FileOutcome {
  std::optional<ParsedFile> parsed;
  std::optional<ReshapeResult> reshaped;
  std::string error;
};

LoadResult assemble(std::vector<FileOutcome> outcomes, const std::vector<std::string>& names,
                    const std::string& origin) {
  std::string errors;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].error.empty()) errors += "\n  " + names[i] + ": " + outcomes[i].error;
  }
  if (!errors.empty()) {
    throw Error(ErrorKind::aggregated, "failed to load " + origin + ":" + errors);
  }

  LoadResult result;
  std::vector<DayRecord> days;
  std::vector<EnvironmentReading> environment;
  for (auto& outcome : outcomes) {
    result.summary.rows += outcome.parsed->rows.size();
    result.parse_reports.push_back(std::move(outcome.parsed->report));
    for (auto& d : outcome.reshaped->days) days.push_back(std::move(d));
    for (auto& e : outcome.reshaped->environment) environment.push_back(std::move(e));
  }
  auto merged = merge_environment(environment);
  result.summary.files = outcomes.size();
  result.summary.day_records = days.size();
  result.dataset = Dataset(std::move(days), std::move(merged.records));
  result.merge_flags = std::move(merged.flags);
  return result;
}

template <typename Parse>
void parse_one(FileOutcome& outcome, const std::string& id, Parse&& parse) {
  try {
    auto parsed = parse();
    outcome.reshaped = reshape(parsed.rows, id);
    outcome.parsed = std::move(parsed);
  } catch (const std::exception& e) {
    outcome.error = e.what();
  }
}

}  // namespace

LoadResult load_dataset(const fs::path& directory, const LoadOptions& options) {
  if (!fs::is_directory(directory)) {
    throw Error(ErrorKind::missing_file, directory.string() + ": not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw Error(ErrorKind::empty_directory,
                directory.string() + ": no dwelling files (<property_id>.csv)");
  }

  std::vector<FileOutcome> outcomes(files.size());
  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(f.filename().string());
  parallel_for(files.size(), options.threads, [&](std::size_t i) {
    const auto id = files[i].stem().string();
    parse_one(outcomes[i], id, [&] { return parse_dwelling_file(files[i], id, options.schema); });
  });
  return assemble(std::move(outcomes), names, directory.string());
}

LoadResult load_dataset_from_memory(const std::map<std::string, std::string>& files,
                                    const LoadOptions& options) {
  if (files.empty()) throw Error(ErrorKind::empty_directory, "no dwelling files supplied");
  std::vector<std::pair<std::string, const std::string*>> items;
  for (const auto& [id, text] : files) items.emplace_back(id, &text);
  std::vector<FileOutcome> outcomes(items.size());
  std::vector<std::string> names;
  for (const auto& [id, text] : items) names.push_back(id + ".csv");
  parallel_for(items.size(), options.threads, [&](std::size_t i) {
    parse_one(outcomes[i], items[i].first, [&] {
      std::istringstream in(*items[i].second);
      return parse_dwelling_stream(in, names[i], items[i].first, options.schema);
    });
  });
  return assemble(std::move(outcomes), names, "in-memory files");
}

namespace {

void write_slot(std::ostream& out, const std::optional<double>& v) {
  out << ',';
  if (v) out << format_double(*v);
}

std::optional<double> read_slot(std::string_view cell, const std::string& source,
                                std::size_t line) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  const auto v = parse_double(cell);
  if (!v) {
    throw Error(ErrorKind::malformed_input,
                location(source, line) + ": bad number '" + std::string(cell) + "'");
  }
  return v;
}

std::string days_header() {
  std::string header = "property_id,date";
  for (std::size_t h = 0; h < kHoursPerDay; ++h) header += "," + hour_column("h", h);
  return header;
}

}  // namespace

void write_days_csv(std::ostream& out, std::span<const DayRecord> days) {
  out << days_header() << '\n';
  for (const auto& day : days) {
    out << day.property_id << ',' << format_date(day.date);
    for (const auto& r : day.readings) write_slot(out, r);
    out << '\n';
  }
}

std::vector<DayRecord> read_days_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != days_header()) {
    throw Error(ErrorKind::malformed_header, location(source_name, 1) + ": bad day-record header");
  }
  std::vector<DayRecord> days;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2 + kHoursPerDay) {
      throw Error(ErrorKind::malformed_input, location(source_name, line_no) + ": expected " +
                                                  std::to_string(2 + kHoursPerDay) + " fields");
    }
    const auto date = parse_date(cells[1]);
    if (!date) throw Error(ErrorKind::malformed_input, location(source_name, line_no) + ": bad date");
    DayRecord day{cells[0], *date, {}};
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      day.readings[h] = read_slot(cells[2 + h], source_name, line_no);
    }
    days.push_back(std::move(day));
  }
  return days;
}

void write_environment_csv(std::ostream& out, const std::map<Date, EnvironmentRecord>& env) {
  out << "date,hour,temperature,wind_speed,rainfall\n";
  for (const auto& [date, rec] : env) {
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      if (!rec.temperature[h] && !rec.wind[h] && !rec.rainfall[h]) continue;
      out << format_date(date) << ',' << h;
      write_slot(out, rec.temperature[h]);
      write_slot(out, rec.wind[h]);
      write_slot(out, rec.rainfall[h]);
      out << '\n';
    }
  }
}

std::map<Date, EnvironmentRecord> read_environment_csv(std::istream& in,
                                                       const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "date,hour,temperature,wind_speed,rainfall") {
    throw Error(ErrorKind::malformed_header, location(source_name, 1) + ": bad environment header");
  }
  std::map<Date, EnvironmentRecord> env;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    const auto date = cells.size() == 5 ? parse_date(cells[0]) : std::nullopt;
    const auto hour = cells.size() == 5 ? parse_integer(cells[1]) : std::nullopt;
    if (!date || !hour || *hour < 0 || *hour >= static_cast<long long>(kHoursPerDay)) {
      throw Error(ErrorKind::malformed_input, location(source_name, line_no) + ": bad row");
    }
    auto& rec = env[*date];
    rec.date = *date;
    const auto h = static_cast<std::size_t>(*hour);
    rec.temperature[h] = read_slot(cells[2], source_name, line_no);
    rec.wind[h] = read_slot(cells[3], source_name, line_no);
    rec.rainfall[h] = read_slot(cells[4], source_name, line_no);
  }
  return env;
}

void save_dataset(const Dataset& dataset, const fs::path& directory) {
  fs::create_directories(directory);
  std::ofstream days(directory / "days.csv");
  write_days_csv(days, dataset.days());
  std::ofstream env(directory / "environment.csv");
  write_environment_csv(env, dataset.environment());
}

Dataset read_dataset(const fs::path& directory) {
  const auto days_path = directory / "days.csv";
  const auto env_path = directory / "environment.csv";
  std::ifstream days(days_path);
  if (!days) throw Error(ErrorKind::missing_file, days_path.string() + ": cannot open file");
  std::ifstream env(env_path);
  if (!env) throw Error(ErrorKind::missing_file, env_path.string() + ": cannot open file");
  return Dataset(read_days_csv(days, days_path.string()),
                 read_environment_csv(env, env_path.string()));
}

}  // namespace loadprof
