#include "loadprof/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace loadprof {

namespace fs = std::filesystem;

namespace {

// Portable draws: mt19937_64 output is fully specified, the standard
// distributions are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::size_t below(std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
      const auto r = engine_();
      if (r >= threshold) return static_cast<std::size_t>(r % bound);
    }
  }

  double normal() {
    // Box-Muller; u1 in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

HourlyValues mean_one(HourlyValues shape) {
  double sum = 0.0;
  for (double v : shape) sum += v;
  for (auto& v : shape) v *= static_cast<double>(kHoursPerDay) / sum;
  return shape;
}

HourlyValues fill(std::initializer_list<std::pair<std::pair<int, int>, double>> spans) {
  HourlyValues out{};
  for (const auto& [range, level] : spans) {
    for (int h = range.first; h <= range.second; ++h) out[static_cast<std::size_t>(h)] = level;
  }
  return out;
}

std::string property_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "p%03zu", index + 1);
  return buf;
}

std::size_t masked_hours_per_day(const MaskingSpec& m) {
  const auto n = static_cast<std::size_t>(std::lround(m.hour_fraction * kHoursPerDay));
  return std::clamp<std::size_t>(n, 1, kHoursPerDay - 1);
}

}  // namespace

void SynthSpec::validate() const {
  auto fail = [](const std::string& what) { return Error(ErrorKind::invalid_argument, what); };
  if (archetypes.empty()) throw fail("synth: no archetypes");
  for (const auto& a : archetypes) {
    if (a.members < 1) throw fail("synth: archetype " + a.name + " has no members");
    if (!(a.amplitude_min > 0.0) || a.amplitude_max < a.amplitude_min) {
      throw fail("synth: archetype " + a.name + " has a bad amplitude range");
    }
    for (double v : a.shape) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw fail("synth: negative shape in " + a.name);
    }
  }
  if (!(noise_sigma >= 0.0)) throw fail("synth: noise_sigma must be non-negative");
  for (double f : {masking.corrupted_day_fraction, masking.hour_fraction}) {
    if (!(f >= 0.0 && f < 1.0)) throw fail("synth: masking fractions must lie in [0, 1)");
  }
  if (days < 1) throw fail("synth: need at least one day");
  if (!start.ok()) throw fail("synth: bad start date");
}

std::size_t SynthSpec::property_count() const {
  std::size_t n = 0;
  for (const auto& a : archetypes) n += a.members;
  return n;
}

double SynthSpec::mean_amplitude() const {
  double weighted = 0.0;
  for (const auto& a : archetypes) {
    weighted += 0.5 * (a.amplitude_min + a.amplitude_max) * static_cast<double>(a.members);
  }
  return weighted / static_cast<double>(property_count());
}

SynthSpec SynthSpec::defaults(std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;

  const auto unrestricted = mean_one(fill({{{0, 5}, 0.35},
                                           {{6, 6}, 0.6},
                                           {{7, 8}, 1.3},
                                           {{9, 15}, 0.8},
                                           {{16, 16}, 1.1},
                                           {{17, 20}, 1.9},
                                           {{21, 22}, 1.4},
                                           {{23, 23}, 0.7}}));
  // Night-rate base shared by the three variants; each adds an equal
  // four-hour load at a different time of day.
  const auto night_base = fill({{{0, 6}, 2.2}, {{7, 8}, 0.9}, {{9, 15}, 0.45},
                                {{16, 21}, 0.9}, {{22, 23}, 0.6}});
  auto variant = [&](int from) {
    auto shape = night_base;
    for (int h = from; h < from + 4; ++h) shape[static_cast<std::size_t>(h)] += 1.2;
    return mean_one(shape);
  };

  spec.archetypes = {
      {"unrestricted_evening", unrestricted, 0.6, 0.9, 48},
      {"night_storage", variant(0), 0.9, 1.2, 15},
      {"night_morning_water", variant(7), 0.9, 1.2, 15},
      {"night_evening", variant(17), 0.9, 1.2, 15},
  };
  spec.noise_sigma = 0.05 * spec.mean_amplitude();
  spec.masking = {0.1, 0.25};
  return spec;
}

SynthSpec SynthSpec::parse(std::string_view text) {
  auto spec = defaults();
  std::optional<double> noise_fraction;
  std::optional<double> noise_sigma;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto content = std::string_view(line);
    if (const auto hash = content.find('#'); hash != std::string_view::npos) {
      content = content.substr(0, hash);
    }
    content = trim(content);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::malformed_input, "synth config: expected key=value");
    }
    const auto key = trim(content.substr(0, eq));
    const auto value = trim(content.substr(eq + 1));
    auto number = [&] {
      const auto v = parse_double(value);
      if (!v) throw Error(ErrorKind::malformed_input, "synth config: bad value for " +
                                                          std::string(key));
      return *v;
    };
    if (key == "seed") {
      const auto v = parse_integer(value);
      if (!v || *v < 0) throw Error(ErrorKind::malformed_input, "synth config: bad seed");
      spec.seed = static_cast<std::uint64_t>(*v);
    } else if (key == "start") {
      const auto d = parse_date(value);
      if (!d) throw Error(ErrorKind::malformed_input, "synth config: bad start date");
      spec.start = *d;
    } else if (key == "days") {
      spec.days = static_cast<std::size_t>(number());
    } else if (key == "noise_sigma") {
      noise_sigma = number();
    } else if (key == "noise_fraction") {
      noise_fraction = number();
    } else if (key == "corrupted_day_fraction") {
      spec.masking.corrupted_day_fraction = number();
    } else if (key == "masked_hour_fraction") {
      spec.masking.hour_fraction = number();
    } else if (key == "memberships") {
      const auto parts = split_csv_line(value);
      if (parts.size() != spec.archetypes.size()) {
        throw Error(ErrorKind::malformed_input, "synth config: need one membership per archetype");
      }
      for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto m = parse_integer(parts[i]);
        if (!m || *m < 1) throw Error(ErrorKind::malformed_input, "synth config: bad membership");
        spec.archetypes[i].members = static_cast<std::size_t>(*m);
      }
    } else {
      throw Error(ErrorKind::malformed_input, "synth config: unknown key '" + std::string(key) + "'");
    }
  }
  if (noise_sigma) {
    spec.noise_sigma = *noise_sigma;
  } else {
    spec.noise_sigma = noise_fraction.value_or(0.05) * spec.mean_amplitude();
  }
  spec.validate();
  return spec;
}

const PropertyTruth* GroundTruthLedger::find(const std::string& property_id) const {
  const auto it = std::lower_bound(
      properties.begin(), properties.end(), property_id,
      [](const PropertyTruth& p, const std::string& id) { return p.property_id < id; });
  return it != properties.end() && it->property_id == property_id ? &*it : nullptr;
}

SynthOutput generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto n = spec.property_count();
  const auto start = std::chrono::sys_days{spec.start};

  SynthOutput out;
  auto& ledger = out.ledger;
  ledger.seed = spec.seed;
  ledger.start = spec.start;
  ledger.days = spec.days;
  for (const auto& a : spec.archetypes) ledger.archetype_names.push_back(a.name);

  // Archetype membership is shuffled across property ids.
  std::vector<std::size_t> archetype_of;
  for (std::size_t a = 0; a < spec.archetypes.size(); ++a) {
    archetype_of.insert(archetype_of.end(), spec.archetypes[a].members, a);
  }
  for (std::size_t i = n; i > 1; --i) std::swap(archetype_of[i - 1], archetype_of[rng.below(i)]);

  // Site weather, one series per date.
  std::vector<std::array<double, kHoursPerDay>> temperature(spec.days);
  std::vector<std::array<double, kHoursPerDay>> wind(spec.days);
  std::vector<std::array<double, kHoursPerDay>> rain(spec.days);
  const auto& w = spec.weather;
  for (std::size_t d = 0; d < spec.days; ++d) {
    const Date date{start + std::chrono::days{d}};
    const auto jan1 = std::chrono::sys_days{date.year() / std::chrono::January / 1};
    const auto doy = (start + std::chrono::days{d} - jan1).count();
    const double seasonal =
        w.temperature_mean - w.temperature_annual_swing *
                                 std::cos(2.0 * std::numbers::pi *
                                          static_cast<double>(doy - w.coldest_day_of_year) / 365.25);
    const double departure = w.temperature_day_sigma * rng.normal();
    const double wind_level = rng.uniform(w.wind_min, w.wind_max);
    double t_sum = 0.0;
    double w_sum = 0.0;
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      temperature[d][h] = seasonal + departure +
                          w.temperature_daily_swing *
                              std::sin(2.0 * std::numbers::pi * (static_cast<double>(h) - 9.0) / 24.0);
      wind[d][h] = std::max(0.0, wind_level + rng.uniform(-1.0, 1.0));
      rain[d][h] = rng.uniform() < w.rain_probability ? rng.uniform(0.0, w.rain_max) : 0.0;
      t_sum += temperature[d][h];
      w_sum += wind[d][h];
    }
    ledger.daily_mean_temperature.push_back(t_sum / static_cast<double>(kHoursPerDay));
    ledger.daily_mean_wind.push_back(w_sum / static_cast<double>(kHoursPerDay));
  }

  const auto masked_per_day = masked_hours_per_day(spec.masking);
  for (std::size_t p = 0; p < n; ++p) {
    const auto& archetype = spec.archetypes[archetype_of[p]];
    PropertyTruth truth;
    truth.property_id = property_name(p);
    truth.archetype = archetype_of[p];
    truth.amplitude = rng.uniform(archetype.amplitude_min, archetype.amplitude_max);
    truth.corrupted.assign(spec.days, false);

    HourlyValues all_sum{};
    HourlyValues valid_sum{};
    std::size_t valid_days = 0;
    std::ostringstream csv;
    csv << "date,hour,kwh,temperature,wind_speed,rainfall\n";
    for (std::size_t d = 0; d < spec.days; ++d) {
      HourlyValues day{};
      for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        double v = truth.amplitude * archetype.shape[h];
        if (spec.noise_sigma > 0.0) v = std::max(0.0, v + spec.noise_sigma * rng.normal());
        day[h] = v;
        all_sum[h] += v;
      }
      std::array<bool, kHoursPerDay> masked{};
      if (spec.masking.corrupted_day_fraction > 0.0 &&
          rng.uniform() < spec.masking.corrupted_day_fraction) {
        truth.corrupted[d] = true;
        std::array<std::size_t, kHoursPerDay> hours{};
        for (std::size_t h = 0; h < kHoursPerDay; ++h) hours[h] = h;
        for (std::size_t i = 0; i < masked_per_day; ++i) {
          std::swap(hours[i], hours[i + rng.below(kHoursPerDay - i)]);
          masked[hours[i]] = true;
        }
        for (std::size_t h = 0; h < kHoursPerDay; ++h) {
          if (masked[h]) truth.masked.push_back({d, h});
        }
      } else {
        for (std::size_t h = 0; h < kHoursPerDay; ++h) valid_sum[h] += day[h];
        ++valid_days;
      }
      const auto date = format_date(Date{start + std::chrono::days{d}});
      for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        csv << date << ',' << h << ',';
        if (!masked[h]) csv << format_double(day[h]);
        csv << ',' << format_double(temperature[d][h]) << ',' << format_double(wind[d][h]) << ','
            << format_double(rain[d][h]) << '\n';
      }
      truth.true_days.push_back(day);
    }
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      truth.true_mean[h] = all_sum[h] / static_cast<double>(spec.days);
      truth.valid_mean[h] = valid_days > 0 ? valid_sum[h] / static_cast<double>(valid_days) : 0.0;
    }
    out.files.emplace(truth.property_id, csv.str());
    ledger.properties.push_back(std::move(truth));
  }
  return out;
}

std::string ledger_to_json(const GroundTruthLedger& ledger) {
  nlohmann::ordered_json doc;
  doc["seed"] = ledger.seed;
  doc["start"] = format_date(ledger.start);
  doc["days"] = ledger.days;
  doc["archetypes"] = ledger.archetype_names;
  doc["daily_mean_temperature"] = ledger.daily_mean_temperature;
  doc["daily_mean_wind"] = ledger.daily_mean_wind;
  auto props = nlohmann::ordered_json::array();
  for (const auto& p : ledger.properties) {
    nlohmann::ordered_json entry;
    entry["property_id"] = p.property_id;
    entry["archetype"] = ledger.archetype_names[p.archetype];
    entry["amplitude"] = p.amplitude;
    entry["true_mean"] = std::vector<double>(p.true_mean.begin(), p.true_mean.end());
    entry["valid_mean"] = std::vector<double>(p.valid_mean.begin(), p.valid_mean.end());
    auto masked = nlohmann::ordered_json::array();
    for (const auto& m : p.masked) masked.push_back({m.day, m.hour});
    entry["masked"] = masked;
    auto days = nlohmann::ordered_json::array();
    for (const auto& d : p.true_days) days.push_back(std::vector<double>(d.begin(), d.end()));
    entry["true_days"] = days;
    props.push_back(entry);
  }
  doc["properties"] = props;
  return doc.dump() + "\n";
}

void write_synth_output(const SynthOutput& output, const fs::path& directory) {
  fs::create_directories(directory);
  for (const auto& [id, text] : output.files) {
    std::ofstream(directory / (id + ".csv"), std::ios::binary) << text;
  }
  std::ofstream(directory / "ledger.json", std::ios::binary) << ledger_to_json(output.ledger);
}

RecoveryScore score_recovery(std::span<const std::size_t> assignments,
                             std::span<const std::string> profile_ids,
                             const GroundTruthLedger& ledger) {
  if (assignments.size() != profile_ids.size()) {
    throw Error(ErrorKind::invalid_argument, "score_recovery: one id per assignment required");
  }
  std::set<std::string> covered(profile_ids.begin(), profile_ids.end());
  for (const auto& p : ledger.properties) {
    if (!covered.contains(p.property_id)) {
      throw Error(ErrorKind::invalid_argument,
                  "score_recovery: property " + p.property_id + " has no assignment");
    }
  }
  // contingency[cluster][archetype]
  std::map<std::size_t, std::map<std::size_t, std::size_t>> contingency;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const auto* truth = ledger.find(profile_ids[i]);
    if (truth == nullptr) {
      throw Error(ErrorKind::invalid_argument,
                  "score_recovery: " + profile_ids[i] + " is not in the ledger");
    }
    ++contingency[assignments[i]][truth->archetype];
  }

  const auto n = static_cast<double>(assignments.size());
  auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
  double majority = 0.0;
  double same_both = 0.0;
  double same_cluster = 0.0;
  std::map<std::size_t, double> archetype_sizes;
  for (const auto& [cluster, row] : contingency) {
    std::size_t best = 0;
    std::size_t size = 0;
    for (const auto& [archetype, count] : row) {
      best = std::max(best, count);
      size += count;
      same_both += pairs(static_cast<double>(count));
      archetype_sizes[archetype] += static_cast<double>(count);
    }
    majority += static_cast<double>(best);
    same_cluster += pairs(static_cast<double>(size));
  }
  double same_archetype = 0.0;
  for (const auto& [a, size] : archetype_sizes) same_archetype += pairs(size);

  RecoveryScore score;
  score.purity = n > 0 ? majority / n : 0.0;
  const double total = pairs(n);
  // Agreeing pairs: together in both, plus apart in both.
  score.rand_index =
      total > 0 ? (total - same_cluster - same_archetype + 2.0 * same_both) / total : 1.0;
  return score;
}

}  // namespace loadprof
