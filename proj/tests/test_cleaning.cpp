#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <random>
#include <sstream>

#include "loadprof/cleaning.hpp"
#include "support.hpp"

using namespace loadprof;
using testing::ymd;

namespace {

DayRecord masked(DayRecord day, std::initializer_list<std::size_t> hours) {
  for (auto h : hours) day.readings[h].reset();
  return day;
}

HourlyValues random_values(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 3.0);
  HourlyValues v;
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_SUITE("cleaning") {
  TEST_CASE("validity counts") {
    std::vector<DayRecord> days;
    for (unsigned d = 1; d <= 5; ++d) days.push_back(testing::full_day("a", ymd(1990, 1, d), 1));
    days.push_back(masked(testing::full_day("a", ymd(1990, 1, 6), 1), {3}));
    for (unsigned d = 1; d <= 2; ++d) days.push_back(testing::full_day("b", ymd(1990, 1, d), 1));
    days.push_back(masked(testing::full_day("b", ymd(1990, 1, 3), 1), {0, 1}));
    days.push_back(masked(testing::full_day("b", ymd(1990, 1, 4), 1), {5}));
    const auto split = split_valid(Dataset(days, {}));
    CHECK(split.valid.size() == 7);
    CHECK(split.errors.size() == 3);
    const auto& r = split.report;
    CHECK(r.valid.min == 2);
    CHECK(r.valid.max == 5);
    CHECK(r.valid.mean == 3.5);
    CHECK(r.all.min == 4);
    CHECK(r.all.max == 6);
    CHECK(r.total_valid_rows == 7);
    CHECK(r.total_error_rows == 3);
    for (const auto& p : r.properties) CHECK(p.total_days() == p.valid_days + p.error_days);
    const auto table = format_validity_table(r);
    CHECK(table.find("Valid readings") != std::string::npos);
    CHECK(table.find("3.5") != std::string::npos);
  }

  TEST_CASE("fully valid dataset has no errors") {
    std::vector<DayRecord> days{testing::full_day("a", ymd(1990, 1, 1), 1)};
    CHECK(split_valid(Dataset(days, {})).errors.empty());
    CHECK_THROWS_AS(split_valid(Dataset{}), Error);
  }

  TEST_CASE("validity statistics ignore input order") {
    std::mt19937_64 rng(5);
    std::vector<DayRecord> days;
    for (int p = 0; p < 6; ++p) {
      for (unsigned d = 1; d <= 28; ++d) {
        auto day = testing::full_day("p" + std::to_string(p), ymd(1990, 2, d), 1);
        if (rng() % 3 == 0) day.readings[rng() % 24].reset();
        days.push_back(day);
      }
    }
    const auto reference = split_valid(Dataset(days, {})).report;
    for (int trial = 0; trial < 5; ++trial) {
      std::shuffle(days.begin(), days.end(), rng);
      const auto r = validity_report(days);
      CHECK(r.valid.mean == reference.valid.mean);
      CHECK(r.all.mean == reference.all.mean);
      CHECK(r.total_error_rows == reference.total_error_rows);
      CHECK(format_validity_table(r) == format_validity_table(reference));
    }
  }

  TEST_CASE("average of ones and threes is two") {
    std::vector<DayRecord> days{testing::full_day("a", ymd(1990, 1, 1), 1),
                                testing::full_day("a", ymd(1990, 1, 2), 3),
                                masked(testing::full_day("a", ymd(1990, 1, 3), 100), {0})};
    const auto table = build_average_table(days);
    const auto* avg = table.find("a");
    REQUIRE(avg != nullptr);
    for (const auto& v : *avg) CHECK(v == 2.0);
    CHECK(table.find("b") == nullptr);
  }

  TEST_CASE("conditioned cells recombine to the unconditioned mean") {
    std::mt19937_64 rng(17);
    std::vector<DayRecord> days;
    Labeling labels;
    const DayTypeLabel weekday{DayClass::weekday, {}, {}, {}};
    const DayTypeLabel weekend{DayClass::weekend, {}, {}, {}};
    std::size_t n_weekend = 0;
    for (unsigned d = 1; d <= 21; ++d) {
      const auto date = ymd(1990, 1, d);
      days.push_back(testing::day_from("a", date, random_values(rng)));
      const bool we = (d % 7 == 6) || (d % 7 == 0);
      n_weekend += we;
      labels[{"a", date}] = we ? weekend : weekday;
    }
    const auto table = build_average_table(days, &labels);
    const auto& all = *table.find("a");
    const auto& wd = *table.find("a", weekday);
    const auto& we = *table.find("a", weekend);
    const double n = 21.0;
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
      const double recombined = (*wd[h] * (n - n_weekend) + *we[h] * n_weekend) / n;
      CHECK(recombined == doctest::Approx(*all[h]).epsilon(1e-12));
    }
  }

  TEST_CASE("toy fraction example") {
    HourlyAverageTable table;
    HourlySlots averages{};
    for (auto& a : averages) a = 2.0;
    averages[1] = 4.0;
    table.set({"a", std::nullopt}, averages);
    DayRecord day = testing::full_day("a", ymd(1990, 1, 1), 1.0);
    day.readings[1].reset();
    const auto out = impute_day(day, table);
    CHECK(out.fraction == 0.5);
    CHECK(out.day.readings[1] == 2.0);
    CHECK(out.filled_hours == std::vector<std::size_t>{1});
    CHECK(out.method == ImputationMethod::unconditioned);
  }

  TEST_CASE("day equal to the average with one hour masked") {
    std::mt19937_64 rng(3);
    const auto values = random_values(rng);
    const std::vector<DayRecord> days{testing::day_from("a", ymd(1990, 1, 1), values)};
    const auto table = build_average_table(days);
    auto day = masked(days[0], {13});
    day.date = ymd(1990, 1, 2);
    const auto out = impute_day(day, table);
    CHECK(out.fraction == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*out.day.readings[13] == doctest::Approx(values[13]).epsilon(1e-15));
  }

  TEST_CASE("imputation errors") {
    HourlyAverageTable table;
    HourlySlots averages{};
    for (auto& a : averages) a = 1.0;
    averages[0] = 0.0;
    table.set({"a", std::nullopt}, averages);

    auto expect_kind = [&](const DayRecord& day, ErrorKind kind) {
      try {
        impute_day(day, table);
        FAIL("expected an error");
      } catch (const Error& e) {
        CHECK(e.kind() == kind);
      }
    };
    DayRecord empty{"a", ymd(1990, 1, 1), {}};
    expect_kind(empty, ErrorKind::not_imputable);

    DayRecord only_zero_hour{"a", ymd(1990, 1, 1), {}};
    only_zero_hour.readings[0] = 3.0;
    expect_kind(only_zero_hour, ErrorKind::degenerate_day);

    DayRecord stranger{"z", ymd(1990, 1, 1), {}};
    stranger.readings[2] = 1.0;
    expect_kind(stranger, ErrorKind::missing_average);
  }

  TEST_CASE("present slots are untouched") {
    std::mt19937_64 rng(99);
    std::vector<DayRecord> days;
    for (unsigned d = 1; d <= 10; ++d) days.push_back(testing::day_from("a", ymd(1990, 1, d), random_values(rng)));
    const auto table = build_average_table(days);
    for (int trial = 0; trial < 200; ++trial) {
      auto day = testing::day_from("a", ymd(1990, 2, 1), random_values(rng));
      const auto m = 1 + rng() % 23;
      for (std::size_t i = 0; i < m; ++i) day.readings[rng() % 24].reset();
      const auto out = impute_day(day, table);
      CHECK(out.fraction > 0.0);
      for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        if (day.readings[h]) {
          CHECK(std::memcmp(&*day.readings[h], &*out.day.readings[h], sizeof(double)) == 0);
        } else {
          CHECK(std::find(out.filled_hours.begin(), out.filled_hours.end(), h) != out.filled_hours.end());
        }
      }
      CHECK(out.filled_hours.size() == kHoursPerDay - day.present_count());
    }
  }

  TEST_CASE("imputation commutes with scaling") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> alpha_dist(0.01, 50.0);
    for (int trial = 0; trial < 100; ++trial) {
      const double alpha = alpha_dist(rng);
      std::vector<DayRecord> days;
      std::vector<DayRecord> scaled;
      for (unsigned d = 1; d <= 6; ++d) {
        const auto v = random_values(rng);
        HourlyValues sv;
        for (std::size_t h = 0; h < kHoursPerDay; ++h) sv[h] = alpha * v[h];
        days.push_back(testing::day_from("a", ymd(1990, 1, d), v));
        scaled.push_back(testing::day_from("a", ymd(1990, 1, d), sv));
      }
      auto day = testing::day_from("a", ymd(1990, 3, 1), random_values(rng));
      for (int i = 0; i < 8; ++i) day.readings[rng() % 24].reset();
      auto scaled_day = day;
      for (auto& slot : scaled_day.readings) {
        if (slot) *slot *= alpha;
      }
      const auto base = impute_day(day, build_average_table(days));
      const auto lifted = impute_day(scaled_day, build_average_table(scaled));
      for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        CHECK(std::abs(alpha * *base.day.readings[h] - *lifted.day.readings[h]) <=
              1e-12 * std::max(1.0, alpha * *base.day.readings[h]));
      }
    }
  }

  TEST_CASE("clean policies") {
    std::mt19937_64 rng(8);
    std::vector<DayRecord> days;
    for (unsigned d = 1; d <= 14; ++d) days.push_back(testing::day_from("a", ymd(1990, 1, d), random_values(rng)));

    SUBCASE("impute on a fully valid dataset is the identity") {
      const Dataset dataset(days, {});
      const auto result = clean(dataset, CleaningPolicy::impute);
      CHECK(result.log.empty());
      CHECK(result.events.empty());
      REQUIRE(result.dataset.days().size() == days.size());
      for (std::size_t i = 0; i < days.size(); ++i) {
        CHECK(result.dataset.days()[i].readings == days[i].readings);
      }
    }

    SUBCASE("omit drops incomplete days and all-absent days are dropped by impute") {
      days[2] = masked(days[2], {4, 5});
      days[3].readings = {};
      const Dataset dataset(days, {});
      const auto omitted = clean(dataset, CleaningPolicy::omit);
      CHECK(omitted.dataset.days().size() == 12);
      CHECK(omitted.events.size() == 2);
      const auto imputed = clean(dataset, CleaningPolicy::impute);
      CHECK(imputed.dataset.days().size() == 13);
      REQUIRE(imputed.log.size() == 1);
      CHECK(imputed.log[0].filled_hours == std::vector<std::size_t>{4, 5});
      REQUIRE(imputed.events.size() == 1);
      CHECK(imputed.events[0].detail == "not_imputable");
      std::ostringstream log;
      write_imputation_log(log, imputed.log);
      CHECK(log.str().rfind("property_id,date,method,fraction,filled_hours\na,1990-01-03,unconditioned,", 0) == 0);
      CHECK(log.str().find(",4;5\n") != std::string::npos);
    }

    SUBCASE("day-type imputation falls back when the cell is empty") {
      Labeling labels;
      const DayTypeLabel weekday{DayClass::weekday, {}, {}, {}};
      const DayTypeLabel holiday{DayClass::holiday, {}, {}, {}};
      for (const auto& d : days) labels[{d.property_id, d.date}] = weekday;
      days[5] = masked(days[5], {0});
      days[6] = masked(days[6], {1});
      labels[{"a", days[6].date}] = holiday;  // the only holiday is itself incomplete
      const auto result = clean(Dataset(days, {}), CleaningPolicy::impute_by_daytype, &labels);
      REQUIRE(result.log.size() == 2);
      CHECK(result.log[0].method == ImputationMethod::day_type_conditioned);
      CHECK(result.log[1].method == ImputationMethod::unconditioned);
      REQUIRE(result.events.size() == 1);
      CHECK(result.events[0].kind == CleanEventKind::fallback_unconditioned);
      CHECK(result.events[0].date == days[6].date);
    }
  }
}
