#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "loadprof/profile.hpp"
#include "support.hpp"

using namespace loadprof;
using testing::ymd;

namespace {

DayProfile scaled(const DayProfile& p, double alpha) {
  DayProfile out = p;
  for (auto& v : out.values) v *= alpha;
  return out;
}

}  // namespace

TEST_SUITE("profile") {
  TEST_CASE("average of days") {
    std::vector<DayRecord> one{testing::full_day("a", ymd(1990, 1, 1), 1.5)};
    const auto single = average_profile(one, "a");
    for (auto v : single.values) CHECK(v == 1.5);
    CHECK(single.units == Units::kwh);
    CHECK(single.label == kAllValidDays);

    std::vector<DayRecord> two{testing::full_day("a", ymd(1990, 1, 1), 1),
                               testing::full_day("a", ymd(1990, 1, 2), 3)};
    for (auto v : average_profile(two, "a", "weekday").values) CHECK(v == 2.0);
    CHECK_THROWS_AS(average_profile(std::vector<DayRecord>{}, "a"), Error);
  }

  TEST_CASE("average commutes with scaling") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    for (int trial = 0; trial < 100; ++trial) {
      const double alpha = 0.1 + u(rng) * 10;
      std::vector<DayRecord> days;
      std::vector<DayRecord> lifted;
      for (unsigned d = 1; d <= 9; ++d) {
        HourlyValues v;
        HourlyValues sv;
        for (std::size_t h = 0; h < kHoursPerDay; ++h) {
          v[h] = u(rng);
          sv[h] = alpha * v[h];
        }
        days.push_back(testing::day_from("a", ymd(1990, 1, d), v));
        lifted.push_back(testing::day_from("a", ymd(1990, 1, d), sv));
      }
      const auto a = average_profile(days, "a");
      const auto b = average_profile(lifted, "a");
      for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        CHECK(std::abs(alpha * a.values[h] - b.values[h]) <= 1e-12 * std::max(1.0, b.values[h]));
      }
    }
  }

  TEST_CASE("normalize") {
    const auto uniform = normalize(testing::constant_profile(2.0));
    CHECK(uniform.units == Units::shape);
    for (auto v : uniform.values) CHECK(v == doctest::Approx(1.0 / 24).epsilon(1e-15));
    CHECK_THROWS_AS(normalize(testing::constant_profile(0.0)), Error);

    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = testing::random_profile(rng);
      const auto n = normalize(p);
      double sum = 0.0;
      for (auto v : n.values) sum += v;
      CHECK(std::abs(sum - 1.0) <= 1e-9);
      const auto m = normalize(scaled(p, 0.37 + trial));
      const auto again = normalize(n);
      for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        CHECK(std::abs(m.values[h] - n.values[h]) <= 1e-12);
        CHECK(std::abs(again.values[h] - n.values[h]) <= 1e-12);
      }
    }
  }

  TEST_CASE("distance examples") {
    const auto ones = testing::constant_profile(1.0);
    const auto threes = testing::constant_profile(3.0);
    CHECK(distance(ones, threes, SimilarityMode::amplitude) == doctest::Approx(std::sqrt(96.0)));
    CHECK(distance(ones, threes, SimilarityMode::shape) == doctest::Approx(0.0));
    std::mt19937_64 rng(6);
    const auto p = testing::random_profile(rng);
    CHECK(distance(p, p, SimilarityMode::amplitude) == 0.0);
    CHECK(distance(p, p, SimilarityMode::shape) == 0.0);
    CHECK(distance(p, scaled(p, 3.0), SimilarityMode::shape) <= 1e-12);
    CHECK_THROWS_AS(distance(normalize(p), p, SimilarityMode::amplitude), Error);
    CHECK_NOTHROW(distance(normalize(p), p, SimilarityMode::shape));
  }

  TEST_CASE("distance is a metric") {
    std::mt19937_64 rng(7);
    for (auto mode : {SimilarityMode::amplitude, SimilarityMode::shape}) {
      for (int trial = 0; trial < 1000; ++trial) {
        const auto a = testing::random_profile(rng, 0.0, 3.0);
        const auto b = testing::random_profile(rng, 0.0, 3.0);
        const auto c = testing::random_profile(rng, 0.0, 3.0);
        const double ab = distance(a, b, mode);
        CHECK(ab >= 0.0);
        CHECK(ab == distance(b, a, mode));
        CHECK(distance(a, c, mode) <= ab + distance(b, c, mode) + 1e-12);
      }
    }
  }

  TEST_CASE("nearest breaks ties toward the lowest index") {
    std::vector<DayProfile> candidates{testing::constant_profile(2.0), testing::constant_profile(4.0),
                                       testing::constant_profile(2.0)};
    CHECK(nearest(candidates, testing::constant_profile(3.0), SimilarityMode::amplitude) == 0);
    CHECK(nearest(candidates, testing::constant_profile(3.9), SimilarityMode::amplitude) == 1);
    CHECK(nearest(candidates, testing::constant_profile(9.0), SimilarityMode::shape) == 0);
  }

  TEST_CASE("profile matrix") {
    std::vector<DayRecord> days;
    Labeling labels;
    for (unsigned d = 1; d <= 7; ++d) {  // Monday to Sunday
      const DayTypeLabel label{d >= 6 ? DayClass::weekend : DayClass::weekday, {}, {}, {}};
      for (const char* id : {"b", "a"}) {
        days.push_back(testing::full_day(id, ymd(1990, 1, d), d));
        labels[{id, ymd(1990, 1, d)}] = label;
      }
    }
    // "c" only has a weekday.
    days.push_back(testing::full_day("c", ymd(1990, 1, 1), 5));
    labels[{"c", ymd(1990, 1, 1)}] = DayTypeLabel{DayClass::weekday, {}, {}, {}};
    const Dataset dataset(days, {});

    const auto per_property = profile_matrix(dataset, Grouping::per_property, SimilarityMode::amplitude);
    REQUIRE(per_property.profiles.size() == 3);
    CHECK(per_property.profiles[0].id == "a");
    CHECK(per_property.profiles[0].values[0] == 4.0);

    const auto split = profile_matrix(dataset, Grouping::per_property_label, SimilarityMode::shape, &labels);
    REQUIRE(split.profiles.size() == 5);
    CHECK(split.profiles[0].id == "a");
    CHECK(split.profiles[0].label == "weekday");
    CHECK(split.profiles[1].label == "weekend");
    for (const auto& p : split.profiles) {
      double sum = 0.0;
      for (auto v : p.values) sum += v;
      CHECK(std::abs(sum - 1.0) <= 1e-9);
      CHECK(p.units == Units::shape);
    }
    CHECK_THROWS_AS(profile_matrix(dataset, Grouping::per_property_label, SimilarityMode::shape), Error);
  }

  TEST_CASE("incomplete days never enter a profile") {
    std::vector<DayRecord> days{testing::full_day("a", ymd(1990, 1, 1), 1.0)};
    auto partial = testing::full_day("b", ymd(1990, 1, 1), 1.0);
    partial.readings[0].reset();
    days.push_back(partial);
    const auto matrix = profile_matrix(Dataset(days, {}), Grouping::per_property, SimilarityMode::amplitude);
    CHECK(matrix.profiles.size() == 1);
    CHECK(matrix.dropped.size() == 1);
  }

  TEST_CASE("profiles survive a CSV round trip") {
    std::mt19937_64 rng(1);
    std::vector<DayProfile> profiles{testing::random_profile(rng, 0, 3, "p1"),
                                     normalize(testing::random_profile(rng, 0, 3, "p2"))};
    profiles[0].label = "weekend/winter";
    std::stringstream csv;
    write_profiles_csv(csv, profiles);
    CHECK(csv.str().rfind("id,label,h00,h01", 0) == 0);
    const auto back = read_profiles_csv(csv, "profiles.csv");
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(back[i].values == profiles[i].values);
      CHECK(back[i].units == profiles[i].units);
      CHECK(back[i].id == profiles[i].id);
      CHECK(back[i].label == profiles[i].label);
    }
  }
}
