#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "triage/csv.hpp"
#include "triage/dates.hpp"
#include "triage/rng.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

using namespace triage;

TEST_CASE("date civil round trip") {
  CHECK(Date::from_civil(1970, 1, 1).days() == 0);
  CHECK(Date::from_civil(1970, 1, 2).days() == 1);
  CHECK(Date::from_civil(2000, 3, 1) - Date::from_civil(2000, 2, 28) == 2);

  for (int days : {-1000, 0, 1, 365, 18000, 20000}) {
    Date d(days);
    auto parsed = Date::parse(d.to_string());
    REQUIRE(parsed.has_value());
    CHECK(parsed->days() == days);
  }
}

TEST_CASE("date parse rejects malformed input") {
  CHECK(!Date::parse("2023-02-30"));
  CHECK(!Date::parse("2023-13-01"));
  CHECK(!Date::parse("2023/01/01"));
  CHECK(!Date::parse("23-01-01"));
  CHECK(!Date::parse(""));
  CHECK(Date::parse("2024-02-29")); // leap day
  CHECK(!Date::parse("2023-02-29"));
}

TEST_CASE("date arithmetic is day-granular") {
  Date d = Date::from_civil(2022, 6, 15);
  CHECK((d + 183) - d == 183);
  CHECK(d + 0 == d);
  CHECK(d - 1 < d);
}

TEST_CASE("rng streams are stable") {
  // Frozen first draws for seed 42; these pin the generator's semantics
  // across platforms and releases.
  Rng rng(42);
  CHECK(rng.next_u64() == 13679457532755275413ull);
  CHECK(rng.next_u64() == 2949826092126892291ull);

  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i)
    CHECK(a.next_u64() == b.next_u64());
  CHECK(Rng::derive(7, 1) != Rng::derive(7, 2));
  CHECK(Rng::derive(7, 1) == Rng::derive(7, 1));
}

TEST_CASE("rng bounded draws are in range") {
  Rng rng(123);
  for (uint64_t bound : {1ull, 2ull, 7ull, 100ull, 1000000007ull}) {
    for (int i = 0; i < 200; ++i)
      CHECK(rng.below(bound) < bound);
  }
  for (int i = 0; i < 500; ++i) {
    double u = rng.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("rng poisson mean is roughly right") {
  Rng rng(9);
  double sum = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i)
    sum += rng.poisson(3.5);
  CHECK(sum / n == doctest::Approx(3.5).epsilon(0.05));

  double big = 0;
  for (int i = 0; i < 2000; ++i)
    big += rng.poisson(75.0);
  CHECK(big / 2000 == doctest::Approx(75.0).epsilon(0.05));
}

TEST_CASE("rng shuffle is a permutation") {
  Rng rng(5);
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8, 9};
  auto copy = v;
  rng.shuffle(v);
  std::multiset<int> before(copy.begin(), copy.end()),
      after(v.begin(), v.end());
  CHECK(before == after);
}

TEST_CASE("csv round trip with quoting") {
  namespace fs = std::filesystem;
  fs::path tmp = fs::temp_directory_path() / "triage_csv_test.csv";
  {
    CsvWriter w(tmp);
    w.write_row({"a", "b", "c"});
    w.write_row({"1", "with,comma", "with \"quote\""});
    w.write_row({"2", "multi\nline", ""});
  }
  CsvReader r(tmp);
  CHECK(r.header() == std::vector<std::string>{"a", "b", "c"});
  CsvRow row;
  REQUIRE(r.next(row));
  CHECK(row.fields == std::vector<std::string>{"1", "with,comma",
                                               "with \"quote\""});
  REQUIRE(r.next(row));
  CHECK(row.fields == std::vector<std::string>{"2", "multi\nline", ""});
  CHECK(!r.next(row));
  fs::remove(tmp);
}
