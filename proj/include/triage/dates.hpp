#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace triage {

// Day-granular calendar date stored as days since 1970-01-01 (proleptic
// Gregorian). All window arithmetic in the project is whole days; months,
// half-years and years are fixed-length (30 / 183 / 365 days).
class Date {
public:
  Date() = default;
  explicit constexpr Date(int32_t days) : days_(days) {}

  static Date from_civil(int year, int month, int day);
  // Parses "YYYY-MM-DD". Returns nullopt on any malformation.
  static std::optional<Date> parse(std::string_view iso);

  std::string to_string() const; // ISO-8601 "YYYY-MM-DD"

  constexpr int32_t days() const { return days_; }

  friend constexpr auto operator<=>(Date a, Date b) = default;

  constexpr Date operator+(int32_t d) const { return Date(days_ + d); }
  constexpr Date operator-(int32_t d) const { return Date(days_ - d); }
  // Difference in whole days.
  friend constexpr int32_t operator-(Date a, Date b) {
    return a.days_ - b.days_;
  }
  Date &operator+=(int32_t d) {
    days_ += d;
    return *this;
  }

private:
  int32_t days_ = 0;
};

struct CivilDate {
  int year;
  int month; // 1..12
  int day;   // 1..31
};

CivilDate to_civil(Date d);

// Fixed-length windows used across the feature and label definitions.
inline constexpr int kDaysPerMonth = 30;
inline constexpr int kDaysPerHalfYear = 183;
inline constexpr int kDaysPerYear = 365;

} // namespace triage
