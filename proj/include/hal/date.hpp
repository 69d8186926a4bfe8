#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace hal {

/// Calendar date at day precision. Serialized as ISO-8601 `YYYY-MM-DD`.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
  Date(int year, unsigned month, unsigned day);

  /// Accepts `YYYY-MM-DD`, optionally followed by a `T...` time part which is ignored.
  static Date parse(std::string_view text);

  std::string iso() const;
  std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }
  std::chrono::sys_days days() const { return days_; }

  /// Last day of the month containing this date.
  Date month_end() const;
  /// Same day-of-month clamped, `count` months later.
  Date add_months(int count) const;
  /// `YYYY-MM`
  std::string month_label() const;

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

/// Whole days from `from` to `to` (negative when `to` precedes `from`).
inline long days_between(const Date& from, const Date& to) {
  return (to.days() - from.days()).count();
}

}  // namespace hal
