#include "hal/date.hpp"

#include <charconv>

#include <fmt/core.h>

#include "hal/errors.hpp"

namespace hal {

using namespace std::chrono;

Date::Date(int year, unsigned month, unsigned day) {
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok()) {
    throw ValidationError(fmt::format("invalid date {:04}-{:02}-{:02}", year, month, day));
  }
  days_ = sys_days{ymd};
}

namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t count, std::string_view whole) {
  int value = 0;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + count, value);
  if (ec != std::errc{} || ptr != first + count) {
    throw ValidationError(fmt::format("invalid date '{}'", whole));
  }
  return value;
}

}  // namespace

Date Date::parse(std::string_view text) {
  if (text.size() < 10 || text[4] != '-' || text[7] != '-' || (text.size() > 10 && text[10] != 'T')) {
    throw ValidationError(fmt::format("invalid date '{}', expected YYYY-MM-DD", text));
  }
  int y = parse_digits(text, 0, 4, text);
  int m = parse_digits(text, 5, 2, text);
  int d = parse_digits(text, 8, 2, text);
  if (m < 1 || d < 1) {
    throw ValidationError(fmt::format("invalid date '{}'", text));
  }
  return Date(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

std::string Date::iso() const {
  auto d = ymd();
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                     static_cast<unsigned>(d.day()));
}

Date Date::month_end() const {
  auto d = ymd();
  return Date(sys_days{year_month_day_last{d.year(), month_day_last{d.month()}}});
}

Date Date::add_months(int count) const {
  auto d = ymd();
  year_month ym = year_month{d.year(), d.month()} + months{count};
  auto last = year_month_day_last{ym.year(), month_day_last{ym.month()}}.day();
  auto day = d.day() > last ? last : d.day();
  return Date(sys_days{year_month_day{ym.year(), ym.month(), day}});
}

std::string Date::month_label() const {
  auto d = ymd();
  return fmt::format("{:04}-{:02}", static_cast<int>(d.year()), static_cast<unsigned>(d.month()));
}

}  // namespace hal
