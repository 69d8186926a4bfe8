#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "hal/csv.hpp"
#include "hal/date.hpp"
#include "hal/errors.hpp"
#include "hal/rng.hpp"

using namespace hal;

TEST(Date, ParsesIsoAndIgnoresTime) {
  EXPECT_EQ(Date::parse("2023-01-31").iso(), "2023-01-31");
  EXPECT_EQ(Date::parse("2017-11-15T18:29:00.000"), Date(2017, 11, 15));
  EXPECT_THROW(Date::parse("2023-02-30"), ValidationError);
  EXPECT_THROW(Date::parse("2023/01/01"), ValidationError);
  EXPECT_THROW(Date::parse(""), ValidationError);
}

TEST(Date, MonthArithmetic) {
  const Date cutoff(2022, 12, 31);
  EXPECT_EQ(cutoff.add_months(1), Date(2023, 1, 31));
  EXPECT_EQ(cutoff.add_months(2), Date(2023, 2, 28));
  EXPECT_EQ(cutoff.add_months(2).month_end(), Date(2023, 2, 28));
  EXPECT_EQ(Date(2024, 2, 3).month_end(), Date(2024, 2, 29));
  EXPECT_EQ(Date(2023, 7, 9).month_label(), "2023-07");
}

TEST(Date, DaysBetween) {
  EXPECT_EQ(days_between(Date(2023, 1, 1), Date(2024, 1, 1)), 365);
  EXPECT_EQ(days_between(Date(2024, 1, 1), Date(2023, 1, 1)), -365);
}

TEST(Csv, QuotedFieldsAndLineNumbers) {
  std::istringstream in("a,b\n\"x, y\",\"he said \"\"hi\"\"\"\n\"multi\nline\",z\nlast,row\n");
  csv::Reader r(in);
  EXPECT_EQ(*r.next(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(*r.next(), (std::vector<std::string>{"x, y", "he said \"hi\""}));
  EXPECT_EQ(r.line(), 2u);
  EXPECT_EQ(*r.next(), (std::vector<std::string>{"multi\nline", "z"}));
  EXPECT_EQ(r.line(), 3u);
  EXPECT_EQ(*r.next(), (std::vector<std::string>{"last", "row"}));
  EXPECT_EQ(r.line(), 5u);
  EXPECT_FALSE(r.next());
}

TEST(Csv, EscapeRoundTrips) {
  for (std::string field : {"plain", "a,b", "q\"uote", "new\nline", ""}) {
    std::istringstream in(csv::escape(field) + "\n");
    csv::Reader r(in);
    auto row = r.next();
    ASSERT_TRUE(row);
    EXPECT_EQ((*row)[0], field);
  }
}

TEST(Rng, SeededStreamsAreReproducible) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
  EXPECT_NE(mix_seed(1, 0), mix_seed(2, 0));
}

TEST(Rng, IndexStaysInBoundsAndCoversRange) {
  Rng rng(7);
  std::set<std::size_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto x = rng.index(10);
    ASSERT_LT(x, 10u);
    seen.insert(x);
  }
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(3);
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
  auto w = v;
  rng.shuffle(w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}
