#include <gtest/gtest.h>

#include <sstream>

#include "hal/errors.hpp"
#include "hal/scoring.hpp"

using namespace hal;
using namespace hal::scoring;

namespace {
const Date kPublished(2017, 11, 15);
const Date kNow(2023, 1, 1);
}  // namespace

TEST(Oldness, EdgesAndMidpoint) {
  EXPECT_DOUBLE_EQ(oldness(kNow, kNow), 1.0);
  EXPECT_DOUBLE_EQ(oldness(Date(2022, 1, 1), kNow), 0.75);
  EXPECT_DOUBLE_EQ(oldness(kPublished, kNow), 0.75);
  const Date start(2022, 1, 1);
  const Date later(std::chrono::sys_days(start.days() + std::chrono::days(182)));
  EXPECT_NEAR(oldness(start, later), 0.87534, 5e-6);
  EXPECT_THROW(oldness(kNow, kPublished), ValidationError);
}

TEST(Factors, Values) {
  EXPECT_EQ(patched_factor(true), 0.5);
  EXPECT_EQ(patched_factor(false), 1.0);
  EXPECT_EQ(exploited_factor(true), 1.25);
  EXPECT_EQ(exploited_factor(false), 1.0);
}

TEST(Lazarus, WorkedExampleAndTrivialCases) {
  EXPECT_DOUBLE_EQ(lazarus_score(7.8, kPublished, kNow, true, true), 7.8 * 0.75 * 1.25 * 0.5);
  EXPECT_NEAR(lazarus_score(7.8, kPublished, kNow, true, true), 3.65, 0.01);
  EXPECT_EQ(lazarus_score(0.0, kPublished, kNow, true, true), 0.0);
  EXPECT_EQ(lazarus_score(6.1, kNow, kNow, false, false), 6.1);
  EXPECT_THROW(lazarus_score(11.0, kPublished, kNow, false, false), ValidationError);
}

TEST(Hal, WorkedExampleAndDegenerateCases) {
  const double expected = 3.65625 * (1 - 0.9799) + 7.3125 * 0.9799;
  EXPECT_NEAR(hal_score(7.8, kPublished, kNow, true, true, 0.9799), expected, 1e-12);
  EXPECT_NEAR(hal_score(7.8, kPublished, kNow, true, true, 0.9799), 7.2, 0.05);
  EXPECT_EQ(hal_score(7.8, kPublished, kNow, true, true, 0.0), lazarus_score(7.8, kPublished, kNow, true, true));
  for (double e : {0.0, 0.3, 1.0}) {
    EXPECT_EQ(hal_score(5.0, kPublished, kNow, false, true, e), lazarus_score(5.0, kPublished, kNow, false, true));
  }
  EXPECT_THROW(hal_score(5.0, kPublished, kNow, true, true, 1.2), ValidationError);
}

TEST(AssessAll, ProvenanceUpdatesAndMissingPredictions) {
  CveRecord a;
  a.id = "CVE-2022-0001";
  a.description = "a";
  a.published = a.last_modified = Date(2022, 6, 1);
  a.status = CveStatus::Analyzed;
  a.cvss_base = 6.0;
  a.affected_products = {"x:y:1"};
  CveRecord r = a;
  r.id = "CVE-2022-0002";
  r.status = CveStatus::Received;
  r.cvss_base.reset();
  const auto snap = build_snapshot({a, r}, {}, {}, {}, kNow);

  EXPECT_THROW(assess_all(snap, {}), ValidationError);
  PredictionMap predictions{{"CVE-2022-0002", {"CVE-2022-0002", 7, 7.5, 1.0}}};
  const auto assessed = assess_all(snap, predictions);
  EXPECT_EQ(assessed.at("CVE-2022-0001").provenance, Provenance::Official);
  EXPECT_EQ(assessed.at("CVE-2022-0002").provenance, Provenance::Predicted);
  EXPECT_EQ(assessed.at("CVE-2022-0002").base, 7.5);
  EXPECT_EQ(assessed.at("CVE-2022-0002").hal, assessed.at("CVE-2022-0002").lazarus);  // no EPSS row

  r.status = CveStatus::Analyzed;
  r.cvss_base = 8.1;
  const auto later = assess_all(build_snapshot({a, r}, {}, {}, {}, kNow), predictions);
  EXPECT_EQ(later.at("CVE-2022-0002").provenance, Provenance::Official);
  EXPECT_EQ(later.at("CVE-2022-0002").base, 8.1);
}

TEST(AssessedCsv, TwoDecimalDisplay) {
  CveRecord r;
  r.id = "CVE-2017-11882";
  r.description = "d";
  r.published = r.last_modified = kPublished;
  r.status = CveStatus::Analyzed;
  r.cvss_base = 7.8;
  r.patched = r.exploited = true;
  r.affected_products = {"microsoft:office:2016"};
  std::ostringstream out;
  write_assessed_csv(out, {{r.id, assess(r, 7.8, Provenance::Official, kNow, 0.9799)}});
  EXPECT_EQ(out.str(), "cve_id,base,provenance,lazarus,hal,epss\nCVE-2017-11882,7.80,official,3.66,7.24,0.9799\n");
}
