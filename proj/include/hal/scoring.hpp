#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "hal/corpus.hpp"
#include "hal/predictor.hpp"

namespace hal::scoring {

constexpr int kOldnessThresholdDays = 365;

/// max(1 - 0.25 * days / threshold, 0.75). Throws when `now` precedes `published`.
double oldness(const Date& published, const Date& now, int threshold_days = kOldnessThresholdDays);

/// 0.5 when a patch exists.
constexpr double patched_factor(bool patched) { return patched ? 0.5 : 1.0; }

/// 1.25 when the vulnerability has been exploited.
constexpr double exploited_factor(bool exploited) { return exploited ? 1.25 : 1.0; }

/// base * oldness * exploited * patched.
double lazarus_score(double base, const Date& published, const Date& now, bool patched, bool exploited);

/// EPSS-weighted blend of the patched and unpatched scores:
/// s * (1 - epss) + s_wp * epss, where s_wp ignores the patch.
double hal_score(double base, const Date& published, const Date& now, bool patched, bool exploited, double epss);

enum class Provenance { Official, Predicted };
std::string_view to_string(Provenance provenance);

struct Factors {
  double oldness = 1.0;
  double patched = 1.0;
  double exploited = 1.0;
  double epss = 0.0;

  bool operator==(const Factors&) const = default;
};

struct AssessedScore {
  std::string cve_id;
  double base = 0.0;
  Provenance provenance = Provenance::Official;
  double lazarus = 0.0;     // score(v)
  double lazarus_wp = 0.0;  // score(v) with the patch factor forced to 1
  double hal = 0.0;
  Factors factors;

  bool operator==(const AssessedScore&) const = default;
};

using AssessedMap = std::map<std::string, AssessedScore>;
using PredictionMap = std::map<std::string, predictor::PredictedScore>;

AssessedScore assess(const CveRecord& record, double base, Provenance provenance, const Date& now, double epss);

/// Analyzed records use their official base, Received records the predicted
/// one; `now` is the snapshot date. Throws listing any Received ids without a
/// prediction.
AssessedMap assess_all(const CorpusSnapshot& snapshot, const PredictionMap& predictions);

/// CSV `cve_id,base,provenance,lazarus,hal,epss`, scores rounded to 2 decimals.
void write_assessed_csv(std::ostream& out, const AssessedMap& assessed);

}  // namespace hal::scoring
