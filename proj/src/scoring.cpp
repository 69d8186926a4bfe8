#include "hal/scoring.hpp"

#include <algorithm>
#include <ostream>
#include <vector>

#include <fmt/core.h>

#include "hal/errors.hpp"

namespace hal::scoring {

double oldness(const Date& published, const Date& now, int threshold_days) {
  if (threshold_days <= 0) throw ValidationError("oldness threshold must be positive");
  const long age = days_between(published, now);
  if (age < 0) {
    throw ValidationError(fmt::format("now {} precedes publication date {}", now.iso(), published.iso()));
  }
  return std::max(1.0 - 0.25 * static_cast<double>(age) / threshold_days, 0.75);
}

double lazarus_score(double base, const Date& published, const Date& now, bool patched, bool exploited) {
  if (!(base >= 0.0 && base <= 10.0)) throw ValidationError(fmt::format("base score {} outside [0, 10]", base));
  return base * oldness(published, now) * exploited_factor(exploited) * patched_factor(patched);
}

namespace {

// s + (s_wp - s) * epss == s * (1 - epss) + s_wp * epss; this form is exact
// when epss is 0 and stays monotone in epss and in s under rounding.
double blend(double s, double s_wp, double epss) { return s + (s_wp - s) * epss; }

}  // namespace

double hal_score(double base, const Date& published, const Date& now, bool patched, bool exploited, double epss) {
  if (!(epss >= 0.0 && epss <= 1.0)) throw ValidationError(fmt::format("epss {} outside [0, 1]", epss));
  const double s = lazarus_score(base, published, now, patched, exploited);
  if (!patched) return s;
  const double s_wp = lazarus_score(base, published, now, false, exploited);
  return blend(s, s_wp, epss);
}

std::string_view to_string(Provenance provenance) {
  return provenance == Provenance::Official ? "official" : "predicted";
}

AssessedScore assess(const CveRecord& record, double base, Provenance provenance, const Date& now, double epss) {
  AssessedScore a;
  a.cve_id = record.id;
  a.base = base;
  a.provenance = provenance;
  a.factors = {oldness(record.published, now), patched_factor(record.patched), exploited_factor(record.exploited),
               epss};
  a.lazarus = lazarus_score(base, record.published, now, record.patched, record.exploited);
  a.lazarus_wp = lazarus_score(base, record.published, now, false, record.exploited);
  a.hal = hal_score(base, record.published, now, record.patched, record.exploited, epss);
  return a;
}

AssessedMap assess_all(const CorpusSnapshot& snapshot, const PredictionMap& predictions) {
  AssessedMap out;
  std::vector<std::string> missing;
  for (const auto& [id, record] : snapshot.records()) {
    const double epss = snapshot.epss_of(id);
    if (record.status == CveStatus::Analyzed) {
      out.emplace(id, assess(record, *record.cvss_base, Provenance::Official, snapshot.as_of(), epss));
    } else if (auto it = predictions.find(id); it != predictions.end()) {
      out.emplace(id, assess(record, it->second.score, Provenance::Predicted, snapshot.as_of(), epss));
    } else {
      missing.push_back(id);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw ValidationError(fmt::format("Received CVEs without a predicted score: {}", list));
  }
  return out;
}

void write_assessed_csv(std::ostream& out, const AssessedMap& assessed) {
  out << "cve_id,base,provenance,lazarus,hal,epss\n";
  for (const auto& [id, a] : assessed) {
    out << fmt::format("{},{:.2f},{},{:.2f},{:.2f},{}\n", id, a.base, to_string(a.provenance), a.lazarus, a.hal,
                       a.factors.epss);
  }
}

}  // namespace hal::scoring
