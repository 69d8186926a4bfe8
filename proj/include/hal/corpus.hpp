#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hal/date.hpp"

namespace hal {

enum class CveStatus { Received, Analyzed };
enum class CvssVersion { V2, V3 };

std::string_view to_string(CveStatus status);
std::string_view to_string(CvssVersion version);

/// `CVE-YYYY-NNNN` with four or more trailing digits.
bool is_cve_id(std::string_view text);

struct CveRecord {
  std::string id;
  std::string description;
  Date published;
  Date last_modified;
  CveStatus status = CveStatus::Received;
  std::optional<double> cvss_base;  // present iff Analyzed
  std::optional<CvssVersion> cvss_version;
  std::map<std::string, std::string> cvss_metrics;
  std::set<std::string> affected_products;  // `vendor:product:version`
  bool patched = false;
  bool exploited = false;

  bool operator==(const CveRecord&) const = default;
};

/// Throws ValidationError when a record breaks its invariants.
void validate(const CveRecord& record);

struct EpssEntry {
  std::string cve_id;
  double probability = 0.0;
  double percentile = 0.0;
  Date model_date;

  bool operator==(const EpssEntry&) const = default;
};

struct NodeIdentity {
  std::string name;
  std::set<std::string> product_keys;

  bool operator==(const NodeIdentity&) const = default;
  auto operator<=>(const NodeIdentity& other) const { return name <=> other.name; }
};

// ---------------------------------------------------------------------------
// Ingestion

/// One record per non-blank JSON line, in source order.
std::vector<CveRecord> parse_cve_feed(std::istream& in);
void write_cve_feed(std::ostream& out, const std::vector<CveRecord>& records);
std::string serialize_cve_feed(const std::vector<CveRecord>& records);

struct EpssTable {
  std::vector<EpssEntry> entries;  // duplicates collapsed, last row wins
  std::vector<std::string> warnings;
};

/// `model_date` comes from a leading `#...score_date:YYYY-MM-DD...` comment
/// line when present, otherwise from `declared_date`.
EpssTable parse_epss_csv(std::istream& in, std::optional<Date> declared_date = std::nullopt);
void write_epss_csv(std::ostream& out, const std::vector<EpssEntry>& entries);

struct ExploitIndex {
  std::set<std::string> cve_ids;
  std::size_t skipped_rows = 0;  // rows whose `codes` cell held no CVE id
  std::vector<std::string> warnings;
};

ExploitIndex parse_exploit_index(std::istream& in);
void write_exploit_index(std::ostream& out, const std::set<std::string>& cve_ids);

/// `{"version":1,"nodes":[{"name":...,"products":[...]}]}`; a bare array of nodes is also accepted.
std::vector<NodeIdentity> parse_catalog(std::istream& in);
void write_catalog(std::ostream& out, const std::vector<NodeIdentity>& catalog);

// ---------------------------------------------------------------------------
// Snapshot

/// Merged, time-filtered view of the intelligence sources as of a simulated "now".
/// Immutable once built.
class CorpusSnapshot {
 public:
  const Date& as_of() const { return as_of_; }
  /// Ordered by CVE id.
  const std::map<std::string, CveRecord>& records() const { return records_; }
  const std::map<std::string, double>& epss() const { return epss_; }
  /// Ordered by node name.
  const std::vector<NodeIdentity>& catalog() const { return catalog_; }

  /// 0.0 when the CVE has no EPSS entry.
  double epss_of(const std::string& cve_id) const;
  const CveRecord* find(const std::string& cve_id) const;

  bool operator==(const CorpusSnapshot&) const = default;

 private:
  friend CorpusSnapshot build_snapshot(const std::vector<CveRecord>&, const std::vector<EpssEntry>&,
                                       const std::set<std::string>&, const std::vector<NodeIdentity>&, Date);

  Date as_of_;
  std::map<std::string, CveRecord> records_;
  std::map<std::string, double> epss_;
  std::vector<NodeIdentity> catalog_;
};

/// Drops records published after `as_of`, ORs `exploited` with index membership,
/// and keeps the last EPSS probability per CVE. Throws on duplicate record ids
/// or duplicate node names.
CorpusSnapshot build_snapshot(const std::vector<CveRecord>& records, const std::vector<EpssEntry>& epss,
                              const std::set<std::string>& exploited_ids, const std::vector<NodeIdentity>& catalog,
                              Date as_of);

/// The feed as it looked on `date`: records published later are dropped and
/// Analyzed records last modified after `date` revert to Received.
std::vector<CveRecord> feed_as_of(const std::vector<CveRecord>& records, Date date);

// ---------------------------------------------------------------------------
// Synthetic data

struct GeneratorSpec {
  std::size_t total = 5000;
  std::vector<std::string> families = {"Windows", "Fedora",  "Ubuntu",  "CentOS", "Debian",
                                       "OpenSuse", "Solaris", "OpenBSD", "FreeBSD"};
  std::size_t nodes = 16;
  Date start{2019, 1, 1};
  Date end{2023, 12, 31};
  double received_fraction = 0.1;
  double patched_fraction = 0.5;
  double exploited_fraction = 0.15;
  double epss_coverage = 0.9;
  /// Share of CVEs that hit a third-party product rather than the OS itself.
  double software_fraction = 0.25;
  /// Share of CVEs placed in cross-OS groups with near-identical descriptions.
  double duplicate_fraction = 0.04;
  /// Maximum days between publication and NVD analysis for Analyzed records.
  int analysis_lag_days = 45;
};

struct GeneratedDataset {
  std::vector<CveRecord> records;  // ordered by id
  std::vector<EpssEntry> epss;
  std::set<std::string> exploit_index;  // exploited CVEs listed only in the exploit index
  std::vector<NodeIdentity> catalog;
  std::map<std::string, double> hidden_scores;  // true base of every Received record
  std::map<std::string, std::string> family_of;  // CVE id -> OS family of its primary node
};

/// Deterministic for equal (spec, seed). Throws ValidationError on empty counts.
GeneratedDataset generate_synthetic_dataset(const GeneratorSpec& spec, std::uint64_t seed);

}  // namespace hal
