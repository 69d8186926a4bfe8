#include "hal/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/core.h>

#include "hal/csv.hpp"
#include "hal/errors.hpp"
#include "hal/rng.hpp"
#include "json.hpp"

namespace hal {

using nlohmann::json;

std::string_view to_string(CveStatus status) { return status == CveStatus::Analyzed ? "Analyzed" : "Received"; }

std::string_view to_string(CvssVersion version) { return version == CvssVersion::V3 ? "3.1" : "2.0"; }

bool is_cve_id(std::string_view text) {
  if (text.size() < 13 || text.substr(0, 4) != "CVE-" || text[8] != '-') return false;
  auto digits = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  return digits(text.substr(4, 4)) && digits(text.substr(9)) && text.size() - 9 >= 4;
}

void validate(const CveRecord& r) {
  if (!is_cve_id(r.id)) throw ValidationError(fmt::format("'{}' is not a CVE identifier", r.id));
  if (r.description.empty()) throw ValidationError(fmt::format("{}: empty description", r.id));
  if (r.last_modified < r.published) {
    throw ValidationError(fmt::format("{}: modified date {} precedes published date {}", r.id, r.last_modified.iso(),
                                      r.published.iso()));
  }
  if (r.status == CveStatus::Analyzed) {
    if (!r.cvss_base) throw ValidationError(fmt::format("{}: Analyzed record without cvss_base", r.id));
    if (!(*r.cvss_base >= 0.0 && *r.cvss_base <= 10.0)) {
      throw ValidationError(fmt::format("{}: cvss_base {} outside [0, 10]", r.id, *r.cvss_base));
    }
  } else if (r.cvss_base) {
    throw ValidationError(fmt::format("{}: Received record carries a cvss_base", r.id));
  }
  if (r.affected_products.empty()) throw ValidationError(fmt::format("{}: no affected products", r.id));
}

// ---------------------------------------------------------------------------
// CVE feed (JSON Lines)

namespace {

CveRecord record_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("expected a JSON object");
  CveRecord r;
  r.id = j.at("id").get<std::string>();
  r.description = j.at("description").get<std::string>();
  r.published = Date::parse(j.at("published").get<std::string>());
  r.last_modified = Date::parse(j.at("modified").get<std::string>());
  const auto status = j.at("status").get<std::string>();
  if (status == "Analyzed") {
    r.status = CveStatus::Analyzed;
  } else if (status == "Received") {
    r.status = CveStatus::Received;
  } else {
    throw FormatError(fmt::format("unknown status '{}'", status));
  }
  if (auto it = j.find("cvss_base"); it != j.end() && !it->is_null()) r.cvss_base = it->get<double>();
  if (auto it = j.find("cvss_version"); it != j.end() && !it->is_null()) {
    const auto v = it->get<std::string>();
    if (v.starts_with("2")) {
      r.cvss_version = CvssVersion::V2;
    } else if (v.starts_with("3")) {
      r.cvss_version = CvssVersion::V3;
    } else {
      throw FormatError(fmt::format("unknown cvss_version '{}'", v));
    }
  }
  if (auto it = j.find("metrics"); it != j.end() && !it->is_null()) {
    for (const auto& [key, value] : it->items()) {
      r.cvss_metrics[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
  }
  for (const auto& p : j.at("products")) r.affected_products.insert(p.get<std::string>());
  r.patched = j.value("patched", false);
  r.exploited = j.value("exploited", false);
  return r;
}

json record_to_json(const CveRecord& r) {
  json j = json::object();
  j["id"] = r.id;
  j["description"] = r.description;
  j["published"] = r.published.iso();
  j["modified"] = r.last_modified.iso();
  j["status"] = to_string(r.status);
  if (r.cvss_base) j["cvss_base"] = *r.cvss_base;
  if (r.cvss_version) j["cvss_version"] = to_string(*r.cvss_version);
  if (!r.cvss_metrics.empty()) j["metrics"] = r.cvss_metrics;
  j["products"] = r.affected_products;
  j["patched"] = r.patched;
  j["exploited"] = r.exploited;
  return j;
}

}  // namespace

std::vector<CveRecord> parse_cve_feed(std::istream& in) {
  std::vector<CveRecord> records;
  std::set<std::string> seen;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (csv::trim(line).empty()) continue;
    CveRecord record;
    try {
      record = record_from_json(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError(fmt::format("line {}: {}", line_no, e.what()));
    } catch (const ValidationError& e) {
      throw FormatError(fmt::format("line {}: {}", line_no, e.what()));
    }
    try {
      validate(record);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("line {}: {}", line_no, e.what()));
    }
    if (!seen.insert(record.id).second) {
      throw ValidationError(fmt::format("line {}: duplicate CVE id {}", line_no, record.id));
    }
    records.push_back(std::move(record));
  }
  return records;
}

void write_cve_feed(std::ostream& out, const std::vector<CveRecord>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

std::string serialize_cve_feed(const std::vector<CveRecord>& records) {
  std::ostringstream out;
  write_cve_feed(out, records);
  return out.str();
}

// ---------------------------------------------------------------------------
// EPSS and exploit CSVs

namespace {

double parse_number(const std::string& cell, std::size_t line, std::string_view column) {
  const auto text = csv::trim(cell);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw FormatError(fmt::format("line {}: non-numeric {} '{}'", line, column, cell));
  }
  return value;
}

std::optional<Date> score_date_from_comment(const std::string& comment) {
  const auto pos = comment.find("score_date:");
  if (pos == std::string::npos) return std::nullopt;
  return Date::parse(std::string_view(comment).substr(pos + 11, 10));
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += fields[i];
  }
  return out;
}

}  // namespace

EpssTable parse_epss_csv(std::istream& in, std::optional<Date> declared_date) {
  csv::Reader reader(in);
  auto row = reader.next();
  std::optional<Date> model_date = declared_date;
  if (row && !row->empty() && (*row)[0].starts_with('#')) {
    if (auto d = score_date_from_comment(join(*row))) model_date = d;
    row = reader.next();
  }
  if (!row || row->size() < 3 || csv::trim((*row)[0]) != "cve" || csv::trim((*row)[1]) != "epss" ||
      csv::trim((*row)[2]) != "percentile") {
    throw FormatError("EPSS file must start with header 'cve,epss,percentile'");
  }
  if (!model_date) throw FormatError("EPSS file has no score_date comment and no declared date");

  EpssTable table;
  std::map<std::string, std::size_t> position;
  while ((row = reader.next())) {
    if (row->size() == 1 && csv::trim((*row)[0]).empty()) continue;
    const auto line = reader.line();
    if (row->size() < 3) throw FormatError(fmt::format("line {}: expected 3 columns", line));
    EpssEntry entry{csv::trim((*row)[0]), parse_number((*row)[1], line, "epss"),
                    parse_number((*row)[2], line, "percentile"), *model_date};
    if (!is_cve_id(entry.cve_id)) throw FormatError(fmt::format("line {}: bad CVE id '{}'", line, entry.cve_id));
    if (!(entry.probability >= 0.0 && entry.probability <= 1.0)) {
      throw ValidationError(fmt::format("line {}: epss {} outside [0, 1]", line, entry.probability));
    }
    if (!(entry.percentile >= 0.0 && entry.percentile <= 1.0)) {
      throw ValidationError(fmt::format("line {}: percentile {} outside [0, 1]", line, entry.percentile));
    }
    if (auto it = position.find(entry.cve_id); it != position.end()) {
      table.warnings.push_back(fmt::format("line {}: duplicate EPSS row for {}, last row wins", line, entry.cve_id));
      table.entries[it->second] = std::move(entry);
    } else {
      position.emplace(entry.cve_id, table.entries.size());
      table.entries.push_back(std::move(entry));
    }
  }
  return table;
}

void write_epss_csv(std::ostream& out, const std::vector<EpssEntry>& entries) {
  if (!entries.empty()) out << fmt::format("#model_version:synthetic,score_date:{}T00:00:00+0000\n", entries.front().model_date.iso());
  out << "cve,epss,percentile\n";
  for (const auto& e : entries) out << fmt::format("{},{},{}\n", e.cve_id, e.probability, e.percentile);
}

ExploitIndex parse_exploit_index(std::istream& in) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) return {};
  auto column = std::find_if(header->begin(), header->end(), [](const auto& h) { return csv::trim(h) == "codes"; });
  if (column == header->end()) throw FormatError("exploit index has no 'codes' column");
  const auto index = static_cast<std::size_t>(column - header->begin());

  ExploitIndex result;
  while (auto row = reader.next()) {
    if (row->size() == 1 && csv::trim((*row)[0]).empty()) continue;
    bool any = false;
    if (index < row->size()) {
      std::string_view cell = (*row)[index];
      while (!cell.empty()) {
        const auto semi = cell.find(';');
        const auto code = csv::trim(cell.substr(0, semi));
        if (is_cve_id(code)) {
          result.cve_ids.insert(code);
          any = true;
        }
        if (semi == std::string_view::npos) break;
        cell.remove_prefix(semi + 1);
      }
    }
    if (!any) {
      ++result.skipped_rows;
      result.warnings.push_back(fmt::format("line {}: no CVE id in 'codes', row skipped", reader.line()));
    }
  }
  return result;
}

void write_exploit_index(std::ostream& out, const std::set<std::string>& cve_ids) {
  out << "id,description,codes\n";
  std::size_t n = 1;
  for (const auto& id : cve_ids) out << fmt::format("{},exploit for {},{}\n", 40000 + n++, id, id);
}

// ---------------------------------------------------------------------------
// Node catalog

std::vector<NodeIdentity> parse_catalog(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("catalog: {}", e.what()));
  }
  const json& nodes = j.is_array() ? j : j.at("nodes");
  std::vector<NodeIdentity> catalog;
  for (const auto& n : nodes) {
    NodeIdentity node;
    node.name = n.at("name").get<std::string>();
    for (const auto& p : n.at("products")) node.product_keys.insert(p.get<std::string>());
    if (node.product_keys.empty()) throw ValidationError(fmt::format("catalog node '{}' has no products", node.name));
    catalog.push_back(std::move(node));
  }
  return catalog;
}

void write_catalog(std::ostream& out, const std::vector<NodeIdentity>& catalog) {
  json nodes = json::array();
  for (const auto& n : catalog) nodes.push_back({{"name", n.name}, {"products", n.product_keys}});
  out << json{{"version", 1}, {"nodes", nodes}}.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Snapshot

double CorpusSnapshot::epss_of(const std::string& cve_id) const {
  auto it = epss_.find(cve_id);
  return it == epss_.end() ? 0.0 : it->second;
}

const CveRecord* CorpusSnapshot::find(const std::string& cve_id) const {
  auto it = records_.find(cve_id);
  return it == records_.end() ? nullptr : &it->second;
}

CorpusSnapshot build_snapshot(const std::vector<CveRecord>& records, const std::vector<EpssEntry>& epss,
                              const std::set<std::string>& exploited_ids, const std::vector<NodeIdentity>& catalog,
                              Date as_of) {
  CorpusSnapshot snap;
  snap.as_of_ = as_of;
  for (const auto& r : records) {
    validate(r);
    if (r.published > as_of) continue;
    CveRecord copy = r;
    copy.exploited = r.exploited || exploited_ids.contains(r.id);
    if (!snap.records_.emplace(r.id, std::move(copy)).second) {
      throw ValidationError(fmt::format("duplicate CVE id {}", r.id));
    }
  }
  for (const auto& e : epss) {
    if (!(e.probability >= 0.0 && e.probability <= 1.0)) {
      throw ValidationError(fmt::format("{}: epss {} outside [0, 1]", e.cve_id, e.probability));
    }
    snap.epss_[e.cve_id] = e.probability;
  }
  snap.catalog_ = catalog;
  std::sort(snap.catalog_.begin(), snap.catalog_.end(),
            [](const NodeIdentity& a, const NodeIdentity& b) { return a.name < b.name; });
  for (std::size_t i = 0; i < snap.catalog_.size(); ++i) {
    if (snap.catalog_[i].product_keys.empty()) {
      throw ValidationError(fmt::format("node '{}' has no products", snap.catalog_[i].name));
    }
    if (i > 0 && snap.catalog_[i].name == snap.catalog_[i - 1].name) {
      throw ValidationError(fmt::format("duplicate node name '{}'", snap.catalog_[i].name));
    }
  }
  return snap;
}

std::vector<CveRecord> feed_as_of(const std::vector<CveRecord>& records, Date date) {
  std::vector<CveRecord> out;
  for (const auto& r : records) {
    if (r.published > date) continue;
    CveRecord copy = r;
    if (copy.status == CveStatus::Analyzed && copy.last_modified > date) {
      copy.status = CveStatus::Received;
      copy.cvss_base.reset();
      copy.cvss_version.reset();
      copy.cvss_metrics.clear();
      copy.last_modified = copy.published;
    }
    out.push_back(std::move(copy));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator

namespace {

struct FamilyInfo {
  std::string vendor;
  std::string product;
  std::vector<std::string> versions;
};

FamilyInfo family_info(const std::string& family) {
  static const std::map<std::string, FamilyInfo> known = {
      {"Windows", {"microsoft", "windows", {"10", "11", "server_2019", "server_2022"}}},
      {"Fedora", {"fedoraproject", "fedora", {"37", "38", "36"}}},
      {"Ubuntu", {"canonical", "ubuntu_linux", {"22.04", "20.04", "23.04"}}},
      {"CentOS", {"centos", "centos", {"7", "8"}}},
      {"Debian", {"debian", "debian_linux", {"12", "11", "10"}}},
      {"OpenSuse", {"opensuse", "leap", {"15.4", "15.5"}}},
      {"Solaris", {"oracle", "solaris", {"11.4", "11.3"}}},
      {"OpenBSD", {"openbsd", "openbsd", {"7.2", "7.3"}}},
      {"FreeBSD", {"freebsd", "freebsd", {"13.1", "12.4", "13.2"}}},
  };
  if (auto it = known.find(family); it != known.end()) return it->second;
  std::string lower;
  for (char c : family) lower.push_back(std::isalnum(static_cast<unsigned char>(c)) ? std::tolower(c) : '_');
  return {lower, lower, {}};
}

const std::vector<std::string> kSoftwarePool = {
    "openssl:openssl:1.1.1",     "openssl:openssl:3.0.7",   "apache:http_server:2.4.54",
    "mozilla:firefox:102.0",     "sudo_project:sudo:1.9.12", "linux:linux_kernel:5.15",
    "linux:linux_kernel:6.1",    "samba:samba:4.17",         "openbsd:openssh:9.1",
    "python:python:3.10",        "nginx:nginx:1.22",         "isc:bind:9.18",
};

// Tokens planted per score band; band b covers base scores [b, b+1).
const std::vector<std::vector<std::string>> kBandTokens = {
    {"cosmetic", "typo", "banner", "tooltip"},
    {"verbose", "logging", "timestamp", "locale"},
    {"clickjacking", "referrer", "autocomplete", "caching"},
    {"enumeration", "fingerprinting", "timing", "metadata"},
    {"redirect", "spoofing", "csrf", "header"},
    {"xss", "injection", "traversal", "disclosure"},
    {"bypass", "ssrf", "deserialization", "race"},
    {"escalation", "privilege", "uaf", "overflow"},
    {"sqli", "authentication", "heap", "corruption"},
    {"rce", "unauthenticated", "wormable", "arbitrary"},
};
const std::vector<double> kBandWeights = {1, 1, 2, 3, 6, 9, 9, 10, 8, 6};

const std::vector<std::string> kComponents = {"the parser",         "the network stack",  "the kernel module",
                                              "the web interface",  "the print spooler",  "the file system driver",
                                              "the session manager", "the image decoder", "the package manager"};
const std::vector<std::string> kActors = {"remote", "local", "authenticated", "adjacent"};
const std::vector<std::string> kActions = {"affect availability", "obtain sensitive information", "modify data",
                                           "execute commands", "gain access"};
const std::vector<std::string> kVectors = {"a crafted request", "a malicious file", "specially crafted packets",
                                           "a long string", "unspecified vectors"};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.index(items.size())];
}

struct Draft {
  std::string description;
  std::string node_product;  // "<product> <version>" placeholder for cross-OS groups
  Date published;
  double score = 0.0;
  std::size_t node = 0;
  std::set<std::string> products;
};

std::string product_phrase(const std::string& key) {
  // vendor:product:version -> "product version"
  const auto first = key.find(':');
  const auto second = key.find(':', first + 1);
  return key.substr(first + 1, second - first - 1) + " " + key.substr(second + 1);
}

std::string describe(Rng& rng, std::size_t band, const std::string& component, const std::string& subject) {
  const auto& tokens = kBandTokens[band];
  std::string first = tokens[rng.index(tokens.size())];
  std::string second = tokens[rng.index(tokens.size())];
  first[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(first[0])));
  return fmt::format("{} {} issue in {} of {} allows {} attackers to {} via {}.", first, second, component, subject,
                     pick(rng, kActors), pick(rng, kActions), pick(rng, kVectors));
}

double score_in_band(Rng& rng, std::size_t band) {
  const std::size_t tenths = rng.index(band == 9 ? 11 : 10);
  return static_cast<double>(band * 10 + tenths) / 10.0;
}

std::map<std::string, std::string> metrics_for(double score) {
  const bool high = score >= 7.0;
  const bool mid = score >= 4.0;
  return {{"AV", high ? "N" : (mid ? "A" : "L")}, {"AC", mid ? "L" : "H"}, {"PR", high ? "N" : "L"},
          {"UI", high ? "N" : "R"},               {"S", score >= 9.0 ? "C" : "U"},
          {"C", mid ? "H" : "L"},                 {"I", high ? "H" : "L"},  {"A", high ? "H" : "N"}};
}

}  // namespace

GeneratedDataset generate_synthetic_dataset(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.total == 0) throw ValidationError("generator: total must be positive");
  if (spec.families.empty()) throw ValidationError("generator: at least one OS family required");
  if (spec.nodes == 0) throw ValidationError("generator: node count must be positive");
  if (spec.end < spec.start) throw ValidationError("generator: end date precedes start date");
  for (double f : {spec.received_fraction, spec.patched_fraction, spec.exploited_fraction, spec.epss_coverage,
                   spec.software_fraction, spec.duplicate_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("generator: fractions must lie in [0, 1]");
  }

  Rng rng(mix_seed(seed));
  GeneratedDataset out;

  // Catalog: node i belongs to family i mod F, versions taken in table order.
  std::vector<std::size_t> node_family(spec.nodes);
  std::vector<std::string> os_key(spec.nodes);
  for (std::size_t i = 0; i < spec.nodes; ++i) {
    const auto f = i % spec.families.size();
    const auto k = i / spec.families.size();
    const auto info = family_info(spec.families[f]);
    const auto version = k < info.versions.size() ? info.versions[k] : fmt::format("r{}", k + 1);
    node_family[i] = f;
    os_key[i] = fmt::format("{}:{}:{}", info.vendor, info.product, version);
    NodeIdentity node{fmt::format("{} {}", spec.families[f], version), {os_key[i]}};
    std::vector<std::string> pool = kSoftwarePool;
    rng.shuffle(pool);
    node.product_keys.insert(pool.begin(), pool.begin() + 3);
    out.catalog.push_back(std::move(node));
  }

  const long span = days_between(spec.start, spec.end);
  auto random_date = [&] { return Date(spec.start.days() + std::chrono::days{static_cast<long>(rng.index(span + 1))}); };

  std::vector<Draft> drafts;
  drafts.reserve(spec.total);

  // Cross-OS groups of near-identical descriptions on distinct families.
  const std::size_t group_size = std::min<std::size_t>(4, spec.nodes);
  const auto groups = static_cast<std::size_t>(std::llround(spec.total * spec.duplicate_fraction / group_size));
  for (std::size_t g = 0; g < groups && drafts.size() + group_size <= spec.total; ++g) {
    const auto band = rng.weighted(kBandWeights);
    const auto& component = pick(rng, kComponents);
    const auto text = describe(rng, band, component, "{subject}");
    std::vector<std::size_t> nodes(spec.nodes);
    std::iota(nodes.begin(), nodes.end(), 0);
    rng.shuffle(nodes);
    // prefer one node per family
    std::stable_partition(nodes.begin(), nodes.end(), [&](std::size_t n) { return n < spec.families.size(); });
    const Date base = random_date();
    for (std::size_t m = 0; m < group_size; ++m) {
      Draft d;
      d.node = nodes[m];
      const auto offset = static_cast<long>(rng.index(121));
      d.published = std::min(spec.end, Date(base.days() + std::chrono::days{offset}));
      d.score = score_in_band(rng, band);
      d.products = {os_key[d.node]};
      d.description = text;
      d.description.replace(d.description.find("{subject}"), 9, product_phrase(os_key[d.node]));
      drafts.push_back(std::move(d));
    }
  }

  while (drafts.size() < spec.total) {
    Draft d;
    d.node = rng.index(spec.nodes);
    d.published = random_date();
    const auto band = rng.weighted(kBandWeights);
    d.score = score_in_band(rng, band);
    std::string subject;
    if (rng.bernoulli(spec.software_fraction)) {
      std::vector<std::string> software;
      for (const auto& key : out.catalog[d.node].product_keys) {
        if (key != os_key[d.node]) software.push_back(key);
      }
      const auto& key = pick(rng, software);
      d.products = {key};
      subject = product_phrase(key);
    } else {
      d.products = {os_key[d.node]};
      // sibling release of the same family shares the flaw
      for (std::size_t other = 0; other < spec.nodes; ++other) {
        if (other != d.node && node_family[other] == node_family[d.node] && rng.bernoulli(0.3)) {
          d.products.insert(os_key[other]);
        }
      }
      subject = product_phrase(os_key[d.node]);
    }
    d.description = describe(rng, band, pick(rng, kComponents), subject);
    drafts.push_back(std::move(d));
  }

  // Identifiers follow publication order within each year.
  std::vector<std::size_t> order(drafts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return drafts[a].published < drafts[b].published; });
  std::map<int, std::size_t> per_year;

  std::vector<std::pair<std::string, double>> epss_raw;
  for (std::size_t idx : order) {
    Draft& d = drafts[idx];
    const int year = static_cast<int>(d.published.ymd().year());
    CveRecord r;
    r.id = fmt::format("CVE-{}-{}", year, 10000 + per_year[year]++);
    r.description = std::move(d.description);
    r.published = d.published;
    r.affected_products = std::move(d.products);
    r.patched = rng.bernoulli(spec.patched_fraction);
    const bool exploited = rng.bernoulli(spec.exploited_fraction);
    if (exploited) {
      if (rng.bernoulli(0.5)) {
        r.exploited = true;
      } else {
        out.exploit_index.insert(r.id);
      }
    }
    if (rng.bernoulli(spec.received_fraction)) {
      r.status = CveStatus::Received;
      r.last_modified = r.published;
      out.hidden_scores[r.id] = d.score;
    } else {
      r.status = CveStatus::Analyzed;
      r.cvss_base = d.score;
      r.cvss_version = year >= 2016 ? CvssVersion::V3 : CvssVersion::V2;
      r.cvss_metrics = metrics_for(d.score);
      r.last_modified = Date(r.published.days() + std::chrono::days{static_cast<long>(
                                                      rng.index(static_cast<std::size_t>(spec.analysis_lag_days) + 1))});
    }
    if (rng.bernoulli(spec.epss_coverage)) {
      const double u = rng.uniform();
      const double p = exploited ? 0.2 + 0.79 * u : 0.1 * u * u;
      epss_raw.emplace_back(r.id, std::round(p * 1e5) / 1e5);
    }
    out.family_of[r.id] = spec.families[node_family[d.node]];
    out.records.push_back(std::move(r));
  }
  std::sort(out.records.begin(), out.records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  std::vector<double> sorted;
  for (const auto& [id, p] : epss_raw) sorted.push_back(p);
  std::sort(sorted.begin(), sorted.end());
  std::sort(epss_raw.begin(), epss_raw.end());
  for (const auto& [id, p] : epss_raw) {
    const auto rank = std::upper_bound(sorted.begin(), sorted.end(), p) - sorted.begin();
    const double pct = std::round(static_cast<double>(rank) / static_cast<double>(sorted.size()) * 1e5) / 1e5;
    out.epss.push_back({id, p, pct, spec.end});
  }
  return out;
}

}  // namespace hal
