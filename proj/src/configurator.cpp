#include "hal/configurator.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include <fmt/core.h>

#include "hal/csv.hpp"
#include "hal/errors.hpp"
#include "json.hpp"

namespace hal::configurator {

std::vector<std::string> Configuration::names() const {
  std::vector<std::string> out;
  for (const auto& n : nodes) out.push_back(n.name);
  return out;
}

std::string Configuration::key() const {
  std::string out;
  for (const auto& n : nodes) out += (out.empty() ? "" : ";") + n.name;
  return out;
}

Configuration make_configuration(std::vector<NodeIdentity> nodes) {
  std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i].name == nodes[i - 1].name) {
      throw ValidationError(fmt::format("node '{}' appears twice in a configuration", nodes[i].name));
    }
  }
  return Configuration{std::move(nodes)};
}

std::string_view to_string(ShareSource source) {
  switch (source) {
    case ShareSource::Products:
      return "products";
    case ShareSource::Cluster:
      return "cluster";
    case ShareSource::Both:
      return "both";
  }
  return "?";
}

namespace {

bool hits(const CveRecord& record, const NodeIdentity& node) {
  // both sets are ordered; linear merge
  auto a = record.affected_products.begin();
  auto b = node.product_keys.begin();
  while (a != record.affected_products.end() && b != node.product_keys.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      return true;
    }
  }
  return false;
}

double hal_of(const AssessedMap& assessed, const std::string& id) {
  auto it = assessed.find(id);
  if (it == assessed.end()) throw ValidationError(fmt::format("no assessment for {}", id));
  return it->second.hal;
}

std::vector<SharedCve> merge_shared(const std::vector<std::string>& va, const std::vector<std::string>& vb,
                                    const std::vector<std::vector<std::string>>& group_hits_a,
                                    const std::vector<std::vector<std::string>>& group_hits_b) {
  std::map<std::string, ShareSource> shared;
  std::vector<std::string> common;
  std::set_intersection(va.begin(), va.end(), vb.begin(), vb.end(), std::back_inserter(common));
  for (auto& id : common) shared.emplace(std::move(id), ShareSource::Products);
  for (std::size_t g = 0; g < group_hits_a.size(); ++g) {
    if (group_hits_a[g].empty() || group_hits_b[g].empty()) continue;
    for (const auto* side : {&group_hits_a[g], &group_hits_b[g]}) {
      for (const auto& id : *side) {
        auto [it, inserted] = shared.try_emplace(id, ShareSource::Cluster);
        if (!inserted && it->second == ShareSource::Products) it->second = ShareSource::Both;
      }
    }
  }
  std::vector<SharedCve> out;
  for (auto& [id, source] : shared) out.push_back({id, source});
  return out;
}

/// Members of each shared group that hit the node, ascending.
std::vector<std::vector<std::string>> group_hits(const NodeIdentity& node, const CorpusSnapshot& snapshot,
                                                 const std::vector<std::set<std::string>>& groups) {
  std::vector<std::vector<std::string>> out(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const auto& id : groups[g]) {
      const auto* r = snapshot.find(id);
      if (r && hits(*r, node)) out[g].push_back(id);
    }
  }
  return out;
}

std::vector<std::string> sorted_vulnerabilities(const NodeIdentity& node, const CorpusSnapshot& snapshot) {
  std::vector<std::string> out;
  for (const auto& [id, record] : snapshot.records()) {
    if (hits(record, node)) out.push_back(id);
  }
  return out;
}

}  // namespace

std::set<std::string> vulnerabilities_of(const NodeIdentity& node, const CorpusSnapshot& snapshot) {
  const auto v = sorted_vulnerabilities(node, snapshot);
  return {v.begin(), v.end()};
}

std::vector<SharedCve> shared_vulnerabilities(const NodeIdentity& a, const NodeIdentity& b,
                                              const CorpusSnapshot& snapshot,
                                              const cluster::ClusterAssignment& clusters) {
  if (a.name == b.name) throw ValidationError(fmt::format("a node cannot share vulnerabilities with itself ({})", a.name));
  const auto groups = cluster::shared_groups(clusters);
  return merge_shared(sorted_vulnerabilities(a, snapshot), sorted_vulnerabilities(b, snapshot),
                      group_hits(a, snapshot, groups), group_hits(b, snapshot, groups));
}

double security_risk(const Configuration& config, const AssessedMap& assessed, const CorpusSnapshot& snapshot) {
  double total = 0.0;
  for (const auto& node : config.nodes) {
    double subtotal = 0.0;
    for (const auto& id : sorted_vulnerabilities(node, snapshot)) subtotal += hal_of(assessed, id);
    total += subtotal;
  }
  return total;
}

double resil_risk(const Configuration& config, const AssessedMap& assessed, const CorpusSnapshot& snapshot,
                  const cluster::ClusterAssignment& clusters) {
  double total = 0.0;
  for (std::size_t i = 0; i < config.nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < config.nodes.size(); ++j) {
      double subtotal = 0.0;
      for (const auto& s : shared_vulnerabilities(config.nodes[i], config.nodes[j], snapshot, clusters)) {
        subtotal += hal_of(assessed, s.cve_id);
      }
      total += subtotal;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Enumeration

std::size_t combinations(std::size_t total, std::size_t n) {
  if (n > total) return 0;
  n = std::min(n, total - n);
  std::size_t result = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t numerator = total - n + i;
    if (result > SIZE_MAX / numerator) return SIZE_MAX;
    result = result * numerator / i;
  }
  return result;
}

namespace {

std::vector<NodeIdentity> sorted_catalog(const std::vector<NodeIdentity>& catalog) {
  auto out = catalog;
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].name == out[i - 1].name) throw ValidationError(fmt::format("duplicate node name '{}'", out[i].name));
  }
  return out;
}

template <typename Visit>
void for_each_combination(std::size_t total, std::size_t n, Visit&& visit) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    if (!visit(idx)) return;
    std::size_t i = n;
    while (i > 0 && idx[i - 1] == total - n + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < n; ++j) idx[j] = idx[j - 1] + 1;
  }
}

void check_size(std::size_t catalog_size, std::size_t n) {
  if (n < 1 || n > catalog_size) {
    throw ValidationError(fmt::format("configuration size {} outside [1, {}]", n, catalog_size));
  }
}

}  // namespace

void for_each_configuration(const std::vector<NodeIdentity>& catalog, std::size_t n,
                            const std::function<bool(const Configuration&)>& visit) {
  check_size(catalog.size(), n);
  const auto nodes = sorted_catalog(catalog);
  for_each_combination(nodes.size(), n, [&](const std::vector<std::size_t>& idx) {
    Configuration config;
    for (auto i : idx) config.nodes.push_back(nodes[i]);
    return visit(config);
  });
}

std::vector<Configuration> enumerate_configurations(const std::vector<NodeIdentity>& catalog, std::size_t n) {
  std::vector<Configuration> out;
  for_each_configuration(catalog, n, [&](const Configuration& c) {
    out.push_back(c);
    return true;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Ranking

Policy Policy::parse(std::string_view name, double alpha) {
  if (name == "resilience_first") return {PolicyKind::ResilienceFirst, alpha};
  if (name == "security_first") return {PolicyKind::SecurityFirst, alpha};
  if (name == "weighted") {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError(fmt::format("alpha {} outside [0, 1]", alpha));
    return {PolicyKind::Weighted, alpha};
  }
  throw ValidationError(fmt::format("unknown policy '{}'", name));
}

std::string Policy::name() const {
  switch (kind) {
    case PolicyKind::ResilienceFirst:
      return "resilience_first";
    case PolicyKind::SecurityFirst:
      return "security_first";
    case PolicyKind::Weighted:
      return "weighted";
  }
  return "?";
}

bool ranks_before(const RiskReport& a, const RiskReport& b, const Policy& policy) {
  auto names_less = [&] {
    return std::lexicographical_compare(
        a.configuration.nodes.begin(), a.configuration.nodes.end(), b.configuration.nodes.begin(),
        b.configuration.nodes.end(), [](const auto& x, const auto& y) { return x.name < y.name; });
  };
  switch (policy.kind) {
    case PolicyKind::ResilienceFirst:
      if (a.resilience != b.resilience) return a.resilience < b.resilience;
      if (a.security != b.security) return a.security < b.security;
      return names_less();
    case PolicyKind::SecurityFirst:
      if (a.security != b.security) return a.security < b.security;
      if (a.resilience != b.resilience) return a.resilience < b.resilience;
      return names_less();
    case PolicyKind::Weighted: {
      const double ka = policy.alpha * a.resilience + (1.0 - policy.alpha) * a.security;
      const double kb = policy.alpha * b.resilience + (1.0 - policy.alpha) * b.security;
      if (ka != kb) return ka < kb;
      return names_less();
    }
  }
  return false;
}

RiskTable::RiskTable(const std::vector<NodeIdentity>& catalog, const AssessedMap& assessed,
                     const CorpusSnapshot& snapshot, const cluster::ClusterAssignment& clusters)
    : catalog_(sorted_catalog(catalog)) {
  const std::size_t m = catalog_.size();
  const auto groups = cluster::shared_groups(clusters);
  std::vector<std::vector<std::vector<std::string>>> hits_by_node;
  for (const auto& node : catalog_) {
    node_cves_.push_back(sorted_vulnerabilities(node, snapshot));
    double subtotal = 0.0;
    for (const auto& id : node_cves_.back()) subtotal += hal_of(assessed, id);
    node_total_.push_back(subtotal);
    hits_by_node.push_back(group_hits(node, snapshot, groups));
  }
  pair_cves_.assign(m, std::vector<std::vector<SharedCve>>(m));
  pair_total_.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      pair_cves_[i][j] = merge_shared(node_cves_[i], node_cves_[j], hits_by_node[i], hits_by_node[j]);
      double subtotal = 0.0;
      for (const auto& s : pair_cves_[i][j]) subtotal += hal_of(assessed, s.cve_id);
      pair_total_[i][j] = subtotal;
    }
  }
}

double RiskTable::security(const std::vector<std::size_t>& nodes) const {
  double total = 0.0;
  for (auto i : nodes) total += node_total_[i];
  return total;
}

double RiskTable::resilience(const std::vector<std::size_t>& nodes) const {
  double total = 0.0;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes.size(); ++b) total += pair_total_[nodes[a]][nodes[b]];
  }
  return total;
}

double RiskTable::pair_sum(const std::vector<std::size_t>& nodes,
                           const std::function<double(const std::string&)>& value) const {
  double total = 0.0;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      double subtotal = 0.0;
      for (const auto& s : pair_cves_[nodes[a]][nodes[b]]) subtotal += value(s.cve_id);
      total += subtotal;
    }
  }
  return total;
}

const std::vector<SharedCve>& RiskTable::shared(std::size_t i, std::size_t j) const {
  return i < j ? pair_cves_[i][j] : pair_cves_[j][i];
}

std::vector<RiskReport> advise(const std::vector<NodeIdentity>& catalog, std::size_t n, const Policy& policy,
                               const AssessedMap& assessed, const CorpusSnapshot& snapshot,
                               const cluster::ClusterAssignment& clusters, bool explain) {
  check_size(catalog.size(), n);
  const RiskTable table(catalog, assessed, snapshot, clusters);
  const auto& nodes = table.catalog();

  std::vector<RiskReport> reports;
  reports.reserve(std::min<std::size_t>(combinations(nodes.size(), n), 1u << 20));
  for_each_combination(nodes.size(), n, [&](const std::vector<std::size_t>& idx) {
    RiskReport r;
    for (auto i : idx) r.configuration.nodes.push_back(nodes[i]);
    r.security = table.security(idx);
    r.resilience = table.resilience(idx);
    if (explain) {
      for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
          const auto& shared = table.shared(idx[a], idx[b]);
          if (!shared.empty()) r.shared_detail[{nodes[idx[a]].name, nodes[idx[b]].name}] = shared;
        }
      }
    }
    reports.push_back(std::move(r));
    return true;
  });
  std::sort(reports.begin(), reports.end(),
            [&](const RiskReport& a, const RiskReport& b) { return ranks_before(a, b, policy); });
  for (std::size_t i = 0; i < reports.size(); ++i) reports[i].rank = i + 1;
  return reports;
}

// ---------------------------------------------------------------------------
// Output

using nlohmann::json;

void write_ranking_json(std::ostream& out, const std::vector<RiskReport>& ranking, const Policy& policy,
                        std::size_t limit, bool explain) {
  json list = json::array();
  for (std::size_t i = 0; i < ranking.size() && i < limit; ++i) {
    const auto& r = ranking[i];
    json entry = {{"rank", r.rank},
                  {"nodes", r.configuration.names()},
                  {"security", r.security},
                  {"resilience", r.resilience}};
    if (explain) {
      json detail = json::array();
      for (const auto& [pair, cves] : r.shared_detail) {
        json items = json::array();
        for (const auto& s : cves) items.push_back({{"cve_id", s.cve_id}, {"source", to_string(s.source)}});
        detail.push_back({{"pair", {pair.first, pair.second}}, {"shared", items}});
      }
      entry["shared_detail"] = detail;
    }
    list.push_back(std::move(entry));
  }
  json j = {{"version", 1}, {"policy", policy.name()}, {"count", ranking.size()}, {"ranking", list}};
  if (policy.kind == PolicyKind::Weighted) j["alpha"] = policy.alpha;
  out << j.dump(2) << '\n';
}

void write_ranking_csv(std::ostream& out, const std::vector<RiskReport>& ranking, std::size_t limit) {
  out << "rank,nodes,security,resilience\n";
  for (std::size_t i = 0; i < ranking.size() && i < limit; ++i) {
    const auto& r = ranking[i];
    out << fmt::format("{},{},{},{}\n", r.rank, csv::escape(r.configuration.key()), r.security, r.resilience);
  }
}

}  // namespace hal::configurator
