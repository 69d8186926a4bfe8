#pragma once

// Independent reference implementations used by the unit and acceptance tests.
// They favour obviousness over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hal/cluster.hpp"
#include "hal/corpus.hpp"
#include "hal/scoring.hpp"

namespace oracle {

inline std::filesystem::path fixture(const std::string& relative) {
  return std::filesystem::path(HAL_FIXTURE_DIR) / relative;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 1.0;
  return std::clamp(1.0 - dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 2.0);
}

struct DbscanResult {
  std::map<std::string, int> labels;
  std::set<std::string> core;
};

// Core points from full neighbourhood counts; clusters are connected
// components of the core graph, numbered by their smallest core id; a border
// point joins the lowest-numbered cluster holding a core neighbour.
inline DbscanResult brute_dbscan(std::vector<hal::cluster::Point> points, double eps, std::size_t min_samples) {
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  const std::size_t n = points.size();
  std::vector<std::vector<char>> near(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      near[i][j] = cosine(points[i].vector.values, points[j].vector.values) <= eps;
    }
  }
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j) count += near[i][j];
    core[i] = count >= min_samples;
  }
  // union-find over core-core edges
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (core[i] && core[j] && near[i][j]) {
        auto a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::map<std::size_t, int> number;  // root -> cluster number, by smallest core index
  std::vector<int> label(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    auto root = find(i);
    if (!number.count(root)) {
      const int next = static_cast<int>(number.size());
      number[root] = next;
    }
    label[i] = number[root];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    int best = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (core[j] && near[i][j] && (best < 0 || label[j] < best)) best = label[j];
    }
    label[i] = best;
  }
  DbscanResult out;
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[points[i].id] = label[i];
    if (core[i]) out.core.insert(points[i].id);
  }
  return out;
}

inline bool affects(const hal::CveRecord& r, const hal::NodeIdentity& node) {
  for (const auto& p : r.affected_products) {
    if (node.product_keys.count(p)) return true;
  }
  return false;
}

struct ConfigRisk {
  std::vector<std::string> names;
  double security = 0;
  double resilience = 0;
};

// Ascending cve id inside a node or pair, nodes and pairs in name order.
inline double naive_security(const std::vector<hal::NodeIdentity>& nodes, const hal::CorpusSnapshot& snap,
                             const hal::scoring::AssessedMap& assessed) {
  double total = 0;
  for (const auto& node : nodes) {
    double sub = 0;
    for (const auto& [id, r] : snap.records()) {
      if (affects(r, node)) sub += assessed.at(id).hal;
    }
    total += sub;
  }
  return total;
}

inline std::set<std::string> naive_shared(const hal::NodeIdentity& a, const hal::NodeIdentity& b,
                                          const hal::CorpusSnapshot& snap,
                                          const hal::cluster::ClusterAssignment& clusters) {
  std::set<std::string> shared;
  for (const auto& [id, r] : snap.records()) {
    if (affects(r, a) && affects(r, b)) shared.insert(id);
  }
  std::map<int, std::vector<std::string>> groups;
  for (const auto& [id, label] : clusters.labels) {
    if (label >= 0) groups[label].push_back(id);
  }
  for (const auto& [label, members] : groups) {
    if (members.size() < 2) continue;
    bool hit_a = false, hit_b = false;
    for (const auto& id : members) {
      const auto* r = snap.find(id);
      if (!r) continue;
      hit_a = hit_a || affects(*r, a);
      hit_b = hit_b || affects(*r, b);
    }
    if (!(hit_a && hit_b)) continue;
    for (const auto& id : members) {
      const auto* r = snap.find(id);
      if (r && (affects(*r, a) || affects(*r, b))) shared.insert(id);
    }
  }
  return shared;
}

inline double naive_resilience(const std::vector<hal::NodeIdentity>& nodes, const hal::CorpusSnapshot& snap,
                               const hal::scoring::AssessedMap& assessed,
                               const hal::cluster::ClusterAssignment& clusters) {
  double total = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      double sub = 0;
      for (const auto& id : naive_shared(nodes[i], nodes[j], snap, clusters)) sub += assessed.at(id).hal;
      total += sub;
    }
  }
  return total;
}

// Every n-subset of the catalog, nodes sorted by name, via bitmask enumeration.
inline std::vector<ConfigRisk> naive_all(std::vector<hal::NodeIdentity> catalog, std::size_t n,
                                         const hal::CorpusSnapshot& snap, const hal::scoring::AssessedMap& assessed,
                                         const hal::cluster::ClusterAssignment& clusters) {
  std::sort(catalog.begin(), catalog.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  std::vector<ConfigRisk> out;
  const std::size_t m = catalog.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountll(mask)) != n) continue;
    std::vector<hal::NodeIdentity> nodes;
    ConfigRisk risk;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask >> i & 1) {
        nodes.push_back(catalog[i]);
        risk.names.push_back(catalog[i].name);
      }
    }
    risk.security = naive_security(nodes, snap, assessed);
    risk.resilience = naive_resilience(nodes, snap, assessed, clusters);
    out.push_back(std::move(risk));
  }
  return out;
}

}  // namespace oracle
