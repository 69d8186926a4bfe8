#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hal/cluster.hpp"
#include "hal/corpus.hpp"
#include "hal/scoring.hpp"

namespace hal::configurator {

using scoring::AssessedMap;

/// Node set in ascending name order.
struct Configuration {
  std::vector<NodeIdentity> nodes;

  std::vector<std::string> names() const;
  /// Names joined by ';'.
  std::string key() const;
};

/// Sorts by name and rejects duplicate names.
Configuration make_configuration(std::vector<NodeIdentity> nodes);

enum class ShareSource { Products, Cluster, Both };
std::string_view to_string(ShareSource source);

struct SharedCve {
  std::string cve_id;
  ShareSource source = ShareSource::Products;

  bool operator==(const SharedCve&) const = default;
};

using NodePair = std::pair<std::string, std::string>;

struct RiskReport {
  Configuration configuration;
  double security = 0.0;
  double resilience = 0.0;
  std::size_t rank = 0;  // 1-based after advise()
  /// Filled only when explanations are requested.
  std::map<NodePair, std::vector<SharedCve>> shared_detail;
};

/// CVEs whose affected products intersect the node's product keys.
std::set<std::string> vulnerabilities_of(const NodeIdentity& node, const CorpusSnapshot& snapshot);

/// CVEs hitting both nodes by product, plus every member (hitting a or b) of a
/// cluster group that reaches both nodes. Sorted by id; a CVE shared both ways
/// appears once as ShareSource::Both. Throws when a and b are the same node.
std::vector<SharedCve> shared_vulnerabilities(const NodeIdentity& a, const NodeIdentity& b,
                                              const CorpusSnapshot& snapshot,
                                              const cluster::ClusterAssignment& clusters);

/// Sum over nodes (name order) of the node subtotal, each subtotal summed in
/// ascending CVE id. A CVE on k nodes counts k times.
double security_risk(const Configuration& config, const AssessedMap& assessed, const CorpusSnapshot& snapshot);

/// Sum over unordered node pairs (lexicographic) of the pair subtotal over
/// shared_vulnerabilities, in ascending CVE id.
double resil_risk(const Configuration& config, const AssessedMap& assessed, const CorpusSnapshot& snapshot,
                  const cluster::ClusterAssignment& clusters);

/// Streams all C(|catalog|, n) node combinations in lexicographic name order.
/// The callback returns false to stop early.
void for_each_configuration(const std::vector<NodeIdentity>& catalog, std::size_t n,
                            const std::function<bool(const Configuration&)>& visit);
std::vector<Configuration> enumerate_configurations(const std::vector<NodeIdentity>& catalog, std::size_t n);

/// Binomial coefficient; saturates at SIZE_MAX.
std::size_t combinations(std::size_t total, std::size_t n);

enum class PolicyKind { ResilienceFirst, SecurityFirst, Weighted };

struct Policy {
  PolicyKind kind = PolicyKind::ResilienceFirst;
  double alpha = 0.5;  // weight of resilience for Weighted

  static Policy parse(std::string_view name, double alpha = 0.5);
  std::string name() const;
};

/// Orders reports by the policy, then by node names. True when a ranks first.
bool ranks_before(const RiskReport& a, const RiskReport& b, const Policy& policy);

/// Evaluates every configuration of n catalog nodes and returns them sorted,
/// best first. The head is the recommendation.
std::vector<RiskReport> advise(const std::vector<NodeIdentity>& catalog, std::size_t n, const Policy& policy,
                               const AssessedMap& assessed, const CorpusSnapshot& snapshot,
                               const cluster::ClusterAssignment& clusters, bool explain = false);

/// Precomputed per-node and per-pair subtotals over a catalog. Results are
/// bit-identical to security_risk / resil_risk.
class RiskTable {
 public:
  RiskTable(const std::vector<NodeIdentity>& catalog, const AssessedMap& assessed, const CorpusSnapshot& snapshot,
            const cluster::ClusterAssignment& clusters);

  /// Catalog in name order.
  const std::vector<NodeIdentity>& catalog() const { return catalog_; }
  /// indices into catalog(), ascending
  double security(const std::vector<std::size_t>& nodes) const;
  double resilience(const std::vector<std::size_t>& nodes) const;
  /// Sum over pairs of sum over shared CVEs of value(v), canonical order.
  double pair_sum(const std::vector<std::size_t>& nodes, const std::function<double(const std::string&)>& value) const;
  const std::vector<SharedCve>& shared(std::size_t i, std::size_t j) const;
  const std::vector<std::string>& vulnerabilities(std::size_t i) const { return node_cves_[i]; }

 private:
  std::vector<NodeIdentity> catalog_;
  std::vector<std::vector<std::string>> node_cves_;
  std::vector<double> node_total_;
  std::vector<std::vector<std::vector<SharedCve>>> pair_cves_;  // [i][j], i < j
  std::vector<std::vector<double>> pair_total_;
};

/// JSON `{"version":1,"policy":...,"ranking":[{rank,nodes,security,resilience}]}`.
void write_ranking_json(std::ostream& out, const std::vector<RiskReport>& ranking, const Policy& policy,
                        std::size_t limit = SIZE_MAX, bool explain = false);
/// CSV `rank,nodes,security,resilience`; nodes joined by ';'.
void write_ranking_csv(std::ostream& out, const std::vector<RiskReport>& ranking, std::size_t limit = SIZE_MAX);

}  // namespace hal::configurator
