#include <gtest/gtest.h>

#include <sstream>

#include "hal/configurator.hpp"
#include "hal/errors.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace hal;
using namespace hal::configurator;

namespace {

struct World {
  CorpusSnapshot snapshot;
  scoring::AssessedMap assessed;
  cluster::ClusterAssignment clusters;
};

CveRecord cve(std::string id, double base, std::set<std::string> products) {
  CveRecord r;
  r.id = std::move(id);
  r.description = "d";
  r.published = r.last_modified = Date(2023, 1, 1);  // fresh: oldness 1
  r.status = CveStatus::Analyzed;
  r.cvss_base = base;
  r.affected_products = std::move(products);
  return r;
}

const std::vector<NodeIdentity> kCatalog = {
    {"A", {"a:a:1"}}, {"B", {"b:b:1"}}, {"C", {"c:c:1"}}, {"D", {"d:d:1"}}, {"E", {"e:e:1"}}};

World world(const std::vector<CveRecord>& records, std::map<std::string, int> labels = {}) {
  World w;
  w.snapshot = build_snapshot(records, {}, {}, kCatalog, Date(2023, 1, 1));
  w.assessed = scoring::assess_all(w.snapshot, {});
  w.clusters.labels = std::move(labels);
  for (const auto& [id, r] : w.snapshot.records()) w.clusters.labels.try_emplace(id, cluster::kNoise);
  return w;
}

const NodeIdentity& node(const std::string& name) {
  return *std::find_if(kCatalog.begin(), kCatalog.end(), [&](const auto& n) { return n.name == name; });
}

}  // namespace

TEST(Shared, ProductAndClusterSources) {
  const auto w = world({cve("CVE-2020-0001", 5, {"a:a:1", "b:b:1"}), cve("CVE-2020-0002", 4, {"a:a:1"}),
                        cve("CVE-2020-0003", 3, {"c:c:1"}), cve("CVE-2020-0004", 2, {"a:a:1", "c:c:1"})},
                       {{"CVE-2020-0002", 0}, {"CVE-2020-0003", 0}, {"CVE-2020-0004", 0}});
  const auto ab = shared_vulnerabilities(node("A"), node("B"), w.snapshot, w.clusters);
  EXPECT_EQ(ab, (std::vector<SharedCve>{{"CVE-2020-0001", ShareSource::Products}}));
  const auto ac = shared_vulnerabilities(node("A"), node("C"), w.snapshot, w.clusters);
  EXPECT_EQ(ac, (std::vector<SharedCve>{{"CVE-2020-0002", ShareSource::Cluster},
                                        {"CVE-2020-0003", ShareSource::Cluster},
                                        {"CVE-2020-0004", ShareSource::Both}}));
  EXPECT_THROW(shared_vulnerabilities(node("A"), node("A"), w.snapshot, w.clusters), ValidationError);
}

TEST(Risk, DisjointAndFullyShared) {
  const auto disjoint = world({cve("CVE-2020-0001", 5, {"a:a:1"}), cve("CVE-2020-0002", 4, {"b:b:1"})});
  const auto ab = make_configuration({node("A"), node("B")});
  EXPECT_EQ(resil_risk(ab, disjoint.assessed, disjoint.snapshot, disjoint.clusters), 0.0);
  EXPECT_EQ(security_risk(ab, disjoint.assessed, disjoint.snapshot), 5.0 + 4.0);

  const auto shared = world({cve("CVE-2020-0001", 5, {"a:a:1", "b:b:1", "c:c:1"})});
  const auto abc = make_configuration({node("C"), node("A"), node("B")});
  EXPECT_EQ(abc.names(), (std::vector<std::string>{"A", "B", "C"}));
  EXPECT_EQ(security_risk(abc, shared.assessed, shared.snapshot), 15.0);
  EXPECT_EQ(resil_risk(abc, shared.assessed, shared.snapshot, shared.clusters), 15.0);
  EXPECT_THROW(make_configuration({node("A"), node("A")}), ValidationError);
}

TEST(Risk, MonotoneInVulnerabilities) {
  std::vector<CveRecord> records = {cve("CVE-2020-0001", 5, {"a:a:1", "b:b:1"})};
  const auto ab = make_configuration({node("A"), node("B")});
  auto before = world(records);
  records.push_back(cve("CVE-2020-0002", 1, {"a:a:1"}));
  auto after = world(records);
  EXPECT_GE(security_risk(ab, after.assessed, after.snapshot), security_risk(ab, before.assessed, before.snapshot));
  records.erase(records.begin());
  auto removed = world(records);
  EXPECT_LE(resil_risk(ab, removed.assessed, removed.snapshot, removed.clusters),
            resil_risk(ab, after.assessed, after.snapshot, after.clusters));
}

TEST(Enumerate, CountsAndOrder) {
  EXPECT_EQ(combinations(16, 4), 1820u);
  EXPECT_EQ(combinations(3, 5), 0u);
  const auto configs = enumerate_configurations(kCatalog, 3);
  EXPECT_EQ(configs.size(), 10u);
  EXPECT_EQ(configs.front().key(), "A;B;C");
  EXPECT_EQ(configs.back().key(), "C;D;E");
  EXPECT_THROW(enumerate_configurations(kCatalog, 6), ValidationError);
  std::size_t visited = 0;
  for_each_configuration(kCatalog, 2, [&](const Configuration&) { return ++visited < 3; });
  EXPECT_EQ(visited, 3u);
}

TEST(Advise, MatchesNaiveOracleAndTieBreaksByName) {
  const auto w = world({cve("CVE-2020-0001", 5, {"a:a:1", "b:b:1"}), cve("CVE-2020-0002", 4, {"c:c:1", "d:d:1"}),
                        cve("CVE-2020-0003", 3, {"e:e:1"}), cve("CVE-2020-0004", 2.5, {"a:a:1"}),
                        cve("CVE-2020-0005", 2.5, {"b:b:1", "e:e:1"})},
                       {{"CVE-2020-0003", 0}, {"CVE-2020-0004", 0}});
  const auto ranking = advise(kCatalog, 3, Policy{}, w.assessed, w.snapshot, w.clusters);
  const auto naive = oracle::naive_all(kCatalog, 3, w.snapshot, w.assessed, w.clusters);
  ASSERT_EQ(ranking.size(), naive.size());
  std::map<std::vector<std::string>, oracle::ConfigRisk> by_names;
  for (const auto& r : naive) by_names[r.names] = r;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const auto& o = by_names.at(ranking[i].configuration.names());
    EXPECT_EQ(ranking[i].security, o.security);
    EXPECT_EQ(ranking[i].resilience, o.resilience);
    EXPECT_EQ(ranking[i].rank, i + 1);
    if (i > 0) EXPECT_FALSE(ranks_before(ranking[i], ranking[i - 1], Policy{}));
  }
}

TEST(Advise, EqualRisksPreferAlphabeticalNodes) {
  const auto w = world({});
  const auto ranking = advise(kCatalog, 2, Policy{}, w.assessed, w.snapshot, w.clusters);
  EXPECT_EQ(ranking.front().configuration.key(), "A;B");
  EXPECT_EQ(ranking.back().configuration.key(), "D;E");
}

TEST(Policy, OrderingsDiffer) {
  RiskReport secure{make_configuration({node("A")}), 1.0, 9.0};
  RiskReport resilient{make_configuration({node("B")}), 9.0, 1.0};
  EXPECT_TRUE(ranks_before(resilient, secure, Policy::parse("resilience_first")));
  EXPECT_TRUE(ranks_before(secure, resilient, Policy::parse("security_first")));
  EXPECT_TRUE(ranks_before(secure, resilient, Policy::parse("weighted", 0.2)));
  EXPECT_TRUE(ranks_before(resilient, secure, Policy::parse("weighted", 0.8)));
  EXPECT_THROW(Policy::parse("fastest"), ValidationError);
  EXPECT_THROW(Policy::parse("weighted", 1.5), ValidationError);
}

TEST(Output, JsonAndCsvLayouts) {
  const auto w = world({cve("CVE-2020-0001", 5, {"a:a:1", "b:b:1"})});
  const auto ranking = advise(kCatalog, 2, Policy{}, w.assessed, w.snapshot, w.clusters, true);
  std::ostringstream js, cs;
  write_ranking_json(js, ranking, Policy{}, 3, true);
  const auto doc = nlohmann::json::parse(js.str());
  EXPECT_EQ(doc.at("version"), 1);
  EXPECT_EQ(doc.at("count"), 10);
  EXPECT_EQ(doc.at("ranking").size(), 3u);
  EXPECT_EQ(doc.at("ranking")[0].at("rank"), 1);
  write_ranking_csv(cs, ranking, 2);
  const auto csv = cs.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "rank,nodes,security,resilience");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
