#include <gtest/gtest.h>

#include <sstream>

#include <fmt/core.h>

#include "hal/cluster.hpp"
#include "hal/errors.hpp"
#include "hal/rng.hpp"
#include "oracles.hpp"

using namespace hal;
using namespace hal::cluster;

namespace {

Point pt(std::string id, std::vector<double> v) { return {std::move(id), textfeat::FeatureVector{std::move(v)}}; }

// Two tight groups around orthogonal directions plus scattered noise.
std::vector<Point> two_groups(std::uint64_t seed, std::size_t per_group = 12) {
  Rng rng(seed);
  std::vector<Point> points;
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t i = 0; i < per_group; ++i) {
      std::vector<double> v(8, 0.0);
      v[g] = 1.0;
      for (double& x : v) x += 0.03 * rng.normal();
      points.push_back(pt(fmt::format("g{}-{:02}", g, i), v));
    }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<double> v(8);
    for (double& x : v) x = rng.normal();
    v[0] = v[1] = 0;
    points.push_back(pt(fmt::format("n-{}", i), v));
  }
  return points;
}

std::set<std::set<std::string>> partition(const ClusterAssignment& a) {
  const auto groups = shared_groups(a);
  return {groups.begin(), groups.end()};
}

}  // namespace

TEST(Dbscan, IdenticalVectorsFormOneCluster) {
  const std::vector<Point> p = {pt("a", {1, 0}), pt("b", {1, 0}), pt("c", {1, 0})};
  const auto a = dbscan(p, 0.1, 2);
  EXPECT_EQ(a.labels, (std::map<std::string, int>{{"a", 0}, {"b", 0}, {"c", 0}}));
}

TEST(Dbscan, FarApartPointsAreNoise) {
  const std::vector<Point> p = {pt("a", {1, 0, 0}), pt("b", {0, 1, 0}), pt("c", {0, 0, 1})};
  for (const auto& [id, label] : dbscan(p, 0.5, 2).labels) EXPECT_EQ(label, kNoise);
}

TEST(Dbscan, TwoGroupsMatchBruteForce) {
  const auto points = two_groups(5);
  const auto a = dbscan(points, 0.05, 4);
  const auto o = oracle::brute_dbscan(points, 0.05, 4);
  EXPECT_EQ(a.labels, o.labels);
  EXPECT_EQ(a.core_points, o.core);
  EXPECT_EQ(a.cluster_count(), 2u);
}

TEST(Dbscan, InputOrderDoesNotMatter) {
  auto points = two_groups(6);
  const auto a = dbscan(points, 0.05, 4);
  std::reverse(points.begin(), points.end());
  EXPECT_EQ(dbscan(points, 0.05, 4).labels, a.labels);
}

TEST(Dbscan, Errors) {
  const std::vector<Point> p = {pt("a", {1, 0})};
  EXPECT_THROW(dbscan(p, 0.0, 2), ValidationError);
  EXPECT_THROW(dbscan(std::vector<Point>{}, 0.5, 2), ValidationError);
  const std::vector<Point> mixed = {pt("a", {1, 0}), pt("b", {1, 0, 0})};
  EXPECT_THROW(dbscan(mixed, 0.5, 2), ValidationError);
}

TEST(Optics, AgreesWithDbscanOnSeparatedGroups) {
  const auto points = two_groups(7);
  const auto o = optics(points, 4, 0.05);
  EXPECT_EQ(partition(o).size(), 2u);
  const auto d = dbscan(points, 0.05, 4);
  const auto po = partition(o), pd = partition(d);
  for (const auto& group : pd) {
    bool contained = false;
    for (const auto& g : po) contained = contained || std::includes(g.begin(), g.end(), group.begin(), group.end());
    EXPECT_TRUE(contained);
  }
  EXPECT_EQ(o.ordering.size(), points.size());
  EXPECT_EQ(o.reachability.size(), points.size());
  EXPECT_TRUE(std::isinf(o.reachability.front()));
}

TEST(Optics, SinglePointAndUniformNoise) {
  EXPECT_EQ(optics(std::vector<Point>{pt("a", {1, 0})}, 2, 0.05).labels.at("a"), kNoise);
  std::vector<Point> basis;
  for (std::size_t i = 0; i < 20; ++i) {
    std::vector<double> v(20, 0.0);
    v[i] = 1.0;
    basis.push_back(pt(fmt::format("e{:02}", i), v));
  }
  // Equidistant points: the xi method sees only the root steep-down/steep-up
  // pair, so everything lands in one cluster (scikit-learn behaves the same).
  const auto flat = optics(basis, 5, 0.05);
  EXPECT_EQ(flat.cluster_count(), 1u);
  EXPECT_EQ(shared_groups(flat).front().size(), basis.size());
  EXPECT_THROW(optics(basis, 5, 0.0), ValidationError);
  EXPECT_THROW(optics(basis, 5, 1.0), ValidationError);
}

TEST(Kmeans, Extremes) {
  const auto points = two_groups(8, 5);
  const auto each = kmeans_baseline(points, points.size(), 1);
  EXPECT_EQ(each.cluster_count(), points.size());
  EXPECT_NEAR(each.inertia, 0.0, 1e-12);
  const auto one = kmeans_baseline(points, 1, 1);
  for (const auto& [id, label] : one.labels) EXPECT_EQ(label, 0);
  EXPECT_EQ(kmeans_baseline(points, 3, 42).labels, kmeans_baseline(points, 3, 42).labels);
  EXPECT_THROW(kmeans_baseline(points, points.size() + 1, 1), ValidationError);
  EXPECT_THROW(kmeans_baseline(points, 0, 1), ValidationError);
}

TEST(SharedGroups, DropsSingletonsAndNoise) {
  ClusterAssignment a;
  a.labels = {{"a", 0}, {"b", 0}, {"c", 1}, {"d", kNoise}};
  EXPECT_EQ(shared_groups(a), (std::vector<std::set<std::string>>{{"a", "b"}}));
  a.labels = {{"a", kNoise}, {"b", kNoise}};
  EXPECT_TRUE(shared_groups(a).empty());
}

TEST(Export, CsvLayouts) {
  const auto o = optics(two_groups(9, 6), 3, 0.05);
  std::ostringstream labels, reach;
  write_assignment_csv(labels, o);
  write_reachability_csv(reach, o);
  EXPECT_EQ(labels.str().substr(0, 13), "cve_id,label\n");
  EXPECT_EQ(reach.str().substr(0, 28), "order,cve_id,reachability\n0,");
  EXPECT_NE(reach.str().find(",inf\n"), std::string::npos);
}
