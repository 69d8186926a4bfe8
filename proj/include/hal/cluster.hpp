#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hal/textfeat.hpp"

namespace hal::cluster {

using textfeat::FeatureVector;

struct Point {
  std::string id;
  FeatureVector vector;
};

enum class Algorithm { Dbscan, Optics, Kmeans };

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

constexpr int kNoise = -1;

struct ClusterAssignment {
  std::map<std::string, int> labels;  // -1 = noise, otherwise dense 0..k-1
  Algorithm algorithm = Algorithm::Optics;
  double eps = 0.0;
  std::size_t min_samples = 0;
  double xi = 0.0;
  std::size_t k = 0;
  std::uint64_t seed = 0;

  std::set<std::string> core_points;  // DBSCAN
  std::vector<std::string> ordering;  // OPTICS cluster order
  std::vector<double> reachability;   // OPTICS, aligned with `ordering`; +inf for the start of each component
  double inertia = 0.0;               // k-means

  std::size_t cluster_count() const;
};

/// Points are processed in ascending id order. p is core when at least
/// `min_samples` points (itself included) lie within cosine distance `eps`;
/// a border point joins the first cluster that reaches it.
ClusterAssignment dbscan(std::span<const Point> points, double eps, std::size_t min_samples);

/// OPTICS with unbounded eps and xi steep-area cluster extraction, with
/// predecessor correction. `min_cluster_size` of 0 means `min_samples`.
/// Only the innermost (leaf) clusters receive labels.
ClusterAssignment optics(std::span<const Point> points, std::size_t min_samples, double xi,
                         std::size_t min_cluster_size = 0);

/// Lloyd's algorithm on the unit vectors with k-means++ seeding; at most 300
/// iterations or until the relative inertia change drops below 1e-4.
ClusterAssignment kmeans_baseline(std::span<const Point> points, std::size_t k, std::uint64_t seed);

/// One id set per non-noise label with at least two members, in label order.
std::vector<std::set<std::string>> shared_groups(const ClusterAssignment& assignment);

/// CSV `cve_id,label`.
void write_assignment_csv(std::ostream& out, const ClusterAssignment& assignment);
/// CSV `order,cve_id,reachability` (OPTICS only; `inf` for undefined reachability).
void write_reachability_csv(std::ostream& out, const ClusterAssignment& assignment);

}  // namespace hal::cluster
