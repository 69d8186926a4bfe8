#include "hal/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/core.h>

#include "hal/errors.hpp"
#include "hal/rng.hpp"

namespace hal::cluster {

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Dbscan:
      return "dbscan";
    case Algorithm::Optics:
      return "optics";
    case Algorithm::Kmeans:
      return "kmeans";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "dbscan") return Algorithm::Dbscan;
  if (name == "optics") return Algorithm::Optics;
  if (name == "kmeans") return Algorithm::Kmeans;
  throw ValidationError(fmt::format("unknown clustering algorithm '{}'", name));
}

std::size_t ClusterAssignment::cluster_count() const {
  int top = -1;
  for (const auto& [id, label] : labels) top = std::max(top, label);
  return static_cast<std::size_t>(top + 1);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Points sorted by id with cached norms. distance() matches textfeat::cosine_distance bit for bit.
class Space {
 public:
  explicit Space(std::span<const Point> points) {
    if (points.empty()) throw ValidationError("cannot cluster an empty point set");
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), 0);
    std::sort(order_.begin(), order_.end(), [&](auto a, auto b) { return points[a].id < points[b].id; });
    dim_ = points[order_[0]].vector.dimension();
    for (std::size_t i = 0; i < order_.size(); ++i) {
      const auto& p = points[order_[i]];
      if (i > 0 && p.id == ids_.back()) throw ValidationError(fmt::format("duplicate point id {}", p.id));
      if (p.vector.dimension() != dim_) throw ValidationError("points differ in dimension");
      ids_.push_back(p.id);
      vectors_.push_back(&p.vector.values);
      double sq = 0.0;
      for (double v : p.vector.values) sq += v * v;
      norms_.push_back(std::sqrt(sq));
    }
  }

  std::size_t size() const { return ids_.size(); }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  const std::vector<double>& vec(std::size_t i) const { return *vectors_[i]; }
  std::size_t dimension() const { return dim_; }

  double distance(std::size_t i, std::size_t j) const {
    const auto& a = *vectors_[i];
    const auto& b = *vectors_[j];
    double dot = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) dot += a[k] * b[k];
    if (norms_[i] == 0.0 || norms_[j] == 0.0) return 1.0;
    return std::clamp(1.0 - dot / (norms_[i] * norms_[j]), 0.0, 2.0);
  }

  void row(std::size_t i, std::vector<double>& out) const {
    out.resize(size());
    for (std::size_t j = 0; j < size(); ++j) out[j] = distance(i, j);
  }

 private:
  std::vector<std::size_t> order_;
  std::vector<std::string> ids_;
  std::vector<const std::vector<double>*> vectors_;
  std::vector<double> norms_;
  std::size_t dim_ = 0;
};

}  // namespace

// ---------------------------------------------------------------------------
// DBSCAN

ClusterAssignment dbscan(std::span<const Point> points, double eps, std::size_t min_samples) {
  if (!(eps > 0.0)) throw ValidationError(fmt::format("eps must be positive, got {}", eps));
  if (min_samples == 0) throw ValidationError("min_samples must be at least 1");
  const Space space(points);
  const std::size_t n = space.size();

  std::vector<double> row;
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    space.row(i, row);
    const auto count = static_cast<std::size_t>(std::count_if(row.begin(), row.end(), [&](double d) { return d <= eps; }));
    core[i] = count >= min_samples;
  }

  constexpr int kUnvisited = -2;
  std::vector<int> label(n, kUnvisited);
  int cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != kUnvisited || !core[i]) continue;
    label[i] = cluster;
    std::deque<std::size_t> queue{i};
    while (!queue.empty()) {
      const auto p = queue.front();
      queue.pop_front();
      space.row(p, row);
      for (std::size_t q = 0; q < n; ++q) {
        if (row[q] > eps || label[q] != kUnvisited) continue;
        label[q] = cluster;
        if (core[q]) queue.push_back(q);
      }
    }
    ++cluster;
  }

  ClusterAssignment out;
  out.algorithm = Algorithm::Dbscan;
  out.eps = eps;
  out.min_samples = min_samples;
  for (std::size_t i = 0; i < n; ++i) {
    out.labels.emplace(space.id(i), label[i] == kUnvisited ? kNoise : label[i]);
    if (core[i]) out.core_points.insert(space.id(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// OPTICS

namespace {

// Maximal steep region starting at `start`, allowing at most min_samples
// consecutive non-steep points that still move in the steep direction.
std::size_t extend_region(const std::vector<char>& steep, const std::vector<char>& xward, std::size_t start,
                          std::size_t min_samples) {
  std::size_t non_xward = 0;
  std::size_t end = start;
  for (std::size_t index = start; index < steep.size(); ++index) {
    if (steep[index]) {
      non_xward = 0;
      end = index;
    } else if (!xward[index]) {
      if (++non_xward > min_samples) break;
    } else {
      return end;
    }
  }
  return end;
}

struct SteepDownArea {
  std::size_t start;
  std::size_t end;
  double mib;
};

void update_filter(std::vector<SteepDownArea>& sdas, double mib, double xi_complement, const std::vector<double>& r) {
  if (std::isinf(mib)) {
    sdas.clear();
    return;
  }
  std::erase_if(sdas, [&](const SteepDownArea& s) { return !(mib <= r[s.start] * xi_complement); });
  for (auto& s : sdas) s.mib = std::max(s.mib, mib);
}

// Shrinks the cluster end until the end point's predecessor lies inside it.
bool correct_predecessor(const std::vector<double>& r, const std::vector<long>& predecessor_plot,
                         const std::vector<std::size_t>& ordering, std::size_t& s, std::size_t& e) {
  while (s < e) {
    if (r[s] > r[e]) return true;
    const long p_e = predecessor_plot[e];
    for (std::size_t i = s; i < e; ++i) {
      if (p_e == static_cast<long>(ordering[i])) return true;
    }
    --e;
  }
  return false;
}

std::vector<std::pair<std::size_t, std::size_t>> xi_clusters(std::vector<double> r,
                                                             const std::vector<long>& predecessor_plot,
                                                             const std::vector<std::size_t>& ordering, double xi,
                                                             std::size_t min_samples, std::size_t min_cluster_size) {
  const std::size_t n = r.size();
  r.push_back(kInf);
  const double xi_complement = 1.0 - xi;

  std::vector<char> steep_up(n), steep_down(n), down(n), up(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = r[i] / r[i + 1];  // NaN for 0/0 and inf/inf: every comparison false
    steep_up[i] = ratio <= xi_complement;
    steep_down[i] = ratio >= 1.0 / xi_complement;
    down[i] = ratio > 1.0;
    up[i] = ratio < 1.0;
  }

  std::vector<SteepDownArea> sdas;
  std::vector<std::pair<std::size_t, std::size_t>> clusters;
  std::size_t index = 0;
  double mib = 0.0;
  for (std::size_t steep_index = 0; steep_index < n; ++steep_index) {
    if (!(steep_up[steep_index] || steep_down[steep_index]) || steep_index < index) continue;
    mib = std::max(mib, *std::max_element(r.begin() + static_cast<long>(index), r.begin() + static_cast<long>(steep_index) + 1));

    if (steep_down[steep_index]) {
      update_filter(sdas, mib, xi_complement, r);
      const std::size_t d_end = extend_region(steep_down, up, steep_index, min_samples);
      sdas.push_back({steep_index, d_end, 0.0});
      index = d_end + 1;
      mib = r[index];
      continue;
    }

    update_filter(sdas, mib, xi_complement, r);
    const std::size_t u_start = steep_index;
    const std::size_t u_end = extend_region(steep_up, down, u_start, min_samples);
    index = u_end + 1;
    mib = r[index];

    std::vector<std::pair<std::size_t, std::size_t>> found;
    for (const auto& d : sdas) {
      std::size_t c_start = d.start;
      std::size_t c_end = u_end;
      if (r[c_end + 1] * xi_complement < d.mib) continue;
      const double d_max = r[d.start];
      if (d_max * xi_complement >= r[c_end + 1]) {
        while (r[c_start + 1] > r[c_end + 1] && c_start < d.end) ++c_start;
      } else if (r[c_end + 1] * xi_complement >= d_max) {
        while (r[c_end - 1] > d_max && c_end > u_start) --c_end;
      }
      if (!correct_predecessor(r, predecessor_plot, ordering, c_start, c_end)) continue;
      if (c_end - c_start + 1 < min_cluster_size) continue;
      if (c_start > d.end) continue;
      if (c_end < u_start) continue;
      found.emplace_back(c_start, c_end);
    }
    // smaller (inner) clusters first
    clusters.insert(clusters.end(), found.rbegin(), found.rend());
  }
  return clusters;
}

}  // namespace

ClusterAssignment optics(std::span<const Point> points, std::size_t min_samples, double xi,
                         std::size_t min_cluster_size) {
  if (!(xi > 0.0 && xi < 1.0)) throw ValidationError(fmt::format("xi must lie in (0, 1), got {}", xi));
  if (min_samples == 0) throw ValidationError("min_samples must be at least 1");
  const Space space(points);
  const std::size_t n = space.size();
  if (min_cluster_size == 0) min_cluster_size = min_samples;

  std::vector<double> row;
  std::vector<double> core(n, kInf);
  if (min_samples <= n) {
    for (std::size_t i = 0; i < n; ++i) {
      space.row(i, row);
      std::nth_element(row.begin(), row.begin() + static_cast<long>(min_samples - 1), row.end());
      core[i] = row[min_samples - 1];
    }
  }

  std::vector<double> reach(n, kInf);
  std::vector<long> predecessor(n, -1);
  std::vector<char> processed(n, 0);
  std::vector<std::size_t> ordering;
  ordering.reserve(n);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t point = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (processed[i]) continue;
      if (point == n || reach[i] < reach[point]) point = i;
    }
    processed[point] = 1;
    ordering.push_back(point);
    if (std::isinf(core[point])) continue;
    space.row(point, row);
    for (std::size_t q = 0; q < n; ++q) {
      if (processed[q]) continue;
      const double rdist = std::max(row[q], core[point]);
      if (rdist < reach[q]) {
        reach[q] = rdist;
        predecessor[q] = static_cast<long>(point);
      }
    }
  }

  std::vector<double> reach_plot(n);
  std::vector<long> predecessor_plot(n);
  for (std::size_t i = 0; i < n; ++i) {
    reach_plot[i] = reach[ordering[i]];
    predecessor_plot[i] = predecessor[ordering[i]];
  }
  const auto clusters = xi_clusters(reach_plot, predecessor_plot, ordering, xi, min_samples, min_cluster_size);

  std::vector<int> by_position(n, kNoise);
  int next_label = 0;
  for (const auto& [s, e] : clusters) {
    if (std::any_of(by_position.begin() + static_cast<long>(s), by_position.begin() + static_cast<long>(e) + 1,
                    [](int l) { return l != kNoise; })) {
      continue;
    }
    std::fill(by_position.begin() + static_cast<long>(s), by_position.begin() + static_cast<long>(e) + 1, next_label++);
  }

  ClusterAssignment out;
  out.algorithm = Algorithm::Optics;
  out.min_samples = min_samples;
  out.xi = xi;
  for (std::size_t pos = 0; pos < n; ++pos) {
    out.labels.emplace(space.id(ordering[pos]), by_position[pos]);
    out.ordering.push_back(space.id(ordering[pos]));
    out.reachability.push_back(reach_plot[pos]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// k-means

ClusterAssignment kmeans_baseline(std::span<const Point> points, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ValidationError("k must be at least 1");
  const Space space(points);
  const std::size_t n = space.size();
  const std::size_t d = space.dimension();
  if (k > n) throw ValidationError(fmt::format("k = {} exceeds the {} points", k, n));

  auto sq_dist = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
  };

  // k-means++ seeding
  Rng rng(mix_seed(seed));
  std::vector<std::vector<double>> centers;
  std::vector<char> chosen(n, 0);
  std::vector<double> nearest(n, kInf);
  auto add_center = [&](std::size_t i) {
    chosen[i] = 1;
    centers.push_back(space.vec(i));
    for (std::size_t j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], sq_dist(space.vec(j), centers.back()));
  };
  add_center(rng.index(n));
  while (centers.size() < k) {
    const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    if (total > 0.0) {
      add_center(rng.weighted(nearest));
    } else {
      add_center(static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin()));
    }
  }

  std::vector<std::size_t> assign(n, 0);
  double inertia = kInf;
  for (int iter = 0; iter < 300; ++iter) {
    double current = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = kInf;
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = sq_dist(space.vec(i), centers[c]);
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      assign[i] = best;
      current += best_d;
    }
    const double previous = inertia;
    inertia = current;
    if (current == 0.0 || (std::isfinite(previous) && std::abs(previous - current) / previous < 1e-4)) break;

    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (std::size_t j = 0; j < d; ++j) sums[assign[i]][j] += space.vec(i)[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its center
      for (std::size_t j = 0; j < d; ++j) centers[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
  }

  ClusterAssignment out;
  out.algorithm = Algorithm::Kmeans;
  out.k = k;
  out.seed = seed;
  out.inertia = inertia;
  std::map<std::size_t, int> dense;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = dense.try_emplace(assign[i], static_cast<int>(dense.size()));
    out.labels.emplace(space.id(i), it->second);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::set<std::string>> shared_groups(const ClusterAssignment& assignment) {
  std::map<int, std::set<std::string>> by_label;
  for (const auto& [id, label] : assignment.labels) {
    if (label != kNoise) by_label[label].insert(id);
  }
  std::vector<std::set<std::string>> groups;
  for (auto& [label, members] : by_label) {
    if (members.size() >= 2) groups.push_back(std::move(members));
  }
  return groups;
}

void write_assignment_csv(std::ostream& out, const ClusterAssignment& assignment) {
  out << "cve_id,label\n";
  for (const auto& [id, label] : assignment.labels) out << id << ',' << label << '\n';
}

void write_reachability_csv(std::ostream& out, const ClusterAssignment& assignment) {
  out << "order,cve_id,reachability\n";
  for (std::size_t i = 0; i < assignment.ordering.size(); ++i) {
    const double r = assignment.reachability[i];
    out << fmt::format("{},{},{}\n", i, assignment.ordering[i], std::isinf(r) ? std::string("inf") : fmt::format("{}", r));
  }
}

}  // namespace hal::cluster
