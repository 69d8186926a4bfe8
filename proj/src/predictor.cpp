#include "hal/predictor.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <thread>

#include <fmt/core.h>

#include "hal/errors.hpp"
#include "hal/rng.hpp"
#include "json.hpp"

namespace hal::predictor {

// ---------------------------------------------------------------------------
// Binning

ScoreBinning::ScoreBinning(double width) : width_(width) {
  if (!(width > 0.0 && width <= 10.0)) throw ValidationError(fmt::format("bin width {} outside (0, 10]", width));
  count_ = static_cast<std::size_t>(std::ceil(10.0 / width - 1e-9));
}

double ScoreBinning::lower(std::size_t bin) const { return static_cast<double>(bin) * width_; }

double ScoreBinning::upper(std::size_t bin) const {
  return bin + 1 >= count_ ? 10.0 : static_cast<double>(bin + 1) * width_;
}

double ScoreBinning::representative(std::size_t bin) const { return (lower(bin) + upper(bin)) / 2.0; }

std::string ScoreBinning::label(std::size_t bin) const {
  return fmt::format("[{},{}{}", lower(bin), upper(bin), bin + 1 >= count_ ? "]" : ")");
}

std::size_t ScoreBinning::bin_of(double score) const {
  if (!(score >= 0.0 && score <= 10.0)) throw ValidationError(fmt::format("score {} outside [0, 10]", score));
  const auto k = static_cast<std::size_t>(std::floor(score / width_ + 1e-9));
  return std::min(k, count_ - 1);
}

// ---------------------------------------------------------------------------
// Trees

int DecisionTree::classify(std::span<const double> x) const {
  int i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[i].label;
}

std::size_t DecisionTree::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (nodes[i].feature >= 0) {
      stack.emplace_back(nodes[i].left, d + 1);
      stack.emplace_back(nodes[i].right, d + 1);
    }
  }
  return deepest;
}

namespace {

struct TrainingSet {
  std::vector<double> x;  // row-major n x d
  std::vector<int> y;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t classes = 0;

  double at(std::size_t row, std::size_t col) const { return x[row * d + col]; }
};

int majority(const std::vector<std::size_t>& counts) {
  // first maximum == lowest bin on ties
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& data, const Hyperparameters& hp, std::size_t mtry, std::uint64_t seed)
      : data_(data), hp_(hp), mtry_(mtry), rng_(seed) {}

  DecisionTree build() {
    std::vector<std::size_t> sample(data_.n);
    for (auto& s : sample) s = rng_.index(data_.n);
    grow(sample, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // sum over children of sum_c count_c^2 / n_child
  };

  int grow(std::vector<std::size_t>& rows, std::size_t depth) {
    std::vector<std::size_t> counts(data_.classes, 0);
    for (auto r : rows) ++counts[data_.y[r]];
    const int node = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[node].label = majority(counts);

    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
    if (pure || depth >= hp_.max_depth || rows.size() < 2 * hp_.min_leaf) return node;

    const Split split = best_split(rows, counts);
    if (split.feature < 0) return node;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (data_.at(r, split.feature) <= split.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int rgt = grow(right, depth + 1);
    auto& n = tree_.nodes[node];
    n.feature = split.feature;
    n.threshold = split.threshold;
    n.left = l;
    n.right = rgt;
    return node;
  }

  Split best_split(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& counts) {
    const double n = static_cast<double>(rows.size());
    double parent = 0.0;
    for (auto c : counts) parent += static_cast<double>(c) * static_cast<double>(c);
    parent /= n;

    Split best;
    best.score = parent + 1e-12;  // must strictly reduce impurity

    // Draw features without replacement until mtry non-constant ones were examined.
    std::vector<std::size_t> features(data_.d);
    std::iota(features.begin(), features.end(), 0);
    std::vector<std::pair<double, int>> column(rows.size());
    std::vector<std::size_t> left_counts(data_.classes);
    std::size_t examined = 0;
    for (std::size_t k = 0; k < data_.d && examined < mtry_; ++k) {
      std::swap(features[k], features[k + rng_.index(data_.d - k)]);
      const auto f = features[k];
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {data_.at(rows[i], f), data_.y[rows[i]]};
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      ++examined;

      std::fill(left_counts.begin(), left_counts.end(), 0);
      double left_sq = 0.0;
      double right_sq = 0.0;
      for (auto c : counts) right_sq += static_cast<double>(c) * static_cast<double>(c);
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        const int c = column[i].second;
        const double lc = static_cast<double>(left_counts[c]);
        const double rc = static_cast<double>(counts[c] - left_counts[c]);
        left_sq += 2.0 * lc + 1.0;
        right_sq -= 2.0 * rc - 1.0;
        ++left_counts[c];
        const std::size_t nl = i + 1;
        const std::size_t nr = column.size() - nl;
        if (column[i].first == column[i + 1].first) continue;
        if (nl < hp_.min_leaf || nr < hp_.min_leaf) continue;
        const double score = left_sq / static_cast<double>(nl) + right_sq / static_cast<double>(nr);
        if (score > best.score) {
          const double a = column[i].first;
          const double b = column[i + 1].first;
          double mid = a + (b - a) / 2.0;
          if (!(mid >= a && mid < b)) mid = a;
          best = {static_cast<int>(f), mid, score};
        }
      }
    }
    return best;
  }

  const TrainingSet& data_;
  const Hyperparameters& hp_;
  std::size_t mtry_;
  Rng rng_;
  DecisionTree tree_;
};

}  // namespace

ForestModel train_forest(std::span<const Example> examples, const ScoreBinning& binning,
                         const Hyperparameters& hyperparameters, std::uint64_t seed) {
  if (examples.empty()) throw ValidationError("cannot train a forest on an empty training set");
  if (hyperparameters.tree_count == 0) throw ValidationError("tree_count must be at least 1");
  if (hyperparameters.min_leaf == 0) throw ValidationError("min_leaf must be at least 1");
  const auto start = std::chrono::steady_clock::now();

  TrainingSet data;
  data.n = examples.size();
  data.d = examples.front().vector.dimension();
  data.classes = binning.count();
  data.x.reserve(data.n * data.d);
  for (const auto& e : examples) {
    if (e.vector.dimension() != data.d) throw ValidationError("training vectors differ in dimension");
    if (e.bin >= data.classes) throw ValidationError(fmt::format("bin label {} out of range", e.bin));
    data.x.insert(data.x.end(), e.vector.values.begin(), e.vector.values.end());
    data.y.push_back(static_cast<int>(e.bin));
  }
  const std::size_t mtry = hyperparameters.features_per_split
                               ? std::min(hyperparameters.features_per_split, data.d)
                               : static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(data.d))));

  ForestModel model{.trees = {}, .binning = binning, .hyperparameters = hyperparameters, .seed = seed, .dimension = data.d, .vocabulary = {}};
  model.trees.resize(hyperparameters.tree_count);

  std::size_t workers = hyperparameters.threads ? hyperparameters.threads : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, hyperparameters.tree_count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < hyperparameters.tree_count;) {
      model.trees[t] = TreeBuilder(data, hyperparameters, mtry, mix_seed(seed, t)).build();
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  model.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return model;
}

PredictedScore predict_score(const ForestModel& model, const textfeat::FeatureVector& vector, std::string cve_id) {
  if (vector.dimension() != model.dimension) {
    throw ValidationError(
        fmt::format("vector dimension {} does not match model dimension {}", vector.dimension(), model.dimension));
  }
  std::vector<std::size_t> votes(model.binning.count(), 0);
  for (const auto& tree : model.trees) ++votes[tree.classify(vector.values)];
  const auto bin = static_cast<std::size_t>(majority(votes));
  return {std::move(cve_id), bin, model.binning.representative(bin),
          static_cast<double>(votes[bin]) / static_cast<double>(model.trees.size())};
}

Metrics evaluate(const ForestModel& model, std::span<const LabeledScore> test) {
  if (test.empty()) throw ValidationError("cannot evaluate on an empty test set");
  const auto start = std::chrono::steady_clock::now();
  std::size_t correct = 0;
  double squared = 0.0;
  for (const auto& t : test) {
    const auto p = predict_score(model, t.vector);
    if (p.bin == model.binning.bin_of(t.score)) ++correct;
    squared += (p.score - t.score) * (p.score - t.score);
  }
  Metrics m;
  m.infer_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.train_time = model.train_seconds;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  m.rmse = std::sqrt(squared / static_cast<double>(test.size()));
  return m;
}

// ---------------------------------------------------------------------------
// Serialization

using nlohmann::json;

namespace {
constexpr const char* kFormat = "hal-forest";
constexpr int kVersion = 1;
}  // namespace

void save_model(std::ostream& out, const ForestModel& model) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["seed"] = model.seed;
  j["dimension"] = model.dimension;
  j["featurization"] = model.featurization == Featurization::Bow ? "bow" : "emb";
  j["bin_width"] = model.binning.width();
  const auto& hp = model.hyperparameters;
  j["hyperparameters"] = {{"tree_count", hp.tree_count},
                          {"max_depth", hp.max_depth},
                          {"min_leaf", hp.min_leaf},
                          {"features_per_split", hp.features_per_split}};
  if (model.vocabulary) {
    const auto& v = *model.vocabulary;
    std::vector<std::size_t> df;
    for (std::size_t i = 0; i < v.size(); ++i) df.push_back(v.document_frequency(i));
    j["vocabulary"] = {{"terms", v.terms()},
                       {"document_frequency", df},
                       {"corpus_size", v.corpus_size()},
                       {"min_df", v.min_df()},
                       {"stem", v.options().stem}};
  }
  json trees = json::array();
  for (const auto& t : model.trees) {
    // one array per field keeps the file compact
    std::vector<int> feature, left, right, label;
    std::vector<double> threshold;
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      label.push_back(n.label);
    }
    trees.push_back(
        {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"label", label}});
  }
  j["trees"] = std::move(trees);
  out << j.dump() << '\n';
}

ForestModel load_model(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("model file: {}", e.what()));
  }
  try {
    if (j.at("format") != kFormat) throw FormatError("not a forest model file");
    if (j.at("version").get<int>() != kVersion) {
      throw FormatError(fmt::format("unsupported model version {}", j.at("version").get<int>()));
    }
    ForestModel m{.trees = {}, .binning = ScoreBinning(j.at("bin_width").get<double>()), .hyperparameters = {}, .vocabulary = {}};
    m.seed = j.at("seed").get<std::uint64_t>();
    m.dimension = j.at("dimension").get<std::size_t>();
    m.featurization = j.at("featurization") == "emb" ? Featurization::Emb : Featurization::Bow;
    const auto& hp = j.at("hyperparameters");
    m.hyperparameters.tree_count = hp.at("tree_count");
    m.hyperparameters.max_depth = hp.at("max_depth");
    m.hyperparameters.min_leaf = hp.at("min_leaf");
    m.hyperparameters.features_per_split = hp.at("features_per_split");
    if (auto it = j.find("vocabulary"); it != j.end()) {
      m.vocabulary = textfeat::Vocabulary::from_parts(
          it->at("terms").get<std::vector<std::string>>(),
          it->at("document_frequency").get<std::vector<std::size_t>>(), it->at("corpus_size"), it->at("min_df"),
          textfeat::TokenizeOptions{it->at("stem").get<bool>()});
    }
    for (const auto& t : j.at("trees")) {
      const auto feature = t.at("feature").get<std::vector<int>>();
      const auto threshold = t.at("threshold").get<std::vector<double>>();
      const auto left = t.at("left").get<std::vector<int>>();
      const auto right = t.at("right").get<std::vector<int>>();
      const auto label = t.at("label").get<std::vector<int>>();
      DecisionTree tree;
      for (std::size_t i = 0; i < feature.size(); ++i) {
        const int size = static_cast<int>(feature.size());
        if (label[i] < 0 || static_cast<std::size_t>(label[i]) >= m.binning.count() ||
            feature[i] >= static_cast<int>(m.dimension) ||
            (feature[i] >= 0 && (left[i] <= static_cast<int>(i) || left[i] >= size || right[i] <= static_cast<int>(i) ||
                                 right[i] >= size))) {
          throw FormatError("model file: corrupt tree node");
        }
        tree.nodes.push_back({feature[i], threshold[i], left[i], right[i], label[i]});
      }
      if (tree.nodes.empty()) throw FormatError("model file: empty tree");
      m.trees.push_back(std::move(tree));
    }
    if (m.trees.empty()) throw FormatError("model file: no trees");
    return m;
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("model file: {}", e.what()));
  }
}

}  // namespace hal::predictor
