#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hal/textfeat.hpp"

namespace hal::predictor {

/// Partition of [0, 10] into left-closed bins of equal width; the last bin is
/// closed at 10 and may be narrower when the width does not divide 10.
class ScoreBinning {
 public:
  explicit ScoreBinning(double width = 1.0);

  double width() const { return width_; }
  std::size_t count() const { return count_; }
  double lower(std::size_t bin) const;
  double upper(std::size_t bin) const;
  /// Midpoint of the bin, the score reported for a prediction.
  double representative(std::size_t bin) const;
  /// `[7,8)`, or `[9,10]` for the last bin.
  std::string label(std::size_t bin) const;

  /// Throws ValidationError outside [0, 10].
  std::size_t bin_of(double score) const;

  bool operator==(const ScoreBinning&) const = default;

 private:
  double width_;
  std::size_t count_;
};

inline std::size_t bin_score(double score, const ScoreBinning& binning) { return binning.bin_of(score); }

struct Hyperparameters {
  std::size_t tree_count = 100;
  std::size_t max_depth = 32;
  std::size_t min_leaf = 2;
  /// 0 selects floor(sqrt(d)).
  std::size_t features_per_split = 0;
  /// Worker threads for tree construction; 0 uses the hardware concurrency.
  std::size_t threads = 0;

  bool operator==(const Hyperparameters& o) const {
    return tree_count == o.tree_count && max_depth == o.max_depth && min_leaf == o.min_leaf &&
           features_per_split == o.features_per_split;
  }
};

/// Flattened tree; a node with feature < 0 is a leaf holding `label`.
struct DecisionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left = -1;
    int right = -1;
    int label = 0;

    bool operator==(const Node&) const = default;
  };
  std::vector<Node> nodes;

  int classify(std::span<const double> x) const;
  std::size_t depth() const;

  bool operator==(const DecisionTree&) const = default;
};

enum class Featurization { Bow, Emb };

struct ForestModel {
  std::vector<DecisionTree> trees;
  ScoreBinning binning;
  Hyperparameters hyperparameters;
  std::uint64_t seed = 0;
  std::size_t dimension = 0;
  Featurization featurization = Featurization::Bow;
  /// Present for bag-of-words models.
  std::optional<textfeat::Vocabulary> vocabulary;
  double train_seconds = 0.0;
};

struct Example {
  textfeat::FeatureVector vector;
  std::size_t bin = 0;
};

/// Bootstrap-sampled CART trees with Gini splits. Tree t draws from the stream
/// mix_seed(seed, t), so results do not depend on thread scheduling.
ForestModel train_forest(std::span<const Example> examples, const ScoreBinning& binning,
                         const Hyperparameters& hyperparameters, std::uint64_t seed);

struct PredictedScore {
  std::string cve_id;
  std::size_t bin = 0;
  double score = 0.0;
  double vote_fraction = 0.0;

  bool operator==(const PredictedScore&) const = default;
};

/// Majority vote; ties go to the lower bin.
PredictedScore predict_score(const ForestModel& model, const textfeat::FeatureVector& vector,
                             std::string cve_id = {});

struct Metrics {
  double accuracy = 0.0;
  double rmse = 0.0;
  double train_time = 0.0;  // seconds
  double infer_time = 0.0;  // seconds
};

struct LabeledScore {
  textfeat::FeatureVector vector;
  double score = 0.0;
};

Metrics evaluate(const ForestModel& model, std::span<const LabeledScore> test);

/// Versioned JSON model file: hyperparameters, binning, vocabulary and flattened trees.
void save_model(std::ostream& out, const ForestModel& model);
ForestModel load_model(std::istream& in);

}  // namespace hal::predictor
