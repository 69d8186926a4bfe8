#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hal/cluster.hpp"
#include "hal/configurator.hpp"
#include "hal/corpus.hpp"
#include "hal/predictor.hpp"
#include "hal/scoring.hpp"
#include "hal/textfeat.hpp"

namespace hal::harness {

using Embeddings = std::map<std::string, textfeat::FeatureVector>;
using predictor::Featurization;

constexpr std::uint64_t kDefaultSeed = 20230101;

Featurization parse_featurization(std::string_view name);
std::string_view to_string(Featurization featurization);

struct PipelineParams {
  Featurization predictor_features = Featurization::Bow;
  Featurization cluster_features = Featurization::Bow;
  cluster::Algorithm algorithm = cluster::Algorithm::Optics;
  double eps = 0.5;
  std::size_t min_samples = 5;
  double xi = 0.05;
  /// k-means cluster count; 0 picks round(sqrt(n / 2)).
  std::size_t k = 0;
  double bin_width = 1.0;
  std::size_t min_df = 2;
  textfeat::TokenizeOptions tokenize;
  predictor::Hyperparameters forest;
  std::size_t nodes = 4;
  configurator::Policy policy;
  bool explain = false;
  std::uint64_t seed = kDefaultSeed;
  std::shared_ptr<const Embeddings> embeddings;
};

struct PipelineResult {
  scoring::PredictionMap predictions;
  std::optional<predictor::ForestModel> model;
  cluster::ClusterAssignment clusters;
  scoring::AssessedMap assessed;
  std::vector<configurator::RiskReport> ranking;
};

/// Bag-of-words or embedding vectors for the given CVE ids.
std::vector<cluster::Point> featurize(const std::vector<std::pair<std::string, std::string>>& id_and_text,
                                      Featurization featurization, const textfeat::Vocabulary* vocabulary,
                                      const Embeddings* embeddings);

/// Trains the score model on the snapshot's Analyzed CVEs.
predictor::ForestModel train_score_model(const CorpusSnapshot& snapshot, const PipelineParams& params);

/// Predicted scores for every Received CVE in the snapshot.
scoring::PredictionMap predict_received(const CorpusSnapshot& snapshot, const predictor::ForestModel& model,
                                        const Embeddings* embeddings);

/// Clusters every description in the snapshot.
cluster::ClusterAssignment cluster_snapshot(const CorpusSnapshot& snapshot, const PipelineParams& params);

/// predict Received -> cluster -> assess -> advise.
PipelineResult run_pipeline(const CorpusSnapshot& snapshot, const PipelineParams& params);

// ---------------------------------------------------------------------------
// Timeline

struct MonthlyReportRow {
  std::string month;  // YYYY-MM
  std::vector<std::string> advised_nodes;
  double security = 0.0;
  double resilience = 0.0;
  /// Sum over shared CVEs of the advised configuration of lazarus score x EPSS.
  double fig4_metric = 0.0;
  std::size_t injected = 0;
  std::size_t predicted = 0;
  std::size_t clusters = 0;
  /// Received records that became Analyzed during the month.
  std::size_t transitions = 0;

  bool operator==(const MonthlyReportRow&) const = default;
};

struct TimelineInputs {
  std::vector<CveRecord> feed;
  std::vector<EpssEntry> epss;
  std::set<std::string> exploited_ids;
  std::vector<NodeIdentity> catalog;
};

/// Called after each simulated month with its snapshot and pipeline output.
using MonthObserver = std::function<void(std::size_t month, const CorpusSnapshot&, const PipelineResult&)>;

/// Month k (1-based) uses the feed as it stood at the end of the k-th month
/// after `cutoff`; the predictor is retrained every month.
std::vector<MonthlyReportRow> simulate_timeline(const TimelineInputs& inputs, Date cutoff, std::size_t months,
                                                const PipelineParams& params, const MonthObserver& observer = {});

// ---------------------------------------------------------------------------
// Predictor benchmark

struct LabeledText {
  std::string id;
  std::string description;
  double score = 0.0;
};

/// Analyzed records with their official base plus Received records with the
/// generator's hidden score.
std::vector<LabeledText> labeled_dataset(const GeneratedDataset& dataset);

/// Same texts, scores permuted by a seeded shuffle.
std::vector<LabeledText> shuffle_labels(std::vector<LabeledText> dataset, std::uint64_t seed);

struct BenchRow {
  double accuracy = 0.0;
  double rmse = 0.0;
  double train_time = 0.0;
  double infer_time = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  /// Share of the most frequent bin among the test scores.
  double majority_frequency = 0.0;
  bool stratified = true;
  std::vector<std::string> warnings;
};

/// Seeded split with `split_fraction` of each bin used for training. Falls
/// back to an unstratified split when a bin has fewer than two members.
BenchRow bench_predictor(const std::vector<LabeledText>& dataset, double split_fraction, std::uint64_t seed,
                         const PipelineParams& params);

// ---------------------------------------------------------------------------
// Clustering comparison

struct ComparisonRow {
  cluster::Algorithm algorithm;
  Featurization featurization;
  /// Shared-CVE risk of the advised configuration measured with lazarus scores.
  double risk = 0.0;
  double security = 0.0;
  double resilience = 0.0;
  std::size_t clusters = 0;
  std::vector<std::string> advised_nodes;
};

std::vector<ComparisonRow> compare_clusterings(const CorpusSnapshot& snapshot,
                                               const std::vector<cluster::Algorithm>& algorithms,
                                               const std::vector<Featurization>& featurizations,
                                               const PipelineParams& params);
void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { Csv, Json };
ReportFormat parse_report_format(std::string_view name);

/// CSV columns `month,security,resilience,fig4_metric,injected,predicted,clusters`.
void write_report(std::ostream& out, const std::vector<MonthlyReportRow>& rows, ReportFormat format);
void emit_report(const std::vector<MonthlyReportRow>& rows, ReportFormat format, const std::filesystem::path& path);
std::vector<MonthlyReportRow> parse_report_json(std::istream& in);

}  // namespace hal::harness
