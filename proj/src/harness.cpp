#include "hal/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <istream>
#include <ostream>

#include <fmt/core.h>

#include "hal/errors.hpp"
#include "hal/rng.hpp"
#include "json.hpp"

namespace hal::harness {

Featurization parse_featurization(std::string_view name) {
  if (name == "bow") return Featurization::Bow;
  if (name == "emb") return Featurization::Emb;
  throw ValidationError(fmt::format("unknown featurization '{}'", name));
}

std::string_view to_string(Featurization featurization) {
  return featurization == Featurization::Bow ? "bow" : "emb";
}

std::vector<cluster::Point> featurize(const std::vector<std::pair<std::string, std::string>>& id_and_text,
                                      Featurization featurization, const textfeat::Vocabulary* vocabulary,
                                      const Embeddings* embeddings) {
  std::vector<cluster::Point> points;
  points.reserve(id_and_text.size());
  if (featurization == Featurization::Bow) {
    if (!vocabulary) throw ValidationError("bag-of-words featurization needs a vocabulary");
    for (const auto& [id, text] : id_and_text) points.push_back({id, textfeat::vectorize_tfidf(text, *vocabulary)});
    return points;
  }
  if (!embeddings) throw ValidationError("embedding featurization requested but no embedding file was loaded");
  for (const auto& [id, text] : id_and_text) {
    auto it = embeddings->find(id);
    if (it == embeddings->end()) throw ValidationError(fmt::format("no embedding for {}", id));
    points.push_back({id, it->second});
  }
  return points;
}

namespace {

std::vector<std::pair<std::string, std::string>> texts(const CorpusSnapshot& snapshot,
                                                        std::optional<CveStatus> status = std::nullopt) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [id, r] : snapshot.records()) {
    if (!status || r.status == *status) out.emplace_back(id, r.description);
  }
  return out;
}

std::vector<std::string> descriptions_of(const std::vector<std::pair<std::string, std::string>>& items) {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& [id, text] : items) out.push_back(text);
  return out;
}

predictor::ForestModel fit(const std::vector<std::pair<std::string, std::string>>& items,
                           const std::vector<double>& scores, const PipelineParams& params) {
  const predictor::ScoreBinning binning(params.bin_width);
  std::optional<textfeat::Vocabulary> vocabulary;
  if (params.predictor_features == Featurization::Bow) {
    const auto docs = descriptions_of(items);
    vocabulary = textfeat::build_vocabulary(docs, params.min_df, params.tokenize);
  }
  const auto points =
      featurize(items, params.predictor_features, vocabulary ? &*vocabulary : nullptr, params.embeddings.get());
  std::vector<predictor::Example> examples;
  examples.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) examples.push_back({points[i].vector, binning.bin_of(scores[i])});
  auto model = predictor::train_forest(examples, binning, params.forest, params.seed);
  model.featurization = params.predictor_features;
  model.vocabulary = std::move(vocabulary);
  return model;
}

}  // namespace

predictor::ForestModel train_score_model(const CorpusSnapshot& snapshot, const PipelineParams& params) {
  const auto items = texts(snapshot, CveStatus::Analyzed);
  if (items.empty()) throw ValidationError("no Analyzed CVEs to train the score predictor on");
  std::vector<double> scores;
  for (const auto& [id, text] : items) scores.push_back(*snapshot.find(id)->cvss_base);
  return fit(items, scores, params);
}

scoring::PredictionMap predict_received(const CorpusSnapshot& snapshot, const predictor::ForestModel& model,
                                        const Embeddings* embeddings) {
  const auto items = texts(snapshot, CveStatus::Received);
  const auto points =
      featurize(items, model.featurization, model.vocabulary ? &*model.vocabulary : nullptr, embeddings);
  scoring::PredictionMap out;
  for (const auto& p : points) out.emplace(p.id, predictor::predict_score(model, p.vector, p.id));
  return out;
}

cluster::ClusterAssignment cluster_snapshot(const CorpusSnapshot& snapshot, const PipelineParams& params) {
  const auto items = texts(snapshot);
  if (items.empty()) {
    cluster::ClusterAssignment empty;
    empty.algorithm = params.algorithm;
    return empty;
  }
  std::optional<textfeat::Vocabulary> vocabulary;
  if (params.cluster_features == Featurization::Bow) {
    vocabulary = textfeat::build_vocabulary(descriptions_of(items), params.min_df, params.tokenize);
  }
  const auto points =
      featurize(items, params.cluster_features, vocabulary ? &*vocabulary : nullptr, params.embeddings.get());
  switch (params.algorithm) {
    case cluster::Algorithm::Dbscan:
      return cluster::dbscan(points, params.eps, params.min_samples);
    case cluster::Algorithm::Optics:
      return cluster::optics(points, params.min_samples, params.xi);
    case cluster::Algorithm::Kmeans: {
      std::size_t k = params.k;
      if (k == 0) k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(points.size()) / 2.0)));
      k = std::clamp<std::size_t>(k, 1, points.size());
      return cluster::kmeans_baseline(points, k, params.seed);
    }
  }
  throw ValidationError("unknown clustering algorithm");
}

PipelineResult run_pipeline(const CorpusSnapshot& snapshot, const PipelineParams& params) {
  PipelineResult result;
  const bool any_received = std::any_of(snapshot.records().begin(), snapshot.records().end(),
                                        [](const auto& kv) { return kv.second.status == CveStatus::Received; });
  if (any_received) {
    result.model = train_score_model(snapshot, params);
    result.predictions = predict_received(snapshot, *result.model, params.embeddings.get());
  }
  result.clusters = cluster_snapshot(snapshot, params);
  result.assessed = scoring::assess_all(snapshot, result.predictions);
  result.ranking = configurator::advise(snapshot.catalog(), params.nodes, params.policy, result.assessed, snapshot,
                                        result.clusters, params.explain);
  return result;
}

// ---------------------------------------------------------------------------
// Timeline

namespace {

double fig4_metric(const configurator::Configuration& config, const CorpusSnapshot& snapshot,
                   const scoring::AssessedMap& assessed, const cluster::ClusterAssignment& clusters) {
  double total = 0.0;
  for (std::size_t i = 0; i < config.nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < config.nodes.size(); ++j) {
      double subtotal = 0.0;
      for (const auto& s : configurator::shared_vulnerabilities(config.nodes[i], config.nodes[j], snapshot, clusters)) {
        subtotal += assessed.at(s.cve_id).lazarus * snapshot.epss_of(s.cve_id);
      }
      total += subtotal;
    }
  }
  return total;
}

}  // namespace

std::vector<MonthlyReportRow> simulate_timeline(const TimelineInputs& inputs, Date cutoff, std::size_t months,
                                                const PipelineParams& params, const MonthObserver& observer) {
  if (months == 0) throw ValidationError("months must be at least 1");
  std::map<std::string, CveStatus> previous;
  for (const auto& r : feed_as_of(inputs.feed, cutoff)) previous.emplace(r.id, r.status);

  std::vector<MonthlyReportRow> rows;
  Date prev_as_of = cutoff;
  for (std::size_t k = 1; k <= months; ++k) {
    const Date as_of = cutoff.add_months(static_cast<int>(k)).month_end();
    const auto view = feed_as_of(inputs.feed, as_of);

    MonthlyReportRow row;
    row.month = as_of.month_label();
    std::map<std::string, CveStatus> current;
    for (const auto& r : view) {
      current.emplace(r.id, r.status);
      if (r.published > prev_as_of) ++row.injected;
      auto it = previous.find(r.id);
      if (it != previous.end() && it->second == CveStatus::Received && r.status == CveStatus::Analyzed) {
        ++row.transitions;
      }
    }

    const auto snapshot = build_snapshot(view, inputs.epss, inputs.exploited_ids, inputs.catalog, as_of);
    const auto result = run_pipeline(snapshot, params);
    const auto& head = result.ranking.front();
    row.advised_nodes = head.configuration.names();
    row.security = head.security;
    row.resilience = head.resilience;
    row.fig4_metric = fig4_metric(head.configuration, snapshot, result.assessed, result.clusters);
    row.predicted = result.predictions.size();
    row.clusters = cluster::shared_groups(result.clusters).size();
    rows.push_back(std::move(row));
    if (observer) observer(k, snapshot, result);

    previous = std::move(current);
    prev_as_of = as_of;
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Predictor benchmark

std::vector<LabeledText> labeled_dataset(const GeneratedDataset& dataset) {
  std::vector<LabeledText> out;
  for (const auto& r : dataset.records) {
    if (r.cvss_base) {
      out.push_back({r.id, r.description, *r.cvss_base});
    } else if (auto it = dataset.hidden_scores.find(r.id); it != dataset.hidden_scores.end()) {
      out.push_back({r.id, r.description, it->second});
    }
  }
  return out;
}

std::vector<LabeledText> shuffle_labels(std::vector<LabeledText> dataset, std::uint64_t seed) {
  std::vector<double> scores;
  for (const auto& d : dataset) scores.push_back(d.score);
  Rng rng(mix_seed(seed, 0x1abe1));
  rng.shuffle(scores);
  for (std::size_t i = 0; i < dataset.size(); ++i) dataset[i].score = scores[i];
  return dataset;
}

BenchRow bench_predictor(const std::vector<LabeledText>& dataset, double split_fraction, std::uint64_t seed,
                         const PipelineParams& params) {
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw ValidationError(fmt::format("split fraction {} outside (0, 1)", split_fraction));
  }
  if (dataset.size() < 2) throw ValidationError("benchmark needs at least two labeled CVEs");
  const predictor::ScoreBinning binning(params.bin_width);

  BenchRow row;
  std::map<std::size_t, std::vector<std::size_t>> by_bin;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_bin[binning.bin_of(dataset[i].score)].push_back(i);
  for (const auto& [bin, members] : by_bin) {
    if (members.size() < 2) {
      row.stratified = false;
      row.warnings.push_back(
          fmt::format("bin {} has {} member(s); falling back to an unstratified split", binning.label(bin), members.size()));
    }
  }

  Rng rng(mix_seed(seed, 0x5b117));
  auto take = [&](std::vector<std::size_t> members, std::vector<std::size_t>& train, std::vector<std::size_t>& test) {
    rng.shuffle(members);
    auto n_train = static_cast<std::size_t>(std::llround(split_fraction * static_cast<double>(members.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, members.size() - 1);
    train.insert(train.end(), members.begin(), members.begin() + static_cast<long>(n_train));
    test.insert(test.end(), members.begin() + static_cast<long>(n_train), members.end());
  };
  std::vector<std::size_t> train, test;
  if (row.stratified) {
    for (const auto& [bin, members] : by_bin) take(members, train, test);
  } else {
    std::vector<std::size_t> all(dataset.size());
    std::iota(all.begin(), all.end(), 0);
    take(all, train, test);
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());

  std::vector<std::pair<std::string, std::string>> train_items;
  std::vector<double> train_scores;
  for (auto i : train) {
    train_items.emplace_back(dataset[i].id, dataset[i].description);
    train_scores.push_back(dataset[i].score);
  }
  const auto model = fit(train_items, train_scores, params);

  std::vector<std::pair<std::string, std::string>> test_items;
  for (auto i : test) test_items.emplace_back(dataset[i].id, dataset[i].description);
  const auto points = featurize(test_items, model.featurization, model.vocabulary ? &*model.vocabulary : nullptr,
                                params.embeddings.get());
  std::vector<predictor::LabeledScore> labeled;
  std::map<std::size_t, std::size_t> test_bins;
  for (std::size_t i = 0; i < points.size(); ++i) {
    labeled.push_back({points[i].vector, dataset[test[i]].score});
    ++test_bins[binning.bin_of(dataset[test[i]].score)];
  }
  const auto metrics = predictor::evaluate(model, labeled);
  row.accuracy = metrics.accuracy;
  row.rmse = metrics.rmse;
  row.train_time = metrics.train_time;
  row.infer_time = metrics.infer_time;
  row.train_size = train.size();
  row.test_size = test.size();
  std::size_t top = 0;
  for (const auto& [bin, count] : test_bins) top = std::max(top, count);
  row.majority_frequency = static_cast<double>(top) / static_cast<double>(test.size());
  return row;
}

// ---------------------------------------------------------------------------
// Clustering comparison

std::vector<ComparisonRow> compare_clusterings(const CorpusSnapshot& snapshot,
                                               const std::vector<cluster::Algorithm>& algorithms,
                                               const std::vector<Featurization>& featurizations,
                                               const PipelineParams& params) {
  if (std::find(featurizations.begin(), featurizations.end(), Featurization::Emb) != featurizations.end() &&
      !params.embeddings) {
    throw ValidationError("embedding featurization requested but no embedding file was loaded");
  }
  scoring::PredictionMap predictions;
  const bool any_received = std::any_of(snapshot.records().begin(), snapshot.records().end(),
                                        [](const auto& kv) { return kv.second.status == CveStatus::Received; });
  if (any_received) {
    const auto model = train_score_model(snapshot, params);
    predictions = predict_received(snapshot, model, params.embeddings.get());
  }
  const auto assessed = scoring::assess_all(snapshot, predictions);

  std::vector<ComparisonRow> rows;
  for (auto algorithm : algorithms) {
    for (auto feat : featurizations) {
      PipelineParams cell = params;
      cell.algorithm = algorithm;
      cell.cluster_features = feat;
      const auto clusters = cluster_snapshot(snapshot, cell);
      const auto ranking =
          configurator::advise(snapshot.catalog(), cell.nodes, cell.policy, assessed, snapshot, clusters);
      const auto& head = ranking.front();
      ComparisonRow row;
      row.algorithm = algorithm;
      row.featurization = feat;
      double risk = 0.0;
      const auto& nodes = head.configuration.nodes;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
          double subtotal = 0.0;
          for (const auto& s : configurator::shared_vulnerabilities(nodes[i], nodes[j], snapshot, clusters)) {
            subtotal += assessed.at(s.cve_id).lazarus;
          }
          risk += subtotal;
        }
      }
      row.risk = risk;
      row.security = head.security;
      row.resilience = head.resilience;
      row.clusters = cluster::shared_groups(clusters).size();
      row.advised_nodes = head.configuration.names();
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "algorithm,featurization,risk,security,resilience,clusters,advised\n";
  for (const auto& r : rows) {
    std::string nodes;
    for (const auto& n : r.advised_nodes) nodes += (nodes.empty() ? "" : ";") + n;
    out << fmt::format("{},{},{},{},{},{},{}\n", cluster::to_string(r.algorithm), to_string(r.featurization), r.risk,
                       r.security, r.resilience, r.clusters, nodes);
  }
}

// ---------------------------------------------------------------------------
// Reports

using nlohmann::json;

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw ValidationError(fmt::format("unknown output format '{}'", name));
}

void write_report(std::ostream& out, const std::vector<MonthlyReportRow>& rows, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    out << "month,security,resilience,fig4_metric,injected,predicted,clusters\n";
    for (const auto& r : rows) {
      out << fmt::format("{},{},{},{},{},{},{}\n", r.month, r.security, r.resilience, r.fig4_metric, r.injected,
                         r.predicted, r.clusters);
    }
    return;
  }
  json list = json::array();
  for (const auto& r : rows) {
    list.push_back({{"month", r.month},
                    {"advised_nodes", r.advised_nodes},
                    {"security", r.security},
                    {"resilience", r.resilience},
                    {"fig4_metric", r.fig4_metric},
                    {"injected", r.injected},
                    {"predicted", r.predicted},
                    {"clusters", r.clusters},
                    {"transitions", r.transitions}});
  }
  out << json{{"version", 1}, {"rows", list}}.dump(2) << '\n';
}

void emit_report(const std::vector<MonthlyReportRow>& rows, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write report to {}", path.string()));
  write_report(out, rows, format);
  if (!out) throw IoError(fmt::format("failed writing report to {}", path.string()));
}

std::vector<MonthlyReportRow> parse_report_json(std::istream& in) {
  try {
    const json j = json::parse(in);
    std::vector<MonthlyReportRow> rows;
    for (const auto& r : j.at("rows")) {
      MonthlyReportRow row;
      row.month = r.at("month");
      row.advised_nodes = r.at("advised_nodes").get<std::vector<std::string>>();
      row.security = r.at("security");
      row.resilience = r.at("resilience");
      row.fig4_metric = r.at("fig4_metric");
      row.injected = r.at("injected");
      row.predicted = r.at("predicted");
      row.clusters = r.at("clusters");
      row.transitions = r.value("transitions", std::size_t{0});
      rows.push_back(std::move(row));
    }
    return rows;
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("report: {}", e.what()));
  }
}

}  // namespace hal::harness
