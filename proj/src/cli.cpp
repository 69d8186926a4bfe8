#include "hal/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <fmt/core.h>

#include "CLI11.hpp"
#include "hal/errors.hpp"
#include "hal/harness.hpp"
#include "hal/service.hpp"
#include "json.hpp"

namespace hal::cli {

using nlohmann::json;

namespace {

struct RunConfig {
  // inputs
  std::string cve, epss, exploits, catalog, as_of, emb, model;
  // pipeline
  std::size_t nodes = 4;
  std::string policy = "resilience_first";
  double alpha = 0.5;
  std::string algo = "optics";
  std::string feat;  // clustering featurization; emb when --emb is given, else bow
  std::string predictor_feat = "bow";
  double eps = 0.5;
  std::size_t min_samples = 5;
  double xi = 0.05;
  std::size_t k = 0;
  double bin_width = 1.0;
  std::size_t min_df = 2;
  std::size_t trees = 100;
  std::size_t threads = 0;
  std::uint64_t seed = harness::kDefaultSeed;
  // outputs
  std::string out, format, reachability;
  bool explain = false;
  std::size_t limit = 0;
  // subcommand specific
  std::size_t months = 12;
  double split = 0.8;
  bool shuffle_labels = false;
  bool timings = false;
  std::string algos = "dbscan,optics,kmeans";
  std::string feats;
  std::size_t total = 5000;
  std::size_t catalog_nodes = 16;
  std::size_t emb_dim = 32;
  std::string host = "127.0.0.1";
  int port = 8080;
};

void add_options(CLI::App& app, RunConfig& c) {
  app.add_option("--cve", c.cve, "CVE feed (JSONL)");
  app.add_option("--epss", c.epss, "EPSS scores (CSV)");
  app.add_option("--exploits", c.exploits, "Exploit index (CSV with a codes column)");
  app.add_option("--catalog", c.catalog, "Node catalog (JSON)");
  app.add_option("--as-of", c.as_of, "Snapshot date YYYY-MM-DD (simulate: cutoff)");
  app.add_option("--emb", c.emb, "Description embeddings (CSV id,v0,...)");
  app.add_option("--model", c.model, "Forest model file (JSON)");
  app.add_option("--nodes", c.nodes, "Nodes per configuration")->check(CLI::PositiveNumber);
  app.add_option("--policy", c.policy, "Ranking policy")
      ->check(CLI::IsMember({"resilience_first", "security_first", "weighted"}));
  app.add_option("--alpha", c.alpha, "Resilience weight for the weighted policy")->check(CLI::Range(0.0, 1.0));
  app.add_option("--algo", c.algo, "Clustering algorithm")->check(CLI::IsMember({"dbscan", "optics", "kmeans"}));
  app.add_option("--feat", c.feat, "Clustering featurization")->check(CLI::IsMember({"bow", "emb"}));
  app.add_option("--predictor-feat", c.predictor_feat, "Predictor featurization")
      ->check(CLI::IsMember({"bow", "emb"}));
  app.add_option("--eps", c.eps, "DBSCAN radius (cosine distance)")->check(CLI::PositiveNumber);
  app.add_option("--min-samples", c.min_samples, "DBSCAN/OPTICS min samples")->check(CLI::PositiveNumber);
  app.add_option("--xi", c.xi, "OPTICS steepness")->check(CLI::Range(0.0, 1.0));
  app.add_option("--k", c.k, "k-means clusters (0 = sqrt(n/2))");
  app.add_option("--bin-width", c.bin_width, "Score interval width")->check(CLI::PositiveNumber);
  app.add_option("--min-df", c.min_df, "Minimum document frequency for the vocabulary")->check(CLI::PositiveNumber);
  app.add_option("--trees", c.trees, "Random forest size")->check(CLI::PositiveNumber);
  app.add_option("--threads", c.threads, "Training threads (0 = hardware)");
  app.add_option("--seed", c.seed, "Random seed");
  app.add_option("--out", c.out, "Output path (stdout when omitted; generate: directory)");
  app.add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--reachability", c.reachability, "OPTICS reachability CSV path");
  app.add_flag("--explain", c.explain, "Include shared-CVE detail in the ranking");
  app.add_option("--limit", c.limit, "Keep only the top entries of the ranking (0 = all)");
}

std::ifstream open_in(const std::string& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {} '{}'", what, path));
  return in;
}

void write_output(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) {
    body(fallback);
    fallback.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError(fmt::format("cannot write '{}'", path));
  body(file);
  file.close();
  if (!file) throw IoError(fmt::format("failed writing '{}'", path));
}

struct Loaded {
  harness::TimelineInputs inputs;
  std::optional<Date> declared_as_of;
  std::vector<std::string> warnings;
};

Loaded load_inputs(const RunConfig& c, bool need_catalog) {
  if (c.cve.empty()) throw ValidationError("--cve is required");
  Loaded loaded;
  {
    auto in = open_in(c.cve, "CVE feed");
    loaded.inputs.feed = parse_cve_feed(in);
  }
  if (!c.as_of.empty()) loaded.declared_as_of = Date::parse(c.as_of);
  if (!c.epss.empty()) {
    auto in = open_in(c.epss, "EPSS file");
    auto table = parse_epss_csv(in, loaded.declared_as_of);
    loaded.inputs.epss = std::move(table.entries);
    for (auto& w : table.warnings) loaded.warnings.push_back("epss: " + w);
  }
  if (!c.exploits.empty()) {
    auto in = open_in(c.exploits, "exploit index");
    auto index = parse_exploit_index(in);
    loaded.inputs.exploited_ids = std::move(index.cve_ids);
    for (auto& w : index.warnings) loaded.warnings.push_back("exploits: " + w);
  }
  if (!c.catalog.empty()) {
    auto in = open_in(c.catalog, "catalog");
    loaded.inputs.catalog = parse_catalog(in);
  } else if (need_catalog) {
    throw ValidationError("--catalog is required");
  }
  return loaded;
}

Date as_of_of(const Loaded& loaded) {
  return loaded.declared_as_of ? *loaded.declared_as_of : service::latest_date(loaded.inputs.feed);
}

CorpusSnapshot snapshot_of(const Loaded& loaded) {
  const Date as_of = as_of_of(loaded);
  return build_snapshot(feed_as_of(loaded.inputs.feed, as_of), loaded.inputs.epss, loaded.inputs.exploited_ids,
                        loaded.inputs.catalog, as_of);
}

harness::PipelineParams params_of(const RunConfig& c) {
  harness::PipelineParams p;
  if (!c.emb.empty()) {
    auto in = open_in(c.emb, "embedding file");
    p.embeddings = std::make_shared<const harness::Embeddings>(textfeat::load_embeddings(in));
  }
  p.cluster_features = c.feat.empty() ? (c.emb.empty() ? harness::Featurization::Bow : harness::Featurization::Emb)
                                      : harness::parse_featurization(c.feat);
  p.predictor_features = harness::parse_featurization(c.predictor_feat);
  p.algorithm = cluster::parse_algorithm(c.algo);
  p.eps = c.eps;
  p.min_samples = c.min_samples;
  p.xi = c.xi;
  p.k = c.k;
  p.bin_width = c.bin_width;
  p.min_df = c.min_df;
  p.forest.tree_count = c.trees;
  p.forest.threads = c.threads;
  p.nodes = c.nodes;
  p.policy = configurator::Policy::parse(c.policy, c.alpha);
  p.explain = c.explain;
  p.seed = c.seed;
  return p;
}

bool json_format(const RunConfig& c, bool json_default) { return c.format.empty() ? json_default : c.format == "json"; }

void report_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

bool has_received(const CorpusSnapshot& snapshot) {
  return std::any_of(snapshot.records().begin(), snapshot.records().end(),
                     [](const auto& kv) { return kv.second.status == CveStatus::Received; });
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_ingest(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto loaded = load_inputs(c, false);
  report_warnings(loaded.warnings, err);
  const auto snapshot = snapshot_of(loaded);
  std::size_t analyzed = 0, exploited = 0;
  for (const auto& [id, r] : snapshot.records()) {
    analyzed += r.status == CveStatus::Analyzed;
    exploited += r.exploited;
  }
  const json summary = {{"version", 1},
                        {"as_of", snapshot.as_of().iso()},
                        {"records", snapshot.records().size()},
                        {"analyzed", analyzed},
                        {"received", snapshot.records().size() - analyzed},
                        {"exploited", exploited},
                        {"epss_entries", snapshot.epss().size()},
                        {"nodes", snapshot.catalog().size()},
                        {"warnings", loaded.warnings}};
  write_output(c.out, out, [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
}

void cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const std::string path = c.model.empty() ? c.out : c.model;
  const auto loaded = load_inputs(c, false);
  report_warnings(loaded.warnings, err);
  const auto model = harness::train_score_model(snapshot_of(loaded), params_of(c));
  write_output(path, out, [&](std::ostream& o) { predictor::save_model(o, model); });
}

void cmd_predict(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto loaded = load_inputs(c, false);
  report_warnings(loaded.warnings, err);
  const auto snapshot = snapshot_of(loaded);
  const auto params = params_of(c);
  predictor::ForestModel model;
  if (!c.model.empty()) {
    auto in = open_in(c.model, "model file");
    model = predictor::load_model(in);
  } else {
    model = harness::train_score_model(snapshot, params);
  }
  const auto predictions = harness::predict_received(snapshot, model, params.embeddings.get());
  write_output(c.out, out, [&](std::ostream& o) {
    if (json_format(c, false)) {
      json list = json::array();
      for (const auto& [id, p] : predictions) {
        list.push_back({{"cve_id", id}, {"bin", p.bin}, {"score", p.score}, {"vote_fraction", p.vote_fraction}});
      }
      o << json{{"version", 1}, {"predictions", list}}.dump(2) << '\n';
      return;
    }
    o << "cve_id,bin,score,vote_fraction\n";
    for (const auto& [id, p] : predictions) o << fmt::format("{},{},{},{}\n", id, p.bin, p.score, p.vote_fraction);
  });
}

void cmd_cluster(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto loaded = load_inputs(c, false);
  report_warnings(loaded.warnings, err);
  const auto clusters = harness::cluster_snapshot(snapshot_of(loaded), params_of(c));
  write_output(c.out, out, [&](std::ostream& o) {
    if (json_format(c, false)) {
      json labels = json::object();
      for (const auto& [id, label] : clusters.labels) labels[id] = label;
      o << json{{"version", 1},
                {"algorithm", cluster::to_string(clusters.algorithm)},
                {"clusters", clusters.cluster_count()},
                {"labels", labels}}
               .dump(2)
        << '\n';
      return;
    }
    cluster::write_assignment_csv(o, clusters);
  });
  if (!c.reachability.empty()) {
    write_output(c.reachability, out, [&](std::ostream& o) { cluster::write_reachability_csv(o, clusters); });
  }
}

void cmd_assess(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto loaded = load_inputs(c, false);
  report_warnings(loaded.warnings, err);
  const auto snapshot = snapshot_of(loaded);
  scoring::PredictionMap predictions;
  if (has_received(snapshot)) {
    const auto params = params_of(c);
    predictions = harness::predict_received(snapshot, harness::train_score_model(snapshot, params),
                                            params.embeddings.get());
  }
  const auto assessed = scoring::assess_all(snapshot, predictions);
  write_output(c.out, out, [&](std::ostream& o) {
    if (json_format(c, false)) {
      json list = json::array();
      for (const auto& [id, a] : assessed) {
        list.push_back({{"cve_id", id},
                        {"base", a.base},
                        {"provenance", scoring::to_string(a.provenance)},
                        {"lazarus", a.lazarus},
                        {"hal", a.hal},
                        {"epss", a.factors.epss}});
      }
      o << json{{"version", 1}, {"as_of", snapshot.as_of().iso()}, {"scores", list}}.dump(2) << '\n';
      return;
    }
    scoring::write_assessed_csv(o, assessed);
  });
}

void cmd_advise(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto loaded = load_inputs(c, true);
  report_warnings(loaded.warnings, err);
  const auto params = params_of(c);
  const auto result = harness::run_pipeline(snapshot_of(loaded), params);
  const std::size_t limit = c.limit ? c.limit : SIZE_MAX;
  write_output(c.out, out, [&](std::ostream& o) {
    if (json_format(c, true)) {
      configurator::write_ranking_json(o, result.ranking, params.policy, limit, c.explain);
    } else {
      configurator::write_ranking_csv(o, result.ranking, limit);
    }
  });
}

void cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.as_of.empty()) throw ValidationError("simulate needs --as-of (the cutoff date)");
  const auto loaded = load_inputs(c, true);
  report_warnings(loaded.warnings, err);
  const auto rows = harness::simulate_timeline(loaded.inputs, *loaded.declared_as_of, c.months, params_of(c));
  const auto format = json_format(c, false) ? harness::ReportFormat::Json : harness::ReportFormat::Csv;
  if (c.out.empty()) {
    harness::write_report(out, rows, format);
  } else {
    harness::emit_report(rows, format, c.out);
  }
}

void cmd_bench(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::vector<harness::LabeledText> dataset;
  if (!c.cve.empty()) {
    const auto loaded = load_inputs(c, false);
    for (const auto& r : loaded.inputs.feed) {
      if (r.cvss_base) dataset.push_back({r.id, r.description, *r.cvss_base});
    }
  } else {
    GeneratorSpec spec;
    spec.total = c.total;
    spec.nodes = c.catalog_nodes;
    dataset = harness::labeled_dataset(generate_synthetic_dataset(spec, c.seed));
  }
  if (c.shuffle_labels) dataset = harness::shuffle_labels(std::move(dataset), c.seed);
  const auto row = harness::bench_predictor(dataset, c.split, c.seed, params_of(c));
  report_warnings(row.warnings, err);
  json result = {{"version", 1},
                 {"samples", dataset.size()},
                 {"shuffled_labels", c.shuffle_labels},
                 {"accuracy", row.accuracy},
                 {"rmse", row.rmse},
                 {"bin_width", c.bin_width},
                 {"train_size", row.train_size},
                 {"test_size", row.test_size},
                 {"majority_frequency", row.majority_frequency},
                 {"stratified", row.stratified},
                 {"warnings", row.warnings}};
  if (c.timings) {
    result["train_time"] = row.train_time;
    result["infer_time"] = row.infer_time;
  }
  write_output(c.out, out, [&](std::ostream& o) { o << result.dump(2) << '\n'; });
}

void cmd_compare(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto loaded = load_inputs(c, true);
  report_warnings(loaded.warnings, err);
  std::vector<cluster::Algorithm> algorithms;
  for (const auto& name : split_list(c.algos)) algorithms.push_back(cluster::parse_algorithm(name));
  std::vector<harness::Featurization> featurizations;
  const std::string feats = !c.feats.empty() ? c.feats : (c.emb.empty() ? "bow" : "bow,emb");
  for (const auto& name : split_list(feats)) featurizations.push_back(harness::parse_featurization(name));
  if (algorithms.empty() || featurizations.empty()) throw ValidationError("nothing to compare");
  const auto rows = harness::compare_clusterings(snapshot_of(loaded), algorithms, featurizations, params_of(c));
  write_output(c.out, out, [&](std::ostream& o) {
    if (json_format(c, false)) {
      json list = json::array();
      for (const auto& r : rows) {
        list.push_back({{"algorithm", cluster::to_string(r.algorithm)},
                        {"featurization", harness::to_string(r.featurization)},
                        {"risk", r.risk},
                        {"security", r.security},
                        {"resilience", r.resilience},
                        {"clusters", r.clusters},
                        {"advised", r.advised_nodes}});
      }
      o << json{{"version", 1}, {"rows", list}}.dump(2) << '\n';
      return;
    }
    harness::write_comparison_csv(o, rows);
  });
}

void cmd_generate(const RunConfig& c, std::ostream& out, std::ostream&) {
  if (c.out.empty()) throw ValidationError("generate needs --out DIR");
  GeneratorSpec spec;
  spec.total = c.total;
  spec.nodes = c.catalog_nodes;
  const auto data = generate_synthetic_dataset(spec, c.seed);
  const std::filesystem::path dir(c.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));

  std::vector<std::pair<std::string, std::string>> texts;
  for (const auto& r : data.records) texts.emplace_back(r.id, r.description);
  const auto embeddings = textfeat::hashed_embeddings(texts, c.emb_dim, c.seed);

  write_output((dir / "feed.jsonl").string(), out, [&](std::ostream& o) { write_cve_feed(o, data.records); });
  write_output((dir / "epss.csv").string(), out, [&](std::ostream& o) { write_epss_csv(o, data.epss); });
  write_output((dir / "exploits.csv").string(), out,
               [&](std::ostream& o) { write_exploit_index(o, data.exploit_index); });
  write_output((dir / "catalog.json").string(), out, [&](std::ostream& o) { write_catalog(o, data.catalog); });
  write_output((dir / "embeddings.csv").string(), out,
               [&](std::ostream& o) { textfeat::write_embeddings(o, embeddings); });
  write_output((dir / "hidden_scores.csv").string(), out, [&](std::ostream& o) {
    o << "cve_id,score\n";
    for (const auto& [id, score] : data.hidden_scores) o << fmt::format("{},{}\n", id, score);
  });
}

void cmd_serve(const RunConfig& c, std::ostream& out, std::ostream& err) {
  service::Config config;
  config.params = params_of(c);
  std::vector<CveRecord> feed;
  if (!c.cve.empty()) {
    auto loaded = load_inputs(c, true);
    report_warnings(loaded.warnings, err);
    config.as_of = loaded.declared_as_of;
    feed = std::move(loaded.inputs.feed);
    config.inputs = std::move(loaded.inputs);
  } else {
    if (c.catalog.empty()) throw ValidationError("--catalog is required");
    auto in = open_in(c.catalog, "catalog");
    config.inputs.catalog = parse_catalog(in);
    if (!c.epss.empty()) {
      auto e = open_in(c.epss, "EPSS file");
      config.inputs.epss = parse_epss_csv(e, c.as_of.empty() ? std::nullopt : std::optional(Date::parse(c.as_of))).entries;
    }
    if (!c.exploits.empty()) {
      auto x = open_in(c.exploits, "exploit index");
      config.inputs.exploited_ids = parse_exploit_index(x).cve_ids;
    }
    if (!c.as_of.empty()) config.as_of = Date::parse(c.as_of);
  }
  service::AdviseService svc(std::move(config));
  if (!feed.empty()) svc.load(std::move(feed));
  out << fmt::format("listening on {}:{}\n", c.host, c.port) << std::flush;
  service::serve(svc, c.host, c.port);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Vulnerability-aware replica configuration advisor", "hal"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  using Handler = void (*)(const RunConfig&, std::ostream&, std::ostream&);
  struct Command {
    const char* name;
    const char* help;
    Handler handler;
    CLI::App* app = nullptr;
  };
  std::vector<Command> commands = {
      {"ingest", "Validate inputs and summarize the snapshot", cmd_ingest},
      {"train", "Train the score predictor on Analyzed CVEs", cmd_train},
      {"predict", "Predict scores of Received CVEs", cmd_predict},
      {"cluster", "Cluster CVE descriptions", cmd_cluster},
      {"assess", "Reassess every CVE in the snapshot", cmd_assess},
      {"advise", "Rank node configurations", cmd_advise},
      {"simulate", "Run the monthly timeline experiment", cmd_simulate},
      {"bench", "Benchmark the score predictor", cmd_bench},
      {"compare-clustering", "Compare clustering algorithms and featurizations", cmd_compare},
      {"generate", "Write a synthetic dataset", cmd_generate},
      {"serve", "Serve advice over HTTP", cmd_serve},
  };
  for (auto& cmd : commands) {
    cmd.app = app.add_subcommand(cmd.name, cmd.help);
    add_options(*cmd.app, c);
  }
  app.get_subcommand("simulate")->add_option("--months", c.months, "Months to simulate")->check(CLI::PositiveNumber);
  {
    auto* sub = app.get_subcommand("bench");
    sub->add_option("--split", c.split, "Training fraction")->check(CLI::Range(0.0, 1.0));
    sub->add_flag("--shuffle-labels", c.shuffle_labels, "Permute scores to destroy the text signal");
    sub->add_flag("--timings", c.timings, "Include wall-clock timings in the output");
  }
  for (const char* name : {"bench", "generate"}) {
    auto* sub = app.get_subcommand(name);
    sub->add_option("--total", c.total, "Synthetic CVE count")->check(CLI::PositiveNumber);
    sub->add_option("--catalog-nodes", c.catalog_nodes, "Synthetic catalog size")->check(CLI::PositiveNumber);
  }
  app.get_subcommand("generate")->add_option("--emb-dim", c.emb_dim, "Embedding dimension")->check(CLI::PositiveNumber);
  auto* compare = app.get_subcommand("compare-clustering");
  compare->add_option("--algos", c.algos, "Comma-separated algorithms");
  compare->add_option("--feats", c.feats, "Comma-separated featurizations");
  auto* serve = app.get_subcommand("serve");
  serve->add_option("--host", c.host, "Listen address");
  serve->add_option("--port", c.port, "Listen port")->check(CLI::Range(1, 65535));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    for (const auto& cmd : commands) {
      if (cmd.app->parsed()) cmd.handler(c, out, err);
    }
    return 0;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace hal::cli
