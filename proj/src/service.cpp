#include "hal/service.hpp"

#include <charconv>
#include <sstream>

#include <fmt/core.h>

#include "hal/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace hal::service {

using nlohmann::json;

namespace {

Response json_response(int status, const json& body) { return {status, body.dump(2) + "\n"}; }

Response error(int status, const std::string& message) {
  return json_response(status, {{"version", 1}, {"error", message}});
}

json report_json(const configurator::RiskReport& r) {
  return {{"rank", r.rank}, {"nodes", r.configuration.names()}, {"security", r.security},
          {"resilience", r.resilience}};
}

}  // namespace

Date latest_date(const std::vector<CveRecord>& feed) {
  if (feed.empty()) throw ValidationError("empty CVE feed");
  Date latest = feed.front().published;
  for (const auto& r : feed) latest = std::max({latest, r.published, r.last_modified});
  return latest;
}

AdviseService::AdviseService(Config config) : config_(std::move(config)) {}

std::shared_ptr<const State> AdviseService::current() const {
  std::lock_guard lock(state_mutex_);
  return state_;
}

std::uint64_t AdviseService::load(std::vector<CveRecord> feed) {
  std::lock_guard build(build_mutex_);
  const Date as_of = config_.as_of ? *config_.as_of : latest_date(feed);
  auto state = std::make_shared<State>();
  state->snapshot = build_snapshot(feed_as_of(feed, as_of), config_.inputs.epss, config_.inputs.exploited_ids,
                                   config_.inputs.catalog, as_of);
  const auto& records = state->snapshot.records();
  scoring::PredictionMap predictions;
  if (std::any_of(records.begin(), records.end(),
                  [](const auto& kv) { return kv.second.status == CveStatus::Received; })) {
    const auto model = harness::train_score_model(state->snapshot, config_.params);
    predictions = harness::predict_received(state->snapshot, model, config_.params.embeddings.get());
  }
  state->clusters = harness::cluster_snapshot(state->snapshot, config_.params);
  state->assessed = scoring::assess_all(state->snapshot, predictions);
  state->id = next_id_++;
  const auto id = state->id;
  std::lock_guard lock(state_mutex_);
  state_ = std::move(state);
  return id;
}

Response AdviseService::health() const {
  const auto state = current();
  if (!state) return json_response(200, {{"version", 1}, {"status", "no snapshot"}});
  return json_response(200, {{"version", 1},
                             {"status", "ok"},
                             {"snapshot_id", state->id},
                             {"as_of", state->snapshot.as_of().iso()},
                             {"records", state->snapshot.records().size()}});
}

Response AdviseService::advise(const std::map<std::string, std::string>& query) const {
  const auto state = current();
  if (!state) return error(409, "no snapshot loaded");

  std::size_t n = config_.params.nodes;
  if (auto it = query.find("n"); it != query.end()) {
    const auto& text = it->second;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
    if (ec != std::errc() || end != text.data() + text.size()) return error(400, fmt::format("invalid n '{}'", text));
  }
  const auto catalog_size = state->snapshot.catalog().size();
  if (n == 0 || n > catalog_size) {
    return error(400, fmt::format("n must be between 1 and {}", catalog_size));
  }

  configurator::Policy policy = config_.params.policy;
  try {
    double alpha = policy.alpha;
    if (auto it = query.find("alpha"); it != query.end()) alpha = std::stod(it->second);
    if (auto it = query.find("policy"); it != query.end()) policy = configurator::Policy::parse(it->second, alpha);
  } catch (const std::exception& e) {
    return error(400, e.what());
  }

  const auto ranking = configurator::advise(state->snapshot.catalog(), n, policy, state->assessed, state->snapshot,
                                            state->clusters);
  json top = json::array();
  for (std::size_t i = 0; i < ranking.size() && i < 10; ++i) top.push_back(report_json(ranking[i]));
  return json_response(200, {{"version", 1},
                             {"snapshot_id", state->id},
                             {"policy", policy.name()},
                             {"n", n},
                             {"count", ranking.size()},
                             {"head", report_json(ranking.front())},
                             {"top", top}});
}

Response AdviseService::post_snapshot(std::string_view body) {
  std::vector<CveRecord> feed;
  try {
    std::istringstream in{std::string(body)};
    feed = parse_cve_feed(in);
  } catch (const ValidationError& e) {
    return error(400, e.what());
  }
  try {
    const auto id = load(std::move(feed));
    return json_response(200, {{"version", 1}, {"snapshot_id", id}});
  } catch (const ValidationError& e) {
    return error(422, e.what());
  }
}

void serve(AdviseService& service, const std::string& host, int port) {
  httplib::Server server;
  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Get("/health", [&](const httplib::Request&, httplib::Response& res) { reply(res, service.health()); });
  server.Get("/advise", [&](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query[k] = v;
    reply(res, service.advise(query));
  });
  server.Post("/snapshot",
              [&](const httplib::Request& req, httplib::Response& res) { reply(res, service.post_snapshot(req.body)); });
  if (!server.listen(host, port)) throw IoError(fmt::format("cannot listen on {}:{}", host, port));
}

}  // namespace hal::service
