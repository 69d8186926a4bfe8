#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "hal/cli.hpp"
#include "hal/service.hpp"
#include "json.hpp"
#include "oracles.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run hal_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = hal::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("hal_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> small_inputs() {
  return {"--cve",      oracle::fixture("small/feed.jsonl").string(),
          "--epss",     oracle::fixture("small/epss.csv").string(),
          "--exploits", oracle::fixture("small/exploits.csv").string(),
          "--catalog",  oracle::fixture("small/catalog.json").string()};
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST(Cli, AssessReproducesWorkedExample) {
  const auto d = oracle::fixture("worked_example");
  const auto r = hal_run({"assess", "--cve", (d / "feed.jsonl").string(), "--epss", (d / "epss.csv").string(),
                          "--exploits", (d / "exploits.csv").string(), "--as-of", "2023-01-01"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("CVE-2017-11882,7.80,official,3.66,7.24,0.9799"), std::string::npos) << r.out;
}

TEST(Cli, AdviseOverSixteenNodes) {
  const auto dir = scratch("advise16");
  ASSERT_EQ(hal_run({"generate", "--out", dir.string(), "--total", "300", "--seed", "3"}).code, 0);
  const auto r = hal_run({"advise", "--cve", (dir / "feed.jsonl").string(), "--catalog",
                          (dir / "catalog.json").string(), "--nodes", "4", "--trees", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = json::parse(r.out);
  EXPECT_EQ(doc.at("version"), 1);
  EXPECT_EQ(doc.at("count"), 1820);
  EXPECT_EQ(doc.at("ranking").size(), 1820u);
}

TEST(Cli, ExitCodes) {
  const auto bad_flag = hal_run({"advise", "--bogus"});
  EXPECT_EQ(bad_flag.code, 1);
  EXPECT_NE(bad_flag.err.find("--nodes"), std::string::npos);  // usage text
  EXPECT_EQ(hal_run({}).code, 1);
  EXPECT_EQ(hal_run({"--help"}).code, 0);
  EXPECT_EQ(hal_run({"ingest", "--cve", "/nonexistent/feed.jsonl"}).code, 2);
  EXPECT_EQ(hal_run(cat({"ingest", "--as-of", "2023-13-01"}, small_inputs())).code, 1);
  EXPECT_EQ(hal_run(cat({"advise", "--nodes", "9"}, small_inputs())).code, 1);
  EXPECT_EQ(hal_run(cat({"advise", "--out", "/nonexistent/dir/out.json"}, small_inputs())).code, 2);
  EXPECT_EQ(hal_run({"simulate", "--cve", oracle::fixture("small/feed.jsonl").string()}).code, 1);
}

TEST(Cli, SimulateEmitsOneRowPerMonth) {
  const auto r = hal_run(cat({"simulate", "--as-of", "2023-02-28", "--months", "3", "--trees", "10"}, small_inputs()));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 4);
  EXPECT_NE(r.out.find("\n2023-05,"), std::string::npos);
}

TEST(Cli, TrainThenPredictWithSavedModel) {
  const auto dir = scratch("model");
  const auto model = (dir / "model.json").string();
  ASSERT_EQ(hal_run(cat({"train", "--as-of", "2023-06-30", "--trees", "8", "--model", model}, small_inputs())).code, 0);
  const auto with_model = hal_run(cat({"predict", "--as-of", "2023-06-30", "--model", model}, small_inputs()));
  const auto retrained = hal_run(cat({"predict", "--as-of", "2023-06-30", "--trees", "8"}, small_inputs()));
  ASSERT_EQ(with_model.code, 0) << with_model.err;
  EXPECT_EQ(with_model.out, retrained.out);
  EXPECT_EQ(with_model.out.substr(0, with_model.out.find('\n')), "cve_id,bin,score,vote_fraction");
}

TEST(Service, HealthAdviseAndSnapshotSwap) {
  hal::service::Config config;
  std::ifstream catalog(oracle::fixture("small/catalog.json"));
  config.inputs.catalog = hal::parse_catalog(catalog);
  config.params.forest.tree_count = 10;
  hal::service::AdviseService svc(config);

  EXPECT_NE(svc.health().body.find("no snapshot"), std::string::npos);
  EXPECT_EQ(svc.advise({}).status, 409);

  const auto feed = slurp(oracle::fixture("small/feed.jsonl"));
  const auto posted = svc.post_snapshot(feed);
  ASSERT_EQ(posted.status, 200) << posted.body;
  EXPECT_EQ(json::parse(posted.body).at("snapshot_id"), 1);

  EXPECT_EQ(svc.advise({{"n", "abc"}}).status, 400);
  EXPECT_EQ(svc.advise({{"n", "0"}}).status, 400);
  EXPECT_EQ(svc.advise({{"n", "99"}}).status, 400);
  EXPECT_EQ(svc.advise({{"policy", "nope"}}).status, 400);

  auto a = std::async(std::launch::async, [&] { return svc.advise({{"n", "3"}}).body; });
  auto b = std::async(std::launch::async, [&] { return svc.advise({{"n", "3"}}).body; });
  const auto body = a.get();
  EXPECT_EQ(body, b.get());
  const auto doc = json::parse(body);
  EXPECT_EQ(doc.at("count"), 56);
  EXPECT_EQ(doc.at("top").size(), 10u);
  EXPECT_EQ(doc.at("head"), doc.at("top")[0]);

  EXPECT_EQ(svc.post_snapshot("{broken").status, 400);
  ASSERT_EQ(svc.post_snapshot(feed).status, 200);
  EXPECT_EQ(json::parse(svc.advise({{"n", "3"}}).body).at("snapshot_id"), 2);
  EXPECT_EQ(json::parse(svc.health().body).at("status"), "ok");
}
