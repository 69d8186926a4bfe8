#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "hal/harness.hpp"

namespace hal::service {

struct Response {
  int status = 200;
  std::string body;
};

/// Everything /advise needs, built once per loaded feed and never mutated.
struct State {
  std::uint64_t id = 0;
  CorpusSnapshot snapshot;
  scoring::AssessedMap assessed;
  cluster::ClusterAssignment clusters;
};

struct Config {
  /// EPSS, exploit index and catalog stay fixed; the feed arrives via load().
  harness::TimelineInputs inputs;
  /// Snapshot date; the latest date in the feed when unset.
  std::optional<Date> as_of;
  harness::PipelineParams params;
};

/// Request handlers independent of the HTTP transport.
class AdviseService {
 public:
  explicit AdviseService(Config config);

  Response health() const;
  Response advise(const std::map<std::string, std::string>& query) const;
  /// Body is a JSONL CVE feed.
  Response post_snapshot(std::string_view body);

  /// Builds a new state off to the side and swaps it in. Returns its id.
  std::uint64_t load(std::vector<CveRecord> feed);
  std::shared_ptr<const State> current() const;

 private:
  Config config_;
  mutable std::mutex state_mutex_;
  std::shared_ptr<const State> state_;
  std::mutex build_mutex_;
  std::uint64_t next_id_ = 1;
};

/// Latest published or modified date in the feed.
Date latest_date(const std::vector<CveRecord>& feed);

/// Blocks serving /health, /advise and /snapshot on host:port.
void serve(AdviseService& service, const std::string& host, int port);

}  // namespace hal::service
