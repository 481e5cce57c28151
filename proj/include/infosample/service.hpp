#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "infosample/errors.hpp"
#include "infosample/evaluate.hpp"
#include "infosample/session.hpp"

namespace httplib {
class Server;
}

namespace infosample {

struct ServiceConfig {
  std::filesystem::path scenario_dir = "scenarios";
  std::filesystem::path log_dir = "logs";
  std::optional<std::filesystem::path> web_root;
  int budget_total = kDefaultBudget;
  /// Unfinished sessions are checkpointed after this many reveals.
  int checkpoint_every = 10;
  EvaluateOptions evaluation = with_time_series();

  static EvaluateOptions with_time_series() {
    EvaluateOptions o;
    o.time_series = true;
    return o;
  }
};

/// Transport-independent session store behind the HTTP API. Every response
/// is built from revealed cells only; the ground truth never leaves the
/// registry. Mutations on one session are serialized by that session's lock.
class SessionRegistry {
 public:
  explicit SessionRegistry(ServiceConfig config);

  const ServiceConfig& config() const { return config_; }

  nlohmann::json list_scenarios() const;
  /// {session_id, masked_view}
  nlohmann::json create_session(const std::string& scenario_name, Agent agent,
                                std::optional<std::string> note);
  nlohmann::json masked_view(const std::string& id) const;
  /// Repeating a request with the same dedupe token returns the first
  /// answer without revealing anything again.
  nlohmann::json add_waypoint(const std::string& id, Cell cell, std::optional<std::string> token);
  nlohmann::json finish(const std::string& id, std::optional<std::string> note);
  nlohmann::json evaluate(const std::string& id);

  /// Registers finished logs found in the log directory; returns how many.
  std::size_t load_finished_logs();

  std::filesystem::path log_path(const std::string& id) const;
  std::filesystem::path checkpoint_path(const std::string& id) const;

 private:
  struct Entry {
    explicit Entry(Session s) : session(std::move(s)) {}
    mutable std::mutex mutex;
    Session session;
    bool finished = false;
    int reveals_since_checkpoint = 0;
    std::map<std::string, nlohmann::json> token_results;
    std::optional<nlohmann::json> report;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  std::shared_ptr<const Field> scenario(const std::string& name) const;
  static nlohmann::json view_of(const Entry& e);

  ServiceConfig config_;
  std::map<std::string, std::shared_ptr<const Field>> scenarios_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// {error_code, message}
nlohmann::json error_body(ErrorCode code, const std::string& message);
int http_status(ErrorCode code);

void register_routes(httplib::Server& server, SessionRegistry& registry);

/// Blocks serving the API until the process is stopped.
int serve(const ServiceConfig& config, const std::string& host, int port);

}  // namespace infosample
