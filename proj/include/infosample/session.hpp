#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "infosample/acquisition.hpp"
#include "infosample/gpmodel.hpp"
#include "infosample/scenario.hpp"

namespace infosample {

inline constexpr int kDefaultBudget = 190;

enum class Agent { Human, RobotRandom, RobotEntropy, RobotEntropyMean };

/// "human", "random", "entropy", "entropy_mean".
std::string_view to_string(Agent a);
Agent parse_agent(std::string_view name);
Agent agent_for(Strategy s);

struct RevealedSample {
  Cell cell;
  double value = 0.0;
  int step = 0;  // index of the waypoint whose leg revealed the cell

  bool operator==(const RevealedSample&) const = default;
};

struct RevealResult {
  std::vector<RevealedSample> newly_revealed;
  bool truncated = false;
  int remaining = 0;
};

/// 8-connected Bresenham line from a to b inclusive;
/// max(|Δrow|, |Δcol|) + 1 cells.
std::vector<Cell> raster_line(Cell a, Cell b);

/// One budgeted sampling run. The scenario is the hidden ground truth;
/// add_waypoint is the only operation that changes what has been revealed.
class Session {
 public:
  Session(std::string id, std::shared_ptr<const Field> scenario, Agent agent,
          int budget_total = kDefaultBudget);

  /// Reveals the leg from the previous waypoint (exclusive) to `target`
  /// (inclusive). Already revealed cells are free. Stops when the budget
  /// runs out, flagging the result as truncated.
  /// Throws InvalidCell for an off-grid target and SessionExhausted once
  /// a positive budget is used up.
  RevealResult add_waypoint(Cell target);

  const std::string& id() const { return id_; }
  Agent agent() const { return agent_; }
  const Field& scenario() const { return *scenario_; }
  const std::shared_ptr<const Field>& scenario_ptr() const { return scenario_; }
  const GridSpec& grid() const { return scenario_->grid; }
  int budget_total() const { return budget_total_; }
  int remaining() const { return remaining_; }
  bool exhausted() const { return remaining_ == 0; }
  const std::vector<Cell>& waypoints() const { return waypoints_; }
  const std::vector<RevealedSample>& revealed() const { return revealed_; }
  bool is_revealed(Cell c) const;
  std::set<Cell> revealed_set() const;

  const std::optional<std::string>& note() const { return note_; }
  void set_note(std::optional<std::string> note) { note_ = std::move(note); }
  const std::string& created_at() const { return created_at_; }
  void set_created_at(std::string ts) { created_at_ = std::move(ts); }
  const std::optional<Hyperparams>& hp_init() const { return hp_init_; }
  void set_hp_init(std::optional<Hyperparams> hp) { hp_init_ = hp; }
  const std::optional<RngSeed>& seed() const { return seed_; }
  void set_seed(std::optional<RngSeed> seed) { seed_ = seed; }

 private:
  std::string id_;
  std::shared_ptr<const Field> scenario_;
  Agent agent_;
  int budget_total_;
  int remaining_;
  std::vector<Cell> waypoints_;
  std::vector<RevealedSample> revealed_;
  std::vector<bool> revealed_mask_;
  std::optional<std::string> note_;
  std::string created_at_;
  std::optional<Hyperparams> hp_init_;
  std::optional<RngSeed> seed_;
};

/// Fresh human-style session with a random id and the current time.
Session new_session(std::shared_ptr<const Field> scenario, Agent agent,
                    int budget_total = kDefaultBudget);

std::string make_session_id();
std::string now_iso8601();

/// Parsed contents of a session log file.
struct SessionLog {
  std::string id;
  Agent agent = Agent::Human;
  std::string scenario_name;
  int budget_total = kDefaultBudget;
  std::optional<Hyperparams> hp_init;
  std::optional<RngSeed> seed;
  std::vector<Cell> waypoints;
  std::vector<RevealedSample> revealed;
  std::optional<std::string> note;
  std::string created_at;
};

nlohmann::json hyperparams_to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const nlohmann::json& j, const std::string& source);

nlohmann::json session_to_json(const Session& s);
/// Canonical text of a session log; byte-identical for identical sessions.
std::string serialize_session(const Session& s);
SessionLog session_log_from_json(const nlohmann::json& j, const std::string& source = "session");
SessionLog load_session_log(const std::filesystem::path& path);
void save_session(const Session& s, const std::filesystem::path& path);

/// Rebuilds a session from the log's metadata and waypoint list alone.
Session replay(const SessionLog& log, std::shared_ptr<const Field> scenario);

struct ReplayCheck {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Replays the waypoints and compares reveals, values and remaining budget
/// with what the log claims.
ReplayCheck verify_log(const SessionLog& log, std::shared_ptr<const Field> scenario);

}  // namespace infosample
