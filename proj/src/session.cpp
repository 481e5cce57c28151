#include "infosample/session.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <random>
#include <sstream>

#include "infosample/errors.hpp"
#include "infosample/io.hpp"

namespace infosample {

std::string_view to_string(Agent a) {
  switch (a) {
    case Agent::Human: return "human";
    case Agent::RobotRandom: return "random";
    case Agent::RobotEntropy: return "entropy";
    case Agent::RobotEntropyMean: return "entropy_mean";
  }
  return "unknown";
}

Agent parse_agent(std::string_view name) {
  if (name == "human") return Agent::Human;
  if (name == "random") return Agent::RobotRandom;
  if (name == "entropy") return Agent::RobotEntropy;
  if (name == "entropy_mean") return Agent::RobotEntropyMean;
  throw FormatError("unknown agent '" + std::string(name) + "'");
}

Agent agent_for(Strategy s) {
  switch (s) {
    case Strategy::Random: return Agent::RobotRandom;
    case Strategy::Entropy: return Agent::RobotEntropy;
    case Strategy::EntropyPlusMean: return Agent::RobotEntropyMean;
  }
  return Agent::RobotRandom;
}

std::vector<Cell> raster_line(Cell a, Cell b) {
  std::vector<Cell> out;
  const int dr = std::abs(b.row - a.row);
  const int dc = std::abs(b.col - a.col);
  const int sr = a.row < b.row ? 1 : -1;
  const int sc = a.col < b.col ? 1 : -1;
  out.reserve(static_cast<std::size_t>(std::max(dr, dc)) + 1);

  int r = a.row;
  int c = a.col;
  int err = dc - dr;
  while (true) {
    out.push_back({r, c});
    if (r == b.row && c == b.col) break;
    const int e2 = 2 * err;
    if (e2 > -dr) {
      err -= dr;
      c += sc;
    }
    if (e2 < dc) {
      err += dc;
      r += sr;
    }
  }
  return out;
}

Session::Session(std::string id, std::shared_ptr<const Field> scenario, Agent agent, int budget_total)
    : id_(std::move(id)),
      scenario_(std::move(scenario)),
      agent_(agent),
      budget_total_(budget_total),
      remaining_(budget_total) {
  if (!scenario_) throw PreconditionError("Session: null scenario");
  if (scenario_->values.size() != scenario_->grid.size()) {
    throw PreconditionError("Session: scenario values do not match its grid");
  }
  if (budget_total < 0) throw PreconditionError("Session: negative budget");
  revealed_mask_.assign(scenario_->grid.size(), false);
}

bool Session::is_revealed(Cell c) const {
  return grid().contains(c) && revealed_mask_[grid().index(c)];
}

std::set<Cell> Session::revealed_set() const {
  std::set<Cell> out;
  for (const auto& r : revealed_) out.insert(r.cell);
  return out;
}

RevealResult Session::add_waypoint(Cell target) {
  if (!grid().contains(target)) {
    std::ostringstream msg;
    msg << "cell (" << target.row << ", " << target.col << ") outside " << grid().rows() << "x"
        << grid().cols() << " grid";
    throw InvalidCell(msg.str());
  }
  if (budget_total_ > 0 && remaining_ == 0) {
    throw SessionExhausted("session " + id_ + " has no reveal budget left");
  }

  std::vector<Cell> path;
  if (waypoints_.empty()) {
    path.push_back(target);
  } else {
    path = raster_line(waypoints_.back(), target);
    path.erase(path.begin());
  }

  RevealResult result;
  const int step = static_cast<int>(waypoints_.size());
  for (const Cell& c : path) {
    const std::size_t idx = grid().index(c);
    if (revealed_mask_[idx]) continue;
    if (remaining_ == 0) {
      result.truncated = true;
      break;
    }
    revealed_mask_[idx] = true;
    RevealedSample sample{c, scenario_->values[idx], step};
    revealed_.push_back(sample);
    result.newly_revealed.push_back(sample);
    --remaining_;
  }
  waypoints_.push_back(target);
  result.remaining = remaining_;
  return result;
}

std::string make_session_id() {
  std::random_device rd;
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (int i = 0; i < 4; ++i) out << std::setw(8) << rd();
  return out.str();
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

Session new_session(std::shared_ptr<const Field> scenario, Agent agent, int budget_total) {
  Session s(make_session_id(), std::move(scenario), agent, budget_total);
  s.set_created_at(now_iso8601());
  return s;
}

nlohmann::json hyperparams_to_json(const Hyperparams& hp) {
  return {{"log_l", hp.log_l}, {"log_sf2", hp.log_sf2}, {"log_sn2", hp.log_sn2}};
}

Hyperparams hyperparams_from_json(const nlohmann::json& j, const std::string& source) {
  Hyperparams hp;
  for (auto [key, slot] : {std::pair{"log_l", &hp.log_l}, std::pair{"log_sf2", &hp.log_sf2},
                           std::pair{"log_sn2", &hp.log_sn2}}) {
    const auto& v = require_field(j, key, source);
    if (!v.is_number()) throw FormatError(source + ": field '" + key + "' must be a number");
    *slot = v.get<double>();
  }
  return hp;
}

nlohmann::json session_to_json(const Session& s) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["id"] = s.id();
  j["agent"] = std::string(to_string(s.agent()));
  j["scenario_name"] = s.scenario().name;
  j["budget_total"] = s.budget_total();
  if (s.hp_init()) j["hp_init"] = hyperparams_to_json(*s.hp_init());
  if (s.seed()) j["seed"] = *s.seed();
  auto& wps = j["waypoints"] = nlohmann::json::array();
  for (const auto& w : s.waypoints()) wps.push_back({{"row", w.row}, {"col", w.col}});
  auto& rev = j["revealed"] = nlohmann::json::array();
  for (const auto& r : s.revealed()) {
    rev.push_back({{"row", r.cell.row}, {"col", r.cell.col}, {"value", r.value}, {"step", r.step}});
  }
  if (s.note()) j["note"] = *s.note();
  j["created_at"] = s.created_at();
  return j;
}

std::string serialize_session(const Session& s) { return session_to_json(s).dump(1) + "\n"; }

namespace {

int int_field(const nlohmann::json& obj, const char* key, const std::string& src) {
  const auto& v = require_field(obj, key, src);
  if (!v.is_number_integer()) throw FormatError(src + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

std::string string_field(const nlohmann::json& obj, const char* key, const std::string& src) {
  const auto& v = require_field(obj, key, src);
  if (!v.is_string()) throw FormatError(src + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

SessionLog session_log_from_json(const nlohmann::json& j, const std::string& src) {
  if (int_field(j, "format_version", src) != 1) {
    throw FormatError(src + ": field 'format_version': unsupported version");
  }
  SessionLog log;
  log.id = string_field(j, "id", src);
  try {
    log.agent = parse_agent(string_field(j, "agent", src));
  } catch (const FormatError& e) {
    throw FormatError(src + ": field 'agent': " + e.what());
  }
  log.scenario_name = string_field(j, "scenario_name", src);
  log.budget_total = int_field(j, "budget_total", src);
  if (log.budget_total < 0) throw FormatError(src + ": field 'budget_total' must be non-negative");
  if (auto it = j.find("hp_init"); it != j.end() && !it->is_null()) {
    log.hp_init = hyperparams_from_json(*it, src + ": field 'hp_init'");
  }
  if (auto it = j.find("seed"); it != j.end() && !it->is_null()) {
    if (!it->is_number_unsigned()) throw FormatError(src + ": field 'seed' must be an unsigned integer");
    log.seed = it->get<RngSeed>();
  }
  const auto& wps = require_field(j, "waypoints", src);
  if (!wps.is_array()) throw FormatError(src + ": field 'waypoints' must be an array");
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const std::string at = src + ": waypoints[" + std::to_string(i) + "]";
    log.waypoints.push_back({int_field(wps[i], "row", at), int_field(wps[i], "col", at)});
  }
  const auto& rev = require_field(j, "revealed", src);
  if (!rev.is_array()) throw FormatError(src + ": field 'revealed' must be an array");
  for (std::size_t i = 0; i < rev.size(); ++i) {
    const std::string at = src + ": revealed[" + std::to_string(i) + "]";
    const auto& v = require_field(rev[i], "value", at);
    if (!v.is_number()) throw FormatError(at + ": field 'value' must be a number");
    log.revealed.push_back({{int_field(rev[i], "row", at), int_field(rev[i], "col", at)},
                            v.get<double>(),
                            int_field(rev[i], "step", at)});
  }
  if (auto it = j.find("note"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw FormatError(src + ": field 'note' must be a string");
    log.note = it->get<std::string>();
  }
  log.created_at = string_field(j, "created_at", src);
  return log;
}

SessionLog load_session_log(const std::filesystem::path& path) {
  return session_log_from_json(parse_json(read_file(path), path.string()), path.string());
}

void save_session(const Session& s, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_session(s));
}

Session replay(const SessionLog& log, std::shared_ptr<const Field> scenario) {
  if (scenario && scenario->name != log.scenario_name) {
    throw PreconditionError("replay: log references scenario '" + log.scenario_name + "', got '" +
                            scenario->name + "'");
  }
  Session s(log.id, std::move(scenario), log.agent, log.budget_total);
  s.set_created_at(log.created_at);
  s.set_note(log.note);
  s.set_hp_init(log.hp_init);
  s.set_seed(log.seed);
  for (const Cell& w : log.waypoints) s.add_waypoint(w);
  return s;
}

ReplayCheck verify_log(const SessionLog& log, std::shared_ptr<const Field> scenario) {
  ReplayCheck check;
  auto fail = [&](std::string msg) {
    check.ok = false;
    check.problems.push_back(std::move(msg));
  };
  std::optional<Session> s;
  try {
    s.emplace(replay(log, std::move(scenario)));
  } catch (const Error& e) {
    fail(std::string("replay failed: ") + e.what());
    return check;
  }
  const auto& got = s->revealed();
  if (got.size() != log.revealed.size()) {
    fail("revealed count: log has " + std::to_string(log.revealed.size()) + ", replay gives " +
         std::to_string(got.size()));
  }
  const std::size_t n = std::min(got.size(), log.revealed.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = log.revealed[i];
    const auto& b = got[i];
    if (a.cell != b.cell || a.step != b.step) {
      std::ostringstream msg;
      msg << "revealed[" << i << "]: log has (" << a.cell.row << ", " << a.cell.col << ") step "
          << a.step << ", replay gives (" << b.cell.row << ", " << b.cell.col << ") step " << b.step;
      fail(msg.str());
    } else if (a.value != b.value) {
      std::ostringstream msg;
      msg << std::setprecision(17) << "revealed[" << i << "] value: log has " << a.value
          << ", ground truth is " << b.value;
      fail(msg.str());
    }
  }
  return check;
}

}  // namespace infosample
