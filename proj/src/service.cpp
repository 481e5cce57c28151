#include "infosample/service.hpp"

#include <httplib.h>

#include <algorithm>

#include "infosample/errors.hpp"
#include "infosample/io.hpp"
#include "infosample/log.hpp"

namespace infosample {

namespace fs = std::filesystem;

namespace {

nlohmann::json cell_value_json(const RevealedSample& r) {
  return {{"row", r.cell.row}, {"col", r.cell.col}, {"value", r.value}, {"step", r.step}};
}

bool is_checkpoint(const fs::path& p) {
  const std::string name = p.filename().string();
  return name.size() > 16 && name.ends_with(".checkpoint.json");
}

}  // namespace

SessionRegistry::SessionRegistry(ServiceConfig config) : config_(std::move(config)) {
  if (!fs::is_directory(config_.scenario_dir)) {
    throw IoError("scenario directory not found: " + config_.scenario_dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(config_.scenario_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto field = std::make_shared<const Field>(load_scenario(f));
    if (scenarios_.contains(field->name)) {
      throw FormatError("duplicate scenario name '" + field->name + "' in " + f.string());
    }
    scenarios_[field->name] = std::move(field);
  }
  fs::create_directories(config_.log_dir);
}

fs::path SessionRegistry::log_path(const std::string& id) const { return config_.log_dir / (id + ".json"); }

fs::path SessionRegistry::checkpoint_path(const std::string& id) const {
  return config_.log_dir / (id + ".checkpoint.json");
}

std::shared_ptr<SessionRegistry::Entry> SessionRegistry::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFound("unknown session '" + id + "'");
  return it->second;
}

std::shared_ptr<const Field> SessionRegistry::scenario(const std::string& name) const {
  auto it = scenarios_.find(name);
  if (it == scenarios_.end()) throw NotFound("unknown scenario '" + name + "'");
  return it->second;
}

nlohmann::json SessionRegistry::list_scenarios() const {
  auto out = nlohmann::json::array();
  for (const auto& [name, f] : scenarios_) {
    out.push_back({{"name", name},
                   {"rows", f->grid.rows()},
                   {"cols", f->grid.cols()},
                   {"cell_m", f->grid.cell_m()}});
  }
  return out;
}

nlohmann::json SessionRegistry::view_of(const Entry& e) {
  const Session& s = e.session;
  nlohmann::json v;
  v["session_id"] = s.id();
  v["scenario_name"] = s.scenario().name;
  v["agent"] = std::string(to_string(s.agent()));
  v["rows"] = s.grid().rows();
  v["cols"] = s.grid().cols();
  v["cell_m"] = s.grid().cell_m();
  v["budget_total"] = s.budget_total();
  v["remaining"] = s.remaining();
  v["finished"] = e.finished;
  v["colormap"] = {{"min", kFieldLo}, {"max", kFieldHi}};
  auto& rev = v["revealed"] = nlohmann::json::array();
  for (const auto& r : s.revealed()) rev.push_back(cell_value_json(r));
  auto& wps = v["waypoints"] = nlohmann::json::array();
  for (const auto& w : s.waypoints()) wps.push_back({{"row", w.row}, {"col", w.col}});
  if (s.note()) v["note"] = *s.note();
  return v;
}

nlohmann::json SessionRegistry::create_session(const std::string& scenario_name, Agent agent,
                                               std::optional<std::string> note) {
  Session s = new_session(scenario(scenario_name), agent, config_.budget_total);
  s.set_note(std::move(note));
  auto entry = std::make_shared<Entry>(std::move(s));
  const std::string id = entry->session.id();
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_[id] = entry;
  }
  std::lock_guard lock(entry->mutex);
  return {{"session_id", id}, {"masked_view", view_of(*entry)}};
}

nlohmann::json SessionRegistry::masked_view(const std::string& id) const {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  return view_of(*entry);
}

nlohmann::json SessionRegistry::add_waypoint(const std::string& id, Cell cell, std::optional<std::string> token) {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  if (token) {
    if (auto it = entry->token_results.find(*token); it != entry->token_results.end()) return it->second;
  }
  if (entry->finished) throw Conflict("session " + id + " is finished");

  const RevealResult r = entry->session.add_waypoint(cell);
  nlohmann::json out;
  auto& cells = out["newly_revealed"] = nlohmann::json::array();
  for (const auto& c : r.newly_revealed) cells.push_back(cell_value_json(c));
  out["truncated"] = r.truncated;
  out["remaining"] = r.remaining;
  if (token) entry->token_results[*token] = out;

  entry->reveals_since_checkpoint += static_cast<int>(r.newly_revealed.size());
  if (config_.checkpoint_every > 0 && entry->reveals_since_checkpoint >= config_.checkpoint_every) {
    try {
      save_session(entry->session, checkpoint_path(id));
      entry->reveals_since_checkpoint = 0;
    } catch (const Error& e) {
      log::warning(std::string("checkpoint failed: ") + e.what());
    }
  }
  return out;
}

nlohmann::json SessionRegistry::finish(const std::string& id, std::optional<std::string> note) {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  if (entry->finished) throw Conflict("session " + id + " is already finished");
  if (note) entry->session.set_note(std::move(note));
  const fs::path path = log_path(id);
  save_session(entry->session, path);
  entry->finished = true;
  std::error_code ec;
  fs::remove(checkpoint_path(id), ec);
  return {{"session_id", id}, {"finished", true}, {"log_file", path.filename().string()}};
}

nlohmann::json SessionRegistry::evaluate(const std::string& id) {
  auto entry = find(id);
  std::optional<Session> snapshot;
  {
    std::lock_guard lock(entry->mutex);
    if (!entry->finished) throw Conflict("session " + id + " must be finished before evaluation");
    if (entry->report) return *entry->report;
    snapshot.emplace(entry->session);
  }
  // A finished session never changes, so the evaluation can run unlocked.
  const nlohmann::json report = report_to_json(evaluate_session(*snapshot, config_.evaluation));
  std::lock_guard lock(entry->mutex);
  entry->report = report;
  return report;
}

std::size_t SessionRegistry::load_finished_logs() {
  std::size_t loaded = 0;
  for (const auto& f : fs::directory_iterator(config_.log_dir)) {
    const fs::path p = f.path();
    if (!f.is_regular_file() || p.extension() != ".json" || is_checkpoint(p)) continue;
    try {
      const SessionLog log = load_session_log(p);
      auto entry = std::make_shared<Entry>(replay(log, scenario(log.scenario_name)));
      entry->finished = true;
      std::unique_lock lock(sessions_mutex_);
      sessions_.try_emplace(log.id, std::move(entry));
      ++loaded;
    } catch (const Error& e) {
      log::warning("skipping log " + p.string() + ": " + e.what());
    }
  }
  return loaded;
}

nlohmann::json error_body(ErrorCode code, const std::string& message) {
  return {{"error_code", std::string(to_string(code))}, {"message", message}};
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::SessionExhausted:
    case ErrorCode::Conflict: return 409;
    case ErrorCode::InvalidCell: return 422;
    case ErrorCode::Precondition:
    case ErrorCode::Format: return 400;
    default: return 500;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

nlohmann::json request_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  nlohmann::json j = parse_json(req.body, "request body");
  if (!j.is_object()) throw FormatError("request body must be a JSON object");
  return j;
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw FormatError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

template <class Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      send_json(res, http_status(e.code()), error_body(e.code(), e.what()));
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error_code", "internal"}, {"message", e.what()}});
    }
  };
}

}  // namespace

void register_routes(httplib::Server& server, SessionRegistry& registry) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/api/health", guarded([](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, {{"status", "ok"}});
             }));

  server.Get("/api/scenarios", guarded([&registry](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, registry.list_scenarios());
             }));

  server.Post("/api/sessions", guarded([&registry](const httplib::Request& req, httplib::Response& res) {
                const nlohmann::json body = request_body(req);
                const auto name = optional_string(body, "scenario_name");
                if (!name) throw FormatError("field 'scenario_name' is required");
                const auto agent_name = optional_string(body, "agent").value_or("human");
                send_json(res, 201,
                          registry.create_session(*name, parse_agent(agent_name), optional_string(body, "note")));
              }));

  server.Get(R"(/api/sessions/([^/]+))", guarded([&registry](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, registry.masked_view(req.matches[1]));
             }));

  server.Post(R"(/api/sessions/([^/]+)/waypoints)",
              guarded([&registry](const httplib::Request& req, httplib::Response& res) {
                const nlohmann::json body = request_body(req);
                const auto row = body.find("row");
                const auto col = body.find("col");
                if (row == body.end() || col == body.end() || !row->is_number_integer() ||
                    !col->is_number_integer()) {
                  throw InvalidCell("waypoint needs integer 'row' and 'col'");
                }
                send_json(res, 200,
                          registry.add_waypoint(req.matches[1], {row->get<int>(), col->get<int>()},
                                                optional_string(body, "token")));
              }));

  server.Post(R"(/api/sessions/([^/]+)/finish)",
              guarded([&registry](const httplib::Request& req, httplib::Response& res) {
                const nlohmann::json body = request_body(req);
                send_json(res, 200, registry.finish(req.matches[1], optional_string(body, "note")));
              }));

  server.Post(R"(/api/evaluate/([^/]+))", guarded([&registry](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, registry.evaluate(req.matches[1]));
              }));

  if (registry.config().web_root) {
    server.set_mount_point("/", registry.config().web_root->string());
  }
}

int serve(const ServiceConfig& config, const std::string& host, int port) {
  SessionRegistry registry(config);
  const std::size_t restored = registry.load_finished_logs();
  httplib::Server server;
  register_routes(server, registry);
  log::info("serving on " + host + ":" + std::to_string(port) + " (" + std::to_string(restored) +
            " finished sessions restored)");
  if (!server.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace infosample
