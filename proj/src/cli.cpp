#include "infosample/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <json.hpp>

#include "infosample/evaluate.hpp"
#include "infosample/io.hpp"
#include "infosample/log.hpp"
#include "infosample/robot.hpp"
#include "infosample/scenario.hpp"
#include "infosample/service.hpp"
#include "infosample/session.hpp"

namespace infosample {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Factorization:
    case ErrorCode::DegenerateField: return kExitNumerical;
    default: return kExitData;
  }
}

std::vector<std::uint64_t> parse_seed_list(const std::vector<std::string>& tokens) {
  auto parse_one = [](std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw PreconditionError("invalid seed '" + std::string(s) + "'");
    }
    return v;
  };
  std::vector<std::uint64_t> out;
  for (const auto& t : tokens) {
    const auto dots = t.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_one(t));
      continue;
    }
    const std::uint64_t lo = parse_one(std::string_view(t).substr(0, dots));
    const std::uint64_t hi = parse_one(std::string_view(t).substr(dots + 2));
    if (hi < lo) throw PreconditionError("empty seed range '" + t + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  return out;
}

namespace {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex first_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(first_mutex);
        if (!first) first = std::current_exception();
        failed = true;
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  if (first) std::rethrow_exception(first);
}

unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<fs::path> json_files(const fs::path& dir, std::string_view suffix = ".json") {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (!e.is_regular_file() || !name.ends_with(suffix)) continue;
    if (name == "manifest.json" || name.ends_with(".checkpoint.json")) continue;
    out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// The manifest is written as `manifest.json.partial` while a command runs
/// and renamed on success, so an aborted run is visibly incomplete.
class Manifest {
 public:
  Manifest(fs::path dir, json body) : dir_(std::move(dir)), body_(std::move(body)) {
    fs::create_directories(dir_);
    body_["status"] = "running";
    write(partial_path());
  }

  json& body() { return body_; }

  void succeed() {
    body_["status"] = "complete";
    write_file_atomic(dir_ / "manifest.json", body_.dump(1) + "\n");
    std::error_code ec;
    fs::remove(partial_path(), ec);
  }

  void fail(const std::string& message) {
    body_["status"] = "failed";
    body_["error"] = message;
    try {
      write(partial_path());
    } catch (const std::exception&) {
    }
  }

 private:
  fs::path partial_path() const { return dir_ / "manifest.json.partial"; }
  void write(const fs::path& p) const {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << body_.dump(1) << "\n";
  }

  fs::path dir_;
  json body_;
};

template <class Body>
void with_manifest(Manifest& manifest, Body body) {
  try {
    body();
    manifest.succeed();
  } catch (const std::exception& e) {
    manifest.fail(e.what());
    throw;
  }
}

std::optional<fs::path> scenario_dir_from_manifest(const fs::path& dir) {
  const fs::path m = dir / "manifest.json";
  if (!fs::exists(m)) return std::nullopt;
  const json j = parse_json(read_file(m), m.string());
  if (auto it = j.find("scenario_dir"); it != j.end() && it->is_string()) return fs::path(it->get<std::string>());
  return std::nullopt;
}

std::map<std::string, std::shared_ptr<const Field>> load_scenarios(const fs::path& dir) {
  std::map<std::string, std::shared_ptr<const Field>> out;
  for (const auto& f : json_files(dir)) {
    auto field = std::make_shared<const Field>(load_scenario(f));
    out[field->name] = std::move(field);
  }
  return out;
}

std::shared_ptr<const Field> lookup(const std::map<std::string, std::shared_ptr<const Field>>& scenarios,
                                    const std::string& name) {
  auto it = scenarios.find(name);
  if (it == scenarios.end()) throw NotFound("scenario '" + name + "' not found");
  return it->second;
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

// gen ------------------------------------------------------------------------

struct GenArgs {
  std::string kind = "gp";
  int count = 6;
  std::uint64_t seed = 1;
  fs::path out;
  double log_l = Hyperparams::scenario_default().log_l;
  double log_sf2 = Hyperparams::scenario_default().log_sf2;
  double log_sn2 = Hyperparams::scenario_default().log_sn2;
  double noise_frac = 0.05;
};

void cmd_gen(const GenArgs& a) {
  ScenarioRecipe recipe;
  recipe.kind = a.kind == "gmm" ? ScenarioKind::Gmm : ScenarioKind::Gp;
  recipe.gp = {a.log_l, a.log_sf2, a.log_sn2};
  recipe.noise_frac = a.noise_frac;

  Manifest manifest(a.out, {{"command", "gen"},
                            {"kind", a.kind},
                            {"count", a.count},
                            {"seed", a.seed},
                            {"hyperparams", hyperparams_to_json(recipe.gp)},
                            {"noise_frac", a.noise_frac}});
  with_manifest(manifest, [&] {
    auto& files = manifest.body()["files"] = json::array();
    for (int i = 0; i < a.count; ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "%s_s%llu_%02d", a.kind.c_str(), static_cast<unsigned long long>(a.seed), i);
      const RngSeed seed = derive_seed(a.seed, static_cast<std::uint64_t>(i));
      const Field f = generate_scenario(recipe, seed, name);
      const std::string file = std::string(name) + ".json";
      save_scenario(f, a.out / file);
      files.push_back({{"file", file}, {"seed", seed}});
      std::cout << (a.out / file).string() << "\n";
    }
  });
}

// run ------------------------------------------------------------------------

struct RunArgs {
  fs::path scenarios;
  std::vector<std::string> strategies;
  std::vector<std::string> seeds{"0"};
  int budget = kDefaultBudget;
  fs::path out;
  double log_l = Hyperparams::robot_default().log_l;
  double log_sf2 = Hyperparams::robot_default().log_sf2;
  double log_sn2 = Hyperparams::robot_default().log_sn2;
  double alpha = kDefaultAlpha;
  int start_row = 0;
  int start_col = 0;
  unsigned jobs = default_jobs();
};

void cmd_run(const RunArgs& a) {
  std::vector<Strategy> strategies;
  for (const auto& s : a.strategies) strategies.push_back(parse_strategy(s));
  const std::vector<std::uint64_t> seeds = parse_seed_list(a.seeds);
  if (a.budget < 0) throw PreconditionError("--budget must be non-negative");
  const auto scenarios = load_scenarios(a.scenarios);
  if (scenarios.empty()) throw NotFound("no scenario files in " + a.scenarios.string());

  const Hyperparams init{a.log_l, a.log_sf2, a.log_sn2};
  RobotOptions options;
  options.alpha = a.alpha;
  options.start = {a.start_row, a.start_col};

  struct Job {
    std::shared_ptr<const Field> scenario;
    Strategy strategy;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  json names = json::array();
  for (const auto& [name, field] : scenarios) {
    names.push_back(name);
    if (!field->grid.contains(options.start)) throw InvalidCell("start cell outside the grid of " + name);
    for (Strategy st : strategies)
      for (std::uint64_t seed : seeds) jobs.push_back({field, st, seed});
  }
  json strategy_names = json::array();
  for (Strategy st : strategies) strategy_names.push_back(std::string(to_string(st)));

  Manifest manifest(a.out, {{"command", "run"},
                            {"scenario_dir", fs::absolute(a.scenarios).string()},
                            {"scenarios", names},
                            {"strategies", strategy_names},
                            {"seeds", seeds},
                            {"budget", a.budget},
                            {"hp_init", hyperparams_to_json(init)},
                            {"alpha", a.alpha},
                            {"start", {{"row", a.start_row}, {"col", a.start_col}}},
                            {"output_dir", fs::absolute(a.out).string()}});
  with_manifest(manifest, [&] {
    parallel_for(jobs.size(), a.jobs, [&](std::size_t i) {
      const Job& job = jobs[i];
      const Session s = run_robot(job.scenario, job.strategy, a.budget, init, job.seed, options);
      save_session(s, a.out / (s.id() + ".json"));
      log::info("run: " + s.id() + " revealed " + std::to_string(s.revealed().size()));
    });
  });
  std::cout << jobs.size() << " session logs written to " << a.out.string() << "\n";
}

// eval -----------------------------------------------------------------------

struct EvalArgs {
  fs::path sessions;
  std::optional<fs::path> scenarios;
  fs::path out;
  bool time_series = false;
  int batch = kDefaultBatchSize;
  unsigned jobs = default_jobs();
};

void cmd_eval(const EvalArgs& a) {
  const fs::path scenario_dir = a.scenarios ? *a.scenarios : scenario_dir_from_manifest(a.sessions).value_or("");
  if (scenario_dir.empty()) throw PreconditionError("--scenarios is required (no run manifest in " + a.sessions.string() + ")");
  const auto scenarios = load_scenarios(scenario_dir);
  const std::vector<fs::path> files = json_files(a.sessions);

  EvaluateOptions options;
  options.time_series = a.time_series;
  options.batch_size = a.batch;

  Manifest manifest(a.out, {{"command", "eval"},
                            {"sessions_dir", fs::absolute(a.sessions).string()},
                            {"scenario_dir", fs::absolute(scenario_dir).string()},
                            {"time_series", a.time_series},
                            {"batch_size", a.batch}});
  std::vector<EvaluationReport> reports(files.size());
  with_manifest(manifest, [&] {
    parallel_for(files.size(), a.jobs, [&](std::size_t i) {
      const SessionLog log = load_session_log(files[i]);
      const auto field = lookup(scenarios, log.scenario_name);
      const ReplayCheck check = verify_log(log, field);
      if (!check.ok) throw FormatError(files[i].string() + ": log does not replay: " + check.problems.front());
      reports[i] = evaluate_session(replay(log, field), options);
      for (const auto& w : reports[i].warnings) log::warning(log.id + ": " + w);
      write_file_atomic(a.out / (log.id + ".report.json"), report_to_json(reports[i]).dump(1) + "\n");
    });
    write_file_atomic(a.out / "reports.csv", reports_csv(reports));
    if (a.time_series) write_file_atomic(a.out / "time_series.csv", time_series_csv(reports));
    manifest.body()["reports"] = reports.size();
  });
  std::cout << reports.size() << " reports written to " << a.out.string() << "\n";
}

// aggregate ------------------------------------------------------------------

struct AggregateArgs {
  fs::path reports;
  fs::path out;
};

void cmd_aggregate(const AggregateArgs& a) {
  std::vector<EvaluationReport> reports;
  for (const auto& f : json_files(a.reports, ".report.json")) {
    reports.push_back(report_from_json(parse_json(read_file(f), f.string()), f.string()));
  }
  if (reports.empty()) throw NotFound("no *.report.json files in " + a.reports.string());

  Manifest manifest(a.out, {{"command", "aggregate"},
                            {"reports_dir", fs::absolute(a.reports).string()},
                            {"reports", reports.size()}});
  with_manifest(manifest, [&] {
    const AggregateStats stats = aggregate(reports);
    write_file_atomic(a.out / "grand_means.csv", grand_means_csv(stats));
    write_file_atomic(a.out / "boxplot.csv", boxplot_csv(stats));
    write_file_atomic(a.out / "time_series_stats.csv", time_series_stats_csv(stats));
    write_file_atomic(a.out / "aggregate.json", aggregate_to_json(stats).dump(1) + "\n");
    std::cout << grand_means_csv(stats);
  });
}

// replay ---------------------------------------------------------------------

struct ReplayArgs {
  fs::path session;
  std::optional<fs::path> scenarios;
};

int cmd_replay(const ReplayArgs& a) {
  const SessionLog log = load_session_log(a.session);
  fs::path dir;
  if (a.scenarios) {
    dir = *a.scenarios;
  } else if (auto m = scenario_dir_from_manifest(a.session.parent_path())) {
    dir = *m;
  } else {
    throw PreconditionError("--scenarios is required (no run manifest next to " + a.session.string() + ")");
  }
  const auto scenarios = load_scenarios(dir);
  const ReplayCheck check = verify_log(log, lookup(scenarios, log.scenario_name));
  if (check.ok) {
    std::cout << "ok: " << log.id << " (" << log.revealed.size() << " cells)\n";
    return kExitOk;
  }
  for (const auto& p : check.problems) std::cerr << "mismatch: " << p << "\n";
  return kExitData;
}

// serve ----------------------------------------------------------------------

struct ServeArgs {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string scenario_dir;
  std::string log_dir;
  std::string web_root;
  int budget = kDefaultBudget;
};

int cmd_serve(ServeArgs a) {
  a.port = std::stoi(env_or("INFOSAMPLE_PORT", std::to_string(a.port)));
  ServiceConfig config;
  config.scenario_dir = a.scenario_dir.empty() ? env_or("INFOSAMPLE_SCENARIO_DIR", "scenarios") : a.scenario_dir;
  config.log_dir = a.log_dir.empty() ? env_or("INFOSAMPLE_LOG_DIR", "logs") : a.log_dir;
  const std::string web = a.web_root.empty() ? env_or("INFOSAMPLE_WEB_ROOT", "") : a.web_root;
  if (!web.empty()) config.web_root = web;
  config.budget_total = a.budget;
  return serve(config, a.host, a.port);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Informative sampling experiments: scenario generation, robot runs, evaluation and the session service"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Log progress");
  app.add_flag("-q,--quiet", quiet, "Log errors only");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate scenario files");
  gen_cmd->add_option("--kind", gen.kind)->check(CLI::IsMember({"gp", "gmm"}))->capture_default_str();
  gen_cmd->add_option("--count", gen.count)->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--out", gen.out)->required();
  gen_cmd->add_option("--log-l", gen.log_l, "Log length scale (degrees) of GP-drawn fields")->capture_default_str();
  gen_cmd->add_option("--log-sf2", gen.log_sf2, "Log signal variance of GP-drawn fields")->capture_default_str();
  gen_cmd->add_option("--log-sn2", gen.log_sn2)->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise_frac, "Uniform noise amplitude as a fraction of max |value|")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run robot strategies over scenarios");
  run_cmd->add_option("--scenarios", run.scenarios)->required()->check(CLI::ExistingDirectory);
  run_cmd->add_option("--strategy", run.strategies)
      ->required()
      ->delimiter(',')
      ->check(CLI::IsMember({"random", "entropy", "entropy_mean"}));
  run_cmd->add_option("--seeds", run.seeds, "Seeds or inclusive ranges such as 0..9")->capture_default_str();
  run_cmd->add_option("--budget", run.budget)->capture_default_str();
  run_cmd->add_option("--out", run.out)->required();
  run_cmd->add_option("--init-log-l", run.log_l)->capture_default_str();
  run_cmd->add_option("--init-log-sf2", run.log_sf2)->capture_default_str();
  run_cmd->add_option("--init-log-sn2", run.log_sn2)->capture_default_str();
  run_cmd->add_option("--alpha", run.alpha, "Mean weight of entropy_mean")->capture_default_str();
  run_cmd->add_option("--start-row", run.start_row)->capture_default_str();
  run_cmd->add_option("--start-col", run.start_col)->capture_default_str();
  run_cmd->add_option("-j,--jobs", run.jobs)->check(CLI::PositiveNumber);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate session logs");
  eval_cmd->add_option("--sessions", eval.sessions)->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--scenarios", eval.scenarios, "Defaults to the directory recorded by `run`");
  eval_cmd->add_option("--out", eval.out)->required();
  eval_cmd->add_flag("--time-series", eval.time_series);
  eval_cmd->add_option("--batch", eval.batch)->check(CLI::PositiveNumber)->capture_default_str();
  eval_cmd->add_option("-j,--jobs", eval.jobs)->check(CLI::PositiveNumber);

  AggregateArgs agg;
  auto* agg_cmd = app.add_subcommand("aggregate", "Summarize evaluation reports");
  agg_cmd->add_option("--reports", agg.reports)->required()->check(CLI::ExistingDirectory);
  agg_cmd->add_option("--out", agg.out)->required();

  ServeArgs srv;
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP session service");
  serve_cmd->add_option("--host", srv.host)->capture_default_str();
  serve_cmd->add_option("--port", srv.port, "Also INFOSAMPLE_PORT")->capture_default_str();
  serve_cmd->add_option("--scenario-dir", srv.scenario_dir, "Also INFOSAMPLE_SCENARIO_DIR");
  serve_cmd->add_option("--log-dir", srv.log_dir, "Also INFOSAMPLE_LOG_DIR");
  serve_cmd->add_option("--web-root", srv.web_root, "Static files served at /");
  serve_cmd->add_option("--budget", srv.budget)->capture_default_str();

  ReplayArgs rep;
  auto* replay_cmd = app.add_subcommand("replay", "Verify a session log by replaying its waypoints");
  replay_cmd->add_option("--session", rep.session)->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--scenarios", rep.scenarios, "Defaults to the directory recorded by `run`");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  log::set_level(quiet ? log::Level::Error : verbose ? log::Level::Info : log::Level::Warning);

  try {
    if (*gen_cmd) cmd_gen(gen);
    if (*run_cmd) cmd_run(run);
    if (*eval_cmd) cmd_eval(eval);
    if (*agg_cmd) cmd_aggregate(agg);
    if (*serve_cmd) return cmd_serve(srv);
    if (*replay_cmd) return cmd_replay(rep);
    return kExitOk;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace infosample
