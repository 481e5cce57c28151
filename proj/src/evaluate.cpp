#include "infosample/evaluate.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include "infosample/errors.hpp"
#include "infosample/io.hpp"
#include "infosample/log.hpp"

namespace infosample {

std::vector<Sample> samples_from_revealed(std::span<const RevealedSample> revealed, const GridSpec& grid) {
  std::vector<Sample> out;
  out.reserve(revealed.size());
  for (const auto& r : revealed) out.push_back({grid.center_m(r.cell), r.value});
  return out;
}

namespace {

double green(double r) { return r > 0.0 ? r * r * (std::log(r) - 1.0) : 0.0; }

Field constant_field(const GridSpec& grid, double value) {
  Field f;
  f.grid = grid;
  f.values.assign(grid.size(), value);
  f.provenance = Provenance::Reconstruction;
  return f;
}

std::vector<Sample> collapse_duplicates(std::span<const Sample> samples) {
  std::map<std::pair<double, double>, std::size_t> slot;
  std::vector<Sample> out;
  std::vector<int> counts;
  for (const auto& s : samples) {
    const auto key = std::pair{s.location_m.x(), s.location_m.y()};
    auto [it, inserted] = slot.try_emplace(key, out.size());
    if (inserted) {
      out.push_back(s);
      counts.push_back(1);
    } else {
      out[it->second].value += s.value;
      ++counts[it->second];
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].value /= counts[i];
  return out;
}

}  // namespace

Reconstruction reconstruct_spline(std::span<const Sample> samples, const GridSpec& grid) {
  if (samples.empty()) throw PreconditionError("reconstruct_spline: no samples");
  const std::vector<Sample> pts = collapse_duplicates(samples);
  const auto n = static_cast<Eigen::Index>(pts.size());

  Eigen::MatrixXd g(n, n);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = pts[static_cast<std::size_t>(i)].value;
    for (Eigen::Index j = 0; j < n; ++j) {
      g(i, j) = green((pts[static_cast<std::size_t>(i)].location_m - pts[static_cast<std::size_t>(j)].location_m).norm());
    }
  }

  Reconstruction out;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
  if (!lu.isInvertible()) {
    out.field = constant_field(grid, v.mean());
    out.warning = "reconstruct_spline: singular Green's matrix for " + std::to_string(n) +
                  " samples; constant field at the sample mean";
    log::warning(*out.warning);
    return out;
  }
  const Eigen::VectorXd weights = lu.solve(v);

  out.field = constant_field(grid, 0.0);
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const Eigen::Vector2d x = grid.center_m(grid.cell_at(c));
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      sum += weights[j] * green((x - pts[static_cast<std::size_t>(j)].location_m).norm());
    }
    out.field.values[c] = sum;
  }
  return out;
}

Reconstruction reconstruct_gp(std::span<const Sample> samples, const GridSpec& grid,
                              const Hyperparams& init, const OptimizeOptions& optimizer) {
  if (samples.size() < 2) throw PreconditionError("reconstruct_gp: needs at least two samples");
  TrainingSet train;
  train.x.resize(static_cast<Eigen::Index>(samples.size()), 2);
  train.y.resize(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    train.x.row(idx) = grid.to_degrees(samples[i].location_m).transpose();
    train.y[idx] = samples[i].value;
  }

  try {
    const OptimizeResult opt = optimize_hyperparams(train, init, optimizer);
    if (opt.failed) throw FactorizationFailure("hyperparameter optimization could not factorize at init");
    const GpModel model = GpModel::fit(train, opt.hp);
    const Prediction p = model.predict(grid.all_centers_deg());
    Reconstruction out;
    out.field = constant_field(grid, 0.0);
    out.field.values.assign(p.mean.data(), p.mean.data() + p.mean.size());
    out.hp = opt.hp;
    return out;
  } catch (const FactorizationFailure& e) {
    Reconstruction out = reconstruct_spline(samples, grid);
    out.warning = std::string("reconstruct_gp: ") + e.what() + "; using spline reconstruction";
    log::warning(*out.warning);
    return out;
  }
}

double rmse(const Field& a, const Field& b) {
  if (!(a.grid == b.grid) || a.values.size() != b.values.size()) {
    throw GridMismatch("rmse: fields are on different grids");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.values.size()));
}

std::vector<TimePoint> evaluate_over_time(std::span<const Sample> ordered, const Field& truth,
                                          int batch_size, const Hyperparams& init,
                                          const OptimizeOptions& optimizer) {
  if (ordered.size() < 2) throw PreconditionError("evaluate_over_time: needs at least two samples");
  if (batch_size < 1) throw PreconditionError("evaluate_over_time: batch size must be positive");
  const auto total = static_cast<int>(ordered.size());
  const int points = (total + batch_size - 1) / batch_size;
  std::vector<TimePoint> series;
  for (int n = 1; n <= points; ++n) {
    const int k = std::min(n * batch_size, total);
    const Reconstruction r = reconstruct_gp(ordered.first(static_cast<std::size_t>(k)), truth.grid, init, optimizer);
    series.push_back({n, k, rmse(r.field, truth)});
  }
  return series;
}

EvaluationReport evaluate_session(const Session& session, const EvaluateOptions& options) {
  if (session.revealed().size() < 2) {
    throw PreconditionError("evaluate_session: session " + session.id() + " has fewer than two samples");
  }
  const Field& truth = session.scenario();
  const std::vector<Sample> samples = samples_from_revealed(session.revealed(), truth.grid);

  EvaluationReport r;
  r.session_id = session.id();
  r.scenario_name = truth.name;
  r.scenario_provenance = truth.provenance;
  r.agent = session.agent();
  r.seed = session.seed();
  r.n_samples = static_cast<int>(samples.size());

  Reconstruction spline = reconstruct_spline(samples, truth.grid);
  Reconstruction gp = reconstruct_gp(samples, truth.grid, options.gp_init, options.optimizer);
  if (spline.warning) r.warnings.push_back(*spline.warning);
  if (gp.warning) r.warnings.push_back(*gp.warning);
  r.rmse_spline = rmse(spline.field, truth);
  r.rmse_gp = rmse(gp.field, truth);
  r.rmse_spline_norm = r.rmse_spline / kFieldRange;
  r.rmse_gp_norm = r.rmse_gp / kFieldRange;
  r.gp_hp = gp.hp;

  if (options.time_series) {
    // The final point covers every sample, which is exactly the fit above.
    const std::size_t full = samples.size();
    const int b = options.batch_size;
    const int points = (static_cast<int>(full) + b - 1) / b;
    if (points > 1) {
      r.time_series = evaluate_over_time(std::span(samples).first(static_cast<std::size_t>((points - 1) * b)),
                                         truth, b, options.gp_init, options.optimizer);
    }
    r.time_series.push_back({points, static_cast<int>(full), r.rmse_gp});
  }

  if (options.keep_reconstructions) {
    spline.field.name = session.id() + ".spline";
    gp.field.name = session.id() + ".gp";
    r.spline_field = std::move(spline.field);
    r.gp_field = std::move(gp.field);
  }
  return r;
}

nlohmann::json report_to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["session_id"] = r.session_id;
  j["scenario_name"] = r.scenario_name;
  j["scenario_provenance"] = to_string(r.scenario_provenance);
  j["agent"] = std::string(to_string(r.agent));
  j["seed"] = r.seed ? nlohmann::json(*r.seed) : nlohmann::json(nullptr);
  j["n_samples"] = r.n_samples;
  j["rmse_spline"] = r.rmse_spline;
  j["rmse_gp"] = r.rmse_gp;
  j["rmse_spline_norm"] = r.rmse_spline_norm;
  j["rmse_gp_norm"] = r.rmse_gp_norm;
  if (r.gp_hp) j["gp_hp"] = hyperparams_to_json(*r.gp_hp);
  auto& ts = j["time_series"] = nlohmann::json::array();
  for (const auto& p : r.time_series) ts.push_back({{"n", p.n}, {"samples", p.samples}, {"rmse", p.rmse_gp}});
  j["warnings"] = r.warnings;
  if (r.spline_field && r.gp_field) {
    j["reconstructions"] = {{"spline", scenario_to_json(*r.spline_field)}, {"gp", scenario_to_json(*r.gp_field)}};
  }
  return j;
}

namespace {

double number_at(const nlohmann::json& j, const char* key, const std::string& src) {
  const auto& v = require_field(j, key, src);
  if (!v.is_number()) throw FormatError(src + ": field '" + key + "' must be a number");
  return v.get<double>();
}

int int_at(const nlohmann::json& j, const char* key, const std::string& src) {
  const auto& v = require_field(j, key, src);
  if (!v.is_number_integer()) throw FormatError(src + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

std::string string_at(const nlohmann::json& j, const char* key, const std::string& src) {
  const auto& v = require_field(j, key, src);
  if (!v.is_string()) throw FormatError(src + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

EvaluationReport report_from_json(const nlohmann::json& j, const std::string& src) {
  if (int_at(j, "format_version", src) != 1) throw FormatError(src + ": unsupported format_version");
  EvaluationReport r;
  r.session_id = string_at(j, "session_id", src);
  r.scenario_name = string_at(j, "scenario_name", src);
  r.scenario_provenance = parse_provenance(string_at(j, "scenario_provenance", src));
  r.agent = parse_agent(string_at(j, "agent", src));
  if (auto it = j.find("seed"); it != j.end() && it->is_number_unsigned()) r.seed = it->get<RngSeed>();
  r.n_samples = int_at(j, "n_samples", src);
  r.rmse_spline = number_at(j, "rmse_spline", src);
  r.rmse_gp = number_at(j, "rmse_gp", src);
  r.rmse_spline_norm = number_at(j, "rmse_spline_norm", src);
  r.rmse_gp_norm = number_at(j, "rmse_gp_norm", src);
  if (auto it = j.find("gp_hp"); it != j.end() && !it->is_null()) {
    r.gp_hp = hyperparams_from_json(*it, src + ": field 'gp_hp'");
  }
  if (auto it = j.find("time_series"); it != j.end()) {
    for (const auto& p : *it) {
      r.time_series.push_back({int_at(p, "n", src), int_at(p, "samples", src), number_at(p, "rmse", src)});
    }
  }
  if (auto it = j.find("warnings"); it != j.end() && it->is_array()) {
    r.warnings = it->get<std::vector<std::string>>();
  }
  if (auto it = j.find("reconstructions"); it != j.end() && it->is_object()) {
    r.spline_field = scenario_from_json(require_field(*it, "spline", src));
    r.gp_field = scenario_from_json(require_field(*it, "gp", src));
  }
  return r;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw PreconditionError("percentile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw PreconditionError("percentile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

BoxStats box_stats(std::vector<double> values) {
  BoxStats s;
  s.count = values.size();
  s.median = percentile(values, 0.5);
  s.p25 = percentile(values, 0.25);
  s.p75 = percentile(values, 0.75);
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  return s;
}

AggregateStats aggregate(std::span<const EvaluationReport> reports) {
  using ScenarioKey = std::tuple<std::string, Agent, std::string>;
  std::map<ScenarioKey, std::vector<double>> by_scenario;
  std::map<std::string, Provenance> provenance;
  std::map<std::tuple<Provenance, Agent, int>, std::vector<double>> by_time;

  for (const auto& r : reports) {
    by_scenario[{r.scenario_name, r.agent, "gp"}].push_back(r.rmse_gp);
    by_scenario[{r.scenario_name, r.agent, "spline"}].push_back(r.rmse_spline);
    provenance[r.scenario_name] = r.scenario_provenance;
    for (const auto& p : r.time_series) by_time[{r.scenario_provenance, r.agent, p.n}].push_back(p.rmse_gp);
  }

  AggregateStats out;
  std::map<std::pair<Agent, std::string>, std::vector<double>> scenario_means;
  for (auto& [key, values] : by_scenario) {
    const auto& [scenario, agent, method] = key;
    AggregateStats::ScenarioRow row{scenario, provenance[scenario], agent, method, box_stats(values)};
    scenario_means[{agent, method}].push_back(row.stats.mean);
    out.per_scenario.push_back(std::move(row));
  }
  for (auto& [key, means] : scenario_means) {
    double sum = 0.0;
    for (double m : means) sum += m;
    const double gm = sum / static_cast<double>(means.size());
    out.grand_means.push_back({key.first, key.second, gm, gm / kFieldRange, means.size()});
  }
  for (auto& [key, values] : by_time) {
    const auto& [group, agent, n] = key;
    out.time_series.push_back({group, agent, n, box_stats(values)});
  }
  return out;
}

double grand_mean(const AggregateStats& stats, Agent agent, const std::string& method) {
  for (const auto& row : stats.grand_means) {
    if (row.agent == agent && row.method == method) return row.grand_mean;
  }
  throw NotFound("no grand mean for " + std::string(to_string(agent)) + "/" + method);
}

namespace {

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_text(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string reports_csv(std::span<const EvaluationReport> reports) {
  std::ostringstream out;
  out << "session,scenario,agent,method,rmse_raw,rmse_norm\n";
  for (const auto& r : reports) {
    const std::string head = csv_text(r.session_id) + "," + csv_text(r.scenario_name) + "," +
                             std::string(to_string(r.agent)) + ",";
    out << head << "spline," << num(r.rmse_spline) << "," << num(r.rmse_spline_norm) << "\n";
    out << head << "gp," << num(r.rmse_gp) << "," << num(r.rmse_gp_norm) << "\n";
  }
  return out.str();
}

std::string time_series_csv(std::span<const EvaluationReport> reports) {
  std::ostringstream out;
  out << "session,n,rmse\n";
  for (const auto& r : reports) {
    for (const auto& p : r.time_series) out << csv_text(r.session_id) << "," << p.n << "," << num(p.rmse_gp) << "\n";
  }
  return out.str();
}

std::string boxplot_csv(const AggregateStats& stats) {
  std::ostringstream out;
  out << "scenario,agent,method,median,p25,p75\n";
  for (const auto& row : stats.per_scenario) {
    out << csv_text(row.scenario) << "," << to_string(row.agent) << "," << row.method << ","
        << num(row.stats.median) << "," << num(row.stats.p25) << "," << num(row.stats.p75) << "\n";
  }
  return out.str();
}

std::string grand_means_csv(const AggregateStats& stats) {
  std::ostringstream out;
  out << "agent,method,mean_rmse_raw,mean_rmse_norm,scenarios\n";
  for (const auto& row : stats.grand_means) {
    out << to_string(row.agent) << "," << row.method << "," << num(row.grand_mean) << ","
        << num(row.grand_mean_norm) << "," << row.scenarios << "\n";
  }
  return out.str();
}

std::string time_series_stats_csv(const AggregateStats& stats) {
  std::ostringstream out;
  out << "group,agent,n,median,p25,p75\n";
  for (const auto& row : stats.time_series) {
    out << to_string(row.group) << "," << to_string(row.agent) << "," << row.n << ","
        << num(row.stats.median) << "," << num(row.stats.p25) << "," << num(row.stats.p75) << "\n";
  }
  return out.str();
}

nlohmann::json aggregate_to_json(const AggregateStats& stats) {
  auto box = [](const BoxStats& s) {
    return nlohmann::json{{"median", s.median}, {"p25", s.p25}, {"p75", s.p75}, {"mean", s.mean}, {"count", s.count}};
  };
  nlohmann::json j;
  j["format_version"] = 1;
  auto& per = j["per_scenario"] = nlohmann::json::array();
  for (const auto& r : stats.per_scenario) {
    per.push_back({{"scenario", r.scenario}, {"provenance", to_string(r.provenance)},
                   {"agent", std::string(to_string(r.agent))}, {"method", r.method}, {"stats", box(r.stats)}});
  }
  auto& gm = j["grand_means"] = nlohmann::json::array();
  for (const auto& r : stats.grand_means) {
    gm.push_back({{"agent", std::string(to_string(r.agent))}, {"method", r.method}, {"mean_rmse_raw", r.grand_mean},
                  {"mean_rmse_norm", r.grand_mean_norm}, {"scenarios", r.scenarios}});
  }
  auto& ts = j["time_series"] = nlohmann::json::array();
  for (const auto& r : stats.time_series) {
    ts.push_back({{"group", to_string(r.group)}, {"agent", std::string(to_string(r.agent))}, {"n", r.n},
                  {"stats", box(r.stats)}});
  }
  return j;
}

}  // namespace infosample
