#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "infosample/gpmodel.hpp"
#include "infosample/scenario.hpp"
#include "infosample/session.hpp"

namespace infosample {

/// Normalizer for the reported RMSE: the width of the scenario value range.
inline constexpr double kFieldRange = kFieldHi - kFieldLo;
inline constexpr int kDefaultBatchSize = 20;

struct Sample {
  Eigen::Vector2d location_m;
  double value = 0.0;
};

/// Revealed cells as samples at their cell centers, in reveal order.
std::vector<Sample> samples_from_revealed(std::span<const RevealedSample> revealed, const GridSpec& grid);

struct Reconstruction {
  Field field;
  /// Set when a fallback path produced the field.
  std::optional<std::string> warning;
  /// Fitted hyperparameters (GP reconstruction only).
  std::optional<Hyperparams> hp;
};

/// Biharmonic Green's-function interpolation, g(r) = r²(ln r − 1), in
/// meters. Duplicate locations are averaged first. A singular system yields
/// a constant field at the sample mean, with a warning.
Reconstruction reconstruct_spline(std::span<const Sample> samples, const GridSpec& grid);

/// GP posterior mean after re-estimating the hyperparameters from `init`.
/// Falls back to the spline on factorization failure.
Reconstruction reconstruct_gp(std::span<const Sample> samples, const GridSpec& grid,
                              const Hyperparams& init = Hyperparams::robot_default(),
                              const OptimizeOptions& optimizer = {});

/// Throws GridMismatch unless both fields share a GridSpec.
double rmse(const Field& a, const Field& b);

struct TimePoint {
  int n = 0;        // batch index, 1-based
  int samples = 0;  // samples used for this point
  double rmse_gp = 0.0;

  bool operator==(const TimePoint&) const = default;
};

/// GP reconstruction error using the first n·batch_size samples for
/// n = 1..ceil(total / batch_size); the last point uses all samples.
std::vector<TimePoint> evaluate_over_time(std::span<const Sample> ordered, const Field& truth,
                                          int batch_size = kDefaultBatchSize,
                                          const Hyperparams& init = Hyperparams::robot_default(),
                                          const OptimizeOptions& optimizer = {});

struct EvaluationReport {
  std::string session_id;
  std::string scenario_name;
  Provenance scenario_provenance = Provenance::GpSample;
  Agent agent = Agent::Human;
  std::optional<RngSeed> seed;
  int n_samples = 0;
  double rmse_spline = 0.0;
  double rmse_gp = 0.0;
  double rmse_spline_norm = 0.0;
  double rmse_gp_norm = 0.0;
  std::optional<Hyperparams> gp_hp;
  std::vector<TimePoint> time_series;
  std::vector<std::string> warnings;
  std::optional<Field> spline_field;
  std::optional<Field> gp_field;
};

struct EvaluateOptions {
  bool time_series = false;
  int batch_size = kDefaultBatchSize;
  bool keep_reconstructions = false;
  Hyperparams gp_init = Hyperparams::robot_default();
  OptimizeOptions optimizer;
};

/// Throws PreconditionError with fewer than two revealed cells.
EvaluationReport evaluate_session(const Session& session, const EvaluateOptions& options = {});

nlohmann::json report_to_json(const EvaluationReport& r);
EvaluationReport report_from_json(const nlohmann::json& j, const std::string& source = "report");

/// Linear interpolation between order statistics; q in [0, 1].
double percentile(std::vector<double> values, double q);

struct BoxStats {
  double median = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
  double mean = 0.0;
  std::size_t count = 0;
};

BoxStats box_stats(std::vector<double> values);

struct AggregateStats {
  struct ScenarioRow {
    std::string scenario;
    Provenance provenance;
    Agent agent;
    std::string method;  // "spline" or "gp"
    BoxStats stats;
  };
  struct MeanRow {
    Agent agent;
    std::string method;
    double grand_mean = 0.0;  // mean over scenarios of per-scenario means
    double grand_mean_norm = 0.0;
    std::size_t scenarios = 0;
  };
  struct TimeRow {
    Provenance group;
    Agent agent;
    int n = 0;
    BoxStats stats;
  };
  std::vector<ScenarioRow> per_scenario;
  std::vector<MeanRow> grand_means;
  std::vector<TimeRow> time_series;
};

AggregateStats aggregate(std::span<const EvaluationReport> reports);

/// Looks up a grand mean; throws NotFound when the group is absent.
double grand_mean(const AggregateStats& stats, Agent agent, const std::string& method);

std::string reports_csv(std::span<const EvaluationReport> reports);
std::string time_series_csv(std::span<const EvaluationReport> reports);
std::string boxplot_csv(const AggregateStats& stats);
std::string grand_means_csv(const AggregateStats& stats);
std::string time_series_stats_csv(const AggregateStats& stats);
nlohmann::json aggregate_to_json(const AggregateStats& stats);

}  // namespace infosample
