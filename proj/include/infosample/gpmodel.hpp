#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <optional>
#include <string>

namespace infosample {

/// Kernel hyperparameters in log space. Length scale is in degrees, the two
/// variances in squared field units.
struct Hyperparams {
  double log_l = -7.5;
  double log_sf2 = 0.5;
  double log_sn2 = 1.0;

  double length_scale() const;
  double signal_variance() const;
  double noise_variance() const;

  Eigen::Vector3d as_vector() const { return {log_l, log_sf2, log_sn2}; }
  static Hyperparams from_vector(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }

  /// Initial estimate the robot and the GP reconstruction start from.
  static Hyperparams robot_default() { return {-7.5, 0.5, 1.0}; }
  /// Generating process of the GP-drawn scenarios. Noise is unused there.
  static Hyperparams scenario_default() { return {-7.81, 1.68, -10.0}; }

  bool operator==(const Hyperparams&) const = default;
};

/// n x 2 matrix of (lon, lat) locations in degrees.
using Locations = Eigen::Matrix<double, Eigen::Dynamic, 2>;

struct TrainingSet {
  Locations x;
  Eigen::VectorXd y;

  Eigen::Index size() const { return y.size(); }
};

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Isotropic squared exponential, without the noise term.
double kernel_eval(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Hyperparams& hp);

Eigen::MatrixXd kernel_matrix(const Locations& a, const Locations& b, const Hyperparams& hp);

/// Cholesky with a geometric jitter ladder: a plain attempt, then
/// base·scale, base·scale·10, ... for up to `retries` more attempts.
struct JitterPolicy {
  double base = 1e-10;
  int retries = 5;
  bool start_with_jitter = false;
};

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

/// Throws FactorizationFailure when the ladder is exhausted. `scale` is the
/// magnitude the jitter is relative to (the signal variance for kernels).
Factorization factorize_with_jitter(const Eigen::MatrixXd& k, double scale,
                                    const JitterPolicy& policy = {});

/// Immutable GP posterior. Targets are centered by their mean before fitting
/// and the offset is added back on prediction.
class GpModel {
 public:
  static GpModel fit(const TrainingSet& train, const Hyperparams& hp);
  /// A model with no data: mean 0 and variance σf² everywhere.
  static GpModel prior(const Hyperparams& hp);

  /// Latent-field posterior; variance excludes the noise term and is
  /// clamped to [0, σf²].
  Prediction predict(const Locations& xstar) const;

  const TrainingSet& train() const { return train_; }
  const Hyperparams& hyperparams() const { return hp_; }
  double y_mean() const { return y_mean_; }
  double jitter() const { return jitter_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  Eigen::MatrixXd factor() const;
  bool empty() const { return train_.size() == 0; }

 private:
  GpModel() = default;

  TrainingSet train_;
  Hyperparams hp_;
  std::optional<Eigen::LLT<Eigen::MatrixXd>> llt_;
  Eigen::VectorXd alpha_;
  double y_mean_ = 0.0;
  double jitter_ = 0.0;
};

/// Differential entropy of a Gaussian, ½·ln(2πe·σ²). Zero variance maps to
/// -infinity.
double entropy(double variance);

struct LmlResult {
  double value = 0.0;
  /// d/d(log_l, log_sf2, log_sn2)
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
};

/// Log marginal likelihood of the mean-centered targets.
LmlResult log_marginal_likelihood(const TrainingSet& train, const Hyperparams& hp);

struct OptimizeOptions {
  int max_iterations = 100;
  double lower = -12.0;
  double upper = 5.0;
  double initial_step = 1.0;     // log units
  double gradient_tolerance = 1e-5;
  double min_step = 1e-8;
};

struct OptimizeResult {
  Hyperparams hp;
  double lml = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  /// Set when no factorization succeeded; hp is then the (clamped) init.
  bool failed = false;
};

/// Projected gradient ascent with backtracking on the log marginal
/// likelihood. Returns the best iterate visited.
OptimizeResult optimize_hyperparams(const TrainingSet& train, const Hyperparams& init,
                                    const OptimizeOptions& options = {});

}  // namespace infosample
