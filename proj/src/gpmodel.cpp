#include "infosample/gpmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "infosample/errors.hpp"

namespace infosample {

double Hyperparams::length_scale() const { return std::exp(log_l); }
double Hyperparams::signal_variance() const { return std::exp(log_sf2); }
double Hyperparams::noise_variance() const { return std::exp(log_sn2); }

double kernel_eval(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Hyperparams& hp) {
  const double l = hp.length_scale();
  return hp.signal_variance() * std::exp(-(a - b).squaredNorm() / (2.0 * l * l));
}

namespace {

Eigen::MatrixXd squared_distances(const Locations& a, const Locations& b) {
  Eigen::MatrixXd d2(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double dx = a(i, 0) - b(j, 0);
      const double dy = a(i, 1) - b(j, 1);
      d2(i, j) = dx * dx + dy * dy;
    }
  }
  return d2;
}

Eigen::MatrixXd se_from_distances(const Eigen::MatrixXd& d2, const Hyperparams& hp) {
  const double l = hp.length_scale();
  const double inv = -1.0 / (2.0 * l * l);
  return hp.signal_variance() * (d2.array() * inv).exp().matrix();
}

bool factor_ok(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) return false;
  return llt.matrixLLT().diagonal().allFinite();
}

}  // namespace

Eigen::MatrixXd kernel_matrix(const Locations& a, const Locations& b, const Hyperparams& hp) {
  return se_from_distances(squared_distances(a, b), hp);
}

Factorization factorize_with_jitter(const Eigen::MatrixXd& k, double scale,
                                    const JitterPolicy& policy) {
  Factorization out;
  double jitter = policy.base * scale;
  for (int attempt = 0; attempt <= policy.retries; ++attempt) {
    const bool plain = !policy.start_with_jitter && attempt == 0;
    if (plain) {
      out.llt.compute(k);
      out.jitter = 0.0;
    } else {
      Eigen::MatrixXd kj = k;
      kj.diagonal().array() += jitter;
      out.llt.compute(kj);
      out.jitter = jitter;
      jitter *= 10.0;
    }
    if (factor_ok(out.llt)) return out;
  }
  std::ostringstream msg;
  msg << "covariance matrix (" << k.rows() << "x" << k.cols()
      << ") not positive definite after jitter " << jitter / 10.0;
  throw FactorizationFailure(msg.str());
}

GpModel GpModel::fit(const TrainingSet& train, const Hyperparams& hp) {
  if (train.size() == 0) throw PreconditionError("GpModel::fit: empty training set");
  if (train.x.rows() != train.y.size()) {
    throw PreconditionError("GpModel::fit: location and target counts differ");
  }
  GpModel m;
  m.train_ = train;
  m.hp_ = hp;
  m.y_mean_ = train.y.mean();

  Eigen::MatrixXd k = kernel_matrix(train.x, train.x, hp);
  k.diagonal().array() += hp.noise_variance();
  Factorization f = factorize_with_jitter(k, hp.signal_variance());
  m.jitter_ = f.jitter;
  m.alpha_ = f.llt.solve((train.y.array() - m.y_mean_).matrix());
  m.llt_ = std::move(f.llt);
  return m;
}

GpModel GpModel::prior(const Hyperparams& hp) {
  GpModel m;
  m.hp_ = hp;
  m.train_.x.resize(0, 2);
  m.train_.y.resize(0);
  return m;
}

Eigen::MatrixXd GpModel::factor() const {
  if (!llt_) return {};
  return llt_->matrixL();
}

Prediction GpModel::predict(const Locations& xstar) const {
  if (xstar.rows() == 0) throw PreconditionError("GpModel::predict: no test locations");
  const double sf2 = hp_.signal_variance();
  Prediction p;
  if (empty()) {
    p.mean = Eigen::VectorXd::Zero(xstar.rows());
    p.variance = Eigen::VectorXd::Constant(xstar.rows(), sf2);
    return p;
  }
  const Eigen::MatrixXd ks = kernel_matrix(xstar, train_.x, hp_);
  p.mean = (ks * alpha_).array() + y_mean_;
  const Eigen::MatrixXd v = llt_->matrixL().solve(ks.transpose());
  p.variance = (sf2 - v.colwise().squaredNorm().transpose().array()).max(0.0).min(sf2);
  return p;
}

double entropy(double variance) {
  if (variance <= 0.0) return -std::numeric_limits<double>::infinity();
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance);
}

namespace {

struct LmlWorkspace {
  Eigen::MatrixXd d2;
  Eigen::VectorXd yc;
};

LmlWorkspace make_workspace(const TrainingSet& train) {
  if (train.size() == 0) throw PreconditionError("log marginal likelihood: empty training set");
  if (train.x.rows() != train.y.size()) {
    throw PreconditionError("log marginal likelihood: location and target counts differ");
  }
  LmlWorkspace ws;
  ws.d2 = squared_distances(train.x, train.x);
  ws.yc = train.y.array() - train.y.mean();
  return ws;
}

struct LmlState {
  Eigen::MatrixXd kse;
  Factorization factor;
  Eigen::VectorXd alpha;
  double value = 0.0;
};

LmlState lml_value(const LmlWorkspace& ws, const Hyperparams& hp) {
  LmlState s;
  s.kse = se_from_distances(ws.d2, hp);
  Eigen::MatrixXd k = s.kse;
  k.diagonal().array() += hp.noise_variance();
  s.factor = factorize_with_jitter(k, hp.signal_variance());
  s.alpha = s.factor.llt.solve(ws.yc);
  const double n = static_cast<double>(ws.yc.size());
  const double log_det_half = s.factor.llt.matrixLLT().diagonal().array().log().sum();
  s.value = -0.5 * ws.yc.dot(s.alpha) - log_det_half - 0.5 * n * std::log(2.0 * std::numbers::pi);
  return s;
}

Eigen::Vector3d lml_gradient(const LmlWorkspace& ws, const Hyperparams& hp, const LmlState& s) {
  const Eigen::Index n = ws.yc.size();
  Eigen::MatrixXd w = s.factor.llt.solve(Eigen::MatrixXd::Identity(n, n));
  w = s.alpha * s.alpha.transpose() - w;
  const double l2 = hp.length_scale() * hp.length_scale();
  Eigen::Vector3d g;
  g[0] = 0.5 * (w.array() * s.kse.array() * ws.d2.array()).sum() / l2;
  g[1] = 0.5 * (w.array() * s.kse.array()).sum();
  g[2] = 0.5 * hp.noise_variance() * w.trace();
  return g;
}

Eigen::Vector3d clamp(const Eigen::Vector3d& v, double lo, double hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

LmlResult log_marginal_likelihood(const TrainingSet& train, const Hyperparams& hp) {
  const LmlWorkspace ws = make_workspace(train);
  const LmlState s = lml_value(ws, hp);
  return {s.value, lml_gradient(ws, hp, s)};
}

OptimizeResult optimize_hyperparams(const TrainingSet& train, const Hyperparams& init,
                                    const OptimizeOptions& opt) {
  const LmlWorkspace ws = make_workspace(train);

  OptimizeResult result;
  Eigen::Vector3d x = clamp(init.as_vector(), opt.lower, opt.upper);
  result.hp = Hyperparams::from_vector(x);

  double f = 0.0;
  Eigen::Vector3d g;
  try {
    const LmlState s = lml_value(ws, result.hp);
    f = s.value;
    g = lml_gradient(ws, result.hp, s);
    ++result.evaluations;
  } catch (const FactorizationFailure&) {
    result.failed = true;
    result.lml = -std::numeric_limits<double>::infinity();
    return result;
  }
  result.lml = f;

  double step = opt.initial_step;
  constexpr double kArmijo = 1e-4;
  for (int it = 0; it < opt.max_iterations; ++it) {
    Eigen::Vector3d pg = g;
    for (int i = 0; i < 3; ++i) {
      if ((x[i] <= opt.lower && pg[i] < 0.0) || (x[i] >= opt.upper && pg[i] > 0.0)) pg[i] = 0.0;
    }
    const double gnorm = pg.norm();
    if (gnorm < opt.gradient_tolerance) {
      result.converged = true;
      break;
    }
    const Eigen::Vector3d dir = pg / gnorm;

    bool accepted = false;
    Eigen::Vector3d x_new;
    LmlState s_new;
    while (step >= opt.min_step) {
      x_new = clamp(x + step * dir, opt.lower, opt.upper);
      const Eigen::Vector3d disp = x_new - x;
      if (disp.squaredNorm() == 0.0) {
        step *= 0.5;
        continue;
      }
      try {
        s_new = lml_value(ws, Hyperparams::from_vector(x_new));
        ++result.evaluations;
      } catch (const FactorizationFailure&) {
        step *= 0.5;
        continue;
      }
      if (std::isfinite(s_new.value) && s_new.value >= f + kArmijo * disp.dot(g)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    result.iterations = it + 1;
    if (!accepted) {
      result.converged = true;
      break;
    }

    const double improvement = s_new.value - f;
    x = x_new;
    f = s_new.value;
    const Hyperparams hp = Hyperparams::from_vector(x);
    g = lml_gradient(ws, hp, s_new);
    if (f > result.lml) {
      result.lml = f;
      result.hp = hp;
    }
    step = std::min(2.0 * step, 4.0 * opt.initial_step);
    if (improvement <= 1e-10 * (1.0 + std::abs(f))) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace infosample
