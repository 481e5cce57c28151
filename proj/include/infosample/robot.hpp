#pragma once

#include <memory>
#include <string>

#include "infosample/acquisition.hpp"
#include "infosample/gpmodel.hpp"
#include "infosample/session.hpp"

namespace infosample {

struct RobotOptions {
  double alpha = kDefaultAlpha;
  Cell start{0, 0};
  OptimizeOptions optimizer;
  /// Robot logs carry a fixed timestamp so identical runs serialize
  /// byte-identically.
  std::string created_at = "1970-01-01T00:00:00Z";
};

/// Training set from a session's revealed cells (cell centers in degrees).
TrainingSet training_set(const Session& session);

std::string robot_session_id(const std::string& scenario_name, Strategy strategy, RngSeed seed);

/// Autonomous run: starts at `options.start`, then repeatedly re-estimates
/// the hyperparameters (warm-started), refits, scores every unrevealed cell
/// and drives to the best one until the budget is spent.
Session run_robot(std::shared_ptr<const Field> scenario, Strategy strategy,
                  int budget_total = kDefaultBudget,
                  const Hyperparams& hp_init = Hyperparams::robot_default(), RngSeed seed = 0,
                  const RobotOptions& options = {});

}  // namespace infosample
