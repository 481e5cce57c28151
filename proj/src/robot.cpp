#include "infosample/robot.hpp"

#include "infosample/errors.hpp"
#include "infosample/log.hpp"

namespace infosample {

TrainingSet training_set(const Session& session) {
  const auto& rev = session.revealed();
  TrainingSet t;
  t.x.resize(static_cast<Eigen::Index>(rev.size()), 2);
  t.y.resize(static_cast<Eigen::Index>(rev.size()));
  for (std::size_t i = 0; i < rev.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    t.x.row(idx) = session.grid().center_deg(rev[i].cell).transpose();
    t.y[idx] = rev[i].value;
  }
  return t;
}

std::string robot_session_id(const std::string& scenario_name, Strategy strategy, RngSeed seed) {
  return scenario_name + "__" + std::string(to_string(strategy)) + "__s" + std::to_string(seed);
}

Session run_robot(std::shared_ptr<const Field> scenario, Strategy strategy, int budget_total,
                  const Hyperparams& hp_init, RngSeed seed, const RobotOptions& options) {
  if (!scenario) throw PreconditionError("run_robot: null scenario");
  const GridSpec grid = scenario->grid;
  const std::string name = scenario->name;
  Session session(robot_session_id(name, strategy, seed), std::move(scenario), agent_for(strategy),
                  budget_total);
  session.set_hp_init(hp_init);
  session.set_seed(seed);
  session.set_created_at(options.created_at);
  if (budget_total == 0) return session;

  Rng rng(seed);
  const std::vector<Cell> candidates = all_cells(grid);
  const Locations centers = grid.all_centers_deg();
  const AcquisitionScores random_scores = score_random(candidates);
  Hyperparams hp = hp_init;

  session.add_waypoint(options.start);
  while (!session.exhausted() && session.revealed().size() < grid.size()) {
    const std::set<Cell> exclude = session.revealed_set();
    Cell next;
    if (strategy == Strategy::Random) {
      next = select(random_scores, rng, exclude);
    } else {
      try {
        const TrainingSet train = training_set(session);
        if (train.size() >= 2) {
          const OptimizeResult opt = optimize_hyperparams(train, hp, options.optimizer);
          if (opt.failed) {
            log::warning("run_robot " + session.id() + ": hyperparameter update failed, keeping previous estimate");
          } else {
            hp = opt.hp;
          }
        }
        const GpModel model = GpModel::fit(train, hp);
        const Prediction pred = model.predict(centers);
        AcquisitionScores scores;
        scores.candidates = candidates;
        scores.strategy = strategy;
        if (strategy == Strategy::Entropy) {
          scores.scores = entropy_scores(pred);
        } else {
          scores.alpha = options.alpha;
          scores.scores = entropy_plus_mean_scores(pred, options.alpha);
        }
        next = select(scores, rng, exclude);
      } catch (const FactorizationFailure& e) {
        log::warning("run_robot " + session.id() + ": " + e.what() + "; random waypoint this step");
        next = select(random_scores, rng, exclude);
      }
    }
    session.add_waypoint(next);
  }
  return session;
}

}  // namespace infosample
