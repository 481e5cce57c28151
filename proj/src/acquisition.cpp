#include "infosample/acquisition.hpp"

#include <algorithm>
#include <limits>

#include "infosample/errors.hpp"

namespace infosample {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Random: return "random";
    case Strategy::Entropy: return "entropy";
    case Strategy::EntropyPlusMean: return "entropy_mean";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "random") return Strategy::Random;
  if (name == "entropy") return Strategy::Entropy;
  if (name == "entropy_mean") return Strategy::EntropyPlusMean;
  throw PreconditionError("unknown strategy '" + std::string(name) + "'");
}

std::vector<Cell> all_cells(const GridSpec& spec) {
  std::vector<Cell> cells;
  cells.reserve(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) cells.push_back(spec.cell_at(i));
  return cells;
}

Locations candidate_locations(std::span<const Cell> candidates, const GridSpec& spec) {
  Locations x(static_cast<Eigen::Index>(candidates.size()), 2);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = spec.center_deg(candidates[i]).transpose();
  }
  return x;
}

namespace {

void require_candidates(std::span<const Cell> candidates) {
  if (candidates.empty()) throw PreconditionError("acquisition: empty candidate list");
}

}  // namespace

AcquisitionScores score_random(std::span<const Cell> candidates) {
  require_candidates(candidates);
  return {{candidates.begin(), candidates.end()},
          std::vector<double>(candidates.size(), 0.0),
          Strategy::Random,
          0.0};
}

std::vector<double> entropy_scores(const Prediction& prediction) {
  std::vector<double> h(static_cast<std::size_t>(prediction.variance.size()));
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = entropy(prediction.variance[static_cast<Eigen::Index>(i)]);
  return h;
}

std::vector<double> entropy_plus_mean_scores(const Prediction& prediction, double alpha) {
  if (!(alpha >= 0.0)) throw PreconditionError("entropy_plus_mean: alpha must be non-negative");
  std::vector<double> h = entropy_scores(prediction);
  const double h_max = *std::max_element(h.begin(), h.end());
  const double mu_max = prediction.mean.maxCoeff();
  const double h_norm = h_max > 0.0 ? h_max : 1.0;
  const double mu_norm = mu_max > 0.0 ? mu_max : 1.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i] = h[i] / h_norm + alpha * prediction.mean[static_cast<Eigen::Index>(i)] / mu_norm;
  }
  return h;
}

AcquisitionScores score_entropy(const GpModel& model, std::span<const Cell> candidates,
                                const GridSpec& spec) {
  require_candidates(candidates);
  const Prediction p = model.predict(candidate_locations(candidates, spec));
  return {{candidates.begin(), candidates.end()}, entropy_scores(p), Strategy::Entropy, 0.0};
}

AcquisitionScores score_entropy_plus_mean(const GpModel& model, std::span<const Cell> candidates,
                                          const GridSpec& spec, double alpha) {
  require_candidates(candidates);
  const Prediction p = model.predict(candidate_locations(candidates, spec));
  return {{candidates.begin(), candidates.end()},
          entropy_plus_mean_scores(p, alpha),
          Strategy::EntropyPlusMean,
          alpha};
}

Cell select(const AcquisitionScores& scores, Rng& rng, const std::set<Cell>& exclude) {
  if (scores.scores.size() != scores.candidates.size()) {
    throw PreconditionError("select: score and candidate counts differ");
  }
  std::vector<std::size_t> open;
  open.reserve(scores.candidates.size());
  for (std::size_t i = 0; i < scores.candidates.size(); ++i) {
    if (!exclude.contains(scores.candidates[i])) open.push_back(i);
  }
  if (open.empty()) throw NoCandidates("select: every candidate is excluded");

  if (scores.strategy == Strategy::Random) {
    return scores.candidates[open[uniform_index(rng, open.size())]];
  }

  std::size_t best = open.front();
  for (std::size_t i : open) {
    const double s = scores.scores[i];
    const double b = scores.scores[best];
    if (s > b || (s == b && scores.candidates[i] < scores.candidates[best])) best = i;
  }
  return scores.candidates[best];
}

}  // namespace infosample
