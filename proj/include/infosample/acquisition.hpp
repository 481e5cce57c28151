#pragma once

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "infosample/gpmodel.hpp"
#include "infosample/rng.hpp"
#include "infosample/scenario.hpp"

namespace infosample {

enum class Strategy { Random, Entropy, EntropyPlusMean };

/// Wire names: "random", "entropy", "entropy_mean".
std::string_view to_string(Strategy s);
/// Throws PreconditionError on an unknown name.
Strategy parse_strategy(std::string_view name);

inline constexpr double kDefaultAlpha = 0.25;

struct AcquisitionScores {
  std::vector<Cell> candidates;
  std::vector<double> scores;
  Strategy strategy = Strategy::Random;
  double alpha = 0.0;
};

/// Every cell of the grid in row-major order.
std::vector<Cell> all_cells(const GridSpec& spec);

Locations candidate_locations(std::span<const Cell> candidates, const GridSpec& spec);

/// Zero scores; selection ignores them for the random strategy.
AcquisitionScores score_random(std::span<const Cell> candidates);

AcquisitionScores score_entropy(const GpModel& model, std::span<const Cell> candidates,
                                const GridSpec& spec);

/// H/max(H) + alpha·μ/max(μ). A normalizer that is not positive is replaced
/// by 1, leaving that term unnormalized.
AcquisitionScores score_entropy_plus_mean(const GpModel& model, std::span<const Cell> candidates,
                                          const GridSpec& spec, double alpha = kDefaultAlpha);

/// Score vectors from an existing prediction over the candidates.
std::vector<double> entropy_scores(const Prediction& prediction);
std::vector<double> entropy_plus_mean_scores(const Prediction& prediction, double alpha);

/// Random: uniform over non-excluded candidates. Otherwise argmax over the
/// non-excluded candidates, ties going to the lowest row-major index.
/// Throws NoCandidates when everything is excluded.
Cell select(const AcquisitionScores& scores, Rng& rng, const std::set<Cell>& exclude);

}  // namespace infosample
