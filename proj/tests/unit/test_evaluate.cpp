#include <doctest.h>

#include <Eigen/QR>
#include <cmath>

#include "infosample/errors.hpp"
#include "infosample/evaluate.hpp"
#include "infosample/robot.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace infosample;

namespace {

std::vector<Sample> random_samples(Rng& rng, int n, const GridSpec& g) {
  std::vector<Sample> out;
  const TrainingSet t = fixtures::random_training_set(rng, n, g);
  for (int i = 0; i < n; ++i) {
    // recover the cell center in meters from the degrees
    const Eigen::Vector2d deg = t.x.row(i).transpose();
    const double lat_rad = g.anchor_lat() * std::numbers::pi / 180.0;
    out.push_back({{deg.x() * kMetersPerDegree * std::cos(lat_rad), (deg.y() - g.anchor_lat()) * kMetersPerDegree},
                   t.y[i]});
  }
  return out;
}

Cell cell_of(const Sample& s, const GridSpec& g) {
  return {static_cast<int>(s.location_m.y() / g.cell_m()), static_cast<int>(s.location_m.x() / g.cell_m())};
}

EvaluationReport fake_report(const std::string& scenario, Provenance p, Agent a, double gp, double spline,
                             std::vector<double> series = {}) {
  EvaluationReport r;
  r.session_id = scenario + "_" + std::string(to_string(a));
  r.scenario_name = scenario;
  r.scenario_provenance = p;
  r.agent = a;
  r.rmse_gp = gp;
  r.rmse_spline = spline;
  r.rmse_gp_norm = gp / 20.0;
  r.rmse_spline_norm = spline / 20.0;
  for (std::size_t i = 0; i < series.size(); ++i)
    r.time_series.push_back({static_cast<int>(i) + 1, 20 * (static_cast<int>(i) + 1), series[i]});
  return r;
}

}  // namespace

TEST_CASE("spline: interpolates the samples") {
  Rng rng(3);
  const GridSpec g;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 60));
    const auto samples = random_samples(rng, n, g);
    const Reconstruction r = reconstruct_spline(samples, g);
    CHECK_FALSE(r.warning);
    for (const auto& s : samples) CHECK(r.field.at(cell_of(s, g)) == doctest::Approx(s.value).epsilon(1e-9));
  }
}

TEST_CASE("spline: matches a dense QR solve of the Green's system") {
  Rng rng(4);
  const GridSpec g;
  const auto samples = random_samples(rng, 25, g);
  std::vector<Eigen::Vector2d> pts;
  Eigen::VectorXd v(25);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    pts.push_back(samples[i].location_m);
    v[static_cast<long>(i)] = samples[i].value;
  }
  const Eigen::VectorXd w = oracle::spline_weights(pts, v);
  const Reconstruction r = reconstruct_spline(samples, g);
  for (std::size_t c = 0; c < g.size(); c += 7) {
    CHECK(r.field.values[c] == doctest::Approx(oracle::spline_eval(pts, w, g.center_m(g.cell_at(c)))).epsilon(1e-7));
  }
}

TEST_CASE("spline: duplicates are averaged, one sample gives a constant") {
  const GridSpec g;
  std::vector<Sample> s{{g.center_m({1, 1}), 2.0}, {g.center_m({1, 1}), 4.0}, {g.center_m({5, 9}), 7.0}};
  const Reconstruction r = reconstruct_spline(s, g);
  CHECK(r.field.at({1, 1}) == doctest::Approx(3.0));
  CHECK(r.field.at({5, 9}) == doctest::Approx(7.0));

  const Reconstruction one = reconstruct_spline(std::vector<Sample>{{g.center_m({0, 0}), 5.0}}, g);
  CHECK(one.warning);
  for (double v : one.field.values) CHECK(v == 5.0);
  CHECK_THROWS_AS(reconstruct_spline(std::vector<Sample>{}, g), PreconditionError);
}

TEST_CASE("rmse: values and grid mismatch") {
  Field a, b;
  a.values = {0, 0, 0, 0};
  b.values = {1, -1, 1, -1};
  a.grid = b.grid = GridSpec(20.0, 20.0, 10.0);
  CHECK(rmse(a, b) == doctest::Approx(1.0));
  CHECK(rmse(a, a) == 0.0);
  Field c = b;
  c.grid = GridSpec(40.0, 10.0, 10.0);
  CHECK_THROWS_AS(rmse(a, c), GridMismatch);
}

TEST_CASE("gp reconstruction: dense sampling reproduces a smooth field") {
  const GridSpec g;
  Field truth;
  truth.grid = g;
  truth.values.resize(g.size());
  std::vector<Sample> s;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Eigen::Vector2d m = g.center_m(g.cell_at(i));
    truth.values[i] = 10.0 + 6.0 * std::sin(m.x() / 70.0) * std::cos(m.y() / 50.0);
    s.push_back({m, truth.values[i]});
  }
  const Reconstruction r = reconstruct_gp(s, g);
  CHECK_FALSE(r.warning);
  CHECK(r.hp);
  CHECK(rmse(r.field, truth) < 0.1);
}

TEST_CASE("time series: batch counts") {
  const auto field = std::make_shared<const Field>(generate_scenario(ScenarioRecipe{}, 1, "ts"));
  const Session s = run_robot(field, Strategy::Random, 50, Hyperparams::robot_default(), 0);
  const auto samples = samples_from_revealed(s.revealed(), field->grid);
  const auto ts = evaluate_over_time(samples, *field, 20);
  REQUIRE(ts.size() == 3);
  CHECK(ts[0].samples == 20);
  CHECK(ts[1].samples == 40);
  CHECK(ts[2].samples == 50);
  CHECK(ts[2].n == 3);
}

TEST_CASE("evaluate_session: report fields") {
  const auto field = std::make_shared<const Field>(generate_scenario(ScenarioRecipe{}, 1, "ev"));
  const Session s = run_robot(field, Strategy::Entropy, 60, Hyperparams::robot_default(), 3);
  EvaluateOptions o;
  o.time_series = true;
  o.keep_reconstructions = true;
  const EvaluationReport r = evaluate_session(s, o);
  CHECK(r.session_id == s.id());
  CHECK(r.n_samples == 60);
  CHECK(r.agent == Agent::RobotEntropy);
  CHECK(r.seed == std::optional<RngSeed>(3));
  CHECK(r.rmse_gp_norm == doctest::Approx(r.rmse_gp / 20.0));
  CHECK(r.rmse_spline_norm == doctest::Approx(r.rmse_spline / 20.0));
  REQUIRE(r.time_series.size() == 3);
  CHECK(r.time_series.back().rmse_gp == r.rmse_gp);
  REQUIRE(r.gp_field);
  CHECK(rmse(*r.gp_field, *field) == doctest::Approx(r.rmse_gp));
  REQUIRE(r.spline_field);
  CHECK(rmse(*r.spline_field, *field) == doctest::Approx(r.rmse_spline));

  const EvaluationReport back = report_from_json(report_to_json(r));
  CHECK(back.rmse_gp == r.rmse_gp);
  CHECK(back.time_series == r.time_series);
  CHECK(back.agent == r.agent);
  CHECK(back.scenario_provenance == r.scenario_provenance);

  Session tiny("tiny", field, Agent::Human);
  tiny.add_waypoint({0, 0});
  CHECK_THROWS_AS(evaluate_session(tiny), PreconditionError);
}

TEST_CASE("percentile: linear interpolation") {
  CHECK(percentile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(percentile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
  CHECK(percentile({1, 2, 3, 4}, 0.75) == doctest::Approx(3.25));
  CHECK(percentile({4, 1, 3, 2}, 0.0) == 1.0);
  CHECK(percentile({7}, 0.3) == 7.0);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> v(1 + uniform_index(rng, 30));
    for (double& x : v) x = uniform(rng, -5, 5);
    const double q = uniform01(rng);
    CHECK(percentile(v, q) == doctest::Approx(oracle::percentile(v, q)));
  }
  const BoxStats b = box_stats({1, 2, 3, 4});
  CHECK(b.median == doctest::Approx(2.5));
  CHECK(b.mean == doctest::Approx(2.5));
  CHECK(b.count == 4);
}

TEST_CASE("aggregate: singleton grand mean equals the report") {
  const std::vector<EvaluationReport> one{fake_report("a", Provenance::GpSample, Agent::RobotEntropy, 1.5, 2.5)};
  const AggregateStats s = aggregate(one);
  CHECK(grand_mean(s, Agent::RobotEntropy, "gp") == 1.5);
  CHECK(grand_mean(s, Agent::RobotEntropy, "spline") == 2.5);
  CHECK_THROWS_AS(grand_mean(s, Agent::RobotRandom, "gp"), NotFound);
}

TEST_CASE("aggregate: grand mean is the mean of per-scenario means") {
  std::vector<EvaluationReport> rs{
      fake_report("a", Provenance::GpSample, Agent::RobotRandom, 1.0, 1.0, {4, 3}),
      fake_report("a", Provenance::GpSample, Agent::RobotRandom, 3.0, 1.0, {6, 5}),
      fake_report("a", Provenance::GpSample, Agent::RobotRandom, 5.0, 1.0, {8, 7}),
      fake_report("b", Provenance::GpSample, Agent::RobotRandom, 10.0, 1.0, {2, 1}),
  };
  const AggregateStats s = aggregate(rs);
  CHECK(grand_mean(s, Agent::RobotRandom, "gp") == doctest::Approx((3.0 + 10.0) / 2.0));
  bool found = false;
  for (const auto& row : s.per_scenario) {
    if (row.scenario == "a" && row.method == "gp") {
      found = true;
      CHECK(row.stats.median == 3.0);
      CHECK(row.stats.p25 == 2.0);
      CHECK(row.stats.p75 == 4.0);
    }
  }
  CHECK(found);
  for (const auto& row : s.time_series) {
    if (row.n == 1) CHECK(row.stats.median == doctest::Approx(5.0));
  }
  const std::string csv = grand_means_csv(s);
  CHECK(csv.starts_with("agent,method,mean_rmse_raw,mean_rmse_norm,scenarios\n"));
  CHECK(csv.find("random,gp,6.5,0.325,2") != std::string::npos);
  CHECK(reports_csv(rs).starts_with("session,scenario,agent,method,rmse_raw,rmse_norm\n"));
  CHECK(time_series_csv(rs).starts_with("session,n,rmse\n"));
  CHECK(boxplot_csv(s).starts_with("scenario,agent,method,median,p25,p75\n"));
}

TEST_CASE("gp reconstruction: full coverage lands below the noise floor") {
  const GridSpec g;
  for (RngSeed seed : {1, 2, 3}) {
    const Field truth = generate_scenario(ScenarioRecipe{}, seed, "full");
    const Field raw = generate_gp_field(g, Hyperparams::scenario_default(), derive_seed(seed, 0));
    // noise floor: residual of truth against the best affine map of the noise-free draw
    const long n = static_cast<long>(g.size());
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd y(n);
    for (long i = 0; i < n; ++i) {
      a(i, 0) = raw.values[static_cast<std::size_t>(i)];
      a(i, 1) = 1.0;
      y[i] = truth.values[static_cast<std::size_t>(i)];
    }
    const double floor = std::sqrt((a * a.colPivHouseholderQr().solve(y) - y).squaredNorm() / static_cast<double>(n));

    std::vector<Sample> s;
    for (std::size_t i = 0; i < g.size(); ++i) s.push_back({g.center_m(g.cell_at(i)), truth.values[i]});
    const double err = rmse(reconstruct_gp(s, g).field, truth);
    CHECK(err < floor);
    if (floor <= 0.25) CHECK(err <= 0.25);
  }
}
