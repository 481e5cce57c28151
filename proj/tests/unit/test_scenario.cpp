#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "infosample/errors.hpp"
#include "infosample/io.hpp"
#include "infosample/scenario.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace infosample;

TEST_CASE("grid: default geometry") {
  const GridSpec g;
  CHECK(g.cols() == 40);
  CHECK(g.rows() == 20);
  CHECK(g.size() == 800);
  CHECK(g.index({1, 2}) == 42);
  CHECK(g.cell_at(42) == Cell{1, 2});
  CHECK(g.contains({19, 39}));
  CHECK_FALSE(g.contains({20, 0}));
  CHECK_FALSE(g.contains({0, -1}));
  CHECK(g.center_m({0, 0}).isApprox(Eigen::Vector2d(5.0, 5.0)));
  CHECK(g.center_m({2, 3}).isApprox(Eigen::Vector2d(35.0, 25.0)));
}

TEST_CASE("grid: rejects extents that are not multiples of the cell") {
  CHECK_THROWS_AS(GridSpec(405.0, 200.0, 10.0), PreconditionError);
  CHECK_THROWS_AS(GridSpec(400.0, 200.0, 0.0), PreconditionError);
  CHECK_THROWS_AS(GridSpec(400.0, 200.0, 10.0, 95.0), PreconditionError);
  CHECK_NOTHROW(GridSpec(30.0, 20.0, 10.0));
}

TEST_CASE("grid: equirectangular degrees") {
  const GridSpec g;
  const auto [lon, lat] = cell_center_lonlat(g, {3, 7});
  const double y = 35.0, x = 75.0;
  const double lat_ref = 34.086 + y / 111320.0;
  const double lon_ref = x / (111320.0 * std::cos(34.086 * std::numbers::pi / 180.0));
  CHECK(lat == doctest::Approx(lat_ref).epsilon(1e-14));
  CHECK(lon == doctest::Approx(lon_ref).epsilon(1e-14));
  // one cell north is cell_m / 111320 degrees
  CHECK(g.center_deg({4, 7}).y() - g.center_deg({3, 7}).y() == doctest::Approx(10.0 / 111320.0));
}

TEST_CASE("provenance tags round-trip") {
  for (auto p : {Provenance::GpSample, Provenance::Gmm, Provenance::Reconstruction}) {
    CHECK(parse_provenance(to_string(p)) == p);
  }
  CHECK_THROWS_AS(parse_provenance("kriging"), FormatError);
}

TEST_CASE("rng: deterministic and within range") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    const double u = uniform01(a);
    CHECK(u == uniform01(b));
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng c(1);
  std::set<std::size_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto k = uniform_index(c, 7);
    CHECK(k < 7);
    seen.insert(k);
  }
  CHECK(seen.size() == 7);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
}

TEST_CASE("rng: normal draws have unit moments") {
  Rng r(9);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = standard_normal(r);
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("rescale: spans the range exactly") {
  Field f;
  f.values = std::vector<double>(800);
  for (std::size_t i = 0; i < 800; ++i) f.values[i] = std::sin(0.01 * static_cast<double>(i));
  for (RngSeed s = 0; s < 5; ++s) {
    const Field r = add_noise_and_rescale(f, 0.05, 0.0, 20.0, s);
    const auto [mn, mx] = std::minmax_element(r.values.begin(), r.values.end());
    CHECK(*mn == 0.0);
    CHECK(*mx == 20.0);
  }
}

TEST_CASE("rescale: noise-free rescale is affine") {
  Field f;
  f.values = {1.0, 2.0, 3.0, 5.0};
  const Field r = add_noise_and_rescale(f, 0.0, 0.0, 20.0, 0);
  CHECK(r.values == std::vector<double>{0.0, 5.0, 10.0, 20.0});
}

TEST_CASE("rescale: constant field is degenerate") {
  Field f;
  f.values.assign(10, 0.0);
  CHECK_THROWS_AS(add_noise_and_rescale(f, 0.05, 0.0, 20.0, 0), DegenerateField);
}

TEST_CASE("gmm: component density is a normalized gaussian") {
  GmmComponent c;
  c.mean = {100.0, 50.0};
  c.covariance << 400.0, 0.0, 0.0, 900.0;
  c.weight = 1.0;
  const double peak = 1.0 / (2.0 * std::numbers::pi * std::sqrt(400.0 * 900.0));
  CHECK(evaluate_component(c, c.mean) == doctest::Approx(peak));
  CHECK(evaluate_component(c, {120.0, 50.0}) == doctest::Approx(peak * std::exp(-0.5)));
}

TEST_CASE("gmm: sampled specs respect the configuration") {
  Rng rng(4);
  const GridSpec g;
  for (int i = 0; i < 50; ++i) {
    const GmmSpec s = sample_gmm_spec(g, rng);
    CHECK(s.components.size() >= 2);
    CHECK(s.components.size() <= 6);
    for (const auto& c : s.components) {
      CHECK(c.weight >= 0.5);
      CHECK(c.weight <= 1.0);
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(c.covariance);
      CHECK(std::sqrt(es.eigenvalues()[0]) >= 20.0 - 1e-9);
      CHECK(std::sqrt(es.eigenvalues()[1]) <= 80.0 + 1e-9);
      CHECK(c.mean.x() >= 0.0);
      CHECK(c.mean.x() <= 400.0);
      CHECK(c.mean.y() >= 0.0);
      CHECK(c.mean.y() <= 200.0);
    }
  }
}

TEST_CASE("generate_scenario: deterministic, tagged, spans [0,20]") {
  ScenarioRecipe gp;
  ScenarioRecipe gmm;
  gmm.kind = ScenarioKind::Gmm;
  for (const auto& recipe : {gp, gmm}) {
    const Field a = generate_scenario(recipe, 7, "a");
    const Field b = generate_scenario(recipe, 7, "a");
    const Field c = generate_scenario(recipe, 8, "a");
    CHECK(a == b);
    CHECK(a.values != c.values);
    CHECK(a.seed == RngSeed{7});
    CHECK(a.provenance == (recipe.kind == ScenarioKind::Gp ? Provenance::GpSample : Provenance::Gmm));
    CHECK(*std::min_element(a.values.begin(), a.values.end()) == 0.0);
    CHECK(*std::max_element(a.values.begin(), a.values.end()) == 20.0);
  }
}

TEST_CASE("gp field: sample covariance follows the kernel") {
  // Average products of neighbouring cells over many draws and compare
  // with the kernel's correlation at that separation.
  const GridSpec g(100.0, 50.0, 10.0);
  const Hyperparams hp = Hyperparams::scenario_default();
  double s00 = 0, s01 = 0;
  const int draws = 400;
  for (int d = 0; d < draws; ++d) {
    const Field f = generate_gp_field(g, hp, static_cast<RngSeed>(d));
    s00 += f.at({2, 4}) * f.at({2, 4});
    s01 += f.at({2, 4}) * f.at({2, 5});
  }
  const double k00 = kernel_eval(g.center_deg({2, 4}), g.center_deg({2, 4}), hp);
  const double k01 = kernel_eval(g.center_deg({2, 4}), g.center_deg({2, 5}), hp);
  CHECK(s00 / draws == doctest::Approx(k00).epsilon(0.2));
  CHECK(s01 / draws == doctest::Approx(k01).epsilon(0.2));
}

TEST_CASE("variogram: recovers the generating length scale") {
  std::vector<double> ls;
  for (RngSeed s = 0; s < 5; ++s) {
    const Field f = generate_scenario(ScenarioRecipe{}, s, "v");
    ls.push_back(oracle::variogram_length_scale(f, 0.0015, 30));
  }
  const double med = oracle::percentile(ls, 0.5);
  const double target = std::exp(-7.81);
  CHECK(med > target / 2.0);
  CHECK(med < target * 2.0);
}

TEST_CASE("scenario files round-trip") {
  fixtures::TempDir dir("scenario");
  const Field f = generate_scenario(ScenarioRecipe{}, 3, "round_trip");
  save_scenario(f, dir / "f.json");
  const Field g = load_scenario(dir / "f.json");
  CHECK(g == f);
  CHECK_FALSE(std::filesystem::exists(dir / "f.json.partial"));
}

TEST_CASE("scenario files: malformed input names the problem") {
  fixtures::TempDir dir("scenario_bad");
  write_file_atomic(dir / "a.json", "{\"format_version\": 1,\n \"name\": ");
  CHECK_THROWS_AS(load_scenario(dir / "a.json"), FormatError);

  nlohmann::json j = scenario_to_json(generate_scenario(ScenarioRecipe{}, 1, "x"));
  j["provenance"] = "mystery";
  try {
    scenario_from_json(j);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("mystery") != std::string::npos);
  }

  j = scenario_to_json(generate_scenario(ScenarioRecipe{}, 1, "x"));
  j["values"].erase(0);
  CHECK_THROWS_AS(scenario_from_json(j), FormatError);

  j = scenario_to_json(generate_scenario(ScenarioRecipe{}, 1, "x"));
  j.erase("grid");
  try {
    scenario_from_json(j);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("grid") != std::string::npos);
  }
  CHECK_THROWS_AS(load_scenario(dir / "missing.json"), IoError);
}

TEST_CASE("rescale: noise-free field already spanning the range is unchanged") {
  Field f;
  f.values = {0.0, 7.5, 20.0, 13.25};
  CHECK(add_noise_and_rescale(f, 0.0, 0.0, 20.0, 3).values == f.values);
}

TEST_CASE("gmm: mixture is the sum of its components and nonnegative") {
  Rng rng(12);
  const GridSpec g;
  const GmmSpec s = sample_gmm_spec(g, rng);
  for (std::size_t i = 0; i < g.size(); i += 37) {
    const Eigen::Vector2d x = g.center_m(g.cell_at(i));
    double sum = 0.0;
    for (const auto& c : s.components) sum += evaluate_component(c, x);
    CHECK(evaluate_gmm(s, x) == doctest::Approx(sum));
  }
  const Field raw = generate_gmm_field(g, 12);
  CHECK(*std::min_element(raw.values.begin(), raw.values.end()) >= 0.0);
}
