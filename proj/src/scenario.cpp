#include "infosample/scenario.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "infosample/errors.hpp"
#include "infosample/io.hpp"

namespace infosample {

namespace {

int exact_count(double extent, double cell, const char* what) {
  const double ratio = extent / cell;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream msg;
    msg << "GridSpec: " << what << " " << extent << " m is not a positive multiple of cell size "
        << cell << " m";
    throw PreconditionError(msg.str());
  }
  return static_cast<int>(rounded);
}

}  // namespace

GridSpec::GridSpec(double width_m, double height_m, double cell_m, double anchor_lat)
    : width_m_(width_m), height_m_(height_m), cell_m_(cell_m), anchor_lat_(anchor_lat) {
  if (!(cell_m > 0.0) || !std::isfinite(cell_m)) {
    throw PreconditionError("GridSpec: cell size must be positive");
  }
  if (!(std::abs(anchor_lat) < 90.0)) throw PreconditionError("GridSpec: anchor latitude out of range");
  cols_ = exact_count(width_m, cell_m, "width");
  rows_ = exact_count(height_m, cell_m, "height");
}

Eigen::Vector2d GridSpec::center_m(Cell c) const {
  return {(c.col + 0.5) * cell_m_, (c.row + 0.5) * cell_m_};
}

Eigen::Vector2d GridSpec::to_degrees(const Eigen::Vector2d& meters) const {
  const double lat_rad = anchor_lat_ * std::numbers::pi / 180.0;
  return {meters.x() / (kMetersPerDegree * std::cos(lat_rad)),
          anchor_lat_ + meters.y() / kMetersPerDegree};
}

Locations GridSpec::all_centers_deg() const {
  Locations out(static_cast<Eigen::Index>(size()), 2);
  for (std::size_t i = 0; i < size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = center_deg(cell_at(i)).transpose();
  }
  return out;
}

std::pair<double, double> cell_center_lonlat(const GridSpec& spec, Cell cell) {
  const Eigen::Vector2d d = spec.center_deg(cell);
  return {d.x(), d.y()};
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::GpSample: return "gp_sample";
    case Provenance::Gmm: return "gmm";
    case Provenance::Reconstruction: return "reconstruction";
  }
  return "unknown";
}

Provenance parse_provenance(const std::string& tag) {
  if (tag == "gp_sample") return Provenance::GpSample;
  if (tag == "gmm") return Provenance::Gmm;
  if (tag == "reconstruction") return Provenance::Reconstruction;
  throw FormatError("unknown provenance tag '" + tag + "'");
}

GmmSpec sample_gmm_spec(const GridSpec& spec, Rng& rng, const GmmConfig& config) {
  if (config.min_components < 1 || config.max_components < config.min_components) {
    throw PreconditionError("GmmConfig: invalid component range");
  }
  GmmSpec gmm;
  const auto span = static_cast<std::size_t>(config.max_components - config.min_components + 1);
  const int n = config.min_components + static_cast<int>(uniform_index(rng, span));
  for (int k = 0; k < n; ++k) {
    GmmComponent c;
    c.mean = {uniform(rng, 0.0, spec.width_m()), uniform(rng, 0.0, spec.height_m())};
    const double theta = uniform(rng, 0.0, std::numbers::pi);
    const double sd1 = uniform(rng, config.min_axis_sd_m, config.max_axis_sd_m);
    const double sd2 = uniform(rng, config.min_axis_sd_m, config.max_axis_sd_m);
    Eigen::Matrix2d rot;
    rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    c.covariance = rot * Eigen::Vector2d(sd1 * sd1, sd2 * sd2).asDiagonal() * rot.transpose();
    c.covariance = 0.5 * (c.covariance + c.covariance.transpose()).eval();
    c.weight = uniform(rng, config.min_weight, config.max_weight);
    gmm.components.push_back(c);
  }
  return gmm;
}

double evaluate_component(const GmmComponent& c, const Eigen::Vector2d& x_m) {
  const Eigen::Vector2d d = x_m - c.mean;
  const double det = c.covariance.determinant();
  const double quad = d.dot(c.covariance.inverse() * d);
  return c.weight * std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * std::sqrt(det));
}

double evaluate_gmm(const GmmSpec& gmm, const Eigen::Vector2d& x_m) {
  double sum = 0.0;
  for (const auto& c : gmm.components) sum += evaluate_component(c, x_m);
  return sum;
}

Field generate_gp_field(const GridSpec& spec, const Hyperparams& hp, RngSeed seed) {
  if (!(hp.length_scale() > 0.0) || !(hp.signal_variance() > 0.0)) {
    throw PreconditionError("generate_gp_field: length scale and signal variance must be positive");
  }
  const Locations x = spec.all_centers_deg();
  const Eigen::MatrixXd k = kernel_matrix(x, x, hp);
  const Factorization f =
      factorize_with_jitter(k, hp.signal_variance(), {.base = 1e-10, .retries = 5, .start_with_jitter = true});

  Rng rng(seed);
  Eigen::VectorXd z(x.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = standard_normal(rng);
  const Eigen::VectorXd draw = f.llt.matrixL() * z;

  Field out;
  out.grid = spec;
  out.values.assign(draw.data(), draw.data() + draw.size());
  out.provenance = Provenance::GpSample;
  out.seed = seed;
  return out;
}

Field generate_gmm_field(const GridSpec& spec, RngSeed seed, const GmmConfig& config) {
  Rng rng(seed);
  const GmmSpec gmm = sample_gmm_spec(spec, rng, config);
  Field out;
  out.grid = spec;
  out.values.resize(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    out.values[i] = evaluate_gmm(gmm, spec.center_m(spec.cell_at(i)));
  }
  out.provenance = Provenance::Gmm;
  out.seed = seed;
  return out;
}

Field add_noise_and_rescale(const Field& field, double noise_frac, double lo, double hi, RngSeed seed) {
  if (!(hi > lo)) throw PreconditionError("add_noise_and_rescale: hi must exceed lo");
  if (!(noise_frac >= 0.0 && noise_frac < 1.0)) {
    throw PreconditionError("add_noise_and_rescale: noise fraction must be in [0, 1)");
  }
  if (field.values.empty()) throw DegenerateField("add_noise_and_rescale: empty field");

  Field out = field;
  auto& v = out.values;
  const double amplitude = noise_frac * std::abs(*std::max_element(v.begin(), v.end()));
  Rng rng(seed);
  for (double& x : v) x += uniform(rng, -amplitude, amplitude);

  const auto [min_it, max_it] = std::minmax_element(v.begin(), v.end());
  const double vmin = *min_it;
  const double vmax = *max_it;
  if (!(vmax > vmin)) throw DegenerateField("add_noise_and_rescale: field is constant, cannot rescale");
  const auto imin = min_it - v.begin();
  const auto imax = max_it - v.begin();

  const double scale = (hi - lo) / (vmax - vmin);
  for (double& x : v) x = std::clamp(lo + (x - vmin) * scale, lo, hi);
  v[static_cast<std::size_t>(imin)] = lo;
  v[static_cast<std::size_t>(imax)] = hi;
  return out;
}

Field generate_scenario(const ScenarioRecipe& recipe, RngSeed seed, std::string name) {
  const RngSeed raw_seed = derive_seed(seed, 0);
  const RngSeed noise_seed = derive_seed(seed, 1);
  Field raw = recipe.kind == ScenarioKind::Gp ? generate_gp_field(recipe.grid, recipe.gp, raw_seed)
                                              : generate_gmm_field(recipe.grid, raw_seed, recipe.gmm);
  Field out = add_noise_and_rescale(raw, recipe.noise_frac, recipe.lo, recipe.hi, noise_seed);
  out.seed = seed;
  out.name = std::move(name);
  return out;
}

nlohmann::json scenario_to_json(const Field& field) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["name"] = field.name;
  j["provenance"] = to_string(field.provenance);
  j["seed"] = field.seed ? nlohmann::json(*field.seed) : nlohmann::json(nullptr);
  j["grid"] = {{"width_m", field.grid.width_m()},
               {"height_m", field.grid.height_m()},
               {"cell_m", field.grid.cell_m()},
               {"anchor_lat", field.grid.anchor_lat()}};
  j["values"] = field.values;
  return j;
}

namespace {

double number_field(const nlohmann::json& obj, const char* key, const std::string& src) {
  const auto& v = require_field(obj, key, src);
  if (!v.is_number()) throw FormatError(src + ": field '" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

Field scenario_from_json(const nlohmann::json& j) {
  const std::string src = "scenario";
  const auto& version = require_field(j, "format_version", src);
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw FormatError(src + ": field 'format_version': unsupported version " + version.dump());
  }
  Field f;
  const auto& name = require_field(j, "name", src);
  if (!name.is_string()) throw FormatError(src + ": field 'name' must be a string");
  f.name = name.get<std::string>();

  const auto& prov = require_field(j, "provenance", src);
  if (!prov.is_string()) throw FormatError(src + ": field 'provenance' must be a string");
  try {
    f.provenance = parse_provenance(prov.get<std::string>());
  } catch (const FormatError& e) {
    throw FormatError(src + ": field 'provenance': " + e.what());
  }

  if (auto it = j.find("seed"); it != j.end() && !it->is_null()) {
    if (!it->is_number_unsigned()) throw FormatError(src + ": field 'seed' must be an unsigned integer");
    f.seed = it->get<RngSeed>();
  }

  const auto& grid = require_field(j, "grid", src);
  const std::string gsrc = src + ": field 'grid'";
  try {
    f.grid = GridSpec(number_field(grid, "width_m", gsrc), number_field(grid, "height_m", gsrc),
                      number_field(grid, "cell_m", gsrc), number_field(grid, "anchor_lat", gsrc));
  } catch (const PreconditionError& e) {
    throw FormatError(gsrc + ": " + e.what());
  }

  const auto& values = require_field(j, "values", src);
  if (!values.is_array()) throw FormatError(src + ": field 'values' must be an array");
  if (values.size() != f.grid.size()) {
    std::ostringstream msg;
    msg << src << ": field 'values': expected " << f.grid.size() << " entries (" << f.grid.rows()
        << " rows x " << f.grid.cols() << " cols), got " << values.size();
    throw FormatError(msg.str());
  }
  f.values.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].is_number()) {
      throw FormatError(src + ": field 'values'[" + std::to_string(i) + "] is not a finite number");
    }
    f.values.push_back(values[i].get<double>());
  }
  return f;
}

void save_scenario(const Field& field, const std::filesystem::path& path) {
  write_file_atomic(path, scenario_to_json(field).dump(1) + "\n");
}

Field load_scenario(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return scenario_from_json(parse_json(text, path.string()));
  } catch (const FormatError& e) {
    const std::string what = e.what();
    if (what.rfind(path.string(), 0) == 0) throw;
    throw FormatError(path.string() + ": " + what);
  }
}

}  // namespace infosample
