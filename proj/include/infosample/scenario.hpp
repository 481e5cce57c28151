#pragma once

#include <Eigen/Core>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "infosample/gpmodel.hpp"
#include "infosample/rng.hpp"

namespace infosample {

/// Equirectangular conversion factor.
inline constexpr double kMetersPerDegree = 111320.0;
inline constexpr double kDefaultAnchorLat = 34.086;
/// Value range every generated scenario is rescaled to.
inline constexpr double kFieldLo = 0.0;
inline constexpr double kFieldHi = 20.0;

struct Cell {
  int row = 0;
  int col = 0;

  // Lexicographic (row, col) order is row-major order.
  auto operator<=>(const Cell&) const = default;
};

/// Rectangular grid of square cells. Samples live at cell centers; row index
/// grows northwards and column index eastwards from the south-west corner.
class GridSpec {
 public:
  /// 400 x 200 m at 10 m spacing: 40 columns by 20 rows.
  GridSpec() : GridSpec(400.0, 200.0, 10.0) {}
  GridSpec(double width_m, double height_m, double cell_m, double anchor_lat = kDefaultAnchorLat);

  double width_m() const { return width_m_; }
  double height_m() const { return height_m_; }
  double cell_m() const { return cell_m_; }
  double anchor_lat() const { return anchor_lat_; }
  int cols() const { return cols_; }
  int rows() const { return rows_; }
  std::size_t size() const { return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_); }

  bool contains(Cell c) const { return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row) * cols_ + c.col; }
  Cell cell_at(std::size_t index) const {
    return {static_cast<int>(index / cols_), static_cast<int>(index % cols_)};
  }

  /// Cell center in meters, (x east, y north).
  Eigen::Vector2d center_m(Cell c) const;
  /// Meters to (lon, lat) degrees.
  Eigen::Vector2d to_degrees(const Eigen::Vector2d& meters) const;
  Eigen::Vector2d center_deg(Cell c) const { return to_degrees(center_m(c)); }

  /// All cell centers in degrees, row-major.
  Locations all_centers_deg() const;

  bool operator==(const GridSpec&) const = default;

 private:
  double width_m_;
  double height_m_;
  double cell_m_;
  double anchor_lat_;
  int cols_;
  int rows_;
};

/// (lon, lat) of a cell center in degrees.
std::pair<double, double> cell_center_lonlat(const GridSpec& spec, Cell cell);

enum class Provenance { GpSample, Gmm, Reconstruction };

std::string to_string(Provenance p);
/// Throws FormatError naming the tag when unknown.
Provenance parse_provenance(const std::string& tag);

struct Field {
  GridSpec grid;
  std::vector<double> values;  // row-major, rows*cols
  Provenance provenance = Provenance::Reconstruction;
  std::optional<RngSeed> seed;
  std::string name;

  double at(Cell c) const { return values[grid.index(c)]; }
  double& at(Cell c) { return values[grid.index(c)]; }

  bool operator==(const Field&) const = default;
};

struct GmmComponent {
  Eigen::Vector2d mean;        // meters
  Eigen::Matrix2d covariance;  // m^2
  double weight = 1.0;
};

struct GmmSpec {
  std::vector<GmmComponent> components;
};

/// Ranges the random mixtures are drawn from.
struct GmmConfig {
  int min_components = 2;
  int max_components = 6;
  double min_axis_sd_m = 20.0;
  double max_axis_sd_m = 80.0;
  double min_weight = 0.5;
  double max_weight = 1.0;
};

GmmSpec sample_gmm_spec(const GridSpec& spec, Rng& rng, const GmmConfig& config = {});

double evaluate_component(const GmmComponent& c, const Eigen::Vector2d& x_m);
double evaluate_gmm(const GmmSpec& gmm, const Eigen::Vector2d& x_m);

/// One zero-mean joint draw from the GP prior over all cell centers (degree
/// coordinates). Not rescaled.
Field generate_gp_field(const GridSpec& spec, const Hyperparams& hp, RngSeed seed);

/// Random mixture evaluated at every cell center. Not rescaled.
Field generate_gmm_field(const GridSpec& spec, RngSeed seed, const GmmConfig& config = {});

/// Adds uniform noise in ±noise_frac·|max(field)| per cell, then maps the
/// values affinely onto [lo, hi]; both endpoints are attained exactly.
Field add_noise_and_rescale(const Field& field, double noise_frac = 0.05, double lo = kFieldLo,
                            double hi = kFieldHi, RngSeed seed = 0);

enum class ScenarioKind { Gp, Gmm };

struct ScenarioRecipe {
  ScenarioKind kind = ScenarioKind::Gp;
  GridSpec grid;
  Hyperparams gp = Hyperparams::scenario_default();
  GmmConfig gmm;
  double noise_frac = 0.05;
  double lo = kFieldLo;
  double hi = kFieldHi;
};

/// Full generation pipeline: raw field, then noise and rescale. The noise
/// stream is derived from `seed`.
Field generate_scenario(const ScenarioRecipe& recipe, RngSeed seed, std::string name);

nlohmann::json scenario_to_json(const Field& field);
Field scenario_from_json(const nlohmann::json& j);

void save_scenario(const Field& field, const std::filesystem::path& path);
Field load_scenario(const std::filesystem::path& path);

}  // namespace infosample
