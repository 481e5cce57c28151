#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "infosample/gpmodel.hpp"
#include "infosample/rng.hpp"
#include "infosample/scenario.hpp"

namespace fixtures {

using infosample::Cell;
using infosample::GridSpec;
using infosample::Hyperparams;
using infosample::Rng;
using infosample::TrainingSet;

/// n training points at distinct random cell centers of `grid`, values in [0, 20].
inline TrainingSet random_training_set(Rng& rng, int n, const GridSpec& grid = {}) {
  std::vector<std::size_t> idx(grid.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (int i = 0; i < n; ++i) std::swap(idx[static_cast<std::size_t>(i)], idx[i + infosample::uniform_index(rng, idx.size() - i)]);
  TrainingSet t;
  t.x.resize(n, 2);
  t.y.resize(n);
  for (int i = 0; i < n; ++i) {
    t.x.row(i) = grid.center_deg(grid.cell_at(idx[static_cast<std::size_t>(i)])).transpose();
    t.y[i] = infosample::uniform(rng, 0.0, 20.0);
  }
  return t;
}

/// Hyperparameters whose length scale spans a few cells to the grid width.
inline Hyperparams random_hyperparams(Rng& rng) {
  return {infosample::uniform(rng, -9.0, -6.5), infosample::uniform(rng, -1.0, 3.0),
          infosample::uniform(rng, -4.0, 1.0)};
}

inline std::shared_ptr<const infosample::Field> ramp_field(const GridSpec& grid = {}, std::string name = "ramp") {
  infosample::Field f;
  f.grid = grid;
  f.name = std::move(name);
  f.provenance = infosample::Provenance::GpSample;
  f.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Cell c = grid.cell_at(i);
    f.values[i] = 20.0 * (c.row * grid.cols() + c.col) / static_cast<double>(grid.size() - 1);
  }
  return std::make_shared<const infosample::Field>(std::move(f));
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("infosample_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
