#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fallcloud::eval {

/// Dense row-major matrix of feature rows.
struct FeatureMatrix {
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  void push_row(std::span<const double> x);
};

/// Standardize-then-project PCA fitted on training rows.
struct PcaProjection {
  /// Indices of input columns that had nonzero variance.
  std::vector<std::size_t> kept_columns;
  std::vector<double> mean;
  std::vector<double> scale;
  /// output_dim rows of kept_columns.size() entries, orthonormal.
  std::vector<double> components;
  std::size_t output_dim = 0;
  /// All eigenvalues of the standardized covariance, descending.
  std::vector<double> eigenvalues;
  double retained_fraction = 0.0;
  /// Set when zero-variance columns were dropped.
  bool dropped_columns = false;

  std::span<const double> component(std::size_t i) const {
    return {components.data() + i * kept_columns.size(), kept_columns.size()};
  }
};

/// Z-scores columns with population statistics, eigendecomposes the
/// covariance and keeps the fewest leading components whose eigenvalue mass
/// reaches variance_fraction. Throws Errc::Parameter for fewer than two rows,
/// a fraction outside (0, 1], or no column with variance.
PcaProjection pca_fit(const FeatureMatrix& data, double variance_fraction);

std::vector<double> pca_apply(const PcaProjection& proj, std::span<const double> x);

}  // namespace fallcloud::eval
