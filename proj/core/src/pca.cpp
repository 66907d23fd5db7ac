#include "fallcloud/pca.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "fallcloud/error.hpp"

namespace fallcloud::eval {

void FeatureMatrix::push_row(std::span<const double> x) {
  if (rows == 0 && cols == 0) cols = x.size();
  if (x.size() != cols) throw Error(Errc::Contract, "ragged feature rows");
  values.insert(values.end(), x.begin(), x.end());
  ++rows;
}

PcaProjection pca_fit(const FeatureMatrix& data, double variance_fraction) {
  if (data.rows < 2) throw Error(Errc::Parameter, "PCA needs at least two rows");
  if (!(variance_fraction > 0.0 && variance_fraction <= 1.0)) {
    throw Error(Errc::Parameter, fmt::format("variance fraction {} outside (0, 1]", variance_fraction));
  }
  const auto n = static_cast<double>(data.rows);
  PcaProjection proj;
  for (std::size_t c = 0; c < data.cols; ++c) {
    double mu = 0.0;
    for (std::size_t r = 0; r < data.rows; ++r) mu += data.values[r * data.cols + c];
    mu /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < data.rows; ++r) {
      const double d = data.values[r * data.cols + c] - mu;
      var += d * d;
    }
    const double sd = std::sqrt(var / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mu)))) {
      proj.dropped_columns = true;
      continue;
    }
    proj.kept_columns.push_back(c);
    proj.mean.push_back(mu);
    proj.scale.push_back(sd);
  }
  const std::size_t m = proj.kept_columns.size();
  if (m == 0) throw Error(Errc::Parameter, "every feature column has zero variance");

  Eigen::MatrixXd z(data.rows, m);
  for (std::size_t r = 0; r < data.rows; ++r) {
    for (std::size_t j = 0; j < m; ++j) {
      z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          (data.values[r * data.cols + proj.kept_columns[j]] - proj.mean[j]) / proj.scale[j];
    }
  }
  const Eigen::MatrixXd cov = (z.transpose() * z) / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error(Errc::Parameter, "covariance eigendecomposition failed");

  // Eigen returns ascending order.
  const auto& values = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lambda = std::max(0.0, values(static_cast<Eigen::Index>(m - 1 - i)));
    proj.eigenvalues.push_back(lambda);
    total += lambda;
  }
  double cumulative = 0.0;
  std::size_t d = 0;
  while (d < m) {
    cumulative += proj.eigenvalues[d];
    ++d;
    if (cumulative >= variance_fraction * total - 1e-12 * total) break;
  }
  proj.output_dim = d;
  proj.retained_fraction = total > 0.0 ? cumulative / total : 1.0;

  proj.components.resize(d * m);
  for (std::size_t i = 0; i < d; ++i) {
    const auto col = static_cast<Eigen::Index>(m - 1 - i);
    // Fix the sign so the largest-magnitude loading is positive.
    Eigen::Index arg = 0;
    vectors.col(col).cwiseAbs().maxCoeff(&arg);
    const double sign = vectors(arg, col) < 0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      proj.components[i * m + j] = sign * vectors(static_cast<Eigen::Index>(j), col);
    }
  }
  return proj;
}

std::vector<double> pca_apply(const PcaProjection& proj, std::span<const double> x) {
  const std::size_t m = proj.kept_columns.size();
  std::vector<double> z(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto c = proj.kept_columns[j];
    if (c >= x.size()) throw Error(Errc::Contract, "vector shorter than the PCA input dimension");
    z[j] = (x[c] - proj.mean[j]) / proj.scale[j];
  }
  std::vector<double> out(proj.output_dim, 0.0);
  for (std::size_t i = 0; i < proj.output_dim; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += proj.components[i * m + j] * z[j];
    out[i] = s;
  }
  return out;
}

}  // namespace fallcloud::eval
