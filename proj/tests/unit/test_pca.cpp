#include <doctest.h>

#include <cmath>
#include <random>

#include "fallcloud/pca.hpp"
#include "unit/helpers.hpp"

using namespace fallcloud;
using namespace fallcloud::eval;

namespace {

FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, bool correlated = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  FeatureMatrix m;
  std::vector<double> mix(cols * cols);
  for (auto& v : mix) v = n(rng);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> base(cols), row(cols, 0.0);
    for (auto& v : base) v = n(rng);
    for (std::size_t i = 0; i < cols; ++i) {
      if (!correlated) {
        row[i] = base[i] * static_cast<double>(i + 1) + 3.0 * static_cast<double>(i);
        continue;
      }
      for (std::size_t j = 0; j <= i; ++j) row[i] += mix[i * cols + j] * base[j];
      row[i] = row[i] * std::pow(10.0, static_cast<double>(i % 3)) + 5.0;
    }
    m.push_row(row);
  }
  return m;
}

/// Standardized column j of row r, from directly computed population statistics.
std::vector<std::vector<double>> standardize(const FeatureMatrix& m) {
  std::vector<std::vector<double>> z(m.rows, std::vector<double>(m.cols));
  for (std::size_t c = 0; c < m.cols; ++c) {
    double mu = 0, var = 0;
    for (std::size_t r = 0; r < m.rows; ++r) mu += m.row(r)[c];
    mu /= static_cast<double>(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) var += (m.row(r)[c] - mu) * (m.row(r)[c] - mu);
    const double sd = std::sqrt(var / static_cast<double>(m.rows));
    for (std::size_t r = 0; r < m.rows; ++r) z[r][c] = (m.row(r)[c] - mu) / sd;
  }
  return z;
}

}  // namespace

TEST_CASE("points on a line give one component") {
  FeatureMatrix m;
  for (int i = 0; i < 20; ++i) {
    const double t = 0.37 * i - 2.0;
    m.push_row(std::vector<double>{1 + 2 * t, -3 + 0.5 * t, 7 - 4 * t});
  }
  const auto p = pca_fit(m, 0.95);
  CHECK(p.output_dim == 1);
  CHECK(p.retained_fraction == doctest::Approx(1.0));
  CHECK_FALSE(p.dropped_columns);
}

TEST_CASE("fraction 1.0 keeps every dimension of full-rank data") {
  const auto m = random_matrix(200, 6, 1);
  const auto p = pca_fit(m, 1.0);
  CHECK(p.output_dim == 6);
  CHECK(p.retained_fraction == doctest::Approx(1.0));
}

TEST_CASE("components are orthonormal and retain the requested variance") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = random_matrix(150, 8, seed);
    for (double frac : {0.5, 0.8, 0.95, 0.99}) {
      const auto p = pca_fit(m, frac);
      CHECK(p.retained_fraction >= frac - 1e-12);
      const std::size_t k = p.kept_columns.size();
      for (std::size_t i = 0; i < p.output_dim; ++i) {
        for (std::size_t j = 0; j < p.output_dim; ++j) {
          double dot = 0;
          for (std::size_t c = 0; c < k; ++c) dot += p.component(i)[c] * p.component(j)[c];
          CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-8);
        }
      }
      // Smallest such d: one fewer component would fall short.
      if (p.output_dim > 1) {
        double total = 0, lead = 0;
        for (double e : p.eigenvalues) total += e;
        for (std::size_t i = 0; i + 1 < p.output_dim; ++i) lead += p.eigenvalues[i];
        CHECK(lead / total < frac);
      }
    }
  }
}

TEST_CASE("pca_apply is affine") {
  const auto m = random_matrix(100, 5, 2);
  const auto p = pca_fit(m, 0.9);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(5), y(5), mix(5);
    for (auto& v : x) v = 20 * u(rng);
    for (auto& v : y) v = 20 * u(rng);
    const double a = u(rng);
    for (std::size_t i = 0; i < 5; ++i) mix[i] = a * x[i] + (1 - a) * y[i];
    const auto px = pca_apply(p, x), py = pca_apply(p, y), pm = pca_apply(p, mix);
    for (std::size_t i = 0; i < p.output_dim; ++i) {
      CHECK(pm[i] == doctest::Approx(a * px[i] + (1 - a) * py[i]).epsilon(1e-9).scale(1.0));
    }
  }
  CHECK_ERRC(pca_apply(p, std::vector<double>{1.0, 2.0}), Errc::Contract);
}

TEST_CASE("reconstruction error equals the discarded eigenvalue mass") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = random_matrix(300, 7, 40 + seed);
    const auto p = pca_fit(m, 0.9);
    const auto z = standardize(m);
    const std::size_t k = m.cols;

    // Direct covariance of the standardized data.
    std::vector<double> cov(k * k, 0.0);
    for (const auto& row : z) {
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) cov[i * k + j] += row[i] * row[j] / static_cast<double>(m.rows);
      }
    }
    double trace = 0;
    for (std::size_t i = 0; i < k; ++i) trace += cov[i * k + i];
    double retained = 0;
    for (std::size_t c = 0; c < p.output_dim; ++c) {
      const auto v = p.component(c);
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) retained += v[i] * cov[i * k + j] * v[j];
      }
    }
    CHECK(retained / trace == doctest::Approx(p.retained_fraction).epsilon(1e-9));

    double err = 0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      const auto y = pca_apply(p, m.row(r));
      for (std::size_t i = 0; i < k; ++i) {
        double back = 0;
        for (std::size_t c = 0; c < p.output_dim; ++c) back += p.component(c)[i] * y[c];
        err += (z[r][i] - back) * (z[r][i] - back);
      }
    }
    err /= static_cast<double>(m.rows);
    CHECK(err == doctest::Approx((1.0 - p.retained_fraction) * trace).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("zero-variance columns are dropped with a flag") {
  auto m = random_matrix(50, 3, 6, false);
  FeatureMatrix with_constant;
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    with_constant.push_row(std::vector<double>{row[0], 4.2, row[1], row[2]});
  }
  const auto p = pca_fit(with_constant, 0.99);
  CHECK(p.dropped_columns);
  CHECK(p.kept_columns == std::vector<std::size_t>{0, 2, 3});
  CHECK(p.eigenvalues.size() == 3);
  // Standardized independent columns: eigenvalues near 1 each.
  double total = 0;
  for (double e : p.eigenvalues) total += e;
  CHECK(total == doctest::Approx(3.0));
}

TEST_CASE("pca parameter errors") {
  const auto m = random_matrix(10, 3, 7);
  CHECK_ERRC(pca_fit(m, 0.0), Errc::Parameter);
  CHECK_ERRC(pca_fit(m, 1.5), Errc::Parameter);
  FeatureMatrix one;
  one.push_row(std::vector<double>{1, 2, 3});
  CHECK_ERRC(pca_fit(one, 0.9), Errc::Parameter);
  FeatureMatrix flat;
  flat.push_row(std::vector<double>{1, 2});
  flat.push_row(std::vector<double>{1, 2});
  CHECK_ERRC(pca_fit(flat, 0.9), Errc::Parameter);
  CHECK_ERRC(flat.push_row(std::vector<double>{1}), Errc::Contract);
}
