#include "mgal/matrix.hpp"

#include <cmath>
#include <string>

#include "mgal/errors.hpp"

namespace mgal {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector Matrix::apply(std::span<const double> x) const {
  if (x.size() != cols_) {
    throw ValidationError("dimension mismatch: matrix has " + std::to_string(cols_) +
                          " columns, vector has " + std::to_string(x.size()) + " components");
  }
  Vector y(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* w = data_.data() + r * cols_;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) acc += w[c] * x[c];
    y[r] = acc;
  }
  return y;
}

void Matrix::add_outer(std::span<const double> u, std::span<const double> v, double scale) {
  for (std::size_t r = 0; r < rows_; ++r) {
    const double ur = scale * u[r];
    if (ur == 0.0) continue;
    double* w = data_.data() + r * cols_;
    for (std::size_t c = 0; c < cols_; ++c) w[c] += ur * v[c];
  }
}

double Matrix::squared_norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return s;
}

bool Matrix::all_finite() const { return mgal::all_finite(data_); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace mgal
