// Independent reference computations for the unit and acceptance suites.
// Nothing here calls into the code paths it is used to check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "mgal/matrix.hpp"
#include "mgal/model.hpp"
#include "mgal/trainer.hpp"

namespace oracle {

using mgal::Matrix;
using mgal::Vector;

inline Vector matvec(const Matrix& m, const Vector& x) {
  Vector y(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    long double acc = 0.0L;
    for (std::size_t c = 0; c < m.cols(); ++c) acc += static_cast<long double>(m(r, c)) * x[c];
    y[r] = static_cast<double>(acc);
  }
  return y;
}

inline double dist(const Vector& a, const Vector& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * static_cast<long double>(a[i] - b[i]);
  return static_cast<double>(std::sqrt(s));
}

inline double mse(const Vector& a, const Vector& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * static_cast<long double>(a[i] - b[i]);
  return static_cast<double>(s / a.size());
}

inline double frob2(const Matrix& m) {
  long double s = 0.0L;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) s += m(r, c) * static_cast<long double>(m(r, c));
  return static_cast<double>(s);
}

struct StageCase {
  Vector anchor;
  std::size_t step;
  Vector positive, negative, target;
};

inline std::size_t stage_of(std::size_t t, std::size_t T, std::size_t k) {
  // Evenly split T steps into k consecutive runs.
  std::size_t s = 0;
  while (s + 1 < k && (s + 1) * T <= t * k) ++s;
  return s;
}

/// Total stage-training loss written out directly from its definition.
inline double stage_loss(const std::vector<StageCase>& batch, const std::vector<Matrix>& maps,
                         std::size_t T, double margin, double lambda, double decay) {
  double total = 0.0;
  for (const auto& s : batch) {
    const Vector a = matvec(maps[stage_of(s.step, T, maps.size())], s.anchor);
    const double hinge = std::max(0.0, dist(a, s.positive) - dist(a, s.negative) + margin);
    total += hinge + lambda * mse(a, s.target);
  }
  total /= static_cast<double>(batch.size());
  for (const auto& m : maps) total += 0.5 * decay * frob2(m);
  return total;
}

struct BaseCase {
  Vector anchor, positive, negative;
};

inline double base_loss(const std::vector<BaseCase>& batch, const Matrix& map, double margin,
                        double decay) {
  double total = 0.0;
  for (const auto& s : batch) {
    const Vector a = matvec(map, s.anchor);
    total += std::max(0.0, dist(a, matvec(map, s.positive)) - dist(a, matvec(map, s.negative)) + margin);
  }
  return total / static_cast<double>(batch.size()) + 0.5 * decay * frob2(map);
}

/// Central difference of f with respect to entry `i` of `values`.
template <typename F>
double central_difference(std::span<double> values, std::size_t i, double h, F&& f) {
  const double saved = values[i];
  values[i] = saved + h;
  const double up = f();
  values[i] = saved - h;
  const double down = f();
  values[i] = saved;
  return (up - down) / (2.0 * h);
}

inline bool close_rel(double analytic, double numeric, double rel, double abs_floor) {
  const double diff = std::fabs(analytic - numeric);
  return diff <= abs_floor || diff <= rel * std::max(std::fabs(analytic), std::fabs(numeric));
}

/// 1-based rank of `target` after a full stable sort by distance.
inline std::size_t full_sort_rank(const std::vector<double>& d, std::size_t target) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), target) - order.begin()) + 1;
}

struct Metrics {
  double m_at_a, m_at_b, a5, a10;
};

// m@A from the exact integer numerator; m@B as a plain double sum over
// (episode, step) in order, the canonical summation of the metric.
inline Metrics brute_metrics(const std::vector<std::vector<std::size_t>>& ranks, std::size_t n) {
  unsigned long long a = 0;
  double b = 0.0;
  std::size_t cells = 0, h5 = 0, h10 = 0;
  for (const auto& ep : ranks) {
    for (auto r : ep) {
      a += n - r;
      b += 1.0 / static_cast<double>(r);
      ++cells;
    }
    h5 += ep.back() <= 5;
    h10 += ep.back() <= 10;
  }
  return {100.0 * static_cast<double>(a) / static_cast<double>((n - 1) * cells),
          100.0 * b / static_cast<double>(cells), 100.0 * static_cast<double>(h5) / static_cast<double>(ranks.size()),
          100.0 * static_cast<double>(h10) / static_cast<double>(ranks.size())};
}

/// Distance from (px, py) to the segment (ax, ay)-(bx, by).
inline double point_segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (ax + t * vx), py - (ay + t * vy));
}

}  // namespace oracle
