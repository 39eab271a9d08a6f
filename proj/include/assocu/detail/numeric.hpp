#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace assocu::detail {

// Neumaier compensated accumulator. Summation order is the call order, so
// results are bit-stable for a fixed input order.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

[[nodiscard]] inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

[[nodiscard]] inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

[[nodiscard]] inline bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // divisor n - 1
};

[[nodiscard]] inline MeanVar mean_var(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("mean_var: need at least two values");
  CompensatedSum s;
  for (double v : xs) s.add(v);
  const double m = s.value() / static_cast<double>(xs.size());
  CompensatedSum ss;
  for (double v : xs) ss.add((v - m) * (v - m));
  return {m, ss.value() / static_cast<double>(xs.size() - 1)};
}

// Gauss-Hermite rule for weight exp(-t^2), nodes by Newton iteration on the
// orthonormal Hermite recurrence.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

[[nodiscard]] inline QuadratureRule gauss_hermite(std::size_t m) {
  if (m == 0) throw std::invalid_argument("gauss_hermite: need m >= 1");
  constexpr double pim4 = 0.7511255444649425;  // pi^(-1/4)
  QuadratureRule rule{std::vector<double>(m), std::vector<double>(m)};
  const double md = static_cast<double>(m);
  double z = 0.0;
  for (std::size_t i = 0; i < (m + 1) / 2; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * md + 1.0) - 1.85575 * std::pow(2.0 * md + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(md, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[i - 2];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pim4;
      double p2 = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / (jd + 1.0)) * p2 - std::sqrt(jd / (jd + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * md) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes[i] = z;
    rule.nodes[m - 1 - i] = -z;
    rule.weights[i] = 2.0 / (pp * pp);
    rule.weights[m - 1 - i] = rule.weights[i];
  }
  return rule;
}

// Ordinary least squares y = a + b x.
[[nodiscard]] inline std::pair<double, double> least_squares_line(std::span<const double> x,
                                                                  std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares_line: bad sizes");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares_line: degenerate abscissae");
  const double b = sxy / sxx;
  return {my - b * mx, b};
}

}  // namespace assocu::detail
