#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "assocu/marginal.hpp"

namespace assocu {

using RealFunction = std::function<double(double)>;
using KernelFunction = std::function<double(std::span<const double>)>;

// Shape of the first projection rho_1; decides which block-estimator
// fluctuation constants apply and whether a dominating function is needed.
enum class Monotonicity { monotone, non_monotone, unknown };

// Closed-form projections of a kernel as functions of the marginal law.
// rho2 is only meaningful for degree-3 kernels.
struct AnalyticProjections {
  std::function<double(const MarginalModel&)> theta;
  std::function<double(const MarginalModel&, double)> rho1;
  std::function<double(const MarginalModel&, double, double)> rho2;
  std::function<double(const MarginalModel&, double)> rho1_dominator;
};

class SymmetricKernel {
 public:
  SymmetricKernel(std::string id, int degree, KernelFunction eval,
                  Monotonicity rho1_shape = Monotonicity::unknown,
                  std::optional<AnalyticProjections> analytic = std::nullopt)
      : id_(std::move(id)),
        degree_(degree),
        eval_(std::move(eval)),
        shape_(rho1_shape),
        analytic_(std::move(analytic)) {
    if (degree_ < 1) throw std::invalid_argument("SymmetricKernel: degree must be >= 1");
    if (!eval_) throw std::invalid_argument("SymmetricKernel: empty kernel function");
  }

  [[nodiscard]] const std::string& id() const noexcept { return id_; }
  [[nodiscard]] int degree() const noexcept { return degree_; }
  [[nodiscard]] Monotonicity monotonicity() const noexcept { return shape_; }
  [[nodiscard]] bool has_analytic_projections() const noexcept { return analytic_.has_value(); }

  [[nodiscard]] double operator()(std::span<const double> args) const {
    if (static_cast<int>(args.size()) != degree_) {
      throw std::invalid_argument("SymmetricKernel: argument count does not match degree");
    }
    return eval_(args);
  }

  [[nodiscard]] std::optional<double> analytic_theta(const MarginalModel& f) const {
    if (!analytic_ || !analytic_->theta) return std::nullopt;
    return analytic_->theta(f);
  }

  [[nodiscard]] std::optional<RealFunction> analytic_rho1(const MarginalModel& f) const {
    if (!analytic_ || !analytic_->rho1) return std::nullopt;
    return RealFunction([g = analytic_->rho1, f](double x) { return g(f, x); });
  }

  [[nodiscard]] std::optional<std::function<double(double, double)>> analytic_rho2(
      const MarginalModel& f) const {
    if (!analytic_ || !analytic_->rho2) return std::nullopt;
    return std::function<double(double, double)>(
        [g = analytic_->rho2, f](double x, double y) { return g(f, x, y); });
  }

  // Nondecreasing f~ with rho_1 << f~ under the given marginal.
  [[nodiscard]] std::optional<RealFunction> rho1_dominator(const MarginalModel& f) const {
    if (!analytic_ || !analytic_->rho1_dominator) return std::nullopt;
    return RealFunction([g = analytic_->rho1_dominator, f](double x) { return g(f, x); });
  }

 private:
  std::string id_;
  int degree_;
  KernelFunction eval_;
  Monotonicity shape_;
  std::optional<AnalyticProjections> analytic_;
};

// rho(x, y) = (x - y)^2 / 2; U_n is the divisor-(n-1) sample variance.
[[nodiscard]] inline SymmetricKernel builtin_variance_kernel() {
  AnalyticProjections p;
  p.theta = [](const MarginalModel& f) { return f.mu2(); };
  p.rho1 = [](const MarginalModel& f, double x) {
    const double d = x - f.mean();
    return (d * d + f.mu2()) / 2.0;
  };
  p.rho1_dominator = [](const MarginalModel& f, double x) {
    const double mu = f.mean();
    const double sq = x >= 0.0 ? x * x : -x * x;
    return (sq + 2.0 * x * std::abs(mu) + mu * mu + f.mu2()) / 2.0;
  };
  return SymmetricKernel(
      "variance", 2,
      [](std::span<const double> a) {
        const double d = a[0] - a[1];
        return d * d / 2.0;
      },
      Monotonicity::non_monotone, std::move(p));
}

// rho(x, y) = xy; estimates mu^2.
[[nodiscard]] inline SymmetricKernel builtin_squared_mean_kernel() {
  AnalyticProjections p;
  p.theta = [](const MarginalModel& f) { return f.mean() * f.mean(); };
  p.rho1 = [](const MarginalModel& f, double x) { return x * f.mean(); };
  p.rho1_dominator = [](const MarginalModel& f, double x) { return x * std::abs(f.mean()); };
  return SymmetricKernel(
      "squared_mean", 2, [](std::span<const double> a) { return a[0] * a[1]; },
      Monotonicity::monotone, std::move(p));
}

// Degree-3 kernel whose U-statistic is n/((n-1)(n-2)) sum (X_i - Xbar)^3.
// The kernel is translation invariant, so projections are computed in
// coordinates centered at the marginal mean.
[[nodiscard]] inline SymmetricKernel builtin_third_moment_kernel() {
  AnalyticProjections p;
  p.theta = [](const MarginalModel& f) { return f.mu3(); };
  p.rho1 = [](const MarginalModel& f, double x) {
    const double c = x - f.mean();
    return (2.0 * f.mu3() + c * c * c) / 3.0 - f.mu2() * c;
  };
  p.rho2 = [](const MarginalModel& f, double x, double y) {
    const double cx = x - f.mean();
    const double cy = y - f.mean();
    return (f.mu3() + cx * cx * cx + cy * cy * cy) / 3.0 -
           (cx * cx * cy + cy * cy * cx + f.mu2() * (cx + cy)) / 2.0;
  };
  p.rho1_dominator = [](const MarginalModel& f, double x) {
    const double c = x - f.mean();
    return (2.0 * f.mu3() + c * c * c) / 3.0 + f.mu2() * c;
  };
  return SymmetricKernel(
      "third_moment", 3,
      [](std::span<const double> a) {
        // sorted so that every argument order rounds identically
        std::array<double, 3> v{a[0], a[1], a[2]};
        std::sort(v.begin(), v.end());
        const auto [x, y, z] = v;
        return (x * x * x + y * y * y + z * z * z) / 3.0 -
               (x * x * (y + z) + y * y * (x + z) + z * z * (x + y)) / 2.0 + 2.0 * x * y * z;
      },
      Monotonicity::non_monotone, std::move(p));
}

inline constexpr std::array<std::string_view, 3> builtin_kernel_ids{"variance", "squared_mean",
                                                                    "third_moment"};

[[nodiscard]] inline SymmetricKernel make_kernel(std::string_view id) {
  if (id == "variance") return builtin_variance_kernel();
  if (id == "squared_mean") return builtin_squared_mean_kernel();
  if (id == "third_moment") return builtin_third_moment_kernel();
  throw std::invalid_argument("unknown kernel id '" + std::string(id) +
                              "' (expected variance, squared_mean or third_moment)");
}

enum class DominationProvenance { user_supplied, bounded_variation_construction, identity };

// f << f_tilde: f_tilde + f and f_tilde - f are both nondecreasing.
struct DominationPair {
  RealFunction f;
  RealFunction f_tilde;
  DominationProvenance provenance = DominationProvenance::user_supplied;
};

[[nodiscard]] inline DominationPair identity_domination(RealFunction f) {
  return {f, f, DominationProvenance::identity};
}

namespace detail {

inline void require_grid(std::span<const double> grid) {
  if (grid.size() < 2) throw std::invalid_argument("domination grid needs at least two points");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("domination grid must be strictly increasing");
  }
}

inline bool nondecreasing_on(const RealFunction& g, std::span<const double> grid, double tol) {
  double prev = g(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double cur = g(grid[i]);
    if (cur < prev - tol) return false;
    prev = cur;
  }
  return true;
}

}  // namespace detail

inline constexpr double domination_tolerance = 1e-12;

// Grid certificate of f << f_tilde.
[[nodiscard]] inline bool check_domination(const DominationPair& pair, std::span<const double> grid) {
  detail::require_grid(grid);
  const RealFunction plus = [&](double x) { return pair.f_tilde(x) + pair.f(x); };
  const RealFunction minus = [&](double x) { return pair.f_tilde(x) - pair.f(x); };
  return detail::nondecreasing_on(plus, grid, domination_tolerance) &&
         detail::nondecreasing_on(minus, grid, domination_tolerance);
}

// Builds f = U1 - U2, f_tilde = U1 + U2 from a Jordan decomposition into
// nondecreasing parts; both parts are checked on the grid.
[[nodiscard]] inline DominationPair bv_domination(RealFunction increasing_part,
                                                  RealFunction decreasing_negpart,
                                                  std::span<const double> grid) {
  detail::require_grid(grid);
  if (!detail::nondecreasing_on(increasing_part, grid, domination_tolerance)) {
    throw std::invalid_argument("bv_domination: increasing part is not nondecreasing on the grid");
  }
  if (!detail::nondecreasing_on(decreasing_negpart, grid, domination_tolerance)) {
    throw std::invalid_argument("bv_domination: negative part is not nondecreasing on the grid");
  }
  DominationPair pair;
  pair.f = [u1 = increasing_part, u2 = decreasing_negpart](double x) { return u1(x) - u2(x); };
  pair.f_tilde = [u1 = std::move(increasing_part), u2 = std::move(decreasing_negpart)](double x) {
    return u1(x) + u2(x);
  };
  pair.provenance = DominationProvenance::bounded_variation_construction;
  return pair;
}

// Default certification grid: `points` values evenly spaced between the
// 0.0001 and 0.9999 quantiles of the marginal.
[[nodiscard]] inline std::vector<double> default_domination_grid(const MarginalModel& f,
                                                                 std::size_t points = 2001) {
  if (points < 2) throw std::invalid_argument("default_domination_grid: need >= 2 points");
  const double lo = f.quantile(1e-4);
  const double hi = f.quantile(1.0 - 1e-4);
  if (!(hi > lo)) throw std::invalid_argument("default_domination_grid: marginal has no spread");
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  grid.back() = hi;
  return grid;
}

}  // namespace assocu
