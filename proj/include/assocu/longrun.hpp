#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "assocu/detail/numeric.hpp"
#include "assocu/kernels.hpp"
#include "assocu/marginal.hpp"
#include "assocu/ustat.hpp"

namespace assocu {

enum class EllRule { fixed, cube_root, log_square_capped };

// Block-length rule l(n) for the overlapping-block estimator.
struct BlockConfig {
  EllRule rule = EllRule::cube_root;
  std::size_t fixed_ell = 0;

  static BlockConfig fixed(std::size_t ell) {
    if (ell == 0) throw std::invalid_argument("BlockConfig: fixed block length must be >= 1");
    return {EllRule::fixed, ell};
  }
  static BlockConfig cube_root() { return {EllRule::cube_root, 0}; }
  static BlockConfig log_square_capped() { return {EllRule::log_square_capped, 0}; }

  // Accepts "cube_root", "log_square_capped" or "fixed(<l>)".
  static BlockConfig parse(std::string_view text) {
    if (text == "cube_root") return cube_root();
    if (text == "log_square_capped") return log_square_capped();
    if (text.starts_with("fixed(") && text.ends_with(")")) {
      const auto digits = text.substr(6, text.size() - 7);
      std::size_t ell = 0;
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), ell);
      if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
        throw std::invalid_argument("BlockConfig: malformed block rule '" + std::string(text) + "'");
      }
      return fixed(ell);
    }
    throw std::invalid_argument("BlockConfig: unknown block rule '" + std::string(text) +
                                "' (expected cube_root, log_square_capped or fixed(<l>))");
  }

  [[nodiscard]] std::string name() const {
    switch (rule) {
      case EllRule::fixed: return "fixed(" + std::to_string(fixed_ell) + ")";
      case EllRule::cube_root: return "cube_root";
      case EllRule::log_square_capped: return "log_square_capped";
    }
    return "unknown";
  }

  [[nodiscard]] std::size_t ell(std::size_t n) const {
    if (n == 0) throw std::invalid_argument("BlockConfig: n must be >= 1");
    std::size_t l = 0;
    switch (rule) {
      case EllRule::fixed: l = fixed_ell; break;
      case EllRule::cube_root: l = floor_cube_root(n); break;
      case EllRule::log_square_capped: {
        const double lg = std::log(static_cast<double>(n));
        const auto cap = lg > 0.0 ? static_cast<std::size_t>(std::floor(static_cast<double>(n) / (lg * lg))) : n;
        l = std::min(floor_cube_root(n), cap);
        break;
      }
    }
    l = rule == EllRule::fixed ? l : std::max<std::size_t>(l, 1);
    if (l < 1 || l > n) {
      throw std::invalid_argument("BlockConfig: block length " + std::to_string(l) + " outside [1, n = " +
                                  std::to_string(n) + "]");
    }
    return l;
  }

  static std::size_t floor_cube_root(std::size_t n) {
    auto l = static_cast<std::size_t>(std::cbrt(static_cast<double>(n)));
    while ((l + 1) * (l + 1) * (l + 1) <= n) ++l;
    while (l > 0 && l * l * l > n) --l;
    return l;
  }
};

// sqrt(pi/2) rescales E|N(0, sigma^2)| = sigma sqrt(2/pi) back to sigma.
inline constexpr double sqrt_pi_over_2 = 1.2533141373155002512;

// Fluctuation constant A: (sqrt((3 pi - 8) / (2 pi)) + 1) sigma for the
// non-monotone extension, (sqrt((5 pi - 8) / (2 pi)) + 1) sigma for the
// monotone (associated) case.
[[nodiscard]] inline double fluctuation_constant(bool monotone, double sigma) {
  const double pi = std::numbers::pi;
  const double c = monotone ? (5.0 * pi - 8.0) / (2.0 * pi) : (3.0 * pi - 8.0) / (2.0 * pi);
  return (std::sqrt(c) + 1.0) * sigma;
}

struct LongRunEstimate {
  double b_n = 0.0;
  std::size_t ell = 0;
  std::size_t n = 0;
  double sigma_f_hat = 0.0;
  double fluct_scale = 0.0;  // sqrt(l / n) * A(sigma_f_hat)
  bool monotone_variant = true;
  std::string ell_rule;
  std::optional<std::string> warning;
};

// B_n = (n - l + 1)^-1 sum_{j=0}^{n-l} |S_j(l) - l Ybar| / sqrt(l), computed
// from prefix sums of the mean-centered series.
[[nodiscard]] inline LongRunEstimate block_estimator(std::span<const double> series, const BlockConfig& config,
                                                     bool monotone_variant = true) {
  const std::size_t n = series.size();
  if (n < 2) throw std::invalid_argument("block_estimator: need n >= 2");
  if (!detail::all_finite(series)) throw std::domain_error("block_estimator: non-finite value in series");
  const std::size_t ell = config.ell(n);

  LongRunEstimate est;
  est.ell = ell;
  est.n = n;
  est.monotone_variant = monotone_variant;
  est.ell_rule = config.name();

  const bool constant = std::all_of(series.begin(), series.end(), [&](double v) { return v == series[0]; });
  if (constant) {
    est.warning = "degenerate series: zero variance, B_n = 0";
    return est;
  }

  detail::CompensatedSum total;
  for (double v : series) total.add(v);
  const double mean = total.value() / static_cast<double>(n);
  std::vector<double> prefix(n + 1, 0.0);
  detail::CompensatedSum run;
  for (std::size_t i = 0; i < n; ++i) {
    run.add(series[i] - mean);
    prefix[i + 1] = run.value();
  }
  detail::CompensatedSum acc;
  for (std::size_t j = 0; j + ell <= n; ++j) acc.add(std::abs(prefix[j + ell] - prefix[j]));
  est.b_n = acc.value() / (static_cast<double>(n - ell + 1) * std::sqrt(static_cast<double>(ell)));
  est.sigma_f_hat = est.b_n * sqrt_pi_over_2;
  est.fluct_scale = std::sqrt(static_cast<double>(ell) / static_cast<double>(n)) *
                    fluctuation_constant(monotone_variant, est.sigma_f_hat);
  return est;
}

// (n - l + 1)^-1 sum_j |S_j(l) - l mu| / sqrt(l) with a known mean mu; the
// statistic whose fluctuations have the N(0, (3 pi - 8) / 4 sigma_f^2) law
// after scaling by sqrt(n / l) sqrt(pi / 2).
[[nodiscard]] inline double known_mean_block_statistic(std::span<const double> series, std::size_t ell, double mu) {
  const std::size_t n = series.size();
  if (ell < 1 || ell > n) throw std::invalid_argument("known_mean_block_statistic: need 1 <= l <= n");
  std::vector<double> prefix(n + 1, 0.0);
  detail::CompensatedSum run;
  for (std::size_t i = 0; i < n; ++i) {
    run.add(series[i] - mu);
    prefix[i + 1] = run.value();
  }
  detail::CompensatedSum acc;
  for (std::size_t j = 0; j + ell <= n; ++j) acc.add(std::abs(prefix[j + ell] - prefix[j]));
  return acc.value() / (static_cast<double>(n - ell + 1) * std::sqrt(static_cast<double>(ell)));
}

// Leave-one-out plug-in rho1_hat(X_i) = average of rho over the (k-1)-subsets
// of the other observations. Built-in kernels use closed forms in power sums,
// other kernels use enumeration (O(n^k)).
[[nodiscard]] inline std::vector<double> empirical_rho1(std::span<const double> x, const SymmetricKernel& kernel) {
  const std::size_t n = x.size();
  const auto k = static_cast<std::size_t>(kernel.degree());
  if (n < k + 1 || n < 2) throw std::invalid_argument("empirical_rho1: sample too small for leave-one-out");
  std::vector<double> out(n);
  if (k == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = kernel({&x[i], 1});
    return out;
  }
  const double nd = static_cast<double>(n);
  double sum = 0.0;
  for (double v : x) sum += v;
  const double mean = sum / nd;
  if (kernel.id() == "variance") {
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x[i] - mean;
      out[i] = (nd * d * d + ss) / (2.0 * (nd - 1.0));
    }
    return out;
  }
  if (kernel.id() == "squared_mean") {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * (sum - x[i]) / (nd - 1.0);
    return out;
  }
  if (kernel.id() == "third_moment") {
    // Shift invariance of the kernel: work with deviations from the mean.
    double p1 = 0.0;
    double p2 = 0.0;
    double p3 = 0.0;
    for (double v : x) {
      const double d = v - mean;
      p1 += d;
      p2 += d * d;
      p3 += d * d * d;
    }
    const double m = nd - 1.0;
    const double pairs = m * (m - 1.0) / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = x[i] - mean;
      const double q1 = p1 - d;
      const double q2 = p2 - d * d;
      const double q3 = p3 - d * d * d;
      const double e2 = (q1 * q1 - q2) / 2.0;
      const double s = (pairs * d * d * d + (m - 1.0) * q3) / 3.0 -
                       (d * d * (m - 1.0) * q1 + d * (m - 1.0) * q2 + q1 * q2 - q3) / 2.0 + 2.0 * d * e2;
      out[i] = s / pairs;
    }
    return out;
  }
  std::vector<double> others(n - 1);
  std::vector<double> args(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0, o = 0; j < n; ++j) {
      if (j != i) others[o++] = x[j];
    }
    detail::CompensatedSum s;
    for_each_subset(n - 1, k - 1, [&](std::span<const std::size_t> idx) {
      args[0] = x[i];
      for (std::size_t c = 0; c + 1 < k; ++c) args[c + 1] = others[idx[c]];
      s.add(kernel(args));
    });
    out[i] = s.value() / binomial(n - 1, k - 1);
  }
  return out;
}

// Block estimate of sigma_U from the series rho_1(X_j): analytic rho_1 when a
// marginal is supplied and the kernel provides it, leave-one-out plug-in
// otherwise.
[[nodiscard]] inline LongRunEstimate sigma_u_plugin(std::span<const double> sample, const SymmetricKernel& kernel,
                                                    const BlockConfig& config,
                                                    const std::optional<MarginalModel>& marginal = std::nullopt) {
  std::vector<double> series;
  std::optional<RealFunction> rho1;
  if (marginal) rho1 = kernel.analytic_rho1(*marginal);
  if (rho1) {
    series.resize(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) series[i] = (*rho1)(sample[i]);
  } else {
    series = empirical_rho1(sample, kernel);
  }
  const bool monotone = kernel.monotonicity() == Monotonicity::monotone;
  return block_estimator(series, config, monotone);
}

// Half-width sqrt(l/n) A x of the asymptotic deviation band of B_n around
// E|S_0(l) - l mu| / sqrt(l), with sigma_f replaced by its estimate.
[[nodiscard]] inline double fluctuation_bound(const LongRunEstimate& est, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("fluctuation_bound: x must be > 0");
  if (est.n == 0) throw std::invalid_argument("fluctuation_bound: empty estimate");
  return std::sqrt(static_cast<double>(est.ell) / static_cast<double>(est.n)) *
         fluctuation_constant(est.monotone_variant, est.sigma_f_hat) * x;
}

// Probability bound paired with fluctuation_bound: 3 P(|N| > x) for the
// monotone case, 2 P(|N| > x) for the non-monotone extension.
[[nodiscard]] inline double fluctuation_probability(bool monotone, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("fluctuation_probability: x must be > 0");
  const double tail = 2.0 * (1.0 - detail::normal_cdf(x));
  return (monotone ? 3.0 : 2.0) * tail;
}

}  // namespace assocu
