#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <tuple>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "assocu/assocgen.hpp"
#include "assocu/detail/numeric.hpp"
#include "assocu/kernels.hpp"
#include "assocu/marginal.hpp"
#include "assocu/random.hpp"
#include "assocu/ustat.hpp"

namespace assocu {

struct DecomposeOptions {
  // Draws used for projections when the kernel has no analytic forms.
  std::size_t mc_draws = 100000;
  SeedSpec seed{};
  // Upper limit on the Monte Carlo standard error of theta.
  double max_theta_se = std::numeric_limits<double>::infinity();
};

inline constexpr std::size_t min_projection_draws = 10000;

// H-decomposition of a symmetric kernel of degree k <= 3 under a marginal.
// Projections rho_c are analytic when the kernel supplies them; otherwise they
// are Monte Carlo averages over a fixed bank of draws, so every rho_c is a
// deterministic function and the reconstruction identity holds exactly.
class HoeffdingDecomposition {
 public:
  HoeffdingDecomposition(SymmetricKernel kernel, MarginalModel marginal, const DecomposeOptions& opts)
      : kernel_(std::move(kernel)), marginal_(std::move(marginal)) {
    const int k = kernel_.degree();
    if (k < 1 || k > 3) throw std::invalid_argument("decompose: kernel degree must be 1, 2 or 3");
    const auto theta = kernel_.analytic_theta(marginal_);
    const auto rho1 = kernel_.analytic_rho1(marginal_);
    const auto rho2 = kernel_.analytic_rho2(marginal_);
    analytic_ = theta && (k == 1 || rho1) && (k < 3 || rho2);
    if (analytic_) {
      theta_ = *theta;
      if (k >= 2) rho1_ = *rho1;
      if (k == 3) rho2_ = *rho2;
      return;
    }
    if (opts.mc_draws < min_projection_draws) {
      throw std::invalid_argument("decompose: Monte Carlo projections need at least 10^4 draws");
    }
    auto bank = std::make_shared<std::vector<double>>(opts.mc_draws * static_cast<std::size_t>(k));
    Engine rng = make_engine(opts.seed);
    for (double& v : *bank) v = marginal_.draw(rng);
    bank_ = bank;
    draws_ = opts.mc_draws;

    std::vector<double> vals(draws_);
    for (std::size_t i = 0; i < draws_; ++i) vals[i] = kernel_(row(i));
    const auto mv = detail::mean_var(vals);
    theta_ = mv.mean;
    theta_se_ = std::sqrt(mv.var / static_cast<double>(draws_));
    if (theta_se_ > opts.max_theta_se) {
      throw std::runtime_error("decompose: Monte Carlo standard error of theta (" + std::to_string(theta_se_) +
                               ") exceeds tolerance " + std::to_string(opts.max_theta_se));
    }
    if (k >= 2) {
      rho1_ = [this](double x) { return mc_projection({&x, 1}); };
    }
    if (k == 3) {
      rho2_ = [this](double x, double y) {
        const double a[2] = {x, y};
        return mc_projection(a);
      };
    }
  }

  HoeffdingDecomposition(const HoeffdingDecomposition&) = delete;
  HoeffdingDecomposition& operator=(const HoeffdingDecomposition&) = delete;
  HoeffdingDecomposition(HoeffdingDecomposition&&) = delete;

  [[nodiscard]] const SymmetricKernel& kernel() const noexcept { return kernel_; }
  [[nodiscard]] const MarginalModel& marginal() const noexcept { return marginal_; }
  [[nodiscard]] int degree() const noexcept { return kernel_.degree(); }
  [[nodiscard]] double theta() const noexcept { return theta_; }
  // Zero for analytic projections.
  [[nodiscard]] double theta_se() const noexcept { return theta_se_; }
  [[nodiscard]] bool analytic() const noexcept { return analytic_; }
  [[nodiscard]] std::size_t mc_draws() const noexcept { return draws_; }

  // rho_c(x_1, ..., x_c); rho_k is the kernel itself.
  [[nodiscard]] double rho(std::span<const double> args) const {
    const auto c = static_cast<int>(args.size());
    if (c < 1 || c > degree()) throw std::invalid_argument("HoeffdingDecomposition::rho: bad argument count");
    if (c == degree()) return kernel_(args);
    if (c == 1) return rho1_(args[0]);
    return rho2_(args[0], args[1]);
  }

  [[nodiscard]] double rho1(double x) const { return degree() == 1 ? kernel_({&x, 1}) : rho1_(x); }

  // h^(c)(x_1, ..., x_c) = rho_c - sum over proper nonempty subsets of lower
  // components - theta.
  [[nodiscard]] double h(std::span<const double> args) const {
    const std::size_t c = args.size();
    double v = rho(args) - theta_;
    if (c == 1) return v;
    std::vector<double> sub;
    for (std::size_t j = 1; j < c; ++j) {
      for_each_subset(c, j, [&](std::span<const std::size_t> idx) {
        sub.resize(j);
        for (std::size_t i = 0; i < j; ++i) sub[i] = args[idx[i]];
        v -= h(sub);
      });
    }
    return v;
  }

  // The component h^(c) as a standalone function.
  [[nodiscard]] KernelFunction component(int c) const {
    if (c < 1 || c > degree()) throw std::invalid_argument("HoeffdingDecomposition::component: c out of range");
    return [this, c](std::span<const double> args) {
      if (static_cast<int>(args.size()) != c) throw std::invalid_argument("component: wrong argument count");
      return h(args);
    };
  }

 private:
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    const auto k = static_cast<std::size_t>(degree());
    return {bank_->data() + i * k, k};
  }

  [[nodiscard]] double mc_projection(std::span<const double> fixed) const {
    const auto k = static_cast<std::size_t>(degree());
    std::vector<double> args(k);
    std::copy(fixed.begin(), fixed.end(), args.begin());
    detail::CompensatedSum s;
    for (std::size_t i = 0; i < draws_; ++i) {
      const auto r = row(i);
      for (std::size_t c = fixed.size(); c < k; ++c) args[c] = r[c];
      s.add(kernel_(args));
    }
    return s.value() / static_cast<double>(draws_);
  }

  SymmetricKernel kernel_;
  MarginalModel marginal_;
  double theta_ = 0.0;
  double theta_se_ = 0.0;
  bool analytic_ = false;
  std::size_t draws_ = 0;
  RealFunction rho1_;
  std::function<double(double, double)> rho2_;
  std::shared_ptr<const std::vector<double>> bank_;
};

[[nodiscard]] inline std::unique_ptr<HoeffdingDecomposition> decompose(const SymmetricKernel& kernel,
                                                                       const MarginalModel& marginal,
                                                                       const DecomposeOptions& opts = {}) {
  return std::make_unique<HoeffdingDecomposition>(kernel, marginal, opts);
}

// H_n^(1), ..., H_n^(jmax): U-statistics of the components over the sample.
// Lower-order projections are cached per sample point and per pair.
[[nodiscard]] inline std::vector<double> empirical_components(const HoeffdingDecomposition& d,
                                                              std::span<const double> sample, int jmax) {
  const int k = d.degree();
  if (jmax < 1 || jmax > k) throw std::invalid_argument("empirical_component: j must satisfy 1 <= j <= k");
  const std::size_t n = sample.size();
  if (n < static_cast<std::size_t>(jmax)) throw std::invalid_argument("empirical_component: sample size n < j");
  const double theta = d.theta();
  std::vector<double> out;

  std::vector<double> h1(n);
  for (std::size_t i = 0; i < n; ++i) h1[i] = d.rho1(sample[i]) - theta;
  detail::CompensatedSum s1;
  for (double v : h1) s1.add(v);
  out.push_back(s1.value() / static_cast<double>(n));
  if (jmax == 1) return out;

  // h2[i * n + l] for i < l
  std::vector<double> h2(n * n, 0.0);
  detail::CompensatedSum s2;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = i + 1; l < n; ++l) {
      const double a[2] = {sample[i], sample[l]};
      const double v = d.rho(a) - h1[i] - h1[l] - theta;
      h2[i * n + l] = v;
      s2.add(v);
    }
  }
  out.push_back(s2.value() / binomial(n, 2));
  if (jmax == 2) return out;

  detail::CompensatedSum s3;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = i + 1; l < n; ++l) {
      for (std::size_t m = l + 1; m < n; ++m) {
        const double a[3] = {sample[i], sample[l], sample[m]};
        s3.add(d.rho(a) - h2[i * n + l] - h2[i * n + m] - h2[l * n + m] - h1[i] - h1[l] - h1[m] - theta);
      }
    }
  }
  out.push_back(s3.value() / binomial(n, 3));
  return out;
}

[[nodiscard]] inline double empirical_component(const HoeffdingDecomposition& d, std::span<const double> sample,
                                                int j) {
  return empirical_components(d, sample, j).back();
}

// |U_n - theta - sum_j C(k, j) H_n^(j)|
[[nodiscard]] inline double reconstruction_check(const HoeffdingDecomposition& d, std::span<const double> sample) {
  const int k = d.degree();
  const double un = u_statistic(sample, d.kernel()).value;
  const auto hs = empirical_components(d, sample, k);
  double rhs = d.theta();
  for (int j = 1; j <= k; ++j) {
    rhs += binomial(static_cast<std::size_t>(k), static_cast<std::size_t>(j)) * hs[static_cast<std::size_t>(j - 1)];
  }
  return std::abs(un - rhs);
}

// sigma_U^2 = sigma_1^2 + 2 sum_{j >= 1} Cov(rho_1(X_1), rho_1(X_{1+j})), the
// covariances indexed by lag j.
struct AsymptoticVariance {
  double sigma1_sq = 0.0;
  std::vector<double> sigma1j_sq;  // lags 1..truncation_lag
  double sigmaU_sq = 0.0;
  std::size_t truncation_lag = 0;
  // Geometric extrapolation of sum_{j > truncation_lag} sigma1j_sq, included
  // (doubled) in sigmaU_sq.
  double tail_bound = 0.0;
  double decay_rate = 0.0;
  std::string method;  // "quadrature" or "simulation"
};

struct AsymptoticVarianceOptions {
  std::size_t quadrature_nodes = 48;
  std::size_t simulation_length = 1000000;
  SeedSpec seed{};
  bool force_simulation = false;
};

namespace detail {

// Geometric tail sum_{j > L} c_j from the last (up to 10) lags above the
// noise floor. Zero when the covariances reach the floor before lag L.
inline std::pair<double, double> geometric_tail(std::span<const double> c, double noise_floor) {
  const std::size_t lags = c.size();
  if (lags < 2) return {0.0, 0.0};
  for (std::size_t j = 0; j < lags; ++j) {
    if (!(std::abs(c[j]) > noise_floor)) return {0.0, 0.0};
  }
  const std::size_t first = lags > 10 ? lags - 10 : 0;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t j = first; j < lags; ++j) {
    if (c[j] <= 0.0) return {0.0, 0.0};
    xs.push_back(static_cast<double>(j + 1));
    ys.push_back(std::log(c[j]));
  }
  const auto [a, b] = least_squares_line(xs, ys);
  const double r = std::exp(b);
  if (!(r < 1.0)) return {std::numeric_limits<double>::infinity(), r};
  return {c.back() * r / (1.0 - r), r};
}

}  // namespace detail

// Long-run variance of rho_1(X_j) over the process, truncated at max_lag.
// Processes that are pointwise maps of a jointly Gaussian base use bivariate
// Gauss-Hermite quadrature over the base (exact for polynomial rho_1 of the
// base); other processes use one long simulated path.
[[nodiscard]] inline AsymptoticVariance asymptotic_variance(const RealFunction& rho1, const AssocProcessSpec& process,
                                                            std::size_t max_lag = 200,
                                                            const AsymptoticVarianceOptions& opts = {}) {
  if (max_lag < 1) throw std::invalid_argument("asymptotic_variance: max_lag must be >= 1");
  AsymptoticVariance av;
  av.truncation_lag = max_lag;
  av.sigma1j_sq.assign(max_lag, 0.0);
  double noise_floor = 0.0;

  const auto skeleton = opts.force_simulation ? std::nullopt : gaussian_skeleton(process);
  if (skeleton) {
    av.method = process.jointly_gaussian() ? "quadrature" : "quadrature_transformed";
    const auto& base = skeleton->base;
    const auto& f = skeleton->transform;
    const auto marg = *base.marginal();
    const double gamma0 = *base.autocov(0);
    const double sd = std::sqrt(gamma0);
    const auto rule = detail::gauss_hermite(opts.quadrature_nodes);
    const std::size_t m = rule.nodes.size();
    std::vector<double> z(m);
    std::vector<double> w(m);
    double wsum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      z[i] = std::numbers::sqrt2 * rule.nodes[i];
      wsum += rule.weights[i];
    }
    for (std::size_t i = 0; i < m; ++i) w[i] = rule.weights[i] / wsum;
    std::vector<double> g(m);
    double gbar = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      g[i] = rho1(f(marg.mean() + sd * z[i]));
      gbar += w[i] * g[i];
    }
    for (std::size_t i = 0; i < m; ++i) av.sigma1_sq += w[i] * (g[i] - gbar) * (g[i] - gbar);
    if (gamma0 > 0.0) {
      for (std::size_t j = 1; j <= max_lag; ++j) {
        const double r = *base.autocov(j) / gamma0;
        if (r == 0.0) continue;
        const double s = std::sqrt(std::max(0.0, 1.0 - r * r));
        double cov = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          double inner = 0.0;
          for (std::size_t l = 0; l < m; ++l) {
            inner += w[l] * (rho1(f(marg.mean() + sd * (r * z[i] + s * z[l]))) - gbar);
          }
          cov += w[i] * (g[i] - gbar) * inner;
        }
        av.sigma1j_sq[j - 1] = cov;
      }
    }
    noise_floor = 1e-12 * av.sigma1_sq;
  } else {
    av.method = "simulation";
    const auto path = generate(process, opts.simulation_length, opts.seed);
    std::vector<double> g(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) g[i] = rho1(path[i]);
    const auto acov = sample_autocovariance(g, max_lag);
    av.sigma1_sq = acov[0];
    for (std::size_t j = 1; j <= max_lag; ++j) av.sigma1j_sq[j - 1] = acov[j];
    noise_floor = 3.0 * av.sigma1_sq / std::sqrt(static_cast<double>(path.size()));
  }

  detail::CompensatedSum s;
  for (double c : av.sigma1j_sq) s.add(c);
  std::tie(av.tail_bound, av.decay_rate) = detail::geometric_tail(av.sigma1j_sq, noise_floor);
  av.sigmaU_sq = av.sigma1_sq + 2.0 * s.value() + 2.0 * av.tail_bound;
  if (!(av.sigmaU_sq > 0.0) || !std::isfinite(av.sigmaU_sq)) {
    throw std::domain_error("asymptotic_variance: sigma_U^2 = " + std::to_string(av.sigmaU_sq) +
                            " is not positive and finite; the CLT normalization requires sigma_U^2 > 0");
  }
  return av;
}

}  // namespace assocu
