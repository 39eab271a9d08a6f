#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <tuple>
#include <string>
#include <vector>

#include "assocu/assocgen.hpp"
#include "assocu/detail/numeric.hpp"
#include "assocu/detail/parallel.hpp"
#include "assocu/hoeffding.hpp"
#include "assocu/kernels.hpp"
#include "assocu/longrun.hpp"
#include "assocu/random.hpp"
#include "assocu/ustat.hpp"

namespace assocu {

// Kolmogorov-Smirnov distance between the empirical CDF of the sample and
// the standard normal CDF, evaluated on both sides of every jump.
[[nodiscard]] inline double ks_distance(std::span<const double> sample) {
  if (sample.empty()) throw std::invalid_argument("ks_distance: empty sample");
  if (!detail::all_finite(sample)) throw std::invalid_argument("ks_distance: non-finite sample value");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double r = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double phi = detail::normal_cdf(s[i]);
    d = std::max({d, static_cast<double>(i + 1) / r - phi, phi - static_cast<double>(i) / r});
  }
  return std::clamp(d, 0.0, 1.0);
}

// Oracle targets for a (process, kernel) pair: theta under the marginal and
// sigma_U from the Hoeffding module.
struct CltTargets {
  double theta = 0.0;
  AsymptoticVariance variance;
  MarginalModel marginal = MarginalModel::point_mass(0.0);
};

struct TargetOptions {
  std::size_t max_lag = 200;
  // Points used to represent the marginal when it has no closed form.
  std::size_t marginal_sample = 4000000;
  SeedSpec seed{0x7a3c, 0};
};

[[nodiscard]] inline CltTargets clt_targets(const AssocProcessSpec& process, const SymmetricKernel& kernel,
                                            const TargetOptions& opts = {}) {
  CltTargets t;
  if (auto m = process.marginal()) {
    t.marginal = *m;
  } else if (auto sk = gaussian_skeleton(process)) {
    // f applied to base quantiles at (i + 0.5) / M: a deterministic stand-in
    // for the marginal of f(G).
    const auto base = *sk->base.marginal();
    std::vector<double> q(opts.marginal_sample);
    const double m_total = static_cast<double>(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
      q[i] = sk->transform(base.quantile((static_cast<double>(i) + 0.5) / m_total));
    }
    t.marginal = MarginalModel::empirical(std::move(q));
  } else {
    t.marginal = MarginalModel::empirical(generate(process, opts.marginal_sample, opts.seed.child(1)));
  }
  DecomposeOptions dopts;
  dopts.seed = opts.seed.child(2);
  const auto d = decompose(kernel, t.marginal, dopts);
  t.theta = d->theta();
  AsymptoticVarianceOptions aopts;
  aopts.seed = opts.seed.child(3);
  const auto* dp = d.get();
  t.variance = asymptotic_variance([dp](double x) { return dp->rho1(x); }, process, opts.max_lag, aopts);
  return t;
}

struct ExperimentConfig {
  AssocProcessSpec process = AssocProcessSpec::iid(MarginalModel::gaussian(0.0, 1.0));
  std::string kernel_id = "variance";
  std::vector<std::size_t> n_grid{2000};
  std::size_t replications = 2000;
  SeedSpec seed{};
  BlockConfig block = BlockConfig::cube_root();
  // Replaces the oracle sigma_U (used to exercise the failure path).
  std::optional<double> sigma_u_override;
  // Standardize each replication by its own block estimate instead of the
  // oracle sigma_U.
  bool standardize_with_plugin = false;
  std::size_t max_lag = 200;
  unsigned threads = 0;

  void validate() const {
    if (replications < 2) throw std::invalid_argument("ExperimentConfig: replications must be >= 2");
    if (n_grid.empty()) throw std::invalid_argument("ExperimentConfig: n_grid is empty");
    for (std::size_t i = 1; i < n_grid.size(); ++i) {
      if (!(n_grid[i] > n_grid[i - 1])) throw std::invalid_argument("ExperimentConfig: n_grid must be strictly increasing");
    }
    process.validate();
    const auto k = make_kernel(kernel_id);
    if (n_grid.front() < static_cast<std::size_t>(k.degree()) + 1) {
      throw std::invalid_argument("ExperimentConfig: every n must exceed the kernel degree");
    }
  }
};

struct PerNResult {
  std::size_t n = 0;
  std::vector<double> u_values;
  std::vector<double> standardized;  // sqrt(n) (U_n - theta) / (k sigma_U)
  double ks = 0.0;
  double mean_standardized = 0.0;
  double var_u = 0.0;
  double n_var_u = 0.0;
  LongRunEstimate bn;  // plug-in estimate on replication 0
};

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  // exp of the intercept with the slope pinned to -1, i.e. the fitted
  // n Var(U_n) = 4 sigma_U^2 for degree 2 (k^2 sigma_U^2 in general).
  double implied_nvar = 0.0;
  double implied_sigma_u_sq = 0.0;
};

struct ExperimentResult {
  std::string kernel_id;
  int degree = 0;
  double theta = 0.0;
  double sigma_u = 0.0;
  std::string sigma_u_source;  // "oracle", "override" or "plugin"
  AsymptoticVariance variance;
  std::vector<PerNResult> per_n;
  std::optional<DecayFit> var_decay;
  std::optional<double> wiener_constant;
};

namespace detail {

struct Replication {
  double u = 0.0;
  double plugin_sigma = 0.0;
};

}  // namespace detail

[[nodiscard]] inline DecayFit variance_decay_fit(const ExperimentResult& r) {
  if (r.per_n.size() < 3) throw std::invalid_argument("variance_decay_fit: need at least three n values");
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& p : r.per_n) {
    if (!(p.var_u > 0.0)) throw std::domain_error("variance_decay_fit: zero variance of U_n");
    lx.push_back(std::log(static_cast<double>(p.n)));
    ly.push_back(std::log(p.var_u));
  }
  DecayFit fit;
  std::tie(fit.intercept, fit.slope) = detail::least_squares_line(lx, ly);
  double pinned = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) pinned += ly[i] + lx[i];
  fit.implied_nvar = std::exp(pinned / static_cast<double>(lx.size()));
  fit.implied_sigma_u_sq = fit.implied_nvar / static_cast<double>(r.degree * r.degree);
  return fit;
}

// For each n: R independent series, U_n per series, standardized statistics
// and their KS distance to N(0, 1).
[[nodiscard]] inline ExperimentResult run_clt_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const SymmetricKernel kernel = make_kernel(cfg.kernel_id);
  const int k = kernel.degree();

  ExperimentResult res;
  res.kernel_id = cfg.kernel_id;
  res.degree = k;
  TargetOptions topts;
  topts.max_lag = cfg.max_lag;
  topts.seed = cfg.seed.child(0xfeed);
  if (cfg.sigma_u_override) {
    if (!(*cfg.sigma_u_override > 0.0) || !std::isfinite(*cfg.sigma_u_override)) {
      throw std::domain_error("run_clt_experiment: sigma_U = " + std::to_string(*cfg.sigma_u_override) +
                              " must be > 0 for the CLT standardization");
    }
    const auto m = cfg.process.marginal();
    res.theta = m ? *kernel.analytic_theta(*m) : clt_targets(cfg.process, kernel, topts).theta;
    res.sigma_u = *cfg.sigma_u_override;
    res.sigma_u_source = "override";
  } else {
    const auto targets = clt_targets(cfg.process, kernel, topts);
    res.theta = targets.theta;
    res.variance = targets.variance;
    res.sigma_u = std::sqrt(targets.variance.sigmaU_sq);
    res.sigma_u_source = cfg.standardize_with_plugin ? "plugin" : "oracle";
  }

  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    const std::size_t n = cfg.n_grid[ni];
    const SeedSpec base = cfg.seed.child(ni);
    auto reps = detail::parallel_map(cfg.replications, cfg.threads, [&](std::size_t r) {
      const auto x = generate(cfg.process, n, base.child(r));
      detail::Replication out;
      out.u = u_statistic_auto(x, kernel).value;
      if (cfg.standardize_with_plugin) out.plugin_sigma = sigma_u_plugin(x, kernel, cfg.block).sigma_f_hat;
      return out;
    });
    PerNResult p;
    p.n = n;
    const double rootn = std::sqrt(static_cast<double>(n));
    for (const auto& rep : reps) {
      if (!std::isfinite(rep.u)) throw std::domain_error("run_clt_experiment: non-finite U_n in a replication");
      p.u_values.push_back(rep.u);
      const double s = cfg.standardize_with_plugin ? rep.plugin_sigma : res.sigma_u;
      if (!(s > 0.0)) throw std::domain_error("run_clt_experiment: zero plug-in sigma_U in a replication");
      p.standardized.push_back(rootn * (rep.u - res.theta) / (static_cast<double>(k) * s));
    }
    const auto mv = detail::mean_var(p.u_values);
    p.var_u = mv.var;
    p.n_var_u = static_cast<double>(n) * mv.var;
    p.mean_standardized = detail::mean_var(p.standardized).mean;
    p.ks = ks_distance(p.standardized);
    p.bn = sigma_u_plugin(generate(cfg.process, n, base.child(0)), kernel, cfg.block);
    res.per_n.push_back(std::move(p));
  }
  if (res.per_n.size() >= 3) res.var_decay = variance_decay_fit(res);
  return res;
}

[[nodiscard]] inline DecayFit variance_decay_fit(const ExperimentConfig& cfg) {
  if (cfg.n_grid.size() < 3) throw std::invalid_argument("variance_decay_fit: n_grid needs at least three points");
  return variance_decay_fit(run_clt_experiment(cfg));
}

// Standard Brownian motion sampled on a uniform grid of [0, horizon].
struct WienerPath {
  double grid_step = 0.0;
  std::vector<double> values;
};

[[nodiscard]] inline WienerPath simulate_wiener_path(double grid_step, double horizon, Engine& rng) {
  if (!(grid_step > 0.0) || !(horizon > 0.0)) throw std::invalid_argument("simulate_wiener_path: bad grid");
  const auto steps = static_cast<std::size_t>(std::llround(horizon / grid_step));
  WienerPath w{grid_step, std::vector<double>(steps + 1, 0.0)};
  std::normal_distribution<double> nd(0.0, 1.0);
  const double sd = std::sqrt(grid_step);
  for (std::size_t i = 0; i < steps; ++i) w.values[i + 1] = w.values[i] + sd * nd(rng);
  return w;
}

struct WienerConstantResult {
  double value = 0.0;           // trapezoid integral over t in [0, 1]
  double standard_error = 0.0;  // from batch-to-batch spread
  std::vector<double> covariance;  // Cov[|W(1)|, |W(1+t) - W(t)|] at t = i * grid_step
  std::size_t paths = 0;
  double grid_step = 0.0;
};

// Monte Carlo estimate of int_0^1 Cov[|W(1)|, |W(1+t) - W(t)|] dt, whose exact
// value is (3 pi - 8) / (4 pi).
[[nodiscard]] inline WienerConstantResult wiener_constant_mc(std::size_t paths, double grid_step, const SeedSpec& seed,
                                                             unsigned threads = 0) {
  if (paths < 10000) throw std::invalid_argument("wiener_constant_mc: need at least 10^4 paths");
  if (!(grid_step > 0.0 && grid_step <= 1e-3)) throw std::invalid_argument("wiener_constant_mc: grid_step must lie in (0, 1e-3]");
  const auto m = static_cast<std::size_t>(std::llround(1.0 / grid_step));
  if (std::abs(static_cast<double>(m) * grid_step - 1.0) > 1e-9) {
    throw std::invalid_argument("wiener_constant_mc: 1 / grid_step must be an integer");
  }
  constexpr std::size_t batches = 100;
  struct Sums {
    std::size_t count = 0;
    double a = 0.0;
    std::vector<double> b;
    std::vector<double> ab;
  };
  auto sums = detail::parallel_map(batches, threads, [&](std::size_t batch) {
    const std::size_t lo = paths * batch / batches;
    const std::size_t hi = paths * (batch + 1) / batches;
    Sums s;
    s.count = hi - lo;
    s.b.assign(m + 1, 0.0);
    s.ab.assign(m + 1, 0.0);
    Engine rng = make_engine(seed.child(batch));
    for (std::size_t p = lo; p < hi; ++p) {
      const auto w = simulate_wiener_path(grid_step, 2.0, rng);
      const double a = std::abs(w.values[m]);
      s.a += a;
      for (std::size_t i = 0; i <= m; ++i) {
        const double b = std::abs(w.values[m + i] - w.values[i]);
        s.b[i] += b;
        s.ab[i] += a * b;
      }
    }
    return s;
  });
  auto integrate = [&](std::size_t count, double a, const std::vector<double>& b, const std::vector<double>& ab,
                       std::vector<double>* curve) {
    const double nd = static_cast<double>(count);
    double integral = 0.0;
    for (std::size_t i = 0; i <= m; ++i) {
      const double cov = ab[i] / nd - (a / nd) * (b[i] / nd);
      if (curve) curve->push_back(cov);
      integral += (i == 0 || i == m) ? 0.5 * cov : cov;
    }
    return integral * grid_step;
  };
  WienerConstantResult res;
  res.paths = paths;
  res.grid_step = grid_step;
  Sums total;
  total.b.assign(m + 1, 0.0);
  total.ab.assign(m + 1, 0.0);
  std::vector<double> per_batch;
  for (const auto& s : sums) {
    total.count += s.count;
    total.a += s.a;
    for (std::size_t i = 0; i <= m; ++i) {
      total.b[i] += s.b[i];
      total.ab[i] += s.ab[i];
    }
    per_batch.push_back(integrate(s.count, s.a, s.b, s.ab, nullptr));
  }
  res.value = integrate(total.count, total.a, total.b, total.ab, &res.covariance);
  res.standard_error = std::sqrt(detail::mean_var(per_batch).var / static_cast<double>(batches));
  return res;
}

}  // namespace assocu
