#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "assocu/detail/numeric.hpp"
#include "assocu/harness.hpp"
#include "assocu/random.hpp"
#include "oracle_values.hpp"

using namespace assocu;

TEST(Ks, Examples) {
  const std::size_t r = 1000;
  std::vector<double> q(r);
  for (std::size_t i = 0; i < r; ++i) q[i] = detail::normal_quantile((static_cast<double>(i) + 0.5) / r);
  EXPECT_NEAR(ks_distance(q), 0.5 / r, 1e-12);
  EXPECT_NEAR(ks_distance(std::vector<double>(100, 0.0)), 0.5, 1e-15);
  Engine rng = make_engine({51, 0});
  std::normal_distribution<double> z;
  std::vector<double> s(100000);
  for (double& v : s) v = z(rng);
  EXPECT_LT(ks_distance(s), 0.006);
  EXPECT_THROW((void)ks_distance(std::vector<double>{}), std::invalid_argument);
}

TEST(Ks, OrderDoesNotMatter) {
  std::vector<double> a{0.3, -1.2, 2.0, 0.0, 0.7};
  const double d = ks_distance(a);
  std::reverse(a.begin(), a.end());
  EXPECT_EQ(ks_distance(a), d);
  EXPECT_GE(d, 0.0);
  EXPECT_LE(d, 1.0);
}

TEST(CltExperiment, VarianceKernelIid) {
  ExperimentConfig cfg;
  cfg.kernel_id = "variance";
  cfg.n_grid = {2000};
  cfg.replications = 2000;
  cfg.seed = {52, 0};
  const auto res = run_clt_experiment(cfg);
  ASSERT_EQ(res.per_n.size(), 1u);
  EXPECT_LT(res.per_n[0].ks, 0.05);
  EXPECT_NEAR(res.sigma_u * res.sigma_u, 0.5, 1e-12);
  EXPECT_EQ(res.sigma_u_source, "oracle");
  EXPECT_LE(std::abs(res.per_n[0].mean_standardized), 4.0 / std::sqrt(2000.0));
  for (double v : res.per_n[0].standardized) EXPECT_TRUE(std::isfinite(v));
}

TEST(CltExperiment, SquaredMeanAr1) {
  ExperimentConfig cfg;
  cfg.process = AssocProcessSpec::gaussian_ar1_stationary(0.3, 1.0, 1.0);
  cfg.kernel_id = "squared_mean";
  cfg.n_grid = {2000};
  cfg.replications = 2000;
  cfg.seed = {53, 0};
  const auto res = run_clt_experiment(cfg);
  EXPECT_LT(res.per_n[0].ks, 0.06);
  // sigma_U^2 = mu^2 gamma_0 (1 + phi) / (1 - phi)
  EXPECT_NEAR(res.sigma_u * res.sigma_u, 1.3 / 0.7, 1e-9);
  EXPECT_LE(std::abs(res.per_n[0].mean_standardized), 4.0 / std::sqrt(2000.0));
}

TEST(CltExperiment, NonMonotoneTransformPassesLikeIdentity) {
  // f(x) = ((x - mu)^2 + sigma^2) / 2 applied to an AR(1), squared-mean kernel
  const auto base = AssocProcessSpec::gaussian_ar1_stationary(0.3, 1.0, 1.0);
  const auto t = AssocProcessSpec::transformed(
      base, Transform{"variance_rho1", [](double x) { return ((x - 1.0) * (x - 1.0) + 1.0) / 2.0; },
                      Monotonicity::non_monotone});
  for (const auto& spec : {base, t}) {
    ExperimentConfig cfg;
    cfg.process = spec;
    cfg.kernel_id = "squared_mean";
    cfg.n_grid = {2000};
    cfg.replications = 2000;
    cfg.seed = {54, 0};
    const auto res = run_clt_experiment(cfg);
    EXPECT_LT(res.per_n[0].ks, 0.06) << spec.family_name();
    EXPECT_LE(std::abs(res.per_n[0].mean_standardized), 4.0 / std::sqrt(2000.0)) << spec.family_name();
  }
  // E f = 1 and f(X) has lag-j covariance phi^(2j) / 2, so
  // sigma_U^2 = 0.5 (1 + phi^2) / (1 - phi^2)
  const auto targets = clt_targets(t, builtin_squared_mean_kernel());
  EXPECT_EQ(targets.variance.method, "quadrature_transformed");
  EXPECT_NEAR(targets.variance.sigmaU_sq, oracle::var_sigma_u_sq_phi03, 1e-5);
  EXPECT_NEAR(targets.theta, 1.0, 1e-5);
}

TEST(CltExperiment, PluginStandardization) {
  ExperimentConfig cfg;
  cfg.process = AssocProcessSpec::gaussian_ar1_stationary(0.3);
  cfg.kernel_id = "variance";
  cfg.n_grid = {4000};
  cfg.replications = 500;
  cfg.seed = {55, 0};
  cfg.standardize_with_plugin = true;
  const auto res = run_clt_experiment(cfg);
  EXPECT_EQ(res.sigma_u_source, "plugin");
  EXPECT_LT(res.per_n[0].ks, 0.08);
}

TEST(CltExperiment, Rejections) {
  ExperimentConfig cfg;
  cfg.n_grid = {100};
  cfg.replications = 10;
  cfg.process = AssocProcessSpec::iid(MarginalModel::point_mass(1.0));
  EXPECT_THROW((void)run_clt_experiment(cfg), std::domain_error);
  cfg.process = AssocProcessSpec::iid(MarginalModel::gaussian(0.0, 1.0));
  cfg.sigma_u_override = 0.0;
  EXPECT_THROW((void)run_clt_experiment(cfg), std::domain_error);
  cfg.sigma_u_override.reset();
  cfg.replications = 1;
  EXPECT_THROW((void)run_clt_experiment(cfg), std::invalid_argument);
  cfg.replications = 10;
  cfg.n_grid = {200, 100};
  EXPECT_THROW((void)run_clt_experiment(cfg), std::invalid_argument);
  cfg.n_grid = {100};
  cfg.kernel_id = "kurtosis";
  EXPECT_THROW((void)run_clt_experiment(cfg), std::invalid_argument);
}

TEST(CltExperiment, ReproducibleAcrossThreadCounts) {
  ExperimentConfig cfg;
  cfg.process = AssocProcessSpec::positive_ma({1.0, 0.5});
  cfg.kernel_id = "variance";
  cfg.n_grid = {100, 200, 300};
  cfg.replications = 50;
  cfg.seed = {56, 1};
  cfg.threads = 1;
  const auto a = run_clt_experiment(cfg);
  cfg.threads = 4;
  const auto b = run_clt_experiment(cfg);
  for (std::size_t i = 0; i < a.per_n.size(); ++i) {
    EXPECT_EQ(a.per_n[i].u_values, b.per_n[i].u_values);
    EXPECT_EQ(a.per_n[i].ks, b.per_n[i].ks);
    EXPECT_EQ(a.per_n[i].bn.b_n, b.per_n[i].bn.b_n);
  }
  ASSERT_TRUE(a.var_decay.has_value());
  EXPECT_EQ(a.var_decay->slope, b.var_decay->slope);
}

TEST(VarianceDecay, IidVarianceKernel) {
  ExperimentConfig cfg;
  cfg.kernel_id = "variance";
  cfg.n_grid = {250, 500, 1000, 2000};
  cfg.replications = 2000;
  cfg.seed = {57, 0};
  const auto fit = variance_decay_fit(cfg);
  EXPECT_NEAR(fit.slope, -1.0, 0.1);
  EXPECT_NEAR(fit.implied_nvar, 2.0, 0.2);
  EXPECT_NEAR(fit.implied_sigma_u_sq, 0.5, 0.05);
}

TEST(VarianceDecay, Ar1VarianceKernel) {
  ExperimentConfig cfg;
  cfg.process = AssocProcessSpec::gaussian_ar1_stationary(0.5);
  cfg.kernel_id = "variance";
  cfg.n_grid = {250, 500, 1000, 2000};
  cfg.replications = 2000;
  cfg.seed = {58, 0};
  const auto fit = variance_decay_fit(cfg);
  EXPECT_NEAR(fit.implied_sigma_u_sq, oracle::var_sigma_u_sq_phi05, 0.1 * oracle::var_sigma_u_sq_phi05);
}

TEST(VarianceDecay, NeedsThreePoints) {
  ExperimentConfig cfg;
  cfg.n_grid = {100, 200};
  cfg.replications = 10;
  EXPECT_THROW((void)variance_decay_fit(cfg), std::invalid_argument);
}

TEST(Wiener, PathStructure) {
  Engine rng = make_engine({59, 0});
  const auto p = simulate_wiener_path(1e-3, 2.0, rng);
  EXPECT_EQ(p.values.front(), 0.0);
  EXPECT_EQ(p.values.size(), 2001u);
  EXPECT_EQ(p.grid_step, 1e-3);
}

TEST(Wiener, DisjointIncrementsUncorrelated) {
  Engine rng = make_engine({60, 0});
  const std::size_t paths = 20000;
  std::vector<double> a(paths);
  std::vector<double> b(paths);
  for (std::size_t i = 0; i < paths; ++i) {
    const auto p = simulate_wiener_path(1e-2, 2.0, rng);
    a[i] = p.values[100];
    b[i] = p.values[200] - p.values[100];
  }
  double c = 0.0;
  for (std::size_t i = 0; i < paths; ++i) c += a[i] * b[i];
  c /= static_cast<double>(paths);
  EXPECT_NEAR(c, 0.0, 4.0 / std::sqrt(static_cast<double>(paths)));
  EXPECT_NEAR(detail::mean_var(a).var, 1.0, 0.05);
}

TEST(Wiener, ConstantAndEndpoints) {
  const auto r = wiener_constant_mc(20000, 1e-3, {61, 0}, 0);
  EXPECT_NEAR(r.value, oracle::wiener_constant, 4.0 * r.standard_error + 0.002);
  EXPECT_NEAR(r.covariance.front(), oracle::folded_normal_var, 0.02);
  EXPECT_NEAR(r.covariance.back(), 0.0, 0.02);
  EXPECT_THROW((void)wiener_constant_mc(9999, 1e-3, {1, 0}, 0), std::invalid_argument);
  EXPECT_THROW((void)wiener_constant_mc(20000, 2e-3, {1, 0}, 0), std::invalid_argument);
}
