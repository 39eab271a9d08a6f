#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "assocu/kernels.hpp"
#include "assocu/marginal.hpp"
#include "assocu/random.hpp"
#include "oracle_values.hpp"

using namespace assocu;

namespace {

double eval(const SymmetricKernel& k, std::initializer_list<double> args) {
  std::vector<double> v(args);
  return k(v);
}

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> g;
  for (int i = 0; lo + i * step <= hi + 1e-12; ++i) g.push_back(lo + i * step);
  return g;
}

// Monte Carlo E rho(x, X_2, ..., X_k): mean and standard error.
std::pair<double, double> mc_rho1(const SymmetricKernel& k, const MarginalModel& f, double x, std::size_t draws,
                                  std::uint64_t seed) {
  Engine rng = make_engine({seed, 0});
  std::vector<double> vals(draws);
  std::vector<double> args(static_cast<std::size_t>(k.degree()));
  for (auto& v : vals) {
    args[0] = x;
    for (std::size_t i = 1; i < args.size(); ++i) args[i] = f.draw(rng);
    v = k(args);
  }
  double m = 0.0;
  for (double v : vals) m += v;
  m /= static_cast<double>(draws);
  double ss = 0.0;
  for (double v : vals) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / static_cast<double>(draws - 1) / static_cast<double>(draws))};
}

}  // namespace

TEST(VarianceKernel, Values) {
  const auto k = builtin_variance_kernel();
  EXPECT_EQ(k.degree(), 2);
  EXPECT_DOUBLE_EQ(eval(k, {1.0, 3.0}), 2.0);
  for (double c : {-3.5, 0.0, 1e6}) EXPECT_EQ(eval(k, {c, c}), 0.0);
  EXPECT_EQ(k.monotonicity(), Monotonicity::non_monotone);
}

TEST(VarianceKernel, AnalyticProjections) {
  const auto k = builtin_variance_kernel();
  const auto f = MarginalModel::gaussian(0.0, 1.0);
  EXPECT_DOUBLE_EQ((*k.analytic_rho1(f))(2.0), 2.5);
  EXPECT_DOUBLE_EQ(*k.analytic_theta(f), 1.0);
  EXPECT_NEAR((*k.analytic_rho1(f))(2.0), oracle::var_rho1_at_2_n01, 4.0 * oracle::var_rho1_at_2_n01_se);
}

TEST(SquaredMeanKernel, Values) {
  const auto k = builtin_squared_mean_kernel();
  EXPECT_DOUBLE_EQ(eval(k, {2.0, 3.0}), 6.0);
  EXPECT_EQ(*k.analytic_theta(MarginalModel::gaussian(0.0, 2.0)), 0.0);
  const auto f = MarginalModel::gaussian(1.0, 1.0);
  EXPECT_DOUBLE_EQ((*k.analytic_rho1(f))(3.0), 3.0);
  EXPECT_NEAR(3.0, oracle::sqm_rho1_at_3_n11, 4.0 * oracle::sqm_rho1_at_3_n11_se);
  EXPECT_EQ(k.monotonicity(), Monotonicity::monotone);
}

TEST(ThirdMomentKernel, Values) {
  const auto k = builtin_third_moment_kernel();
  EXPECT_EQ(k.degree(), 3);
  for (double c : {-2.0, 0.0, 7.25}) EXPECT_EQ(eval(k, {c, c, c}), 0.0);
  const auto f = MarginalModel::gaussian(0.0, 1.0);
  EXPECT_EQ(*k.analytic_theta(f), 0.0);
  EXPECT_NEAR((*k.analytic_rho1(f))(1.0), -2.0 / 3.0, 1e-15);
  EXPECT_NEAR(-2.0 / 3.0, oracle::third_rho1_at_1_n01, 4.0 * oracle::third_rho1_at_1_n01_se);
}

TEST(ThirdMomentKernel, ThetaIsThirdCentralMomentUnderShift) {
  const auto k = builtin_third_moment_kernel();
  const auto f = MarginalModel::uniform(1.0, 4.0);
  EXPECT_NEAR(*k.analytic_theta(f), f.mu3(), 1e-15);
  // shift invariance of the kernel itself
  EXPECT_NEAR(eval(k, {0.3, 1.7, -2.0}), eval(k, {10.3, 11.7, 8.0}), 1e-12);
}

TEST(Kernels, ExactSymmetryUnderPermutation) {
  Engine rng = make_engine({11, 0});
  std::normal_distribution<double> z(0.0, 3.0);
  for (const auto& id : builtin_kernel_ids) {
    const auto k = make_kernel(id);
    for (int rep = 0; rep < 500; ++rep) {
      std::vector<double> a(static_cast<std::size_t>(k.degree()));
      for (double& v : a) v = z(rng);
      const double ref = k(a);
      std::sort(a.begin(), a.end());
      do {
        EXPECT_EQ(k(a), ref) << id;
      } while (std::next_permutation(a.begin(), a.end()));
    }
  }
}

TEST(Kernels, MonteCarloProjectionMatchesAnalyticRho1) {
  const std::array<MarginalModel, 2> marginals{MarginalModel::gaussian(0.7, 2.0), MarginalModel::uniform(-1.0, 2.0)};
  for (const auto& id : builtin_kernel_ids) {
    const auto k = make_kernel(id);
    for (const auto& f : marginals) {
      const auto rho1 = *k.analytic_rho1(f);
      for (int g = 0; g < 20; ++g) {
        const double x = f.quantile((g + 0.5) / 20.0);
        const auto [m, se] = mc_rho1(k, f, x, 100000, 100 + static_cast<std::uint64_t>(g));
        EXPECT_LE(std::abs(m - rho1(x)), 4.0 * se + 1e-12) << id << " " << f.name() << " x=" << x;
      }
    }
  }
}

TEST(Kernels, UnknownIdRejected) {
  EXPECT_THROW((void)make_kernel("kurtosis"), std::invalid_argument);
  for (const auto& id : builtin_kernel_ids) EXPECT_EQ(make_kernel(id).id(), id);
}

TEST(Domination, GridExamples) {
  const auto g = grid(-10.0, 10.0, 0.01);
  EXPECT_TRUE(check_domination({[](double x) { return std::sin(x); }, [](double x) { return x; }}, g));
  EXPECT_FALSE(check_domination({[](double x) { return x * x; }, [](double x) { return x; }}, grid(0.0, 10.0, 0.01)));
  EXPECT_TRUE(check_domination(identity_domination([](double x) { return x; }), g));
  EXPECT_TRUE(check_domination(identity_domination([](double x) { return x; }), std::vector<double>{-1.0, 5.0}));
}

TEST(Domination, GridPreconditions) {
  const DominationPair p = identity_domination([](double x) { return x; });
  EXPECT_THROW((void)check_domination(p, std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW((void)check_domination(p, std::vector<double>{1.0, 1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW((void)check_domination(p, std::vector<double>{2.0, 1.0}), std::invalid_argument);
}

TEST(Domination, AcceptedPairsSatisfyIncrementBound) {
  const auto g = grid(-3.0, 3.0, 0.05);
  const DominationPair p{[](double x) { return std::cos(2.0 * x); }, [](double x) { return 2.0 * x; }};
  ASSERT_TRUE(check_domination(p, g));
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = i + 1; j < g.size(); ++j) {
      EXPECT_LE(std::abs(p.f(g[j]) - p.f(g[i])), p.f_tilde(g[j]) - p.f_tilde(g[i]) + 1e-12);
    }
  }
}

TEST(Domination, BoundedVariationConstruction) {
  const auto g = grid(-5.0, 5.0, 0.01);
  const auto id = bv_domination([](double x) { return x; }, [](double) { return 0.0; }, g);
  EXPECT_EQ(id.provenance, DominationProvenance::bounded_variation_construction);
  EXPECT_EQ(id.f(1.5), 1.5);
  EXPECT_EQ(id.f_tilde(1.5), 1.5);

  const auto neg = bv_domination([](double) { return 0.0; }, [](double x) { return x; }, g);
  EXPECT_EQ(neg.f(2.0), -2.0);
  EXPECT_EQ(neg.f_tilde(2.0), 2.0);
  EXPECT_TRUE(check_domination(neg, g));

  EXPECT_THROW((void)bv_domination([](double x) { return -x; }, [](double) { return 0.0; }, g),
               std::invalid_argument);
}

TEST(Domination, VarianceRho1JordanPartsGiveTheKernelDominator) {
  // rho_1(x) = (x^2 + 1) / 2 under N(0,1), split into
  // U1 = (x^2 1{x >= 0} + 1) / 2 and U2 = -x^2 1{x < 0} / 2, both
  // nondecreasing, with rho_1 = U1 - U2.
  const auto f = MarginalModel::gaussian(0.0, 1.0);
  const auto g = default_domination_grid(f);
  const auto pair = bv_domination([](double x) { return (x >= 0.0 ? x * x : 0.0) / 2.0 + 0.5; },
                                  [](double x) { return x < 0.0 ? -x * x / 2.0 : 0.0; }, g);
  const auto k = builtin_variance_kernel();
  const auto rho1 = *k.analytic_rho1(f);
  const auto dom = *k.rho1_dominator(f);
  EXPECT_TRUE(check_domination(pair, g));
  for (double x : g) {
    EXPECT_NEAR(pair.f(x), rho1(x), 1e-12);
    // the dominator may differ from U1 + U2 by a constant only
    EXPECT_NEAR(pair.f_tilde(x) - dom(x), pair.f_tilde(g[0]) - dom(g[0]), 1e-12);
  }
}

TEST(Domination, BuiltinDominatorsCertifyOnDefaultGrid) {
  for (const auto& f : {MarginalModel::gaussian(0.0, 1.0), MarginalModel::gaussian(2.0, 0.5),
                        MarginalModel::gaussian(-1.0, 3.0), MarginalModel::uniform(-2.0, 1.0)}) {
    const auto g = default_domination_grid(f);
    ASSERT_EQ(g.size(), 2001u);
    EXPECT_NEAR(g.front(), f.quantile(1e-4), 1e-12);
    EXPECT_NEAR(g.back(), f.quantile(0.9999), 1e-12);
    for (const auto& id : builtin_kernel_ids) {
      const auto k = make_kernel(id);
      EXPECT_TRUE(check_domination({*k.analytic_rho1(f), *k.rho1_dominator(f)}, g)) << id << " " << f.name();
    }
  }
}

TEST(Marginal, MomentsAndEmpiricalModel) {
  const auto g = MarginalModel::gaussian(1.0, 4.0);
  EXPECT_EQ(g.mean(), 1.0);
  EXPECT_EQ(g.mu2(), 4.0);
  EXPECT_EQ(g.mu3(), 0.0);
  EXPECT_EQ(g.mu4(), 48.0);
  const auto u = MarginalModel::uniform(0.0, 1.0);
  EXPECT_NEAR(u.mu2(), 1.0 / 12.0, 1e-15);
  EXPECT_NEAR(u.mu4(), 1.0 / 80.0, 1e-15);
  EXPECT_GE(u.mu4(), u.mu2() * u.mu2());

  const std::vector<double> s{1.0, 2.0, 4.0, 7.0};
  const auto e = MarginalModel::empirical(s);
  EXPECT_DOUBLE_EQ(e.mean(), 3.5);
  double m2 = 0.0;
  double m3 = 0.0;
  for (double v : s) {
    m2 += (v - 3.5) * (v - 3.5);
    m3 += (v - 3.5) * (v - 3.5) * (v - 3.5);
  }
  EXPECT_DOUBLE_EQ(e.mu2(), m2 / 4.0);
  EXPECT_DOUBLE_EQ(e.mu3(), m3 / 4.0);
  EXPECT_TRUE(MarginalModel::point_mass(2.0).degenerate());
}
