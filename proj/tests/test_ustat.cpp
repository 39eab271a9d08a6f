#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "assocu/kernels.hpp"
#include "assocu/random.hpp"
#include "assocu/ustat.hpp"
#include "oracle_values.hpp"

using namespace assocu;

TEST(UStatistic, EnumerationExamples) {
  const std::vector<double> x{1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(u_statistic(x, builtin_variance_kernel()).value, oracle::variance_123);
  EXPECT_DOUBLE_EQ(u_statistic(x, builtin_squared_mean_kernel()).value, oracle::squared_mean_123);
  EXPECT_DOUBLE_EQ(u_statistic(x, builtin_third_moment_kernel()).value, oracle::third_moment_123);
  const auto r = u_statistic(x, builtin_variance_kernel());
  EXPECT_EQ(r.n, 3u);
  EXPECT_EQ(r.kernel_id, "variance");
  EXPECT_EQ(r.method, UStatMethod::enumeration);
}

TEST(UStatistic, ConstantSample) {
  const std::vector<double> c(17, 4.25);
  EXPECT_EQ(u_statistic(c, builtin_variance_kernel()).value, 0.0);
  EXPECT_EQ(u_statistic(c, builtin_third_moment_kernel()).value, 0.0);
}

TEST(UStatistic, FastPathExamples) {
  EXPECT_DOUBLE_EQ(u_statistic_fast(std::vector<double>{1.0, 2.0, 3.0}, "variance").value, 1.0);
  EXPECT_EQ(u_statistic_fast(std::vector<double>{1.0, 2.0, 3.0}, "third_moment").value, 0.0);
  EXPECT_DOUBLE_EQ(u_statistic_fast(std::vector<double>{2.0, 2.0}, "squared_mean").value, 4.0);
  EXPECT_EQ(u_statistic_fast(std::vector<double>{2.0, 2.0}, "squared_mean").method, UStatMethod::fast_path);
}

TEST(UStatistic, Preconditions) {
  EXPECT_THROW((void)u_statistic(std::vector<double>{1.0}, builtin_variance_kernel()), std::invalid_argument);
  EXPECT_THROW((void)u_statistic(std::vector<double>{1.0, 2.0}, builtin_third_moment_kernel()),
               std::invalid_argument);
  EXPECT_THROW((void)u_statistic_fast(std::vector<double>{1.0, 2.0}, "third_moment"), std::invalid_argument);
  EXPECT_THROW((void)u_statistic_fast(std::vector<double>{1.0, 2.0}, "nope"), std::invalid_argument);
  const std::vector<double> bad{1.0, std::numeric_limits<double>::infinity(), 2.0};
  EXPECT_THROW((void)u_statistic(bad, builtin_variance_kernel()), std::domain_error);
}

TEST(UStatistic, NonFiniteKernelValueSignalled) {
  const SymmetricKernel log_ratio("log_product", 2,
                                  [](std::span<const double> a) { return std::log(a[0] * a[1]); },
                                  Monotonicity::unknown);
  EXPECT_THROW((void)u_statistic(std::vector<double>{0.0, 1.0, 2.0}, log_ratio), std::domain_error);
}

TEST(UStatistic, FastPathMatchesEnumeration) {
  Engine rng = make_engine({5, 1});
  std::normal_distribution<double> mean(0.0, 2.0);
  std::uniform_real_distribution<double> sd(0.1, 3.0);
  for (const auto& id : builtin_kernel_ids) {
    const auto k = make_kernel(id);
    std::uniform_int_distribution<std::size_t> size(static_cast<std::size_t>(k.degree()), 200);
    for (int rep = 0; rep < 200; ++rep) {
      const double m = mean(rng);
      const double s = sd(rng);
      std::normal_distribution<double> z(m, s);
      std::vector<double> x(size(rng));
      for (double& v : x) v = z(rng);
      const double e = u_statistic(x, k).value;
      const double f = u_statistic_fast(x, id).value;
      EXPECT_LE(std::abs(f - e), 1e-10 * std::max(std::abs(e), 1e-300)) << id << " n=" << x.size();
    }
  }
}

TEST(UStatistic, FastPathAgreesUpToN500) {
  Engine rng = make_engine({5, 2});
  std::normal_distribution<double> z(1.0, 1.0);
  std::vector<double> x(500);
  for (double& v : x) v = z(rng);
  for (const auto& id : {"variance", "squared_mean"}) {
    const double e = u_statistic(x, make_kernel(id)).value;
    EXPECT_LE(std::abs(u_statistic_fast(x, id).value - e), 1e-10 * std::abs(e));
  }
}

TEST(UStatistic, PermutationInvarianceIsExact) {
  Engine rng = make_engine({6, 0});
  std::normal_distribution<double> z(0.5, 2.0);
  for (const auto& id : builtin_kernel_ids) {
    const auto k = make_kernel(id);
    std::vector<double> x(60);
    for (double& v : x) v = z(rng);
    const double e = u_statistic(x, k).value;
    const double f = u_statistic_fast(x, id).value;
    for (int rep = 0; rep < 20; ++rep) {
      std::shuffle(x.begin(), x.end(), rng);
      EXPECT_EQ(u_statistic(x, k).value, e);
      EXPECT_EQ(u_statistic_fast(x, id).value, f);
    }
  }
}

TEST(UStatistic, VarianceShiftLaw) {
  Engine rng = make_engine({7, 0});
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> x(100);
  for (double& v : x) v = z(rng);
  const auto k = builtin_variance_kernel();
  const double base = u_statistic(x, k).value;
  for (double c : {-5.0, 0.5, 100.0}) {
    auto y = x;
    for (double& v : y) v += c;
    EXPECT_NEAR(u_statistic(y, k).value, base, 1e-10 * base);
    EXPECT_NEAR(u_statistic_fast(y, "variance").value, base, 1e-10 * base);
  }
}

TEST(UStatistic, SubsetEnumeration) {
  std::vector<std::vector<std::size_t>> seen;
  for_each_subset(5, 3, [&](std::span<const std::size_t> idx) { seen.emplace_back(idx.begin(), idx.end()); });
  ASSERT_EQ(seen.size(), 10u);
  EXPECT_EQ(seen.front(), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(seen.back(), (std::vector<std::size_t>{2, 3, 4}));
  EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
  EXPECT_EQ(binomial(200, 3), 1313400.0);
}

TEST(UStatistic, AutoDispatch) {
  const std::vector<double> x{1.0, 2.0, 4.0, 8.0};
  EXPECT_EQ(u_statistic_auto(x, builtin_variance_kernel()).method, UStatMethod::fast_path);
  const SymmetricKernel custom("abs_diff", 2, [](std::span<const double> a) { return std::abs(a[0] - a[1]); },
                               Monotonicity::unknown);
  EXPECT_FALSE(has_fast_path("abs_diff"));
  const auto r = u_statistic_auto(x, custom);
  EXPECT_EQ(r.method, UStatMethod::enumeration);
  EXPECT_DOUBLE_EQ(r.value, (1.0 + 3.0 + 7.0 + 2.0 + 6.0 + 4.0) / 6.0);
}
