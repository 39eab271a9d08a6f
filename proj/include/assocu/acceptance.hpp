#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "assocu/assocgen.hpp"
#include "assocu/harness.hpp"
#include "assocu/hoeffding.hpp"
#include "assocu/kernels.hpp"
#include "assocu/longrun.hpp"
#include "assocu/random.hpp"
#include "assocu/ustat.hpp"

// Acceptance criteria: each check runs at the sizes and tolerances pinned
// below and reports a measured value against its target.
namespace assocu::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  SeedSpec seed{20261016, 0};
  unsigned threads = 0;
  // Replaces R = 2000 in the variance and CLT criteria.
  std::optional<std::size_t> replications;
  // Forces sigma_U in the CLT criteria.
  std::optional<double> sigma_u_override;
  std::set<int> only;  // empty = all
};

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::vector<MarginalModel> random_gaussians(Engine& rng, std::size_t count) {
  std::uniform_real_distribution<double> mean(-1.0, 1.0);
  std::uniform_real_distribution<double> sd(0.5, 2.0);
  std::vector<MarginalModel> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double s = sd(rng);
    out.push_back(MarginalModel::gaussian(mean(rng), s * s));
  }
  return out;
}

inline double isserlis_sigma_u_sq(double phi) { return 0.5 * (1.0 + phi * phi) / (1.0 - phi * phi); }

}  // namespace detail

// 1. |U_n - theta - sum_j C(k,j) H_n^(j)| <= 1e-10 for the built-in kernels.
inline CriterionResult decomposition_identity(const Options& o) {
  CriterionResult r{1, "H-decomposition identity", false, 0.0, 0.0, 1e-10, "", 0.0};
  Engine rng = make_engine(o.seed.child(1));
  double worst = 0.0;
  for (const auto& id : builtin_kernel_ids) {
    const auto kernel = make_kernel(id);
    const auto k = static_cast<std::size_t>(kernel.degree());
    std::uniform_int_distribution<std::size_t> size(k, 200);
    const auto marginals = detail::random_gaussians(rng, 100);
    for (const auto& f : marginals) {
      std::vector<double> x(size(rng));
      for (double& v : x) v = f.draw(rng);
      const auto d = decompose(kernel, f);
      worst = std::max(worst, reconstruction_check(*d, x));
    }
  }
  r.measured = worst;
  r.passed = worst <= r.tolerance;
  r.detail = "max error over 3 kernels x 100 samples, n <= 200";
  return r;
}

// 2. Monte Carlo E[h^(c)(X_1, ..., X_{c-1}, y)] within 4 SE of 0 at 20 points y.
inline CriterionResult degeneracy(const Options& o) {
  CriterionResult r{2, "degeneracy of h^(c), c >= 2", false, 0.0, 0.0, 4.0, "", 0.0};
  constexpr std::size_t draws = 1000000;
  const auto f = MarginalModel::gaussian(0.5, 1.5 * 1.5);
  Engine rng = make_engine(o.seed.child(2));
  std::vector<double> x1(draws);
  std::vector<double> x2(draws);
  for (double& v : x1) v = f.draw(rng);
  for (double& v : x2) v = f.draw(rng);
  double worst_z = 0.0;
  std::size_t checks = 0;
  for (const auto& id : builtin_kernel_ids) {
    const auto d = decompose(make_kernel(id), f);
    for (int c = 2; c <= d->degree(); ++c) {
      for (int g = 0; g < 20; ++g) {
        const double y = f.quantile((g + 0.5) / 20.0);
        std::vector<double> vals(draws);
        for (std::size_t i = 0; i < draws; ++i) {
          if (c == 2) {
            const double a[2] = {x1[i], y};
            vals[i] = d->h(a);
          } else {
            const double a[3] = {x1[i], x2[i], y};
            vals[i] = d->h(a);
          }
        }
        const auto mv = assocu::detail::mean_var(vals);
        const double se = std::sqrt(mv.var / static_cast<double>(draws));
        const double z = std::abs(mv.mean) <= 1e-12 ? 0.0 : std::abs(mv.mean) / se;
        worst_z = std::max(worst_z, z);
        ++checks;
      }
    }
  }
  r.measured = worst_z;
  r.passed = worst_z <= r.tolerance;
  r.detail = "max |mean|/SE over " + std::to_string(checks) + " (kernel, c, y) checks, 10^6 draws each";
  return r;
}

// 3. n Var(U_n) / 4 at n = 2000 within 10% of (1/2)(1 + phi^2)/(1 - phi^2).
inline CriterionResult variance_asymptotics(const Options& o) {
  CriterionResult r{3, "variance asymptotics (rel. error)", false, 0.0, 0.0, 0.10, "", 0.0};
  bool ok = true;
  double worst = 0.0;
  for (double phi : {0.0, 0.5}) {
    ExperimentConfig cfg;
    cfg.process = AssocProcessSpec::gaussian_ar1_stationary(phi);
    cfg.kernel_id = "variance";
    cfg.n_grid = {2000};
    cfg.replications = o.replications.value_or(2000);
    cfg.seed = o.seed.child(3).child(static_cast<std::uint64_t>(phi * 10));
    cfg.threads = o.threads;
    const auto res = run_clt_experiment(cfg);
    const double measured = res.per_n[0].n_var_u / 4.0;
    const double target = detail::isserlis_sigma_u_sq(phi);
    const double rel = std::abs(measured / target - 1.0);
    worst = std::max(worst, rel);
    ok = ok && rel <= r.tolerance;
    r.detail += "phi=" + detail::fmt(phi) + ": " + detail::fmt(measured) + " vs " + detail::fmt(target) + "; ";
  }
  r.measured = worst;
  r.passed = ok;
  return r;
}

// 4. KS distance of sqrt(n)(U_n - theta)/(k sigma_U) to N(0,1) <= 0.06.
inline CriterionResult clt(const Options& o) {
  CriterionResult r{4, "CLT for standardized U_n", false, 0.0, 0.0, 0.06, "", 0.0};
  struct Case {
    const char* label;
    const char* kernel;
    AssocProcessSpec process;
  };
  const std::vector<Case> cases{
      {"(a) variance iid", "variance", AssocProcessSpec::iid(MarginalModel::gaussian(0.0, 1.0))},
      {"(b) variance AR(1) 0.3", "variance", AssocProcessSpec::gaussian_ar1_stationary(0.3)},
      {"(c) squared_mean AR(1) 0.3 mean 1", "squared_mean", AssocProcessSpec::gaussian_ar1_stationary(0.3, 1.0, 1.0)},
      {"(d) third_moment iid", "third_moment", AssocProcessSpec::iid(MarginalModel::gaussian(0.0, 1.0))},
  };
  bool ok = true;
  double worst = 0.0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    ExperimentConfig cfg;
    cfg.process = cases[i].process;
    cfg.kernel_id = cases[i].kernel;
    cfg.n_grid = {2000};
    cfg.replications = o.replications.value_or(2000);
    cfg.seed = o.seed.child(4).child(i);
    cfg.threads = o.threads;
    cfg.sigma_u_override = o.sigma_u_override;
    try {
      const auto res = run_clt_experiment(cfg);
      const double ks = res.per_n[0].ks;
      worst = std::max(worst, ks);
      ok = ok && ks <= r.tolerance;
      r.detail += std::string(cases[i].label) + " ks=" + detail::fmt(ks) + "; ";
    } catch (const std::exception& e) {
      ok = false;
      worst = 1.0;
      r.detail += std::string(cases[i].label) + " failed: " + e.what() + "; ";
    }
  }
  r.measured = worst;
  r.passed = ok;
  return r;
}

// 5. Mean B_n over 100 replications at n = 10^5, l = floor(n^(1/3)):
// within 5% of sqrt(2/pi) (iid) and 10% of sqrt(3) sqrt(2/pi) (AR(1) 0.5).
inline CriterionResult bn_consistency(const Options& o) {
  CriterionResult r{5, "B_n consistency (error/tol)", false, 0.0, 0.0, 0.0, "", 0.0};
  constexpr std::size_t n = 100000;
  constexpr std::size_t reps = 100;
  const double root2pi = std::sqrt(2.0 / std::numbers::pi);
  struct Case {
    const char* label;
    AssocProcessSpec process;
    double target;
    double tol;
  };
  const std::vector<Case> cases{
      {"iid", AssocProcessSpec::iid(MarginalModel::gaussian(0.0, 1.0)), root2pi, 0.05},
      // long-run variance (1 + phi)/(1 - phi) = 3 at unit marginal variance
      {"AR(1) 0.5", AssocProcessSpec::gaussian_ar1_stationary(0.5), std::sqrt(3.0) * root2pi, 0.10},
  };
  bool ok = true;
  double worst = 0.0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto vals = assocu::detail::parallel_map(reps, o.threads, [&](std::size_t i) {
      return block_estimator(generate(cases[c].process, n, o.seed.child(5).child(c).child(i)), BlockConfig::cube_root()).b_n;
    });
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(reps);
    const double rel = std::abs(mean / cases[c].target - 1.0);
    worst = std::max(worst, rel / cases[c].tol);
    ok = ok && rel <= cases[c].tol;
    r.detail += std::string(cases[c].label) + ": mean b_n=" + detail::fmt(mean) + " target " +
                detail::fmt(cases[c].target) + " (rel " + detail::fmt(rel) + ", tol " + detail::fmt(cases[c].tol) +
                "); ";
  }
  r.measured = worst;
  r.target = 0.0;
  r.tolerance = 1.0;
  r.passed = ok;
  return r;
}

// 6. Leave-one-out plug-in sigma_U for the variance kernel (non-monotone
// rho_1) over AR(1) 0.5 at n = 10^5: mean sigma_hat^2 over 20 replications
// within 10% of 5/6.
inline CriterionResult nonmonotone_plugin(const Options& o) {
  CriterionResult r{6, "non-monotone sigma_U plug-in", false, 0.0, detail::isserlis_sigma_u_sq(0.5), 0.10, "", 0.0};
  constexpr std::size_t n = 100000;
  constexpr std::size_t reps = 20;
  const auto process = AssocProcessSpec::gaussian_ar1_stationary(0.5);
  const auto kernel = builtin_variance_kernel();
  const auto vals = assocu::detail::parallel_map(reps, o.threads, [&](std::size_t i) {
    const auto est = sigma_u_plugin(generate(process, n, o.seed.child(6).child(i)), kernel, BlockConfig::cube_root());
    return est.sigma_f_hat * est.sigma_f_hat;
  });
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(reps);
  r.measured = mean;
  r.passed = std::abs(mean / r.target - 1.0) <= r.tolerance;
  r.detail = "mean sigma_f_hat^2 = " + detail::fmt(mean) + " (relative error " +
             detail::fmt(std::abs(mean / r.target - 1.0)) + ")";
  return r;
}

// 7. Sample variance over 500 replications of
// sqrt(n/l) sqrt(pi/2) (D - mean D), D the known-mean block statistic,
// within 25% of (3 pi - 8) / 4.
inline CriterionResult fluctuation_law(const Options& o) {
  const double target = (3.0 * std::numbers::pi - 8.0) / 4.0;
  CriterionResult r{7, "fluctuation law of the block statistic", false, 0.0, target, 0.25, "", 0.0};
  constexpr std::size_t n = 100000;
  constexpr std::size_t reps = 500;
  const std::size_t ell = BlockConfig::cube_root().ell(n);
  const auto process = AssocProcessSpec::iid(MarginalModel::gaussian(0.0, 1.0));
  const auto d = assocu::detail::parallel_map(reps, o.threads, [&](std::size_t i) {
    return known_mean_block_statistic(generate(process, n, o.seed.child(7).child(i)), ell, 0.0);
  });
  const double scale = std::sqrt(static_cast<double>(n) / static_cast<double>(ell)) * sqrt_pi_over_2;
  std::vector<double> z(reps);
  const double mean = assocu::detail::mean_var(d).mean;
  for (std::size_t i = 0; i < reps; ++i) z[i] = scale * (d[i] - mean);
  const double var = assocu::detail::mean_var(z).var;
  r.measured = var;
  r.passed = std::abs(var / target - 1.0) <= r.tolerance;
  r.detail = "l = " + std::to_string(ell) + ", relative error " + detail::fmt(std::abs(var / target - 1.0));
  return r;
}

// 8. Brownian functional within +-0.005 of (3 pi - 8) / (4 pi).
inline CriterionResult brownian_constant(const Options& o) {
  const double target = (3.0 * std::numbers::pi - 8.0) / (4.0 * std::numbers::pi);
  CriterionResult r{8, "Brownian covariance functional", false, 0.0, target, 0.005, "", 0.0};
  const auto res = wiener_constant_mc(100000, 5e-4, o.seed.child(8), o.threads);
  r.measured = res.value;
  r.passed = std::abs(res.value - target) <= r.tolerance;
  r.detail = "MC standard error " + detail::fmt(res.standard_error) + "; Cov at t=0 " +
             detail::fmt(res.covariance.front()) + " (exact " + detail::fmt(1.0 - 2.0 / std::numbers::pi) +
             "), at t=1 " + detail::fmt(res.covariance.back());
  return r;
}

// 9. Structural invariants.
inline CriterionResult structural(const Options& o) {
  CriterionResult r{9, "structural invariants", true, 0.0, 0.0, 0.0, "", 0.0};
  Engine rng = make_engine(o.seed.child(9));
  std::vector<std::string> failures;
  auto require = [&](bool cond, const std::string& what) {
    if (!cond) failures.push_back(what);
  };

  // fast path == enumeration, permutation and shift laws
  double worst_rel = 0.0;
  bool perm_exact = true;
  double worst_shift = 0.0;
  double worst_scale = 0.0;
  for (const auto& id : builtin_kernel_ids) {
    const auto kernel = make_kernel(id);
    const auto k = static_cast<std::size_t>(kernel.degree());
    std::uniform_int_distribution<std::size_t> size(k, 200);
    const auto marginals = detail::random_gaussians(rng, 200);
    for (const auto& f : marginals) {
      std::vector<double> x(size(rng));
      for (double& v : x) v = f.draw(rng);
      const double e = u_statistic(x, kernel).value;
      const double fast = u_statistic_fast(x, id).value;
      worst_rel = std::max(worst_rel, std::abs(fast - e) / std::max(std::abs(e), 1e-300));
      auto shuffled = x;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      perm_exact = perm_exact && u_statistic(shuffled, kernel).value == e &&
                   u_statistic_fast(shuffled, id).value == fast;
      if (id == "variance") {
        auto shifted = x;
        for (double& v : shifted) v += 3.25;
        worst_shift = std::max(worst_shift, std::abs(u_statistic(shifted, kernel).value - e) / e);
        auto scaled = x;
        for (double& v : scaled) v *= -1.5;
        worst_scale = std::max(worst_scale, std::abs(u_statistic(scaled, kernel).value - 2.25 * e) / (2.25 * e));
      }
    }
  }
  require(worst_rel <= 1e-10, "fast path vs enumeration relative error " + detail::fmt(worst_rel));
  require(perm_exact, "permutation invariance is not exact");
  require(worst_shift <= 1e-10, "variance shift law error " + detail::fmt(worst_shift));
  require(worst_scale <= 1e-10, "variance scale law error " + detail::fmt(worst_scale));

  // block estimator laws and the literal double loop
  {
    const auto x = generate(AssocProcessSpec::gaussian_ar1_stationary(0.5), 5000, o.seed.child(9).child(1));
    const auto cfg = BlockConfig::cube_root();
    const double base = block_estimator(x, cfg).b_n;
    auto scaled = x;
    for (double& v : scaled) v *= -2.5;
    auto shifted = x;
    for (double& v : shifted) v += 7.0;
    require(std::abs(block_estimator(scaled, cfg).b_n - 2.5 * base) <= 1e-12 * base, "B_n scale equivariance");
    require(std::abs(block_estimator(shifted, cfg).b_n - base) <= 1e-12 * base, "B_n shift invariance");
    const std::size_t n = x.size();
    const std::size_t l = cfg.ell(n);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double lit = 0.0;
    for (std::size_t j = 0; j + l <= n; ++j) {
      double s = 0.0;
      for (std::size_t i = j; i < j + l; ++i) s += x[i];
      lit += std::abs(s - static_cast<double>(l) * mean) / std::sqrt(static_cast<double>(l));
    }
    lit /= static_cast<double>(n - l + 1);
    require(std::abs(lit - base) <= 1e-10, "prefix-sum B_n vs literal loop");
  }

  // domination certificates on default grids
  for (const auto& f : {MarginalModel::gaussian(0.0, 1.0), MarginalModel::gaussian(-1.5, 4.0),
                        MarginalModel::gaussian(2.0, 0.25)}) {
    const auto grid = default_domination_grid(f);
    for (const auto& id : builtin_kernel_ids) {
      const auto kernel = make_kernel(id);
      DominationPair pair{*kernel.analytic_rho1(f), *kernel.rho1_dominator(f), DominationProvenance::user_supplied};
      require(check_domination(pair, grid), "rho_1 << dominator for " + std::string(id));
    }
  }
  {
    std::vector<double> grid;
    for (int i = -1000; i <= 1000; ++i) grid.push_back(i * 0.01);
    require(check_domination({[](double x) { return std::sin(x); }, [](double x) { return x; }}, grid),
            "sin << x");
    std::vector<double> pos;
    for (int i = 0; i <= 1000; ++i) pos.push_back(i * 0.01);
    require(!check_domination({[](double x) { return x * x; }, [](double x) { return x; }}, pos), "x^2 not << x");
  }

  // bit-exact reproducibility, independent of the thread count
  {
    ExperimentConfig cfg;
    cfg.process = AssocProcessSpec::gaussian_ar1_stationary(0.3);
    cfg.kernel_id = "third_moment";
    cfg.n_grid = {50, 100, 200};
    cfg.replications = 64;
    cfg.seed = o.seed.child(9).child(2);
    cfg.threads = 1;
    const auto a = run_clt_experiment(cfg);
    cfg.threads = 3;
    const auto b = run_clt_experiment(cfg);
    bool same = true;
    for (std::size_t i = 0; i < a.per_n.size(); ++i) {
      same = same && a.per_n[i].standardized == b.per_n[i].standardized && a.per_n[i].ks == b.per_n[i].ks;
    }
    require(same, "experiment reproducibility across thread counts");
    const auto s = SeedSpec{99, 4};
    require(generate(cfg.process, 1000, s) == generate(cfg.process, 1000, s), "generator determinism");
  }

  r.measured = static_cast<double>(failures.size());
  r.passed = failures.empty();
  r.detail = failures.empty() ? "fast/enumeration rel err " + detail::fmt(worst_rel) : "";
  for (const auto& f : failures) r.detail += f + "; ";
  return r;
}

using Criterion = std::function<CriterionResult(const Options&)>;

inline const std::vector<Criterion>& all_criteria() {
  static const std::vector<Criterion> list{decomposition_identity, degeneracy,       variance_asymptotics,
                                           clt,                    bn_consistency,   nonmonotone_plugin,
                                           fluctuation_law,        brownian_constant, structural};
  return list;
}

inline std::string format_line(const CriterionResult& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "[%s] AC%d %-40s measured=%-12s target=%-10s tol=%-8s (%.1fs) %s",
                r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), detail::fmt(r.measured).c_str(),
                detail::fmt(r.target).c_str(), detail::fmt(r.tolerance).c_str(), r.seconds, r.detail.c_str());
  return buf;
}

// Runs the selected criteria in order; on_result sees each result as it
// completes. A criterion that throws is recorded as a failure.
inline std::vector<CriterionResult> run(const Options& o,
                                        const std::function<void(const CriterionResult&)>& on_result = {}) {
  std::vector<CriterionResult> out;
  const auto& list = all_criteria();
  for (std::size_t i = 0; i < list.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!o.only.empty() && !o.only.contains(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = list[i](o);
    } catch (const std::exception& e) {
      r.id = id;
      r.name = "criterion " + std::to_string(id);
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace assocu::acceptance
