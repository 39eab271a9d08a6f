#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "assocu/kernels.hpp"
#include "assocu/marginal.hpp"
#include "assocu/random.hpp"

namespace assocu {

// Pointwise map applied to a base process. Nondecreasing maps keep the
// output associated; non-monotone maps should come with a dominator.
struct Transform {
  std::string name;
  RealFunction fn;
  Monotonicity shape = Monotonicity::unknown;
};

[[nodiscard]] inline Transform identity_transform() {
  return {"identity", [](double x) { return x; }, Monotonicity::monotone};
}

[[nodiscard]] inline Transform clamp_transform(double bound) {
  return {"clamp:" + std::to_string(bound),
          [bound](double x) { return std::max(-bound, std::min(bound, x)); }, Monotonicity::monotone};
}

class AssocProcessSpec;

struct IidProcess {
  MarginalModel marginal;
};

// X_t - mean = phi (X_{t-1} - mean) + innovation_sd * eps_t, eps_t ~ N(0,1).
struct GaussianAr1 {
  double phi = 0.0;
  double innovation_sd = 1.0;
  double mean = 0.0;
};

// X_t = mean + sum_i coeffs[i] * eps_{t-i} with i.i.d. innovations.
struct PositiveMa {
  std::vector<double> coeffs;
  MarginalModel innovation = MarginalModel::gaussian(0.0, 1.0);
  double mean = 0.0;
};

struct TransformedProcess {
  std::shared_ptr<const AssocProcessSpec> base;
  Transform transform;
};

enum class ProcessFamily { iid, gaussian_ar1, positive_ma, transformed };

// Generative description of a stationary associated sequence.
class AssocProcessSpec {
 public:
  using Family = std::variant<IidProcess, GaussianAr1, PositiveMa, TransformedProcess>;

  explicit AssocProcessSpec(Family family, std::optional<double> bound = std::nullopt)
      : family_(std::move(family)), bound_(bound) {
    validate();
  }

  static AssocProcessSpec iid(MarginalModel marginal) { return AssocProcessSpec(IidProcess{std::move(marginal)}); }

  static AssocProcessSpec gaussian_ar1(double phi, double innovation_sd, double mean = 0.0) {
    return AssocProcessSpec(GaussianAr1{phi, innovation_sd, mean});
  }

  // AR(1) scaled to the requested stationary variance.
  static AssocProcessSpec gaussian_ar1_stationary(double phi, double marginal_variance = 1.0, double mean = 0.0) {
    if (!(marginal_variance >= 0.0)) throw std::invalid_argument("gaussian_ar1: marginal variance must be >= 0");
    if (!(phi >= 0.0 && phi < 1.0)) throw std::invalid_argument(ar1_phi_message(phi));
    return gaussian_ar1(phi, std::sqrt(marginal_variance * (1.0 - phi * phi)), mean);
  }

  static AssocProcessSpec positive_ma(std::vector<double> coeffs,
                                      MarginalModel innovation = MarginalModel::gaussian(0.0, 1.0),
                                      double mean = 0.0) {
    return AssocProcessSpec(PositiveMa{std::move(coeffs), std::move(innovation), mean});
  }

  static AssocProcessSpec transformed(const AssocProcessSpec& base, Transform transform) {
    return AssocProcessSpec(TransformedProcess{std::make_shared<const AssocProcessSpec>(base), std::move(transform)});
  }

  [[nodiscard]] const Family& family() const noexcept { return family_; }
  [[nodiscard]] ProcessFamily kind() const noexcept { return static_cast<ProcessFamily>(family_.index()); }
  [[nodiscard]] std::string family_name() const {
    switch (kind()) {
      case ProcessFamily::iid: return "iid";
      case ProcessFamily::gaussian_ar1: return "gaussian_ar1";
      case ProcessFamily::positive_ma: return "positive_ma";
      case ProcessFamily::transformed: return "transformed";
    }
    return "unknown";
  }

  // Truncation bound C1 when the sequence is clamped to [-C1, C1].
  [[nodiscard]] std::optional<double> bound() const noexcept { return bound_; }

  // True when autocov() has no closed form (transformed or clamped).
  [[nodiscard]] bool autocov_approximate() const noexcept { return kind() == ProcessFamily::transformed; }

  // Analytic Cov(X_1, X_{1+lag}); empty for transformed processes.
  [[nodiscard]] std::optional<double> autocov(std::size_t lag) const {
    if (const auto* p = std::get_if<IidProcess>(&family_)) {
      return lag == 0 ? p->marginal.variance() : 0.0;
    }
    if (const auto* p = std::get_if<GaussianAr1>(&family_)) {
      const double v = p->innovation_sd * p->innovation_sd / (1.0 - p->phi * p->phi);
      return v * std::pow(p->phi, static_cast<double>(lag));
    }
    if (const auto* p = std::get_if<PositiveMa>(&family_)) {
      double s = 0.0;
      for (std::size_t i = 0; i + lag < p->coeffs.size(); ++i) s += p->coeffs[i] * p->coeffs[i + lag];
      return s * p->innovation.variance();
    }
    return std::nullopt;
  }

  // Marginal law of X_1 when it is available in closed form.
  [[nodiscard]] std::optional<MarginalModel> marginal() const {
    if (const auto* p = std::get_if<IidProcess>(&family_)) return p->marginal;
    if (const auto* p = std::get_if<GaussianAr1>(&family_)) return MarginalModel::gaussian(p->mean, *autocov(0));
    if (const auto* p = std::get_if<PositiveMa>(&family_)) {
      if (p->innovation.family() != MarginalFamily::gaussian) return std::nullopt;
      double s = 0.0;
      for (double c : p->coeffs) s += c;
      return MarginalModel::gaussian(p->mean + s * p->innovation.mean(), *autocov(0));
    }
    return std::nullopt;
  }

  // Finite-dimensional laws are Gaussian (so autocov determines them).
  [[nodiscard]] bool jointly_gaussian() const {
    if (const auto* p = std::get_if<IidProcess>(&family_)) return p->marginal.family() == MarginalFamily::gaussian;
    if (std::holds_alternative<GaussianAr1>(family_)) return true;
    if (const auto* p = std::get_if<PositiveMa>(&family_)) return p->innovation.family() == MarginalFamily::gaussian;
    return false;
  }

  void validate() const {
    if (const auto* ar = std::get_if<GaussianAr1>(&family_)) {
      if (!(ar->phi >= 0.0 && ar->phi < 1.0)) throw std::invalid_argument(ar1_phi_message(ar->phi));
      if (!(ar->innovation_sd >= 0.0) || !std::isfinite(ar->innovation_sd) || !std::isfinite(ar->mean)) {
        throw std::invalid_argument("gaussian_ar1: innovation sd must be finite and >= 0");
      }
    } else if (const auto* ma = std::get_if<PositiveMa>(&family_)) {
      if (ma->coeffs.empty()) throw std::invalid_argument("positive_ma: need at least one coefficient");
      for (double c : ma->coeffs) {
        if (!(c >= 0.0) || !std::isfinite(c)) {
          throw std::invalid_argument("positive_ma: coefficients must be nonnegative (association constraint)");
        }
      }
    } else if (const auto* tr = std::get_if<TransformedProcess>(&family_)) {
      if (!tr->base) throw std::invalid_argument("transformed: missing base process");
      if (!tr->transform.fn) throw std::invalid_argument("transformed: missing transform");
    }
    if (bound_ && !(*bound_ > 0.0)) throw std::invalid_argument("truncation bound C1 must be > 0");
  }

  // Stationary mean, when known in closed form.
  [[nodiscard]] std::optional<double> mean() const {
    if (auto m = marginal()) return m->mean();
    if (const auto* p = std::get_if<PositiveMa>(&family_)) {
      double s = 0.0;
      for (double c : p->coeffs) s += c;
      return p->mean + s * p->innovation.mean();
    }
    return std::nullopt;
  }

 private:
  static std::string ar1_phi_message(double phi) {
    return "gaussian_ar1: phi = " + std::to_string(phi) +
           " is outside [0, 1); association requires phi >= 0 and stationarity requires phi < 1";
  }

  Family family_;
  std::optional<double> bound_;
};

// A process written as f(G_t) with G jointly Gaussian: the Gaussian base and
// the composed pointwise map. Empty when no Gaussian base exists.
struct GaussianSkeleton {
  AssocProcessSpec base;
  RealFunction transform;
};

[[nodiscard]] inline std::optional<GaussianSkeleton> gaussian_skeleton(const AssocProcessSpec& spec) {
  if (spec.jointly_gaussian()) return GaussianSkeleton{spec, [](double x) { return x; }};
  if (const auto* t = std::get_if<TransformedProcess>(&spec.family())) {
    auto inner = gaussian_skeleton(*t->base);
    if (!inner) return std::nullopt;
    return GaussianSkeleton{inner->base, [g = inner->transform, f = t->transform.fn](double x) { return f(g(x)); }};
  }
  return std::nullopt;
}

// Stationary sample path of length n. AR(1) starts from its stationary law.
[[nodiscard]] inline std::vector<double> generate(const AssocProcessSpec& spec, std::size_t n,
                                                  const SeedSpec& seed) {
  if (n == 0) throw std::invalid_argument("generate: n must be >= 1");
  spec.validate();
  std::vector<double> out(n);
  if (const auto* p = std::get_if<TransformedProcess>(&spec.family())) {
    out = generate(*p->base, n, seed);
    for (double& v : out) v = p->transform.fn(v);
    return out;
  }
  Engine rng = make_engine(seed);
  if (const auto* iid = std::get_if<IidProcess>(&spec.family())) {
    for (double& v : out) v = iid->marginal.draw(rng);
  } else if (const auto* ar = std::get_if<GaussianAr1>(&spec.family())) {
    std::normal_distribution<double> nd(0.0, 1.0);
    const double sd0 = ar->innovation_sd / std::sqrt(1.0 - ar->phi * ar->phi);
    double x = sd0 * nd(rng);
    out[0] = ar->mean + x;
    for (std::size_t t = 1; t < n; ++t) {
      x = ar->phi * x + ar->innovation_sd * nd(rng);
      out[t] = ar->mean + x;
    }
  } else if (const auto* ma = std::get_if<PositiveMa>(&spec.family())) {
    const std::size_t q = ma->coeffs.size() - 1;
    std::vector<double> eps(n + q);
    for (double& e : eps) e = ma->innovation.draw(rng);
    for (std::size_t t = 0; t < n; ++t) {
      double s = ma->mean;
      for (std::size_t i = 0; i <= q; ++i) s += ma->coeffs[i] * eps[t + q - i];
      out[t] = s;
    }
  }
  return out;
}

// Clamps the process to [-C1, C1]. Clamping is nondecreasing, so association
// is preserved, but the autocovariance is no longer available in closed form.
[[nodiscard]] inline AssocProcessSpec truncate_bounded(const AssocProcessSpec& spec, double bound) {
  if (!(bound > 0.0)) throw std::invalid_argument("truncate_bounded: C1 must be > 0");
  return AssocProcessSpec(
      TransformedProcess{std::make_shared<const AssocProcessSpec>(spec), clamp_transform(bound)}, bound);
}

// Sample autocovariances (divisor n, mean-centered) at lags 0..max_lag.
[[nodiscard]] inline std::vector<double> sample_autocovariance(std::span<const double> x, std::size_t max_lag) {
  if (x.size() <= max_lag) throw std::invalid_argument("sample_autocovariance: series shorter than max_lag + 1");
  const double n = static_cast<double>(x.size());
  double m = 0.0;
  for (double v : x) m += v;
  m /= n;
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - m;
  std::vector<double> out(max_lag + 1);
  for (std::size_t h = 0; h <= max_lag; ++h) {
    double s = 0.0;
    for (std::size_t i = 0; i + h < d.size(); ++i) s += d[i] * d[i + h];
    out[h] = s / n;
  }
  return out;
}

}  // namespace assocu
