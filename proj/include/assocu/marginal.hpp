#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "assocu/detail/numeric.hpp"
#include "assocu/random.hpp"

namespace assocu {

enum class MarginalFamily { gaussian, uniform, empirical };

// One-dimensional marginal law F of X_1. Moments mu2..mu4 are central.
// A gaussian with zero variance is the point mass at its mean.
class MarginalModel {
 public:
  static MarginalModel gaussian(double mean, double variance) {
    if (!(variance >= 0.0) || !std::isfinite(variance) || !std::isfinite(mean)) {
      throw std::invalid_argument("MarginalModel: gaussian needs finite mean and variance >= 0");
    }
    MarginalModel m(MarginalFamily::gaussian);
    m.a_ = mean;
    m.b_ = variance;
    m.mean_ = mean;
    m.mu2_ = variance;
    m.mu3_ = 0.0;
    m.mu4_ = 3.0 * variance * variance;
    return m;
  }

  static MarginalModel point_mass(double c) { return gaussian(c, 0.0); }

  static MarginalModel uniform(double lo, double hi) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw std::invalid_argument("MarginalModel: uniform needs finite lo < hi");
    }
    MarginalModel m(MarginalFamily::uniform);
    m.a_ = lo;
    m.b_ = hi;
    const double w = hi - lo;
    m.mean_ = 0.5 * (lo + hi);
    m.mu2_ = w * w / 12.0;
    m.mu3_ = 0.0;
    m.mu4_ = w * w * w * w / 80.0;
    return m;
  }

  static MarginalModel empirical(std::vector<double> sample) {
    if (sample.empty() || !detail::all_finite(sample)) {
      throw std::invalid_argument("MarginalModel: empirical needs a nonempty finite sample");
    }
    MarginalModel m(MarginalFamily::empirical);
    const double n = static_cast<double>(sample.size());
    double s = 0.0;
    for (double v : sample) s += v;
    m.mean_ = s / n;
    double s2 = 0.0;
    double s3 = 0.0;
    double s4 = 0.0;
    for (double v : sample) {
      const double d = v - m.mean_;
      s2 += d * d;
      s3 += d * d * d;
      s4 += d * d * d * d;
    }
    m.mu2_ = s2 / n;
    m.mu3_ = s3 / n;
    m.mu4_ = s4 / n;
    std::vector<double> sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    m.sample_ = std::make_shared<const std::vector<double>>(std::move(sample));
    m.sorted_ = std::make_shared<const std::vector<double>>(std::move(sorted));
    return m;
  }

  [[nodiscard]] MarginalFamily family() const noexcept { return family_; }
  [[nodiscard]] std::string name() const {
    switch (family_) {
      case MarginalFamily::gaussian: return "gaussian";
      case MarginalFamily::uniform: return "uniform";
      case MarginalFamily::empirical: return "empirical";
    }
    return "unknown";
  }

  [[nodiscard]] double mean() const noexcept { return mean_; }
  [[nodiscard]] double mu2() const noexcept { return mu2_; }
  [[nodiscard]] double mu3() const noexcept { return mu3_; }
  [[nodiscard]] double mu4() const noexcept { return mu4_; }
  [[nodiscard]] double variance() const noexcept { return mu2_; }
  [[nodiscard]] bool degenerate() const noexcept { return mu2_ == 0.0; }

  // Stored sample for the empirical family, empty otherwise.
  [[nodiscard]] std::span<const double> sample() const noexcept {
    return sample_ ? std::span<const double>(*sample_) : std::span<const double>{};
  }

  [[nodiscard]] double draw(Engine& rng) const {
    switch (family_) {
      case MarginalFamily::gaussian: {
        std::normal_distribution<double> nd(0.0, 1.0);
        return a_ + std::sqrt(b_) * nd(rng);
      }
      case MarginalFamily::uniform: {
        std::uniform_real_distribution<double> ud(a_, b_);
        return ud(rng);
      }
      case MarginalFamily::empirical: {
        std::uniform_int_distribution<std::size_t> pick(0, sample_->size() - 1);
        return (*sample_)[pick(rng)];
      }
    }
    return 0.0;
  }

  // Quantile function; the empirical family uses the inverse of the step CDF.
  [[nodiscard]] double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("MarginalModel::quantile: p must lie in (0, 1)");
    switch (family_) {
      case MarginalFamily::gaussian: return a_ + std::sqrt(b_) * detail::normal_quantile(p);
      case MarginalFamily::uniform: return a_ + p * (b_ - a_);
      case MarginalFamily::empirical: {
        const auto& s = *sorted_;
        const auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(s.size())));
        return s[std::clamp<std::size_t>(idx, 1, s.size()) - 1];
      }
    }
    return 0.0;
  }

 private:
  explicit MarginalModel(MarginalFamily f) : family_(f) {}

  MarginalFamily family_;
  double a_ = 0.0;
  double b_ = 0.0;
  double mean_ = 0.0;
  double mu2_ = 0.0;
  double mu3_ = 0.0;
  double mu4_ = 0.0;
  std::shared_ptr<const std::vector<double>> sample_;
  std::shared_ptr<const std::vector<double>> sorted_;
};

}  // namespace assocu
