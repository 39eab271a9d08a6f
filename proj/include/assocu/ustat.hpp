#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "assocu/detail/numeric.hpp"
#include "assocu/kernels.hpp"

namespace assocu {

enum class UStatMethod { enumeration, fast_path };

struct UStatResult {
  double value = 0.0;
  std::size_t n = 0;
  std::string kernel_id;
  UStatMethod method = UStatMethod::enumeration;
};

[[nodiscard]] inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(r);
}

// Visits every k-subset i_1 < ... < i_k of {0, ..., n-1} in lexicographic
// order; fn receives the index span.
template <class Fn>
void for_each_subset(std::size_t n, std::size_t k, Fn&& fn) {
  if (k == 0 || k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    fn(std::span<const std::size_t>(idx));
    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
    if (pos == 0) return;
    ++idx[pos - 1];
    for (std::size_t i = pos; i < k; ++i) idx[i] = idx[i - 1] + 1;
  }
}

// Complete U-statistic by enumeration of all k-subsets. Terms are summed in
// lexicographic subset order with compensated accumulation.
[[nodiscard]] inline UStatResult u_statistic(std::span<const double> sample, const SymmetricKernel& kernel) {
  const auto k = static_cast<std::size_t>(kernel.degree());
  const std::size_t n = sample.size();
  if (n < k) throw std::invalid_argument("u_statistic: sample size is smaller than the kernel degree");
  // Enumerating over the sorted sample makes the result a function of the
  // multiset of observations, hence exactly permutation invariant.
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  detail::CompensatedSum sum;
  std::vector<double> args(k);
  bool finite = true;
  for_each_subset(n, k, [&](std::span<const std::size_t> idx) {
    for (std::size_t i = 0; i < k; ++i) args[i] = sorted[idx[i]];
    const double v = kernel(args);
    finite = finite && std::isfinite(v);
    sum.add(v);
  });
  if (!finite) throw std::domain_error("u_statistic: kernel '" + kernel.id() + "' produced a non-finite value");
  return {sum.value() / binomial(n, k), n, kernel.id(), UStatMethod::enumeration};
}

// Evaluation of the built-in kernels through centered power sums. The sums
// run over the sorted sample (O(n log n)) so the result is exactly
// permutation invariant.
[[nodiscard]] inline UStatResult u_statistic_fast(std::span<const double> input, std::string_view kernel_id) {
  std::vector<double> sample(input.begin(), input.end());
  std::sort(sample.begin(), sample.end());
  const std::size_t n = sample.size();
  const double nd = static_cast<double>(n);
  auto centered = [&](std::size_t min_n) {
    if (n < min_n) throw std::invalid_argument("u_statistic_fast: sample size is smaller than the kernel degree");
    if (!detail::all_finite(sample)) throw std::domain_error("u_statistic_fast: non-finite sample value");
    detail::CompensatedSum s;
    for (double v : sample) s.add(v);
    const double mean = s.value() / nd;
    detail::CompensatedSum s2;
    detail::CompensatedSum s3;
    for (double v : sample) {
      const double d = v - mean;
      s2.add(d * d);
      s3.add(d * d * d);
    }
    return std::array<double, 3>{mean, s2.value(), s3.value()};
  };
  if (kernel_id == "variance") {
    const auto [mean, ss, s3] = centered(2);
    return {ss / (nd - 1.0), n, std::string(kernel_id), UStatMethod::fast_path};
  }
  if (kernel_id == "squared_mean") {
    // sum_{i<j} x_i x_j / C(n,2) = xbar^2 - s^2 / n with s^2 the divisor-(n-1) variance
    const auto [mean, ss, s3] = centered(2);
    return {mean * mean - ss / (nd * (nd - 1.0)), n, std::string(kernel_id), UStatMethod::fast_path};
  }
  if (kernel_id == "third_moment") {
    const auto [mean, ss, s3] = centered(3);
    return {nd / ((nd - 1.0) * (nd - 2.0)) * s3, n, std::string(kernel_id), UStatMethod::fast_path};
  }
  throw std::invalid_argument("u_statistic_fast: unknown kernel id '" + std::string(kernel_id) + "'");
}

[[nodiscard]] inline bool has_fast_path(std::string_view kernel_id) {
  return kernel_id == "variance" || kernel_id == "squared_mean" || kernel_id == "third_moment";
}

// Fast path when available, enumeration otherwise.
[[nodiscard]] inline UStatResult u_statistic_auto(std::span<const double> sample, const SymmetricKernel& kernel) {
  return has_fast_path(kernel.id()) ? u_statistic_fast(sample, kernel.id()) : u_statistic(sample, kernel);
}

}  // namespace assocu
