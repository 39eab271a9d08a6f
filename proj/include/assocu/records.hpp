#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "assocu/harness.hpp"
#include "assocu/hoeffding.hpp"
#include "assocu/io.hpp"
#include "assocu/longrun.hpp"

namespace assocu {

using Json = nlohmann::ordered_json;

[[nodiscard]] inline Json to_json(const LongRunEstimate& e) {
  Json j;
  j["b_n"] = e.b_n;
  j["ell"] = e.ell;
  j["sigma_f_hat"] = e.sigma_f_hat;
  j["fluct_scale"] = e.fluct_scale;
  j["n"] = e.n;
  j["ell_rule"] = e.ell_rule;
  j["monotone_variant"] = e.monotone_variant;
  j["warning"] = e.warning ? Json(*e.warning) : Json(nullptr);
  return j;
}

[[nodiscard]] inline Json to_json(const AsymptoticVariance& v) {
  Json j;
  j["sigma1_sq"] = v.sigma1_sq;
  j["sigmaU_sq"] = v.sigmaU_sq;
  j["truncation_lag"] = v.truncation_lag;
  j["tail_bound"] = v.tail_bound;
  j["decay_rate"] = v.decay_rate;
  j["method"] = v.method;
  Json table = Json::array();
  for (std::size_t i = 0; i < v.sigma1j_sq.size(); ++i) table.push_back({{"lag", i + 1}, {"cov", v.sigma1j_sq[i]}});
  j["sigma1j_sq"] = std::move(table);
  return j;
}

// Decomposition diagnostics: theta plus the sigma_U^2 ingredients.
[[nodiscard]] inline Json decomposition_record(const HoeffdingDecomposition& d, const AsymptoticVariance& v) {
  Json j;
  j["kernel"] = d.kernel().id();
  j["degree"] = d.degree();
  j["marginal"] = d.marginal().name();
  j["theta"] = d.theta();
  j["theta_se"] = d.theta_se();
  j["projections"] = d.analytic() ? "analytic" : "monte_carlo";
  j["asymptotic_variance"] = to_json(v);
  return j;
}

[[nodiscard]] inline Json to_json(const ExperimentResult& r) {
  Json j;
  j["kernel"] = r.kernel_id;
  j["degree"] = r.degree;
  j["theta"] = r.theta;
  j["sigma_u"] = r.sigma_u;
  j["sigma_u_source"] = r.sigma_u_source;
  if (!r.variance.method.empty()) j["asymptotic_variance"] = to_json(r.variance);
  Json per = Json::array();
  for (const auto& p : r.per_n) {
    per.push_back({{"n", p.n},
                   {"replications", p.u_values.size()},
                   {"ks_distance", p.ks},
                   {"mean_standardized", p.mean_standardized},
                   {"var_u", p.var_u},
                   {"n_var_u", p.n_var_u},
                   {"bn", to_json(p.bn)}});
  }
  j["per_n"] = std::move(per);
  if (r.var_decay) {
    j["var_decay"] = {{"slope", r.var_decay->slope},
                      {"intercept", r.var_decay->intercept},
                      {"implied_nvar", r.var_decay->implied_nvar},
                      {"implied_sigma_u_sq", r.var_decay->implied_sigma_u_sq}};
  }
  j["wiener_constant"] = r.wiener_constant ? Json(*r.wiener_constant) : Json(nullptr);
  return j;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

// replications.csv (one row per replication), summary.json, qq_<n>.txt
// (normal quantile vs sorted standardized value), bn_curve.txt and
// var_decay.txt (log n, log Var U_n).
inline std::vector<std::filesystem::path> write_experiment_outputs(const ExperimentResult& r,
                                                                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto open = [&](const std::string& name) {
    written.push_back(dir / name);
    std::ofstream out(written.back(), std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + written.back().string() + "' for writing");
    return out;
  };
  {
    auto out = open("replications.csv");
    out << "n,replication,u_n,standardized\n";
    for (const auto& p : r.per_n) {
      for (std::size_t i = 0; i < p.u_values.size(); ++i) {
        out << p.n << ',' << i << ',' << format_double(p.u_values[i]) << ',' << format_double(p.standardized[i])
            << '\n';
      }
    }
  }
  for (const auto& p : r.per_n) {
    auto out = open("qq_" + std::to_string(p.n) + ".txt");
    std::vector<double> s = p.standardized;
    std::sort(s.begin(), s.end());
    const double m = static_cast<double>(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << format_double(detail::normal_quantile((static_cast<double>(i) + 0.5) / m)) << ' ' << format_double(s[i])
          << '\n';
    }
  }
  {
    auto out = open("bn_curve.txt");
    for (const auto& p : r.per_n) out << p.n << ' ' << format_double(p.bn.b_n) << ' ' << format_double(p.bn.sigma_f_hat) << '\n';
  }
  {
    auto out = open("var_decay.txt");
    for (const auto& p : r.per_n) {
      out << format_double(std::log(static_cast<double>(p.n))) << ' ' << format_double(std::log(p.var_u)) << '\n';
    }
  }
  written.push_back(dir / "summary.json");
  write_json(written.back(), to_json(r));
  return written;
}

}  // namespace assocu
