#pragma once

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

#include "assocu/acceptance.hpp"
#include "assocu/assocgen.hpp"
#include "assocu/harness.hpp"
#include "assocu/longrun.hpp"
#include "assocu/random.hpp"

// Flat INI configuration: [section] headers, key = value lines, whole-line
// '#' or ';' comments. Every key has a default; unknown or repeated keys are errors.
namespace assocu::config {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct KeySpec {
  std::string_view section;
  std::string_view key;
  std::string_view default_value;
  std::string_view help;
};

inline const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> keys{
      {"run", "seed", "20261016", "master seed"},
      {"run", "stream", "0", "stream index under the seed"},
      {"run", "threads", "0", "worker threads (0 = hardware concurrency)"},
      {"run", "output_dir", "", "output directory (empty: ASSOCU_OUTPUT_DIR, then ./assocu_out)"},

      {"process", "family", "gaussian_ar1", "iid | gaussian_ar1 | positive_ma"},
      {"process", "phi", "0.5", "AR(1) coefficient, 0 <= phi < 1"},
      {"process", "marginal", "gaussian", "iid marginal: gaussian | uniform"},
      {"process", "mean", "0", "process mean"},
      {"process", "variance", "1", "marginal variance (gaussian_ar1, iid gaussian)"},
      {"process", "lower", "0", "uniform marginal lower end"},
      {"process", "upper", "1", "uniform marginal upper end"},
      {"process", "coeffs", "1,0.5", "positive_ma coefficients, comma separated"},
      {"process", "innovation_variance", "1", "positive_ma gaussian innovation variance"},
      {"process", "transform", "identity", "identity | clamp | variance_rho1"},
      {"process", "clamp_bound", "3", "bound C for the clamp transform"},

      {"simulate", "n", "1000", "series length"},
      {"simulate", "output", "series.txt", "series file name inside the output directory"},

      {"estimate", "input", "", "series file to read"},
      {"estimate", "ell", "cube_root", "cube_root | log_square_capped | fixed(<l>)"},
      {"estimate", "kernel", "none", "none (block estimate of the series) or a kernel id for the sigma_U plug-in"},
      {"estimate", "output", "estimate.json", "record file name inside the output directory"},

      {"experiment", "kernel", "variance", "kernel id"},
      {"experiment", "n_grid", "250,500,1000,2000", "strictly increasing sample sizes"},
      {"experiment", "replications", "1000", "replications per n (>= 2)"},
      {"experiment", "ell", "cube_root", "block rule for the plug-in curve"},
      {"experiment", "standardize_with_plugin", "false", "standardize by the per-replication plug-in sigma_U"},
      {"experiment", "sigma_u", "", "force sigma_U (empty = oracle)"},
      {"experiment", "max_lag", "200", "lag truncation for sigma_U"},
      {"experiment", "wiener_paths", "0", "Brownian paths for the covariance functional (0 = skip)"},
      {"experiment", "wiener_step", "0.0005", "Brownian grid step"},

      {"verify", "criteria", "all", "all or a comma separated list of criterion numbers"},
      {"verify", "replications", "", "replace R = 2000 in criteria 3 and 4 (empty = pinned value)"},
      {"verify", "sigma_u", "", "force sigma_U in criterion 4 (empty = oracle)"},
  };
  return keys;
}

namespace detail {

inline std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  while (true) {
    const auto pos = s.find(',');
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw ConfigError("config: " + key + " = '" + text + "' is not a valid number");
  }
  return v;
}

}  // namespace detail

class Config {
 public:
  Config() {
    for (const auto& k : schema()) values_[full(k.section, k.key)] = std::string(k.default_value);
  }

  // Applies "section.key=value".
  void apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config: override '" + std::string(assignment) + "' is not of the form section.key=value");
    }
    set(detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
  }

  void set(const std::string& key, std::string value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second = std::move(value);
  }

  [[nodiscard]] const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::logic_error("config: key '" + key + "' is not in the schema");
    return it->second;
  }
  [[nodiscard]] double real(const std::string& key) const { return detail::parse_number<double>(key, str(key)); }
  [[nodiscard]] std::uint64_t integer(const std::string& key) const {
    return detail::parse_number<std::uint64_t>(key, str(key));
  }
  [[nodiscard]] bool flag(const std::string& key) const {
    const auto& v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: " + key + " = '" + v + "' is not a boolean");
  }
  [[nodiscard]] std::optional<double> optional_real(const std::string& key) const {
    if (str(key).empty()) return std::nullopt;
    return real(key);
  }
  [[nodiscard]] std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : detail::split_list(str(key))) out.push_back(detail::parse_number<double>(key, item));
    return out;
  }
  [[nodiscard]] std::vector<std::size_t> sizes(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& item : detail::split_list(str(key))) out.push_back(detail::parse_number<std::size_t>(key, item));
    return out;
  }

  // Fully resolved configuration, grouped by section, in schema order.
  [[nodiscard]] nlohmann::ordered_json resolved() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& k : schema()) j[std::string(k.section)][std::string(k.key)] = str(full(k.section, k.key));
    return j;
  }

  // INI text that reproduces this configuration.
  [[nodiscard]] std::string to_ini() const {
    std::string out;
    std::string_view section;
    for (const auto& k : schema()) {
      if (k.section != section) {
        if (!out.empty()) out += '\n';
        out += "[" + std::string(k.section) + "]\n";
        section = k.section;
      }
      out += "# " + std::string(k.help) + '\n';
      out += std::string(k.key) + " = " + str(full(k.section, k.key)) + '\n';
    }
    return out;
  }

  static std::string full(std::string_view section, std::string_view key) {
    return std::string(section) + "." + std::string(key);
  }

 private:
  std::map<std::string, std::string> values_;
};

[[nodiscard]] inline bool is_section(std::string_view name) {
  for (const auto& k : schema()) {
    if (k.section == name) return true;
  }
  return false;
}

// Reads an INI file over the defaults, then applies overrides in order.
[[nodiscard]] inline Config load(const std::optional<std::filesystem::path>& path,
                                 const std::vector<std::string>& overrides = {}) {
  Config cfg;
  if (path) {
    if (!std::filesystem::exists(*path)) throw ConfigError("config: file '" + path->string() + "' does not exist");
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::ini_parser::read_ini(path->string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError("config: " + std::string(e.what()));
    }
    for (const auto& [section, body] : tree) {
      if (body.empty() && !is_section(section)) {
        throw ConfigError("config: key '" + section + "' appears outside a [section]");
      }
      for (const auto& [key, value] : body) cfg.set(Config::full(section, key), value.data());
    }
  }
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

[[nodiscard]] inline SeedSpec seed(const Config& c) { return {c.integer("run.seed"), c.integer("run.stream")}; }

[[nodiscard]] inline unsigned threads(const Config& c) { return static_cast<unsigned>(c.integer("run.threads")); }

// Explicit flag, then run.output_dir, then ASSOCU_OUTPUT_DIR, then ./assocu_out.
[[nodiscard]] inline std::filesystem::path output_dir(const Config& c,
                                                      const std::optional<std::filesystem::path>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (!c.str("run.output_dir").empty()) return c.str("run.output_dir");
  if (const char* env = std::getenv("ASSOCU_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "assocu_out";
}

[[nodiscard]] inline AssocProcessSpec process(const Config& c) {
  const auto& family = c.str("process.family");
  const double mean = c.real("process.mean");
  std::optional<AssocProcessSpec> base;
  if (family == "iid") {
    const auto& m = c.str("process.marginal");
    if (m == "gaussian") {
      base = AssocProcessSpec::iid(MarginalModel::gaussian(mean, c.real("process.variance")));
    } else if (m == "uniform") {
      base = AssocProcessSpec::iid(MarginalModel::uniform(c.real("process.lower"), c.real("process.upper")));
    } else {
      throw ConfigError("config: process.marginal = '" + m + "' (expected gaussian or uniform)");
    }
  } else if (family == "gaussian_ar1") {
    base = AssocProcessSpec::gaussian_ar1_stationary(c.real("process.phi"), c.real("process.variance"), mean);
  } else if (family == "positive_ma") {
    base = AssocProcessSpec::positive_ma(c.reals("process.coeffs"),
                                         MarginalModel::gaussian(0.0, c.real("process.innovation_variance")), mean);
  } else {
    throw ConfigError("config: process.family = '" + family + "' (expected iid, gaussian_ar1 or positive_ma)");
  }

  const auto& t = c.str("process.transform");
  if (t == "identity") return *base;
  if (t == "clamp") return truncate_bounded(*base, c.real("process.clamp_bound"));
  if (t == "variance_rho1") {
    // f(x) = ((x - mu)^2 + sigma^2) / 2, the first projection of the
    // variance kernel under the base marginal.
    const auto m = base->marginal();
    if (!m) throw ConfigError("config: variance_rho1 needs a base process with a known marginal");
    const double mu = m->mean();
    const double s2 = m->variance();
    return AssocProcessSpec::transformed(
        *base, Transform{"variance_rho1", [mu, s2](double x) { return ((x - mu) * (x - mu) + s2) / 2.0; },
                         Monotonicity::non_monotone});
  }
  throw ConfigError("config: process.transform = '" + t + "' (expected identity, clamp or variance_rho1)");
}

[[nodiscard]] inline ExperimentConfig experiment(const Config& c) {
  ExperimentConfig e;
  e.process = process(c);
  e.kernel_id = c.str("experiment.kernel");
  e.n_grid = c.sizes("experiment.n_grid");
  e.replications = c.integer("experiment.replications");
  e.seed = seed(c);
  e.block = BlockConfig::parse(c.str("experiment.ell"));
  e.sigma_u_override = c.optional_real("experiment.sigma_u");
  e.standardize_with_plugin = c.flag("experiment.standardize_with_plugin");
  e.max_lag = c.integer("experiment.max_lag");
  e.threads = threads(c);
  e.validate();
  return e;
}

[[nodiscard]] inline acceptance::Options verify_options(const Config& c) {
  acceptance::Options o;
  o.seed = seed(c);
  o.threads = threads(c);
  if (!c.str("verify.replications").empty()) {
    const auto r = c.integer("verify.replications");
    if (r < 2) throw ConfigError("config: verify.replications must be >= 2");
    o.replications = r;
  }
  o.sigma_u_override = c.optional_real("verify.sigma_u");
  if (c.str("verify.criteria") != "all") {
    for (auto id : c.sizes("verify.criteria")) {
      if (id < 1 || id > acceptance::all_criteria().size()) {
        throw ConfigError("config: verify.criteria names unknown criterion " + std::to_string(id));
      }
      o.only.insert(static_cast<int>(id));
    }
  }
  return o;
}

}  // namespace assocu::config
