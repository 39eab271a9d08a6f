#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "assocu/acceptance.hpp"
#include "assocu/config.hpp"
#include "assocu/harness.hpp"
#include "assocu/io.hpp"
#include "assocu/longrun.hpp"
#include "assocu/records.hpp"

// Batch front-end: simulate | estimate | verify | report. Each command
// computes in memory and writes its files at the end, followed by
// manifest.json echoing the resolved configuration.
namespace assocu::cli {

inline constexpr const char* version = "0.1.0";

// Exit statuses.
inline constexpr int exit_ok = 0;
inline constexpr int exit_failed = 1;    // runtime error or failed criterion
inline constexpr int exit_rejected = 2;  // bad command line or configuration

struct Invocation {
  std::string command;
  std::optional<std::filesystem::path> config_path;
  std::vector<std::string> overrides;  // applied after the file, in order
  std::optional<std::filesystem::path> output_dir;
};

struct Outcome {
  int exit_code = exit_ok;
  std::vector<std::filesystem::path> files;
  std::string status = "ok";
};

namespace detail {

inline std::ofstream open_text(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

inline void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
  }
}

}  // namespace detail

// Series file plus a JSON sidecar with the spec, seed and the analytic
// autocovariances at lags 0..10 (null where there is no closed form).
inline Outcome simulate(const config::Config& c, const std::filesystem::path& dir, std::ostream& out) {
  const auto spec = config::process(c);
  const auto n = c.integer("simulate.n");
  if (n < 1) throw config::ConfigError("config: simulate.n must be >= 1");
  const auto s = config::seed(c);
  const auto series = generate(spec, n, s);

  Json side;
  side["family"] = spec.family_name();
  side["process"] = c.resolved()["process"];
  side["bound"] = spec.bound() ? Json(*spec.bound()) : Json(nullptr);
  side["seed"] = {{"seed", s.seed}, {"stream", s.stream}};
  side["n"] = n;
  Json acv = Json::array();
  for (std::size_t lag = 0; lag <= 10; ++lag) {
    const auto v = spec.autocov(lag);
    acv.push_back(v ? Json(*v) : Json(nullptr));
  }
  side["autocov"] = std::move(acv);

  detail::prepare_dir(dir);
  Outcome o;
  const std::filesystem::path file = dir / c.str("simulate.output");
  write_series(file, series);
  auto sidecar = file;
  sidecar.replace_extension(".json");
  write_json(sidecar, side);
  o.files = {file, sidecar};
  out << "wrote " << n << " values to " << file.string() << '\n';
  return o;
}

// Block estimate of the series itself (kernel = none) or the sigma_U plug-in
// for a kernel, written as a JSON record.
inline Outcome estimate(const config::Config& c, const std::filesystem::path& dir, std::ostream& out) {
  const auto block = BlockConfig::parse(c.str("estimate.ell"));
  const auto& kernel_id = c.str("estimate.kernel");
  std::optional<SymmetricKernel> kernel;
  if (kernel_id != "none") kernel = make_kernel(kernel_id);
  const auto& input = c.str("estimate.input");
  if (input.empty()) throw config::ConfigError("config: estimate.input is required");
  const auto series = read_series(input);

  const auto est = kernel ? sigma_u_plugin(series, *kernel, block) : block_estimator(series, block);
  Json rec = to_json(est);
  rec["input"] = input;
  rec["kernel"] = kernel_id;

  detail::prepare_dir(dir);
  Outcome o;
  const auto file = dir / c.str("estimate.output");
  write_json(file, rec);
  o.files = {file};
  out << rec.dump() << '\n';
  return o;
}

// Acceptance suite; nonzero exit iff a criterion fails.
inline Outcome verify(const config::Config& c, const std::filesystem::path& dir, std::ostream& out) {
  const auto opts = config::verify_options(c);
  const auto results = acceptance::run(opts, [&](const acceptance::CriterionResult& r) {
    out << acceptance::format_line(r) << '\n' << std::flush;
  });

  Outcome o;
  Json table = Json::array();
  std::size_t failed = 0;
  for (const auto& r : results) {
    failed += r.passed ? 0 : 1;
    table.push_back({{"id", r.id},
                     {"name", r.name},
                     {"passed", r.passed},
                     {"measured", r.measured},
                     {"target", r.target},
                     {"tolerance", r.tolerance},
                     {"seconds", r.seconds},
                     {"detail", r.detail}});
  }
  detail::prepare_dir(dir);
  {
    o.files.push_back(dir / "verify_summary.csv");
    auto f = detail::open_text(o.files.back());
    f << "id,name,passed,measured,target,tolerance,seconds\n";
    for (const auto& r : results) {
      f << r.id << ",\"" << r.name << "\"," << (r.passed ? "true" : "false") << ',' << format_double(r.measured)
        << ',' << format_double(r.target) << ',' << format_double(r.tolerance) << ',' << format_double(r.seconds)
        << '\n';
    }
  }
  o.files.push_back(dir / "verify_summary.json");
  write_json(o.files.back(), {{"criteria", table}, {"failed", failed}});
  out << (results.size() - failed) << "/" << results.size() << " criteria passed\n";
  if (failed > 0) {
    o.exit_code = exit_failed;
    o.status = "failed: ";
    for (const auto& r : results) {
      if (!r.passed) o.status += "AC" + std::to_string(r.id) + " (" + r.name + ") ";
    }
  }
  return o;
}

// Runs the configured CLT experiment and writes the per-replication table,
// summary, QQ pairs, plug-in curve and variance-decay points.
inline Outcome report(const config::Config& c, const std::filesystem::path& dir, std::ostream& out) {
  const auto cfg = config::experiment(c);
  const auto wiener_paths = c.integer("experiment.wiener_paths");
  const double wiener_step = c.real("experiment.wiener_step");
  auto res = run_clt_experiment(cfg);
  std::optional<WienerConstantResult> w;
  if (wiener_paths > 0) {
    w = wiener_constant_mc(wiener_paths, wiener_step, cfg.seed.child(0xb0), cfg.threads);
    res.wiener_constant = w->value;
  }

  detail::prepare_dir(dir);
  Outcome o;
  o.files = write_experiment_outputs(res, dir);
  if (w) {
    o.files.push_back(dir / "wiener_covariance.txt");
    auto f = detail::open_text(o.files.back());
    for (std::size_t i = 0; i < w->covariance.size(); ++i) {
      f << format_double(static_cast<double>(i) * w->grid_step) << ' ' << format_double(w->covariance[i]) << '\n';
    }
  }
  out << "kernel " << res.kernel_id << ", theta " << format_double(res.theta) << ", sigma_U "
      << format_double(res.sigma_u) << " (" << res.sigma_u_source << ")\n";
  for (const auto& p : res.per_n) {
    out << "n " << p.n << ": ks " << format_double(p.ks) << ", mean " << format_double(p.mean_standardized)
        << ", n Var(U_n) " << format_double(p.n_var_u) << ", b_n " << format_double(p.bn.b_n) << '\n';
  }
  if (res.var_decay) {
    out << "variance decay slope " << format_double(res.var_decay->slope) << ", implied sigma_U^2 "
        << format_double(res.var_decay->implied_sigma_u_sq) << '\n';
  }
  if (w) out << "Brownian functional " << format_double(w->value) << " +- " << format_double(w->standard_error) << '\n';
  return o;
}

inline void write_manifest(const Invocation& inv, const config::Config& c, const std::filesystem::path& dir,
                           const Outcome& o) {
  Json m;
  m["tool"] = "assocu";
  m["version"] = version;
  m["command"] = inv.command;
  m["config_path"] = inv.config_path ? Json(inv.config_path->string()) : Json(nullptr);
  m["overrides"] = inv.overrides;
  m["output_dir"] = dir.string();
  m["status"] = o.status;
  m["exit_code"] = o.exit_code;
  m["config"] = c.resolved();
  Json files = Json::array();
  for (const auto& f : o.files) files.push_back(f.filename().string());
  m["files"] = std::move(files);
  detail::prepare_dir(dir);
  write_json(dir / "manifest.json", m);
}

inline int run(const Invocation& inv, std::ostream& out, std::ostream& err) {
  config::Config c;
  std::filesystem::path dir;
  try {
    c = config::load(inv.config_path, inv.overrides);
    dir = config::output_dir(c, inv.output_dir);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_rejected;
  }

  Outcome o;
  try {
    if (inv.command == "simulate") {
      o = simulate(c, dir, out);
    } else if (inv.command == "estimate") {
      o = estimate(c, dir, out);
    } else if (inv.command == "verify") {
      o = verify(c, dir, out);
    } else if (inv.command == "report") {
      o = report(c, dir, out);
    } else {
      err << "error: unknown command '" << inv.command << "'\n";
      return exit_rejected;
    }
  } catch (const std::invalid_argument& e) {
    // Covers ConfigError and precondition failures in the library.
    err << "error: " << e.what() << '\n';
    return exit_rejected;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    o.exit_code = exit_failed;
    o.status = std::string("error: ") + e.what();
  }
  try {
    write_manifest(inv, c, dir, o);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_failed;
  }
  if (o.exit_code != exit_ok && o.status.starts_with("failed")) err << o.status << '\n';
  return o.exit_code;
}

// Command-line parsing. Dedicated flags become overrides appended after
// --set, so the manifest records them like any other key.
inline int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hoeffding decompositions and block estimates for associated sequences"};
  app.set_version_flag("--version", version);
  app.require_subcommand(1);

  Invocation inv;
  std::string config_path;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> input;
  std::optional<std::string> ell;
  std::optional<std::string> kernel;
  bool print_config = false;

  app.add_option("-c,--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", inv.overrides, "override section.key=value (repeatable)");
  app.add_option("-o,--output-dir", output_dir, "output directory");
  app.add_option("--seed", seed, "master seed (run.seed)");
  app.add_option("--threads", threads, "worker threads (run.threads)");
  app.add_flag("--print-config", print_config, "print the resolved configuration as INI and exit");

  auto* sim = app.add_subcommand("simulate", "generate a series and its JSON sidecar");
  auto* est = app.add_subcommand("estimate", "overlapping-block estimate of a series file");
  est->add_option("--input", input, "series file");
  est->add_option("--ell", ell, "block rule: cube_root | log_square_capped | fixed(<l>)");
  est->add_option("--kernel", kernel, "none or a kernel id for the sigma_U plug-in");
  auto* ver = app.add_subcommand("verify", "run the acceptance criteria");
  auto* rep = app.add_subcommand("report", "run the configured CLT experiment and write its tables");
  for (auto* sub : {sim, est, ver, rep}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? exit_ok : exit_rejected;
  }

  inv.command = app.get_subcommands().front()->get_name();
  if (!config_path.empty()) inv.config_path = config_path;
  if (!output_dir.empty()) inv.output_dir = output_dir;
  if (seed) inv.overrides.push_back("run.seed=" + std::to_string(*seed));
  if (threads) inv.overrides.push_back("run.threads=" + std::to_string(*threads));
  if (input) inv.overrides.push_back("estimate.input=" + *input);
  if (ell) inv.overrides.push_back("estimate.ell=" + *ell);
  if (kernel) inv.overrides.push_back("estimate.kernel=" + *kernel);

  if (print_config) {
    try {
      out << config::load(inv.config_path, inv.overrides).to_ini();
      return exit_ok;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return exit_rejected;
    }
  }
  return run(inv, out, err);
}

}  // namespace assocu::cli
