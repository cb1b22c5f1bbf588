#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage or validation
// error, 2 a stage failed.

#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfxdma/error.hpp"
#include "mfxdma/pipeline.hpp"
#include "mfxdma/series_io.hpp"
#include "mfxdma/synth.hpp"

namespace mfxdma::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kStageFailure = 2 };

namespace detail {

// A command-line option that overrides one config key when given.
struct Binding {
  std::string key;
  std::string value;
  std::string fixed;  // flags: value applied when present
  CLI::Option* option = nullptr;
};

struct AnalysisOptions {
  std::deque<Binding> bindings;
  std::string config_path;

  void bind(CLI::App* app, const std::string& flag, std::string key, const std::string& help) {
    auto& b = bindings.emplace_back();
    b.key = std::move(key);
    b.option = app->add_option(flag, b.value, help);
  }
  void flag(CLI::App* app, const std::string& flag, std::string key, std::string fixed, const std::string& help) {
    auto& b = bindings.emplace_back();
    b.key = std::move(key);
    b.fixed = std::move(fixed);
    b.option = app->add_flag(flag, help);
  }

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "config file (key = value lines or a JSON object)");
    bind(app, "--x", "input_x", "CSV file for series X");
    bind(app, "--y", "input_y", "CSV file for series Y");
    bind(app, "--date-column", "date_column", "date column name");
    bind(app, "--value-column", "value_column", "value column name");
    bind(app, "--seed", "master_seed", "master seed for surrogate generation");
    bind(app, "--out", "out_dir", "output root directory");
    bind(app, "--theta", "theta", "moving-average position in [0,1]");
    bind(app, "--q-min", "q_min", "smallest moment order");
    bind(app, "--q-max", "q_max", "largest moment order");
    bind(app, "--q-step", "q_step", "moment-order step");
    bind(app, "--scale-min", "scale_min", "smallest window size");
    bind(app, "--scale-max", "scale_max", "largest window size");
    bind(app, "--n-scales", "n_scales", "number of log-spaced window sizes");
    bind(app, "--surrogates", "n_surrogates", "surrogates per scheme");
    bind(app, "--schemes", "schemes", "comma-separated schemes (s1,s2,s3 or names)");
    bind(app, "--level", "significance_level", "significance level");
    bind(app, "--qcc-m-max", "qcc_m_max", "largest lag for the Q_cc test");
    bind(app, "--iaaft-max-iter", "iaaft_max_iter", "IAAFT iteration cap");
    bind(app, "--threads", "threads", "worker threads (0 = automatic)");
    flag(app, "--standardize", "standardize", "true", "z-score both return series");
    flag(app, "--no-profile", "use_profile", "false", "analyse returns directly instead of their profiles");
  }

  pipeline::RunConfig resolve() const {
    pipeline::RunConfig cfg;
    if (!config_path.empty()) pipeline::apply_config_file(cfg, config_path);
    for (const auto& b : bindings)
      if (b.option->count() > 0) cfg.set(b.key, b.fixed.empty() ? b.value : b.fixed);
    return cfg;
  }
};

inline void print_summary(std::ostream& out, const pipeline::AnalysisBundle& b) {
  out << "pair " << b.pair_label << ": N = " << b.pair.size() << '\n';
  if (b.qcc) {
    const auto rejected = std::count(b.qcc->reject.begin(), b.qcc->reject.end(), true);
    out << "  Q_cc: " << rejected << " of " << b.qcc->size() << " lags reject independence at "
        << fmt_double(b.qcc->significance_level) << '\n';
  }
  if (b.analysis) out << "  delta_alpha = " << fmt_double(b.analysis->spectrum.delta_alpha) << '\n';
  if (b.tau_fit)
    out << "  tau(q) quadratic a2 = " << fmt_double(b.tau_fit->fit.coefficients[2])
        << " (p = " << fmt_double(b.tau_fit->fit.t_pvalues[2]) << ")"
        << (b.tau_fit->multifractal_flag ? " multifractal" : "") << '\n';
  for (const auto& t : b.surrogate_tests)
    out << "  " << surrogate::scheme_name(t.scheme) << ": p = " << fmt_double(t.p_value) << " over "
        << t.n_surrogates << " surrogates (" << t.excluded << " excluded)\n";
  for (const auto& s : b.stages)
    if (s.status == "failed") out << "  stage " << s.name << " FAILED: " << s.error << '\n';
}

inline int run_pipeline(const AnalysisOptions& opts, bool qcc, bool spectrum, bool surrogates, std::ostream& out) {
  auto cfg = opts.resolve();
  cfg.run_qcc = qcc;
  cfg.run_spectrum = spectrum;
  cfg.run_surrogates = surrogates;
  const auto bundle = pipeline::run_analysis(cfg);
  const auto dir = pipeline::pair_directory(bundle, cfg.out_dir);
  pipeline::write_bundle(bundle, dir);
  print_summary(out, bundle);
  out << "wrote " << dir.string() << '\n';
  return bundle.any_failed() ? kStageFailure : kOk;
}

inline void write_series(const std::filesystem::path& path, std::span<const double> values, double scale) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  io::write_csv(f, synth::as_level_series(values, path.stem().string(), scale));
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Multifractal cross-correlation analysis of paired return series", "mfxdma"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pipeline::kVersion));

  detail::AnalysisOptions analyze_opts, qcc_opts, spectrum_opts, surrogate_opts;
  auto* analyze = app.add_subcommand("analyze", "run every stage and write the full report");
  analyze_opts.attach(analyze);
  auto* qcc = app.add_subcommand("qcc", "cross-correlation test only");
  qcc_opts.attach(qcc);
  auto* spectrum = app.add_subcommand("spectrum", "MF-X-DMA spectrum and tau(q) regression only");
  spectrum_opts.attach(spectrum);
  auto* surr = app.add_subcommand("surrogate-test", "spectrum plus IAAFT surrogate tests");
  surrogate_opts.attach(surr);

  auto* synth_cmd = app.add_subcommand("synth", "write synthetic level series as CSV");
  synth_cmd->require_subcommand(1);
  double scale = 0.01;
  std::string synth_out;
  std::uint64_t synth_seed = 0;

  std::size_t fgn_n = 0;
  double fgn_h = 0.5;
  auto* fgn = synth_cmd->add_subcommand("fgn", "fractional Gaussian noise");
  fgn->add_option("--n", fgn_n, "number of returns")->required();
  fgn->add_option("--hurst", fgn_h, "Hurst exponent in (0,1)");
  fgn->add_option("--seed", synth_seed, "random seed")->required();
  fgn->add_option("--out", synth_out, "output CSV path")->required();
  fgn->add_option("--scale", scale, "return scale applied before cumulation");

  synth::CascadeSpec cascade_spec;
  auto* cascade = synth_cmd->add_subcommand("cascade", "binomial multiplicative cascade");
  cascade->add_option("--levels", cascade_spec.levels, "number of dyadic levels (2^levels returns)");
  cascade->add_option("--p", cascade_spec.p, "weight of the left child");
  cascade->add_flag("--shuffle", cascade_spec.shuffle, "randomise the left/right order at each split");
  auto* cascade_seed = cascade->add_option("--seed", cascade_spec.seed, "seed for --shuffle");
  cascade->add_option("--out", synth_out, "output CSV path")->required();
  cascade->add_option("--scale", scale, "return scale applied before cumulation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << pipeline::kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (*analyze) return detail::run_pipeline(analyze_opts, true, true, true, out);
    if (*qcc) return detail::run_pipeline(qcc_opts, true, false, false, out);
    if (*spectrum) return detail::run_pipeline(spectrum_opts, false, true, false, out);
    if (*surr) return detail::run_pipeline(surrogate_opts, false, false, true, out);
    if (*fgn) {
      detail::write_series(synth_out, synth::fgn(fgn_n, fgn_h, synth_seed), scale);
      out << "wrote " << synth_out << '\n';
      return kOk;
    }
    if (*cascade) {
      if (cascade_spec.shuffle && cascade_seed->count() == 0)
        throw ValidationError("--seed is required with --shuffle");
      detail::write_series(synth_out, synth::binomial_cascade(cascade_spec), scale);
      out << "wrote " << synth_out << '\n';
      return kOk;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kStageFailure;
  }
  return kUsage;
}

}  // namespace mfxdma::cli
