// matzoh: structured-grid evolution of quasi-linear parabolic equations
// and structural classification of solutions with time-invariant
// equipotential surfaces.
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "matzoh/calculus.hpp"
#include "matzoh/classify.hpp"
#include "matzoh/errors.hpp"
#include "matzoh/field_io.hpp"
#include "matzoh/invariance.hpp"
#include "matzoh/isoparametric.hpp"
#include "matzoh/pipeline.hpp"
#include "matzoh/plot_data.hpp"

namespace {

using nlohmann::json;

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::string report_path;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOptions* opts) {
  cmd->add_option("--config", opts->config_path, "Run configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", opts->out_dir, "Output directory for data files");
  cmd->add_option("--report", opts->report_path, "Write the result document here");
  cmd->add_flag("--verbose", opts->verbose, "Chattier progress output");
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw matzoh::Error("cannot write " + path.string());
  out << text;
  if (!out) throw matzoh::Error("cannot write " + path.string());
}

/// Result document: to --report when given, stdout otherwise.
void deliver(const CommonOptions& opts, const json& doc) {
  const std::string text = doc.dump(2) + "\n";
  if (opts.report_path.empty())
    std::cout << text;
  else
    write_text(opts.report_path, text);
}

int cmd_evolve(const CommonOptions& opts) {
  const matzoh::RunConfig config = matzoh::load_config(opts.config_path);
  if (opts.out_dir.empty())
    throw matzoh::ConfigError("evolve: --out directory is required to store snapshots");
  const matzoh::TimeSeriesField series = matzoh::make_series(config);
  std::filesystem::create_directories(opts.out_dir);
  matzoh::write_series(opts.out_dir, series);
  std::cout << "wrote " << series.size() << " snapshots to " << opts.out_dir << "\n";
  if (!opts.report_path.empty()) {
    json doc;
    doc["config_hash"] = config.hash;
    doc["times"] = series.times();
    doc["shape"] = series.grid().shape();
    doc["interior_nodes"] = series.mask().interior_count();
    write_text(opts.report_path, doc.dump(2) + "\n");
  }
  return matzoh::kExitOk;
}

int cmd_check_invariance(const CommonOptions& opts) {
  const matzoh::RunConfig config = matzoh::load_config(opts.config_path);
  const matzoh::TimeSeriesField series = matzoh::make_series(config);
  const std::size_t n_bins = config.analysis.options.n_bins != 0
                                 ? config.analysis.options.n_bins
                                 : matzoh::default_n_bins(series.mask());
  const matzoh::EtaTable table = matzoh::build_eta(series, n_bins);
  const std::vector<double> residuals = matzoh::invariance_residual(table);
  double worst = 0.0;
  for (const double r : residuals) worst = std::max(worst, r);
  const double tolerance = config.analysis.options.tol_inv;
  const bool pass = worst <= tolerance;

  if (opts.verbose)
    for (std::size_t j = 0; j < residuals.size(); ++j)
      std::cout << "t = " << fmt(table.times[j]) << "  residual " << fmt(residuals[j]) << "\n";
  std::cout << (pass ? "equipotential-invariant" : "NOT equipotential-invariant")
            << " (max residual " << fmt(worst) << ", tolerance " << fmt(tolerance) << ")\n";

  json doc;
  doc["config_hash"] = config.hash;
  doc["times"] = table.times;
  doc["residuals"] = residuals;
  doc["max_residual"] = worst;
  doc["tolerance"] = tolerance;
  doc["pass"] = pass;
  if (!opts.report_path.empty()) write_text(opts.report_path, doc.dump(2) + "\n");
  return pass ? matzoh::kExitOk : matzoh::kExitNotInvariant;
}

int run_classification(const CommonOptions& opts, bool emit_plots) {
  const matzoh::RunConfig config = matzoh::load_config(opts.config_path);
  const matzoh::Report report = matzoh::run_pipeline(config);
  deliver(opts, json::parse(matzoh::report_to_json(report)));
  if (!opts.report_path.empty()) {
    std::cout << "branch " << report.branch;
    if (report.branch == "eigen_split")
      std::cout << "  lambda " << fmt(report.lambda) << "  mu " << fmt(report.mu);
    if (report.branch == "linear_drift") std::cout << "  gamma " << fmt(report.gamma);
    std::cout << "\n";
  }
  if (emit_plots && !opts.out_dir.empty()) {
    matzoh::emit_plot_data(report, opts.out_dir);
    if (opts.verbose) std::cout << "plot data in " << opts.out_dir << "\n";
  }
  return report.branch == "mixed" ? matzoh::kExitMixed : matzoh::kExitOk;
}

json surface_to_json(const matzoh::SurfaceTypeReport& surface) {
  json doc;
  doc["level"] = surface.level;
  doc["type"] = matzoh::to_string(surface.type);
  doc["cylinder_rank"] = surface.cylinder_rank;
  doc["center"] = surface.center;
  doc["axis"] = surface.axis;
  json clusters = json::array();
  for (const auto& c : surface.clusters)
    clusters.push_back(json{{"value", c.value}, {"multiplicity", c.multiplicity}});
  doc["clusters"] = std::move(clusters);
  doc["fit_residual"] = surface.fit_residual;
  doc["n_samples"] = surface.n_samples;
  return doc;
}

int cmd_verify_isoparametric(const CommonOptions& opts) {
  const matzoh::RunConfig config = matzoh::load_config(opts.config_path);
  const matzoh::ScalarField phi = matzoh::make_initial(config, config.series.start_time);
  const matzoh::QuasiLinearOperator op = matzoh::make_operator(config, phi.grid().dim());
  const matzoh::IsoparametricVerdict verdict = matzoh::isoparametric_residual(
      phi, op, config.analysis.options.n_knots, config.analysis.options.tol_iso);

  double level = 0.0;
  if (config.analysis.surface_level) {
    level = *config.analysis.surface_level;
  } else {
    std::vector<double> values;
    values.reserve(phi.mask().active_nodes().size());
    for (const std::size_t node : phi.mask().active_nodes()) values.push_back(phi.value(node));
    std::nth_element(values.begin(), values.begin() + values.size() / 2, values.end());
    level = values[values.size() / 2];
  }

  std::optional<matzoh::SurfaceTypeReport> surface;
  if (config.analysis.options.type_surfaces) {
    std::optional<matzoh::ConvexBody> body;
    if (op.kind() == matzoh::QuasiLinearOperator::Kind::h_laplace) body = op.body();
    try {
      surface = matzoh::classify_surface(phi, level, body);
    } catch (const matzoh::Error& e) {
      if (opts.verbose) std::cout << "surface typing skipped: " << e.what() << "\n";
    }
  }

  std::cout << (verdict.pass ? "isoparametric" : "NOT isoparametric") << " (f residual "
            << fmt(verdict.f_fit.residual) << ", g residual " << fmt(verdict.g_fit.residual)
            << ", tolerance " << fmt(verdict.tolerance) << ")";
  if (surface) std::cout << "  surface " << matzoh::to_string(surface->type);
  std::cout << "\n";

  json doc;
  doc["config_hash"] = config.hash;
  doc["f_residual"] = verdict.f_fit.residual;
  doc["g_residual"] = verdict.g_fit.residual;
  doc["h_consistency"] = verdict.h_consistency;
  doc["tolerance"] = verdict.tolerance;
  doc["pass"] = verdict.pass;
  if (surface) doc["surface"] = surface_to_json(*surface);
  if (!opts.report_path.empty()) write_text(opts.report_path, doc.dump(2) + "\n");
  return verdict.pass ? matzoh::kExitOk : matzoh::kExitMixed;
}

int cmd_geodesic(const CommonOptions& opts) {
  const matzoh::RunConfig config = matzoh::load_config(opts.config_path);
  if (!config.geodesic)
    throw matzoh::ConfigError("config: a geodesic block is required by this command");
  const matzoh::GeodesicSpec& spec = *config.geodesic;

  const matzoh::ScalarField phi = matzoh::make_initial(config, config.series.start_time);
  const int dim = phi.grid().dim();
  const matzoh::QuasiLinearOperator op = matzoh::make_operator(config, dim);
  const matzoh::ConvexBody body = op.kind() == matzoh::QuasiLinearOperator::Kind::h_laplace
                                      ? op.body()
                                      : matzoh::ConvexBody::euclidean_ball(dim);

  const matzoh::IsoparametricVerdict verdict = matzoh::isoparametric_residual(
      phi, op, config.analysis.options.n_knots, config.analysis.options.tol_iso);
  const matzoh::ScalarField normalized = matzoh::normalize_to_unit_f(phi, verdict.f_fit);

  const std::vector<std::vector<double>> points = matzoh::level_set_points(phi, spec.level);
  if (points.empty())
    throw matzoh::Error("no points found on level " + fmt(spec.level));
  const std::size_t n_seeds = std::min<std::size_t>(points.size(),
                                                    static_cast<std::size_t>(spec.n_seeds));
  const std::size_t stride = points.size() / n_seeds;

  std::vector<matzoh::GeodesicTrace> traces;
  std::vector<std::vector<double>> seeds;
  for (std::size_t k = 0; k < n_seeds; ++k) {
    const std::vector<double>& seed = points[k * stride];
    traces.push_back(matzoh::geodesic_trace(normalized, seed, body, spec.tau_max,
                                            static_cast<std::size_t>(spec.n_steps)));
    seeds.push_back(seed);
  }

  double straightness = 0.0, rate_lo = traces.front().level_rate, rate_hi = rate_lo;
  std::size_t truncated = 0;
  for (const auto& trace : traces) {
    straightness = std::max(straightness, trace.straightness);
    rate_lo = std::min(rate_lo, trace.level_rate);
    rate_hi = std::max(rate_hi, trace.level_rate);
    if (trace.truncated) ++truncated;
  }
  std::cout << "traced " << traces.size() << " geodesics: straightness " << fmt(straightness)
            << ", level rates in [" << fmt(rate_lo) << ", " << fmt(rate_hi) << "]";
  if (truncated > 0) std::cout << " (" << truncated << " truncated at the domain edge)";
  std::cout << "\n";

  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    const std::filesystem::path csv = std::filesystem::path(opts.out_dir) / "geodesics.csv";
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw matzoh::Error("cannot write " + csv.string());
    out << "seed,tau,level";
    for (int d = 0; d < dim; ++d) out << ",x" << d;
    out << "\n";
    for (std::size_t k = 0; k < traces.size(); ++k)
      for (std::size_t i = 0; i < traces[k].taus.size(); ++i) {
        out << k << ',' << fmt(traces[k].taus[i]) << ',' << fmt(traces[k].levels[i]);
        for (int d = 0; d < dim; ++d)
          out << ',' << fmt(traces[k].points[i][static_cast<std::size_t>(d)]);
        out << '\n';
      }
  }

  json doc;
  doc["config_hash"] = config.hash;
  doc["level"] = spec.level;
  doc["tau_max"] = spec.tau_max;
  doc["straightness_max"] = straightness;
  doc["level_rate_spread"] = rate_hi - rate_lo;
  doc["truncated"] = truncated;
  json per_seed = json::array();
  for (std::size_t k = 0; k < traces.size(); ++k)
    per_seed.push_back(json{{"seed", seeds[k]},
                            {"straightness", traces[k].straightness},
                            {"level_rate", traces[k].level_rate},
                            {"level_rate_rms", traces[k].level_rate_rms},
                            {"truncated", traces[k].truncated}});
  doc["traces"] = std::move(per_seed);
  if (!opts.report_path.empty())
    write_text(opts.report_path, doc.dump(2) + "\n");
  else if (opts.verbose)
    std::cout << doc.dump(2) + "\n";
  return matzoh::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "matzoh: evolves quasi-linear parabolic equations on structured grids and "
      "classifies solutions with time-invariant equipotential surfaces"};
  app.set_version_flag("--version", matzoh::kToolVersion);
  app.require_subcommand(1);

  CommonOptions opts;
  std::function<int()> action;

  CLI::App* evolve = app.add_subcommand("evolve", "Time-step the configured problem and save snapshots");
  add_common(evolve, &opts);
  evolve->callback([&] { action = [&] { return cmd_evolve(opts); }; });

  CLI::App* check = app.add_subcommand("check-invariance",
                                       "Test whether the equipotential surfaces stay fixed in time");
  add_common(check, &opts);
  check->callback([&] { action = [&] { return cmd_check_invariance(opts); }; });

  CLI::App* classify = app.add_subcommand("classify",
                                          "Classify the solution structure (exit 2: not "
                                          "invariant, 3: mixed)");
  add_common(classify, &opts);
  classify->callback([&] { action = [&] { return run_classification(opts, false); }; });

  CLI::App* verify = app.add_subcommand("verify-isoparametric",
                                        "Check the level-function identities of a static field");
  add_common(verify, &opts);
  verify->callback([&] { action = [&] { return cmd_verify_isoparametric(opts); }; });

  CLI::App* geodesic = app.add_subcommand("geodesic",
                                          "Trace gradient geodesics of a normalized level function");
  add_common(geodesic, &opts);
  geodesic->callback([&] { action = [&] { return cmd_geodesic(opts); }; });

  CLI::App* run = app.add_subcommand("run", "Full pipeline: series, gate, classification, plot data");
  add_common(run, &opts);
  run->callback([&] { action = [&] { return run_classification(opts, true); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? matzoh::kExitOk : matzoh::kExitConfig;
  }

  try {
    return action();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return matzoh::exit_code_for(e);
  }
}
