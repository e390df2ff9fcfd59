#include "matzoh/pipeline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "matzoh/field_io.hpp"
#include "matzoh/invariance.hpp"
#include "matzoh/isoparametric.hpp"

namespace matzoh {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) fail(where, "unknown key \"" + item.key() + "\"");
  }
}

const json& require(const json& obj, const std::string& where, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing key \"") + key + "\"");
  return *it;
}

double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

double as_positive(const json& v, const std::string& where) {
  const double x = as_double(v, where);
  if (!(x > 0.0)) fail(where, "expected a positive number");
  return x;
}

int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<int>();
}

std::size_t as_index(const json& v, const std::string& where) {
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0))
    fail(where, "expected a nonnegative integer");
  return v.get<std::size_t>();
}

bool as_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) fail(where, "expected a boolean");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

std::vector<double> as_double_vector(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& item : v) out.push_back(as_double(item, where));
  return out;
}

std::vector<std::size_t> as_index_vector(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of integers");
  std::vector<std::size_t> out;
  out.reserve(v.size());
  for (const json& item : v) out.push_back(as_index(item, where));
  return out;
}

GridSpec parse_grid(const json& j) {
  check_keys(j, "grid", {"shape", "origin", "spacing"});
  GridSpec spec;
  spec.shape = as_index_vector(require(j, "grid", "shape"), "grid.shape");
  if (spec.shape.empty()) fail("grid.shape", "must not be empty");
  spec.origin = as_double_vector(require(j, "grid", "origin"), "grid.origin");
  if (spec.origin.size() != spec.shape.size()) fail("grid.origin", "size differs from shape");
  const json& sp = require(j, "grid", "spacing");
  if (sp.is_number()) {
    spec.spacing.assign(spec.shape.size(), as_positive(sp, "grid.spacing"));
  } else {
    spec.spacing = as_double_vector(sp, "grid.spacing");
    if (spec.spacing.size() != spec.shape.size()) fail("grid.spacing", "size differs from shape");
    for (const double h : spec.spacing)
      if (!(h > 0.0)) fail("grid.spacing", "expected positive spacings");
  }
  return spec;
}

DomainSpec parse_domain(const json& j) {
  if (!j.is_object()) fail("domain", "expected an object");
  const std::string shape = as_string(require(j, "domain", "shape"), "domain.shape");
  DomainSpec spec;
  if (shape == "box") {
    check_keys(j, "domain", {"shape"});
    spec.shape = DomainSpec::Shape::box;
  } else if (shape == "ball") {
    check_keys(j, "domain", {"shape", "center", "radius"});
    spec.shape = DomainSpec::Shape::ball;
    if (j.contains("center")) spec.center = as_double_vector(j.at("center"), "domain.center");
    spec.radius = as_positive(require(j, "domain", "radius"), "domain.radius");
  } else if (shape == "annulus") {
    check_keys(j, "domain", {"shape", "center", "inner_radius", "outer_radius"});
    spec.shape = DomainSpec::Shape::annulus;
    if (j.contains("center")) spec.center = as_double_vector(j.at("center"), "domain.center");
    spec.inner_radius = as_double(require(j, "domain", "inner_radius"), "domain.inner_radius");
    spec.outer_radius = as_positive(require(j, "domain", "outer_radius"), "domain.outer_radius");
    if (spec.inner_radius < 0.0 || spec.inner_radius >= spec.outer_radius)
      fail("domain", "need 0 <= inner_radius < outer_radius");
  } else if (shape == "cylinder") {
    check_keys(j, "domain", {"shape", "center", "radius", "axis"});
    spec.shape = DomainSpec::Shape::cylinder;
    if (j.contains("center")) spec.center = as_double_vector(j.at("center"), "domain.center");
    spec.radius = as_positive(require(j, "domain", "radius"), "domain.radius");
    spec.axis = as_int(require(j, "domain", "axis"), "domain.axis");
  } else if (shape == "strip") {
    check_keys(j, "domain", {"shape", "normal", "offset", "half_width"});
    spec.shape = DomainSpec::Shape::strip;
    spec.normal = as_int(require(j, "domain", "normal"), "domain.normal");
    if (j.contains("offset")) spec.offset = as_double(j.at("offset"), "domain.offset");
    spec.half_width = as_positive(require(j, "domain", "half_width"), "domain.half_width");
  } else {
    fail("domain.shape", "unknown shape \"" + shape +
                             "\" (choices: box, ball, annulus, cylinder, strip)");
  }
  return spec;
}

OperatorSpec parse_operator(const json& j) {
  check_keys(j, "operator", {"kind", "p"});
  OperatorSpec spec;
  const std::string kind = as_string(require(j, "operator", "kind"), "operator.kind");
  if (kind == "heat") {
    spec.kind = QuasiLinearOperator::Kind::heat;
  } else if (kind == "p_laplace") {
    spec.kind = QuasiLinearOperator::Kind::p_laplace;
  } else if (kind == "normalized_p_laplace") {
    spec.kind = QuasiLinearOperator::Kind::normalized_p_laplace;
  } else if (kind == "h_laplace") {
    spec.kind = QuasiLinearOperator::Kind::h_laplace;
  } else {
    fail("operator.kind", "unknown kind \"" + kind +
                              "\" (choices: heat, p_laplace, normalized_p_laplace, h_laplace)");
  }
  if (j.contains("p")) spec.p = as_double(j.at("p"), "operator.p");
  return spec;
}

BodySpec parse_body(const json& j) {
  check_keys(j, "body", {"kind", "matrix", "epsilon"});
  BodySpec spec;
  const std::string kind = as_string(require(j, "body", "kind"), "body.kind");
  if (kind == "euclidean_ball") {
    spec.kind = ConvexBody::Kind::euclidean_ball;
  } else if (kind == "ellipsoid") {
    spec.kind = ConvexBody::Kind::ellipsoid;
  } else if (kind == "perturbed_ball") {
    spec.kind = ConvexBody::Kind::perturbed_ball;
  } else {
    fail("body.kind", "unknown kind \"" + kind +
                          "\" (choices: euclidean_ball, ellipsoid, perturbed_ball)");
  }
  if (j.contains("matrix")) {
    const json& m = j.at("matrix");
    if (!m.is_array() || m.empty()) fail("body.matrix", "expected a square array of rows");
    for (const json& row : m) {
      spec.matrix.push_back(as_double_vector(row, "body.matrix"));
      if (spec.matrix.back().size() != m.size()) fail("body.matrix", "rows must form a square");
    }
  }
  if (j.contains("epsilon")) spec.epsilon = as_double(j.at("epsilon"), "body.epsilon");
  return spec;
}

InitialSpec parse_initial(const json& j) {
  if (!j.is_object()) fail("initial", "expected an object");
  const std::string kind = as_string(require(j, "initial", "kind"), "initial.kind");
  InitialSpec spec;
  if (kind == "eigenmode") {
    check_keys(j, "initial", {"kind", "modes"});
    spec.kind = InitialSpec::Kind::eigenmode;
    const json& modes = require(j, "initial", "modes");
    if (!modes.is_array() || modes.empty()) fail("initial.modes", "expected a nonempty array");
    for (const json& m : modes) {
      check_keys(m, "initial.modes", {"wave", "amplitude"});
      InitialSpec::Mode mode;
      mode.wave = as_double_vector(require(m, "initial.modes", "wave"), "initial.modes.wave");
      if (m.contains("amplitude"))
        mode.amplitude = as_double(m.at("amplitude"), "initial.modes.amplitude");
      spec.modes.push_back(std::move(mode));
    }
  } else if (kind == "gaussian_kernel") {
    check_keys(j, "initial", {"kind", "center", "t0"});
    spec.kind = InitialSpec::Kind::gaussian_kernel;
    if (j.contains("center")) spec.center = as_double_vector(j.at("center"), "initial.center");
    if (j.contains("t0")) spec.t0 = as_positive(j.at("t0"), "initial.t0");
  } else if (kind == "radial_power") {
    check_keys(j, "initial", {"kind", "center", "power"});
    spec.kind = InitialSpec::Kind::radial_power;
    if (j.contains("center")) spec.center = as_double_vector(j.at("center"), "initial.center");
    if (j.contains("power")) spec.power = as_positive(j.at("power"), "initial.power");
  } else if (kind == "affine_drift") {
    check_keys(j, "initial", {"kind", "center", "gamma"});
    spec.kind = InitialSpec::Kind::affine_drift;
    if (j.contains("center")) spec.center = as_double_vector(j.at("center"), "initial.center");
    if (j.contains("gamma")) spec.gamma = as_double(j.at("gamma"), "initial.gamma");
  } else if (kind == "body_gauge") {
    check_keys(j, "initial", {"kind", "center"});
    spec.kind = InitialSpec::Kind::body_gauge;
    if (j.contains("center")) spec.center = as_double_vector(j.at("center"), "initial.center");
  } else if (kind == "custom") {
    check_keys(j, "initial", {"kind", "path"});
    spec.kind = InitialSpec::Kind::custom;
    spec.path = as_string(require(j, "initial", "path"), "initial.path");
  } else {
    fail("initial.kind",
         "unknown kind \"" + kind +
             "\" (choices: eigenmode, gaussian_kernel, radial_power, affine_drift, "
             "body_gauge, custom)");
  }
  return spec;
}

SeriesSpec parse_series(const json& j) {
  if (!j.is_object()) fail("series", "expected an object");
  const std::string mode = as_string(require(j, "series", "mode"), "series.mode");
  SeriesSpec spec;
  if (mode == "evolve") {
    check_keys(j, "series", {"mode", "times", "start_time"});
    spec.mode = SeriesSpec::Mode::evolve;
    spec.times = as_double_vector(require(j, "series", "times"), "series.times");
    if (j.contains("start_time"))
      spec.start_time = as_double(j.at("start_time"), "series.start_time");
  } else if (mode == "manufactured") {
    check_keys(j, "series", {"mode", "times"});
    spec.mode = SeriesSpec::Mode::manufactured;
    spec.times = as_double_vector(require(j, "series", "times"), "series.times");
  } else if (mode == "load") {
    check_keys(j, "series", {"mode", "dir"});
    spec.mode = SeriesSpec::Mode::load;
    spec.dir = as_string(require(j, "series", "dir"), "series.dir");
  } else {
    fail("series.mode",
         "unknown mode \"" + mode + "\" (choices: evolve, manufactured, load)");
  }
  return spec;
}

BcSpec parse_bc(const json& j) {
  check_keys(j, "bc", {"kind"});
  const std::string kind = as_string(require(j, "bc", "kind"), "bc.kind");
  BcSpec spec;
  if (kind == "dirichlet") {
    spec.kind = BoundaryCondition::Kind::dirichlet;
  } else if (kind == "neumann") {
    spec.kind = BoundaryCondition::Kind::neumann;
  } else if (kind == "frozen") {
    spec.kind = BoundaryCondition::Kind::frozen;
  } else {
    fail("bc.kind", "unknown kind \"" + kind + "\" (choices: dirichlet, neumann, frozen)");
  }
  return spec;
}

EvolveSpec parse_evolve(const json& j) {
  check_keys(j, "evolve", {"dt", "cfl_safety"});
  EvolveSpec spec;
  if (j.contains("dt")) spec.dt = as_positive(j.at("dt"), "evolve.dt");
  if (j.contains("cfl_safety")) {
    spec.cfl_safety = as_positive(j.at("cfl_safety"), "evolve.cfl_safety");
    if (spec.cfl_safety > 1.0) fail("evolve.cfl_safety", "must lie in (0, 1]");
  }
  return spec;
}

AnalysisSpec parse_analysis(const json& j) {
  check_keys(j, "analysis",
             {"n_bins", "n_knots", "tol_inv", "tol_iso", "lambda_floor", "noise_floor",
              "type_surfaces", "surface_level"});
  AnalysisSpec spec;
  if (j.contains("n_bins")) spec.options.n_bins = as_index(j.at("n_bins"), "analysis.n_bins");
  if (j.contains("n_knots")) spec.options.n_knots = as_index(j.at("n_knots"), "analysis.n_knots");
  if (j.contains("tol_inv"))
    spec.options.tol_inv = as_positive(j.at("tol_inv"), "analysis.tol_inv");
  if (j.contains("tol_iso"))
    spec.options.tol_iso = as_positive(j.at("tol_iso"), "analysis.tol_iso");
  if (j.contains("lambda_floor"))
    spec.options.lambda_floor = as_positive(j.at("lambda_floor"), "analysis.lambda_floor");
  if (j.contains("noise_floor"))
    spec.options.noise_floor = as_positive(j.at("noise_floor"), "analysis.noise_floor");
  if (j.contains("type_surfaces"))
    spec.options.type_surfaces = as_bool(j.at("type_surfaces"), "analysis.type_surfaces");
  if (j.contains("surface_level"))
    spec.surface_level = as_double(j.at("surface_level"), "analysis.surface_level");
  return spec;
}

GeodesicSpec parse_geodesic(const json& j) {
  check_keys(j, "geodesic", {"level", "n_seeds", "tau_max", "n_steps"});
  GeodesicSpec spec;
  spec.level = as_double(require(j, "geodesic", "level"), "geodesic.level");
  if (j.contains("n_seeds")) {
    spec.n_seeds = as_int(j.at("n_seeds"), "geodesic.n_seeds");
    if (spec.n_seeds < 1) fail("geodesic.n_seeds", "expected a positive count");
  }
  if (j.contains("tau_max"))
    spec.tau_max = as_positive(j.at("tau_max"), "geodesic.tau_max");
  if (j.contains("n_steps")) {
    spec.n_steps = as_int(j.at("n_steps"), "geodesic.n_steps");
    if (spec.n_steps < 1) fail("geodesic.n_steps", "expected a positive count");
  }
  return spec;
}

/// Closed-form gauge of the body's Wulff shape: |x| for the Euclidean
/// ball, sqrt(x' A^{-1} x) for the ellipsoid body.
std::function<double(std::span<const double>)> gauge_fn(const ConvexBody& body) {
  const int dim = body.dim();
  if (body.kind() == ConvexBody::Kind::euclidean_ball) {
    return [dim](std::span<const double> x) {
      double s = 0.0;
      for (int d = 0; d < dim; ++d) s += x[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
      return std::sqrt(s);
    };
  }
  if (body.kind() == ConvexBody::Kind::ellipsoid) {
    const Eigen::MatrixXd inv = body.ellipsoid_matrix().inverse();
    return [dim, inv](std::span<const double> x) {
      Eigen::VectorXd v(dim);
      for (int d = 0; d < dim; ++d) v[d] = x[static_cast<std::size_t>(d)];
      return std::sqrt(v.dot(inv * v));
    };
  }
  throw ConfigError(
      "initial: this body has no closed-form gauge (use euclidean_ball or ellipsoid)");
}

std::vector<double> resolve_center(const std::vector<double>& requested, int dim,
                                   const std::string& where) {
  if (requested.empty()) return std::vector<double>(static_cast<std::size_t>(dim), 0.0);
  if (requested.size() != static_cast<std::size_t>(dim))
    fail(where, "center size differs from the grid dimension");
  return requested;
}

using SpaceTimeFn = std::function<double(std::span<const double>, double)>;

/// Closed-form space-time solution for the catalog entry; evolve mode
/// samples it once at the start time, manufactured mode at every
/// snapshot time.
SpaceTimeFn initial_value_fn(const RunConfig& config, const std::shared_ptr<const Grid>& grid) {
  const InitialSpec& init = config.initial;
  const int dim = grid->dim();
  switch (init.kind) {
    case InitialSpec::Kind::eigenmode: {
      if (init.modes.empty()) throw ConfigError("initial: eigenmode needs at least one mode");
      for (const auto& mode : init.modes)
        if (mode.wave.size() != static_cast<std::size_t>(dim))
          throw ConfigError("initial: mode wave size differs from the grid dimension");
      const std::vector<double> origin = grid->origin();
      const std::vector<InitialSpec::Mode> modes = init.modes;
      return [modes, origin, dim](std::span<const double> x, double t) {
        double total = 0.0;
        for (const auto& mode : modes) {
          double rate = 0.0;
          double value = mode.amplitude;
          for (int d = 0; d < dim; ++d) {
            const double w = mode.wave[static_cast<std::size_t>(d)];
            rate += w * w;
            if (w != 0.0)
              value *= std::sin(w * (x[static_cast<std::size_t>(d)] -
                                     origin[static_cast<std::size_t>(d)]));
          }
          total += value * std::exp(-rate * t);
        }
        return total;
      };
    }
    case InitialSpec::Kind::gaussian_kernel: {
      const std::vector<double> center = resolve_center(init.center, dim, "initial");
      std::function<double(std::span<const double>)> dist;
      if (config.op.kind == QuasiLinearOperator::Kind::h_laplace) {
        if (!config.body) throw ConfigError("initial: h_laplace needs a body block");
        dist = gauge_fn(make_body(*config.body, dim));
      } else {
        dist = gauge_fn(ConvexBody::euclidean_ball(dim));
      }
      const double t0 = init.t0;
      return [dist, center, dim, t0](std::span<const double> x, double t) {
        const double s = t + t0;
        if (!(s > 0.0)) throw Error("gaussian kernel undefined at time " + format_double(t));
        std::vector<double> shifted(static_cast<std::size_t>(dim));
        for (int d = 0; d < dim; ++d)
          shifted[static_cast<std::size_t>(d)] =
              x[static_cast<std::size_t>(d)] - center[static_cast<std::size_t>(d)];
        const double r = dist(shifted);
        return std::pow(4.0 * std::numbers::pi * s, -0.5 * dim) * std::exp(-r * r / (4.0 * s));
      };
    }
    case InitialSpec::Kind::radial_power: {
      const std::vector<double> center = resolve_center(init.center, dim, "initial");
      const double power = init.power;
      return [center, dim, power](std::span<const double> x, double) {
        double s = 0.0;
        for (int d = 0; d < dim; ++d) {
          const double dx =
              x[static_cast<std::size_t>(d)] - center[static_cast<std::size_t>(d)];
          s += dx * dx;
        }
        return std::pow(std::sqrt(s), power);
      };
    }
    case InitialSpec::Kind::affine_drift: {
      const std::vector<double> center = resolve_center(init.center, dim, "initial");
      const double gamma = init.gamma;
      const double c0 = center.front();
      return [gamma, c0](std::span<const double> x, double t) {
        const double dx = x[0] - c0;
        return gamma * (t + 0.5 * dx * dx);
      };
    }
    case InitialSpec::Kind::body_gauge: {
      if (!config.body) throw ConfigError("initial: body_gauge needs a body block");
      const std::vector<double> center = resolve_center(init.center, dim, "initial");
      const auto dist = gauge_fn(make_body(*config.body, dim));
      return [dist, center, dim](std::span<const double> x, double) {
        std::vector<double> shifted(static_cast<std::size_t>(dim));
        for (int d = 0; d < dim; ++d)
          shifted[static_cast<std::size_t>(d)] =
              x[static_cast<std::size_t>(d)] - center[static_cast<std::size_t>(d)];
        return dist(shifted);
      };
    }
    case InitialSpec::Kind::custom:
      throw ConfigError("initial: custom snapshots cannot be sampled in time");
  }
  throw ConfigError("initial: unknown kind");
}

template <class Fn>
auto stage(const char* name, Fn&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const PipelineError&) {
    throw;
  } catch (const ConfigError& e) {
    throw PipelineError(name, kExitConfig, e.what());
  } catch (const NotInvariantError& e) {
    double worst = 0.0;
    for (const double r : e.residuals()) worst = std::max(worst, r);
    throw PipelineError(name, kExitNotInvariant,
                        std::string(e.what()) + " (max residual " + format_double(worst) +
                            " > tolerance " + format_double(e.tolerance()) + ")");
  } catch (const NumericalError& e) {
    throw PipelineError(name, kExitNumerical, e.what());
  } catch (const Error& e) {
    throw PipelineError(name, kExitNumerical, e.what());
  }
}

}  // namespace

std::string canonical_config_hash(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const std::string canonical = j.dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = "0123456789abcdef"[h & 0xF];
    h >>= 4;
  }
  return out;
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(j, "config",
             {"grid", "domain", "operator", "body", "initial", "bc", "series", "evolve",
              "analysis", "geodesic"});

  RunConfig config;
  if (j.contains("grid")) config.grid = parse_grid(j.at("grid"));
  if (j.contains("domain")) config.domain = parse_domain(j.at("domain"));
  config.op = parse_operator(require(j, "config", "operator"));
  if (j.contains("body")) config.body = parse_body(j.at("body"));
  if (j.contains("initial")) config.initial = parse_initial(j.at("initial"));
  if (j.contains("bc")) config.bc = parse_bc(j.at("bc"));
  if (j.contains("series")) config.series = parse_series(j.at("series"));
  if (j.contains("evolve")) config.evolve = parse_evolve(j.at("evolve"));
  if (j.contains("analysis")) config.analysis = parse_analysis(j.at("analysis"));
  if (j.contains("geodesic")) config.geodesic = parse_geodesic(j.at("geodesic"));
  config.hash = canonical_config_hash(json_text);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::shared_ptr<const Grid> make_grid(const GridSpec& spec) {
  return std::make_shared<const Grid>(spec.shape, spec.origin, spec.spacing);
}

std::shared_ptr<const DomainMask> make_mask(const DomainSpec& spec,
                                            const std::shared_ptr<const Grid>& grid) {
  const int dim = grid->dim();
  const std::vector<double> center = resolve_center(spec.center, dim, "domain");
  switch (spec.shape) {
    case DomainSpec::Shape::box:
      return std::make_shared<const DomainMask>(DomainMask::box(grid));
    case DomainSpec::Shape::ball: {
      const double r = spec.radius;
      return std::make_shared<const DomainMask>(
          DomainMask::from_predicate(grid, [center, dim, r](std::span<const double> x) {
            double s = 0.0;
            for (int d = 0; d < dim; ++d) {
              const double dx =
                  x[static_cast<std::size_t>(d)] - center[static_cast<std::size_t>(d)];
              s += dx * dx;
            }
            return s <= r * r;
          }));
    }
    case DomainSpec::Shape::annulus: {
      const double r0 = spec.inner_radius;
      const double r1 = spec.outer_radius;
      return std::make_shared<const DomainMask>(
          DomainMask::from_predicate(grid, [center, dim, r0, r1](std::span<const double> x) {
            double s = 0.0;
            for (int d = 0; d < dim; ++d) {
              const double dx =
                  x[static_cast<std::size_t>(d)] - center[static_cast<std::size_t>(d)];
              s += dx * dx;
            }
            return s >= r0 * r0 && s <= r1 * r1;
          }));
    }
    case DomainSpec::Shape::cylinder: {
      if (dim < 2) throw ConfigError("domain: a cylinder needs at least two dimensions");
      if (spec.axis < 0 || spec.axis >= dim)
        throw ConfigError("domain: cylinder axis outside the grid dimensions");
      const int axis = spec.axis;
      const double r = spec.radius;
      return std::make_shared<const DomainMask>(
          DomainMask::from_predicate(grid, [center, dim, axis, r](std::span<const double> x) {
            double s = 0.0;
            for (int d = 0; d < dim; ++d) {
              if (d == axis) continue;
              const double dx =
                  x[static_cast<std::size_t>(d)] - center[static_cast<std::size_t>(d)];
              s += dx * dx;
            }
            return s <= r * r;
          }));
    }
    case DomainSpec::Shape::strip: {
      if (spec.normal < 0 || spec.normal >= dim)
        throw ConfigError("domain: strip normal outside the grid dimensions");
      const int normal = spec.normal;
      const double offset = spec.offset;
      const double w = spec.half_width;
      return std::make_shared<const DomainMask>(
          DomainMask::from_predicate(grid, [normal, offset, w](std::span<const double> x) {
            return std::abs(x[static_cast<std::size_t>(normal)] - offset) <= w;
          }));
    }
  }
  throw ConfigError("domain: unknown shape");
}

ConvexBody make_body(const BodySpec& spec, int dim) {
  switch (spec.kind) {
    case ConvexBody::Kind::euclidean_ball:
      return ConvexBody::euclidean_ball(dim);
    case ConvexBody::Kind::ellipsoid: {
      if (spec.matrix.empty()) throw ConfigError("body: ellipsoid needs a matrix");
      if (spec.matrix.size() != static_cast<std::size_t>(dim))
        throw ConfigError("body: matrix size differs from the grid dimension");
      Eigen::MatrixXd A(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int k = 0; k < dim; ++k)
          A(i, k) = spec.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      return ConvexBody::ellipsoid(std::move(A));
    }
    case ConvexBody::Kind::perturbed_ball: {
      if (spec.matrix.empty()) throw ConfigError("body: perturbed_ball needs a matrix");
      if (spec.matrix.size() != static_cast<std::size_t>(dim))
        throw ConfigError("body: matrix size differs from the grid dimension");
      Eigen::MatrixXd B(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int k = 0; k < dim; ++k)
          B(i, k) = spec.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      return ConvexBody::perturbed_ball(dim, spec.epsilon, std::move(B));
    }
    case ConvexBody::Kind::custom:
      break;
  }
  throw ConfigError("body: custom bodies are only available through the library");
}

QuasiLinearOperator make_operator(const RunConfig& config, int dim_hint) {
  int dim = dim_hint;
  if (config.grid) {
    dim = static_cast<int>(config.grid->shape.size());
  } else if (dim == 0 && config.body && !config.body->matrix.empty()) {
    dim = static_cast<int>(config.body->matrix.size());
  }
  if (dim == 0) throw ConfigError("config: a grid block is required to size the operator");

  switch (config.op.kind) {
    case QuasiLinearOperator::Kind::heat:
      return QuasiLinearOperator::heat(dim);
    case QuasiLinearOperator::Kind::p_laplace:
      return QuasiLinearOperator::p_laplace(dim, config.op.p);
    case QuasiLinearOperator::Kind::normalized_p_laplace:
      return QuasiLinearOperator::normalized_p_laplace(dim, config.op.p);
    case QuasiLinearOperator::Kind::h_laplace: {
      if (!config.body) throw ConfigError("operator: h_laplace needs a body block");
      return QuasiLinearOperator::h_laplace(make_body(*config.body, dim));
    }
  }
  throw ConfigError("operator: unknown kind");
}

ScalarField make_initial(const RunConfig& config, double time) {
  if (config.initial.kind == InitialSpec::Kind::custom) {
    ScalarField field = read_field(config.initial.path);
    if (config.grid) {
      const auto grid = make_grid(*config.grid);
      if (!(*grid == field.grid()))
        throw ConfigError("initial: the snapshot file's grid differs from the configured grid");
    }
    field.set_time(time);
    return field;
  }
  if (!config.grid)
    throw ConfigError("config: a grid block is required for catalog initial conditions");
  const auto grid = make_grid(*config.grid);
  const auto mask = make_mask(config.domain, grid);
  const SpaceTimeFn fn = initial_value_fn(config, grid);
  return ScalarField::sample(
      grid, mask, [&fn, time](std::span<const double> x) { return fn(x, time); }, time);
}

BoundaryCondition make_bc(const RunConfig& config, const ScalarField& initial) {
  switch (config.bc.kind) {
    case BoundaryCondition::Kind::dirichlet: {
      std::function<double(double)> offset;
      if (config.initial.kind == InitialSpec::Kind::affine_drift) {
        const double gamma = config.initial.gamma;
        const double start = config.series.start_time;
        offset = [gamma, start](double t) { return gamma * (t - start); };
      }
      return BoundaryCondition::dirichlet_from(initial, offset);
    }
    case BoundaryCondition::Kind::neumann:
      return BoundaryCondition::neumann();
    case BoundaryCondition::Kind::frozen:
      return BoundaryCondition::frozen();
  }
  throw ConfigError("bc: unknown kind");
}

TimeSeriesField make_series(const RunConfig& config) {
  const SeriesSpec& series = config.series;
  if (series.mode == SeriesSpec::Mode::load) {
    if (series.dir.empty()) throw ConfigError("series: load mode needs a directory");
    TimeSeriesField loaded = read_series(series.dir);
    if (config.grid) {
      const auto grid = make_grid(*config.grid);
      if (!(*grid == loaded.grid()))
        throw ConfigError("series: loaded snapshots disagree with the configured grid");
    }
    return loaded;
  }

  if (series.times.empty()) throw ConfigError("series: snapshot times are required");
  for (std::size_t i = 1; i < series.times.size(); ++i)
    if (!(series.times[i] > series.times[i - 1]))
      throw ConfigError("series: snapshot times must be strictly increasing");

  if (series.mode == SeriesSpec::Mode::manufactured) {
    if (config.initial.kind == InitialSpec::Kind::custom)
      throw ConfigError("series: manufactured mode needs a catalog initial condition");
    if (!config.grid)
      throw ConfigError("config: a grid block is required for manufactured series");
    const auto grid = make_grid(*config.grid);
    const auto mask = make_mask(config.domain, grid);
    const SpaceTimeFn fn = initial_value_fn(config, grid);
    std::vector<ScalarField> snapshots;
    snapshots.reserve(series.times.size());
    for (const double t : series.times)
      snapshots.push_back(ScalarField::sample(
          grid, mask, [&fn, t](std::span<const double> x) { return fn(x, t); }, t));
    return TimeSeriesField(std::move(snapshots));
  }

  if (series.times.front() < series.start_time)
    throw ConfigError("series: snapshot times precede the start time");
  const ScalarField initial = make_initial(config, series.start_time);
  const QuasiLinearOperator op = make_operator(config);
  const BoundaryCondition bc = make_bc(config, initial);
  EvolveConfig evolve_config;
  evolve_config.dt = config.evolve.dt;
  evolve_config.snapshot_times = series.times;
  evolve_config.cfl_safety = config.evolve.cfl_safety;
  return run(initial, op, bc, evolve_config);
}

Report run_pipeline(const RunConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  TimeSeriesField series = stage("series", [&] { return make_series(config); });
  QuasiLinearOperator op =
      stage("config", [&] { return make_operator(config, series.grid().dim()); });
  ClassificationReport cls =
      stage("classify", [&] { return classify(series, op, config.analysis.options); });
  Report report = build_report(cls, config);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

Report build_report(const ClassificationReport& cls, const RunConfig& config) {
  Report r;
  r.config_hash = config.hash;
  r.branch = to_string(cls.branch);
  r.alpha = cls.alpha;
  r.lambda = cls.lambda;
  r.lambda_stderr = cls.lambda_stderr;
  r.mu = cls.mu;
  r.gamma = cls.gamma;
  r.residual_invariance = cls.residuals.invariance;
  r.residual_ode = cls.residuals.ode;
  r.residual_pde = cls.residuals.pde;
  r.residual_representation = cls.residuals.representation;
  r.invariance_residuals = cls.invariance_residuals;
  r.critical_levels = cls.critical_levels;

  for (const IntervalReport& in : cls.intervals) {
    Report::Interval out;
    out.bin_lo = in.bin_lo;
    out.bin_hi = in.bin_hi;
    out.s_lo = in.s_lo;
    out.s_hi = in.s_hi;
    out.branch = to_string(in.branch);
    out.det_nonzero = in.det_nonzero;
    out.lambda = in.lambda;
    out.lambda_stderr = in.lambda_stderr;
    out.mu = in.mu;
    out.gamma = in.gamma;
    out.ode_residual = in.ode_residual;
    out.affine_residual = in.affine_residual;
    r.intervals.push_back(std::move(out));
  }

  const EtaTable& table = cls.table;
  const std::size_t n_times = table.n_times();
  r.eta.times = table.times;
  r.eta.bin_width = table.bin_width;
  for (const std::size_t bin : table.usable) {
    r.eta.s.push_back(table.s_means[bin]);
    r.eta.counts.push_back(table.counts[bin]);
    std::vector<double> values(n_times), spread(n_times);
    for (std::size_t j = 0; j < n_times; ++j) {
      values[j] = table.eta_at(bin, j);
      spread[j] = table.spread_at(bin, j);
    }
    r.eta.values.push_back(std::move(values));
    r.eta.spread.push_back(std::move(spread));
  }

  const DeterminantReport& det = cls.determinant;
  r.determinant.median_abs = det.median_abs;
  r.determinant.relative_factor = det.relative_factor;
  r.determinant.absolute_floor = det.absolute_floor;
  r.determinant.nonzero = det.nonzero;
  const std::size_t n_lattice = n_times == 0 ? 0 : det.det.size() / n_times;
  for (std::size_t b = 0; b < n_lattice; ++b) {
    std::vector<double> drow(n_times), frow(n_times), grow(n_times);
    std::vector<bool> srow(n_times);
    for (std::size_t j = 0; j < n_times; ++j) {
      const std::size_t idx = b * n_times + j;
      const bool sig = det.significant[idx] != 0;
      drow[j] = det.det[idx];
      frow[j] = sig ? det.f[idx] : 0.0;
      grow[j] = sig ? det.g[idx] : 0.0;
      srow[j] = sig;
    }
    r.determinant.det.push_back(std::move(drow));
    r.determinant.f.push_back(std::move(frow));
    r.determinant.g.push_back(std::move(grow));
    r.determinant.significant.push_back(std::move(srow));
  }

  r.affine.times = cls.affine.times;
  r.affine.a = cls.affine.a;
  r.affine.b = cls.affine.b;
  r.affine.residual = cls.affine.residual;

  if (cls.iso) {
    Report::Iso iso;
    iso.f.knots = cls.iso->f_fit.knots;
    iso.f.values = cls.iso->f_fit.values;
    iso.f.derivative = cls.iso->f_fit.derivative;
    iso.f.residual = cls.iso->f_fit.residual;
    iso.g.knots = cls.iso->g_fit.knots;
    iso.g.values = cls.iso->g_fit.values;
    iso.g.derivative = cls.iso->g_fit.derivative;
    iso.g.residual = cls.iso->g_fit.residual;
    iso.h_consistency = cls.iso->h_consistency;
    iso.tolerance = cls.iso->tolerance;
    iso.pass = cls.iso->pass;
    r.iso = std::move(iso);
  }

  if (cls.surface) {
    Report::Surface s;
    s.level = cls.surface->level;
    s.type = to_string(cls.surface->type);
    s.cylinder_rank = cls.surface->cylinder_rank;
    s.center = cls.surface->center;
    s.axis = cls.surface->axis;
    for (const CurvatureCluster& c : cls.surface->clusters)
      s.clusters.push_back({c.value, c.multiplicity});
    s.fit_residual = cls.surface->fit_residual;
    s.n_samples = cls.surface->n_samples;
    r.surface = std::move(s);
  }
  return r;
}

namespace {

json to_json(const Report::LevelFit& fit) {
  return json{{"knots", fit.knots},
              {"values", fit.values},
              {"derivative", fit.derivative},
              {"residual", fit.residual}};
}

Report::LevelFit level_fit_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {"knots", "values", "derivative", "residual"});
  Report::LevelFit fit;
  fit.knots = as_double_vector(require(j, where, "knots"), where + ".knots");
  fit.values = as_double_vector(require(j, where, "values"), where + ".values");
  fit.derivative = as_double_vector(require(j, where, "derivative"), where + ".derivative");
  fit.residual = as_double(require(j, where, "residual"), where + ".residual");
  return fit;
}

}  // namespace

std::string report_to_json(const Report& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["tool_version"] = r.tool_version;
  j["config_hash"] = r.config_hash;
  j["wall_clock_seconds"] = r.wall_clock_seconds;
  j["branch"] = r.branch;
  j["alpha"] = r.alpha;
  j["lambda"] = r.lambda;
  j["lambda_stderr"] = r.lambda_stderr;
  j["mu"] = r.mu;
  j["gamma"] = r.gamma;
  j["residuals"] = json{{"invariance", r.residual_invariance},
                        {"ode", r.residual_ode},
                        {"pde", r.residual_pde},
                        {"representation", r.residual_representation}};
  j["invariance_residuals"] = r.invariance_residuals;
  j["critical_levels"] = r.critical_levels;

  json intervals = json::array();
  for (const Report::Interval& in : r.intervals)
    intervals.push_back(json{{"bin_lo", in.bin_lo},
                             {"bin_hi", in.bin_hi},
                             {"s_lo", in.s_lo},
                             {"s_hi", in.s_hi},
                             {"branch", in.branch},
                             {"det_nonzero", in.det_nonzero},
                             {"lambda", in.lambda},
                             {"lambda_stderr", in.lambda_stderr},
                             {"mu", in.mu},
                             {"gamma", in.gamma},
                             {"ode_residual", in.ode_residual},
                             {"affine_residual", in.affine_residual}});
  j["intervals"] = std::move(intervals);

  j["eta"] = json{{"times", r.eta.times},     {"bin_width", r.eta.bin_width},
                  {"s", r.eta.s},             {"counts", r.eta.counts},
                  {"values", r.eta.values},   {"spread", r.eta.spread}};
  j["determinant"] = json{{"median_abs", r.determinant.median_abs},
                          {"relative_factor", r.determinant.relative_factor},
                          {"absolute_floor", r.determinant.absolute_floor},
                          {"nonzero", r.determinant.nonzero},
                          {"det", r.determinant.det},
                          {"f", r.determinant.f},
                          {"g", r.determinant.g},
                          {"significant", r.determinant.significant}};
  j["affine"] = json{{"times", r.affine.times},
                     {"a", r.affine.a},
                     {"b", r.affine.b},
                     {"residual", r.affine.residual}};
  if (r.iso)
    j["iso"] = json{{"f", to_json(r.iso->f)},
                    {"g", to_json(r.iso->g)},
                    {"h_consistency", r.iso->h_consistency},
                    {"tolerance", r.iso->tolerance},
                    {"pass", r.iso->pass}};
  if (r.surface) {
    json clusters = json::array();
    for (const Report::Cluster& c : r.surface->clusters)
      clusters.push_back(json{{"value", c.value}, {"multiplicity", c.multiplicity}});
    j["surface"] = json{{"level", r.surface->level},
                        {"type", r.surface->type},
                        {"cylinder_rank", r.surface->cylinder_rank},
                        {"center", r.surface->center},
                        {"axis", r.surface->axis},
                        {"clusters", std::move(clusters)},
                        {"fit_residual", r.surface->fit_residual},
                        {"n_samples", r.surface->n_samples}};
  }
  return j.dump(2) + "\n";
}

Report report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report: ") + e.what());
  }
  try {
    check_keys(j, "report",
               {"schema_version", "tool_version", "config_hash", "wall_clock_seconds", "branch",
                "alpha", "lambda", "lambda_stderr", "mu", "gamma", "residuals",
                "invariance_residuals", "critical_levels", "intervals", "eta", "determinant",
                "affine", "iso", "surface"});
    Report r;
    r.schema_version = as_int(require(j, "report", "schema_version"), "report.schema_version");
    r.tool_version = as_string(require(j, "report", "tool_version"), "report.tool_version");
    r.config_hash = as_string(require(j, "report", "config_hash"), "report.config_hash");
    r.wall_clock_seconds =
        as_double(require(j, "report", "wall_clock_seconds"), "report.wall_clock_seconds");
    r.branch = as_string(require(j, "report", "branch"), "report.branch");
    r.alpha = as_double(require(j, "report", "alpha"), "report.alpha");
    r.lambda = as_double(require(j, "report", "lambda"), "report.lambda");
    r.lambda_stderr = as_double(require(j, "report", "lambda_stderr"), "report.lambda_stderr");
    r.mu = as_double(require(j, "report", "mu"), "report.mu");
    r.gamma = as_double(require(j, "report", "gamma"), "report.gamma");

    const json& res = require(j, "report", "residuals");
    check_keys(res, "report.residuals", {"invariance", "ode", "pde", "representation"});
    r.residual_invariance = as_double(require(res, "report.residuals", "invariance"), "invariance");
    r.residual_ode = as_double(require(res, "report.residuals", "ode"), "ode");
    r.residual_pde = as_double(require(res, "report.residuals", "pde"), "pde");
    r.residual_representation =
        as_double(require(res, "report.residuals", "representation"), "representation");

    r.invariance_residuals = as_double_vector(require(j, "report", "invariance_residuals"),
                                              "report.invariance_residuals");
    r.critical_levels =
        as_double_vector(require(j, "report", "critical_levels"), "report.critical_levels");

    const json& intervals = require(j, "report", "intervals");
    if (!intervals.is_array()) fail("report.intervals", "expected an array");
    for (const json& in : intervals) {
      check_keys(in, "report.intervals",
                 {"bin_lo", "bin_hi", "s_lo", "s_hi", "branch", "det_nonzero", "lambda",
                  "lambda_stderr", "mu", "gamma", "ode_residual", "affine_residual"});
      Report::Interval out;
      out.bin_lo = as_index(require(in, "interval", "bin_lo"), "interval.bin_lo");
      out.bin_hi = as_index(require(in, "interval", "bin_hi"), "interval.bin_hi");
      out.s_lo = as_double(require(in, "interval", "s_lo"), "interval.s_lo");
      out.s_hi = as_double(require(in, "interval", "s_hi"), "interval.s_hi");
      out.branch = as_string(require(in, "interval", "branch"), "interval.branch");
      out.det_nonzero = as_bool(require(in, "interval", "det_nonzero"), "interval.det_nonzero");
      out.lambda = as_double(require(in, "interval", "lambda"), "interval.lambda");
      out.lambda_stderr =
          as_double(require(in, "interval", "lambda_stderr"), "interval.lambda_stderr");
      out.mu = as_double(require(in, "interval", "mu"), "interval.mu");
      out.gamma = as_double(require(in, "interval", "gamma"), "interval.gamma");
      out.ode_residual =
          as_double(require(in, "interval", "ode_residual"), "interval.ode_residual");
      out.affine_residual =
          as_double(require(in, "interval", "affine_residual"), "interval.affine_residual");
      r.intervals.push_back(std::move(out));
    }

    const json& eta = require(j, "report", "eta");
    check_keys(eta, "report.eta", {"times", "bin_width", "s", "counts", "values", "spread"});
    r.eta.times = as_double_vector(require(eta, "report.eta", "times"), "eta.times");
    r.eta.bin_width = as_double(require(eta, "report.eta", "bin_width"), "eta.bin_width");
    r.eta.s = as_double_vector(require(eta, "report.eta", "s"), "eta.s");
    r.eta.counts = as_index_vector(require(eta, "report.eta", "counts"), "eta.counts");
    for (const json& row : require(eta, "report.eta", "values"))
      r.eta.values.push_back(as_double_vector(row, "eta.values"));
    for (const json& row : require(eta, "report.eta", "spread"))
      r.eta.spread.push_back(as_double_vector(row, "eta.spread"));

    const json& det = require(j, "report", "determinant");
    check_keys(det, "report.determinant",
               {"median_abs", "relative_factor", "absolute_floor", "nonzero", "det", "f", "g",
                "significant"});
    r.determinant.median_abs = as_double(require(det, "determinant", "median_abs"), "median_abs");
    r.determinant.relative_factor =
        as_double(require(det, "determinant", "relative_factor"), "relative_factor");
    r.determinant.absolute_floor =
        as_double(require(det, "determinant", "absolute_floor"), "absolute_floor");
    r.determinant.nonzero = as_bool(require(det, "determinant", "nonzero"), "nonzero");
    for (const json& row : require(det, "determinant", "det"))
      r.determinant.det.push_back(as_double_vector(row, "determinant.det"));
    for (const json& row : require(det, "determinant", "f"))
      r.determinant.f.push_back(as_double_vector(row, "determinant.f"));
    for (const json& row : require(det, "determinant", "g"))
      r.determinant.g.push_back(as_double_vector(row, "determinant.g"));
    for (const json& row : require(det, "determinant", "significant")) {
      std::vector<bool> srow;
      for (const json& v : row) srow.push_back(as_bool(v, "determinant.significant"));
      r.determinant.significant.push_back(std::move(srow));
    }

    const json& affine = require(j, "report", "affine");
    check_keys(affine, "report.affine", {"times", "a", "b", "residual"});
    r.affine.times = as_double_vector(require(affine, "affine", "times"), "affine.times");
    r.affine.a = as_double_vector(require(affine, "affine", "a"), "affine.a");
    r.affine.b = as_double_vector(require(affine, "affine", "b"), "affine.b");
    r.affine.residual = as_double_vector(require(affine, "affine", "residual"), "affine.residual");

    if (j.contains("iso")) {
      const json& iso = j.at("iso");
      check_keys(iso, "report.iso", {"f", "g", "h_consistency", "tolerance", "pass"});
      Report::Iso out;
      out.f = level_fit_from_json(require(iso, "report.iso", "f"), "report.iso.f");
      out.g = level_fit_from_json(require(iso, "report.iso", "g"), "report.iso.g");
      out.h_consistency = as_double(require(iso, "report.iso", "h_consistency"), "h_consistency");
      out.tolerance = as_double(require(iso, "report.iso", "tolerance"), "tolerance");
      out.pass = as_bool(require(iso, "report.iso", "pass"), "pass");
      r.iso = std::move(out);
    }

    if (j.contains("surface")) {
      const json& surface = j.at("surface");
      check_keys(surface, "report.surface",
                 {"level", "type", "cylinder_rank", "center", "axis", "clusters", "fit_residual",
                  "n_samples"});
      Report::Surface out;
      out.level = as_double(require(surface, "surface", "level"), "surface.level");
      out.type = as_string(require(surface, "surface", "type"), "surface.type");
      out.cylinder_rank = as_int(require(surface, "surface", "cylinder_rank"), "cylinder_rank");
      out.center = as_double_vector(require(surface, "surface", "center"), "surface.center");
      out.axis = as_double_vector(require(surface, "surface", "axis"), "surface.axis");
      for (const json& c : require(surface, "surface", "clusters")) {
        check_keys(c, "surface.clusters", {"value", "multiplicity"});
        Report::Cluster cluster;
        cluster.value = as_double(require(c, "cluster", "value"), "cluster.value");
        cluster.multiplicity =
            as_int(require(c, "cluster", "multiplicity"), "cluster.multiplicity");
        out.clusters.push_back(cluster);
      }
      out.fit_residual =
          as_double(require(surface, "surface", "fit_residual"), "surface.fit_residual");
      out.n_samples = as_index(require(surface, "surface", "n_samples"), "surface.n_samples");
      r.surface = std::move(out);
    }
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report: ") + e.what());
  }
}

void write_report(const std::filesystem::path& path, const Report& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << report_to_json(report);
  if (!out) throw Error("cannot write " + path.string());
}

Report read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return report_from_json(buffer.str());
}

int exit_code_for(const std::exception& error) {
  if (const auto* pipeline = dynamic_cast<const PipelineError*>(&error))
    return pipeline->exit_code();
  if (dynamic_cast<const ConfigError*>(&error) != nullptr) return kExitConfig;
  if (dynamic_cast<const NotInvariantError*>(&error) != nullptr) return kExitNotInvariant;
  return kExitNumerical;
}

}  // namespace matzoh
