#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "matzoh/classify.hpp"
#include "matzoh/convex_body.hpp"
#include "matzoh/errors.hpp"
#include "matzoh/evolve.hpp"
#include "matzoh/grid.hpp"
#include "matzoh/operators.hpp"

namespace matzoh {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// Process exit codes shared by the command-line tool and the pipeline
/// error type.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNotInvariant = 2;
inline constexpr int kExitMixed = 3;
inline constexpr int kExitNumerical = 4;

struct GridSpec {
  std::vector<std::size_t> shape;
  std::vector<double> origin;
  std::vector<double> spacing;
};

/// Domain mask carved out of the grid's bounding box.
struct DomainSpec {
  enum class Shape { box, ball, annulus, cylinder, strip };
  Shape shape = Shape::box;
  std::vector<double> center;  ///< defaults to the origin
  double radius = 1.0;         ///< ball / cylinder cross-section
  double inner_radius = 0.0;   ///< annulus
  double outer_radius = 1.0;   ///< annulus
  int axis = 0;                ///< cylinder: coordinate the tube extends along
  int normal = 0;              ///< strip: coordinate across the slab
  double offset = 0.0;         ///< strip: midplane coordinate
  double half_width = 1.0;     ///< strip
};

struct BodySpec {
  ConvexBody::Kind kind = ConvexBody::Kind::euclidean_ball;
  /// Ellipsoid matrix A (row major) or perturbation quadratic B.
  std::vector<std::vector<double>> matrix;
  double epsilon = 0.0;  ///< perturbed_ball amplitude
};

struct OperatorSpec {
  QuasiLinearOperator::Kind kind = QuasiLinearOperator::Kind::heat;
  double p = 2.0;
};

/// Built-in initial conditions.  The catalog covers all three solution
/// branches plus the anisotropic cases:
///
///   eigenmode        sum of products of sines (Dirichlet eigenmodes of
///                    the box), decaying at rate |wave|^2 under the
///                    manufactured heat flow
///   gaussian_kernel  heat kernel offset t0 in time; under an
///                    anisotropy body with a closed-form gauge the
///                    Euclidean distance is replaced by the gauge
///   radial_power     |x - c|^power, static
///   affine_drift     gamma * (t + (x_1 - c_1)^2 / 2)
///   body_gauge       gauge of the operator body's Wulff shape, static
///   custom           tabulated snapshot file
struct InitialSpec {
  enum class Kind { eigenmode, gaussian_kernel, radial_power, affine_drift, body_gauge, custom };
  struct Mode {
    std::vector<double> wave;
    double amplitude = 1.0;
  };

  Kind kind = Kind::eigenmode;
  std::vector<Mode> modes;     ///< eigenmode
  std::vector<double> center;  ///< defaults to the origin
  double t0 = 0.25;            ///< gaussian_kernel time offset
  double power = 1.0;          ///< radial_power exponent
  double gamma = 1.0;          ///< affine_drift rate
  std::filesystem::path path;  ///< custom snapshot file
};

/// Where the snapshot series comes from.  `manufactured` samples the
/// closed-form heat-flow solution of the catalog entry (exact data for
/// regression tests); `evolve` time-steps the initial condition under
/// the configured operator; `load` reads snapshot files from a
/// directory.
struct SeriesSpec {
  enum class Mode { evolve, manufactured, load };
  Mode mode = Mode::evolve;
  std::vector<double> times;   ///< snapshot times, strictly increasing
  double start_time = 0.0;     ///< time tag of the initial field
  std::filesystem::path dir;   ///< load: snapshot directory
};

struct BcSpec {
  BoundaryCondition::Kind kind = BoundaryCondition::Kind::dirichlet;
};

struct EvolveSpec {
  std::optional<double> dt;  ///< unset: automatic CFL stepping
  double cfl_safety = 0.9;
};

struct AnalysisSpec {
  ClassifyOptions options;
  /// Level sampled by the surface-typing verification command; default
  /// is the median level of the field.
  std::optional<double> surface_level;
};

struct GeodesicSpec {
  double level = 1.0;
  int n_seeds = 8;
  double tau_max = 0.25;
  int n_steps = 256;
};

struct RunConfig {
  std::optional<GridSpec> grid;  ///< may come from a loaded snapshot instead
  DomainSpec domain;
  OperatorSpec op;
  std::optional<BodySpec> body;
  InitialSpec initial;
  BcSpec bc;
  SeriesSpec series;
  EvolveSpec evolve;
  AnalysisSpec analysis;
  std::optional<GeodesicSpec> geodesic;
  /// Canonical content hash of the source text (empty for configs built
  /// in code).
  std::string hash;
};

/// Strict parser: unknown keys, wrong types and inconsistent shapes are
/// ConfigErrors.  Sets `hash` to canonical_config_hash(json_text).
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// FNV-1a over the canonical dump (sorted keys, no whitespace), so the
/// hash tracks semantic content rather than formatting.
std::string canonical_config_hash(const std::string& json_text);

std::shared_ptr<const Grid> make_grid(const GridSpec& spec);
std::shared_ptr<const DomainMask> make_mask(const DomainSpec& spec,
                                            const std::shared_ptr<const Grid>& grid);
ConvexBody make_body(const BodySpec& spec, int dim);
/// `dim_hint` sizes the operator when the config has no grid block
/// (snapshot-file runs); pass the loaded series' dimension.
QuasiLinearOperator make_operator(const RunConfig& config, int dim_hint = 0);
/// Initial condition sampled at the given time tag.
ScalarField make_initial(const RunConfig& config, double time);
BoundaryCondition make_bc(const RunConfig& config, const ScalarField& initial);
TimeSeriesField make_series(const RunConfig& config);

/// Flat, serializable mirror of the classification results plus
/// provenance.  Lattice blocks cover the usable (nonempty) level bins
/// only, so every number in the document is finite.
struct Report {
  struct Interval {
    std::size_t bin_lo = 0;
    std::size_t bin_hi = 0;
    double s_lo = 0.0;
    double s_hi = 0.0;
    std::string branch;
    bool det_nonzero = false;
    double lambda = 0.0;
    double lambda_stderr = 0.0;
    double mu = 0.0;
    double gamma = 0.0;
    double ode_residual = 0.0;
    double affine_residual = 0.0;
    bool operator==(const Interval&) const = default;
  };
  struct Eta {
    std::vector<double> times;
    double bin_width = 0.0;
    std::vector<double> s;                     ///< usable bin level means
    std::vector<std::size_t> counts;
    std::vector<std::vector<double>> values;   ///< [bin][time]
    std::vector<std::vector<double>> spread;   ///< [bin][time]
    bool operator==(const Eta&) const = default;
  };
  struct Determinant {
    double median_abs = 0.0;
    double relative_factor = 0.0;
    double absolute_floor = 0.0;
    bool nonzero = false;
    std::vector<std::vector<double>> det;  ///< [bin][time]
    std::vector<std::vector<double>> f;    ///< 0 where not significant
    std::vector<std::vector<double>> g;    ///< 0 where not significant
    std::vector<std::vector<bool>> significant;
    bool operator==(const Determinant&) const = default;
  };
  struct Affine {
    std::vector<double> times;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> residual;
    bool operator==(const Affine&) const = default;
  };
  struct LevelFit {
    std::vector<double> knots;
    std::vector<double> values;
    std::vector<double> derivative;
    double residual = 0.0;
    bool operator==(const LevelFit&) const = default;
  };
  struct Iso {
    LevelFit f;
    LevelFit g;
    double h_consistency = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    bool operator==(const Iso&) const = default;
  };
  struct Cluster {
    double value = 0.0;
    int multiplicity = 0;
    bool operator==(const Cluster&) const = default;
  };
  struct Surface {
    double level = 0.0;
    std::string type;
    int cylinder_rank = 0;
    std::vector<double> center;
    std::vector<double> axis;
    std::vector<Cluster> clusters;
    double fit_residual = 0.0;
    std::size_t n_samples = 0;
    bool operator==(const Surface&) const = default;
  };

  int schema_version = kReportSchemaVersion;
  std::string tool_version = kToolVersion;
  std::string config_hash;
  double wall_clock_seconds = 0.0;

  std::string branch;
  double alpha = 0.0;
  double lambda = 0.0;
  double lambda_stderr = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
  double residual_invariance = 0.0;
  double residual_ode = 0.0;
  double residual_pde = 0.0;
  double residual_representation = 0.0;
  std::vector<double> invariance_residuals;  ///< per snapshot time
  std::vector<double> critical_levels;
  std::vector<Interval> intervals;
  Eta eta;
  Determinant determinant;
  Affine affine;
  std::optional<Iso> iso;
  std::optional<Surface> surface;

  bool operator==(const Report&) const = default;
};

/// A stage failure carrying the stage name and the process exit code
/// the command-line tool should return.
class PipelineError : public Error {
 public:
  PipelineError(const std::string& stage, int exit_code, const std::string& message)
      : Error(stage + ": " + message), stage_(stage), exit_code_(exit_code) {}

  const std::string& stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

/// series -> invariance gate -> classification -> (branch-dependent)
/// level-structure analysis, wrapped so failures carry their stage name
/// and exit code.  A mixed verdict is a valid report, not an error; the
/// command-line tool maps it to kExitMixed.
Report run_pipeline(const RunConfig& config);

Report build_report(const ClassificationReport& cls, const RunConfig& config);

/// Deterministic document: sorted keys, two-space indent, LF endings,
/// shortest round-trip numbers.  Two runs of the same config differ at
/// most in wall_clock_seconds.
std::string report_to_json(const Report& report);
/// Strict inverse of report_to_json (round-trips to an equal value).
Report report_from_json(const std::string& text);
void write_report(const std::filesystem::path& path, const Report& report);
Report read_report(const std::filesystem::path& path);

/// Exit code for an escaped exception (PipelineError carries its own;
/// config errors map to 1, invariance-gate failures to 2, everything
/// else to 4).
int exit_code_for(const std::exception& error);

}  // namespace matzoh
