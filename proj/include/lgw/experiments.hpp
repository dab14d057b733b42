#pragma once
// Experiment orchestration: JSON config parsing/validation and the drivers
// behind the CLI — algebra/gauge audit, Schwinger-model cross-check,
// loop-method effective expansions (Z_N, finite-truncation U(1), SU(2)),
// the (x, l) deviation-surface sweep, and the strong-coupling flux-tube
// scan. Emits a deterministic report bundle (manifest.json, per-model
// spectra CSVs, decomposition and sweep summary CSVs).

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lgw/effective.hpp"
#include "lgw/forge.hpp"
#include "lgw/spectra.hpp"

namespace lgw {

enum class ExperimentKind {
  audit,
  schwinger,
  loop_zN,
  loop_u1_finite_l,
  loop_su2,
  sweep_xd,
  fluxtube
};

struct SolverConfig {
  std::string mode = "dense";  // dense | lowest_k
  int k = 10;
  double tol = 1e-9;
  uint64_t seed = 20240901;
};

struct SweepConfig {
  std::vector<int> ells = {1, 2, 3, 4, 5};
  std::vector<double> x_grid;   // explicit grid; empty -> log grid below
  double x_min = 0.1, x_max = 10.0;
  int x_points = 13;
  int levels = 6;          // compared levels per grid point
  long reference_ell = 100;  // Kogut-Susskind reference truncation
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::audit;
  std::string tag;  // output file tag; defaults to the kind name
  ModelConfig model;
  std::optional<std::vector<int>> gauss_values;  // sector selection
  int order = 4;
  bool su2_mixed_preparation = false;  // loop_su2: mixed vs pure xi_in
  SolverConfig solver;
  SweepConfig sweep;
  std::vector<int> separations = {0, 1, 2, 3};  // fluxtube
};

// Error taxonomy used by the CLI exit codes: invalid configs raise
// std::invalid_argument, exceeding the dimension budget raises
// DimensionCapError, and eigensolver trouble raises SolverError.
struct DimensionCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Throws std::invalid_argument with a human-readable message on malformed
// JSON or unknown/inconsistent fields.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Canonical JSON echo of a parsed config (stable key order; used by the
// manifest and by reproducibility tests).
std::string config_to_json(const ExperimentConfig& cfg);

// Echo of the parsed config plus derived quantities, suitable for printing
// and for the manifest.
struct ValidationReport {
  bool ok = true;
  std::vector<std::string> diagnostics;  // warnings and violations
  std::map<std::string, double> derived;  // mu, x, dimension estimates, ...
  std::string text() const;
};
ValidationReport validate(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Experiment drivers. run_experiment dispatches to these; they are exposed
// so the acceptance harness can call them directly.

// One row of the algebra / gauge-invariance audit table.
struct AuditRow {
  std::string check;  // relation or invariant being verified
  std::string model;  // model or link-space label
  double value = 0;   // measured deviation
  double threshold = 0;
  bool pass = false;
};
// The full audit: clock relations (P^N = Q^N = 1, P^dag Q P = e^{i delta} Q),
// U(1) ladder property, SU(2) generator algebra and group-element transforms
// on truncation-safe blocks, and per-vertex gauge invariance of every model
// in the standard zoo (probe-column check, exact on the capped Fock space).
std::vector<AuditRow> audit_rows();

// Effective-series report for the loop experiments.
struct LoopReport {
  std::vector<int> m0;                       // ground-sector positions
  std::vector<Eigen::MatrixXcd> orders;      // H_eff^(k), k = 1..order
  std::vector<Decomposition> decomposition;  // labeled, one per order
  std::vector<double> non_constant;          // deviation from c*1, per order
  std::vector<int> m0_flux;                  // loop flux (link 0) per m0 state
  double plaquette_measured = 0;
  double plaquette_predicted = 0;
  double mu_ren_measured = 0;   // loop_zN: renormalized clock coupling
  double mu_ren_predicted = 0;
  double htilde_predicted = 0;  // loop_u1_finite_l: aggregate electric coeff
};
LoopReport run_loop_zn(const ExperimentConfig& cfg);
LoopReport run_loop_u1_finite_l(const ExperimentConfig& cfg);
// cfg.su2_mixed_preparation selects the fermionic initial state (xi_in = 1/2
// instead of 1); the plaquette coefficient is read off the vacuum column of
// H_eff^(4), averaged over the prepared matter configurations.
LoopReport run_loop_su2(const ExperimentConfig& cfg);

// Cross-check of the two sector treatments on a Schwinger chain: full
// diagonalization followed by Gauss-sector filtering of eigenvectors versus
// direct diagonalization of the sector-projected Hamiltonian.
struct SchwingerReport {
  Eigen::VectorXd filtered;   // sector eigenvalues from the full spectrum
  Eigen::VectorXd projected;  // eigenvalues of the projected Hamiltonian
  double max_diff = 0;
};
SchwingerReport run_schwinger(const ExperimentConfig& cfg);

// One grid point of the (x, l) deviation surface: simulator effective
// spectrum (in magnetic units) against the deep-truncation Kogut-Susskind
// reference on the single-plaquette loop sector.
struct SweepRow {
  int ell = 0;
  double x = 0, beta = 0, eps = 0, lambda = 0;
  double d = 0, mean_shift = 0, scale_mismatch = 0;
  int dim_sim = 0, dim_ref = 0, levels = 0;
  bool truncated = false, division_guard = false;
  double seconds = 0;  // wall time (excluded from reproducibility checks)
};
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, int threads = 1);

struct RunBundle {
  std::vector<std::string> files;  // paths written, in emission order
  std::string summary;             // one-paragraph human summary
};

// Runs the experiment and writes the bundle under out_dir (created if
// needed). Deterministic: identical configs give byte-identical CSV bodies.
// threads > 1 parallelizes independent sweep grid points.
RunBundle run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                         int threads = 1);

// 17-significant-digit float formatting used for every numeric CSV field.
std::string fmt17(double v);

}  // namespace lgw
