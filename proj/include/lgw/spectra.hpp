#pragma once
// Eigensolvers and spectrum-comparison metrics: dense (LAPACK-backed)
// diagonalization, a Lanczos lowest-k solver with residual reporting, the
// coupling parameter x, the constant-shift deviation metric
// d = |std(E - E~) / mean(E - E~)|, the scale-mismatch diagnostic, and the
// strong-coupling flux-tube / string-tension observables.

#include <Eigen/Dense>

#include "lgw/forge.hpp"

namespace lgw {

// Full dense spectrum (ascending). Throws std::invalid_argument when the
// operator is not Hermitian within herm_tol.
struct DenseSpectrum {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;  // columns; only filled when requested
};
DenseSpectrum diagonalize_dense(const SparseOperator& op,
                                bool want_vectors = false,
                                double herm_tol = 1e-12);

// Lanczos with full reorthogonalization and a seeded deterministic start
// vector; returns the k lowest Ritz values with per-value residual norms
// ||H v - theta v||. converged means all k residuals <= tol.
struct IterativeSpectrum {
  Eigen::VectorXd values;
  Eigen::VectorXd residuals;
  bool converged = false;
  int iterations = 0;
};
IterativeSpectrum diagonalize_lowest(const SparseOperator& op, int k,
                                     double tol = 1e-9, int max_iter = 0,
                                     uint64_t seed = 20240901);

// x = 1/2 (beta + 1/(l(l+1))) lambda^2 / eps^2: the ratio of the aggregate
// electric coefficient (beta + 1/(l(l+1))) eps^2/lambda to the emergent
// magnetic scale 2 eps^4/lambda^3. Throws on eps <= 0.
double coupling_x(double lambda, double eps, long ell, double beta);

// Level-by-level comparison of two ascending spectra. Unequal counts are
// truncated to the shorter one (flagged). residuals = (E - E~) - mean_shift.
// |mean_shift| < 1e-14 makes d meaningless: reported as +inf with the
// division_guard flag. scale_mismatch = |mean(E) - mean(E~)| / span(E~).
struct SpectrumComparison {
  double mean_shift = 0;
  double d = 0;
  Eigen::VectorXd residuals;
  double scale_mismatch = 0;
  bool division_guard = false;
  bool truncated = false;
};
SpectrumComparison compare_spectra(const Eigen::VectorXd& e,
                                   const Eigen::VectorXd& e_tilde);

// Least-squares line y = slope x + intercept.
struct LinearFit {
  double slope = 0;
  double intercept = 0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Static particle-antiparticle pair on an open chain at strong coupling
// (eps = 0, electric energy only): V(R) = E_ground(pair at separation R)
// - E_ground(vacuum sector). U(1) sectors are enumerated and diagonalized
// exactly (static charges +1/-1 in the Gauss law); SU(2) ground energies come
// from exact minimization over the fusion-constrained link representations
// (static fundamental charges j = 1/2). The linear fit over the scan gives
// the string tension. Throws when a separation exceeds the chain.
struct FluxTubePoint {
  int r = 0;
  double v = 0;
};
struct FluxTubeScan {
  std::vector<FluxTubePoint> points;
  LinearFit fit;  // fit.slope = string tension
};
FluxTubeScan flux_tube_scan(const ModelConfig& chain,
                            const std::vector<int>& separations);

}  // namespace lgw
