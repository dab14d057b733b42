#pragma once
// Loop-method machinery: the resolvent of the constraint Hamiltonian, the
// degenerate-perturbation effective expansion through 4th order (computed by
// numerically constructing the block-diagonalizing rotation order by order),
// exact ground-sector reference spectra, labeled decomposition of each order
// over a per-theory operator dictionary, and the auxiliary-fermion partial
// trace used by the SU(2) construction.
//
// Orders 2 and 3 are also available through the closed resolvent formulas
//   H^(2) = -P0 H1 K H1 P0
//   H^(3) =  P0 H1 K H1 K H1 P0 - 1/2 {P0 H1 K^2 H1 P0, P0 H1 P0}
// which the rotation-based construction must reproduce (unit-tested).

#include <Eigen/Dense>

#include "lgw/forge.hpp"

namespace lgw {

struct Resolvent {
  Eigen::VectorXd ec;   // constraint eigenvalues shifted so the minimum is 0
  std::vector<int> m0;  // ground-sector (M0) state indices
  SparseOperator k;     // diag(1/ec) on excited states, 0 on M0
  SparseOperator p0;    // projector onto M0
};

// h_c must be diagonal on `basis`. Throws when an excited constraint level
// sits within gap_tol of the ground level (perturbation theory invalid).
Resolvent build_resolvent(const Basis& basis, const SparseOperator& h_c,
                          double gap_tol = 1e-8);

// Per-order effective Hamiltonians on the M0 sub-block.
struct EffectiveOrders {
  std::vector<int> m0;               // indices into the working basis
  std::vector<Eigen::MatrixXcd> h;   // h[k-1] = H_eff^(k), dim |m0| x |m0|
  Eigen::VectorXd ec;                // shifted constraint energies (working basis)
};

// Core numeric expansion: ec = shifted constraint eigenvalues on the working
// basis, v = perturbation matrix. order in 1..4.
EffectiveOrders effective_orders(const Eigen::VectorXd& ec,
                                 const Eigen::MatrixXcd& v, int order);

// Closed-formula orders 2/3 for cross-checking the rotation construction.
Eigen::MatrixXcd order2_resolvent_formula(const Eigen::VectorXd& ec,
                                          const Eigen::MatrixXcd& v);
Eigen::MatrixXcd order3_resolvent_formula(const Eigen::VectorXd& ec,
                                          const Eigen::MatrixXcd& v);

// Drives the expansion for a loop-method assembly on a working basis
// (typically a Gauss-sector or reachability-closure basis over a.modes):
// H0 = H_C, H1 = H_E + H_int.
EffectiveOrders effective_hamiltonian(const ModelAssembly& a,
                                      const Basis& working, int order);

// ---------------------------------------------------------------------------
// Labeled decomposition over an operator dictionary (least squares in the
// Frobenius inner product).

struct DecompRow {
  std::string label;
  double predicted = 0;  // NaN when the theory predicts no closed form
  double measured = 0;
};
struct Decomposition {
  std::vector<DecompRow> rows;
  double residual_norm = 0;  // Frobenius norm of op - sum(measured * dict)
  double residual_max = 0;
};

Decomposition decompose(
    const Eigen::MatrixXcd& op,
    const std::vector<std::pair<std::string, Eigen::MatrixXcd>>& dictionary,
    const std::vector<double>& predicted);

// Per-theory dictionary term lists with unit coefficients:
// "constant" (identity), electric-type diagonals, and the plaquette operator
// (forward product + h.c.), matching the coefficients quoted by the
// derivation (e.g. plaquette coefficient -2 eps^4/lambda^3 multiplies the
// U(1) entry, -4 eps^4/lambda^3 the Z_N entry).
std::vector<std::pair<std::string, TermList>> decomposition_dictionary(
    const ModelAssembly& a);

// Dictionary term lists realized on a working basis and restricted to the
// ground-sector rows/cols `m0`, ready for decompose().
std::vector<std::pair<std::string, Eigen::MatrixXcd>> realize_dictionary(
    const ModelAssembly& a, const Basis& working, const std::vector<int>& m0);

// Finite-truncation U(1) expansion: the effective series together with its
// per-order labeled decomposition and the predicted aggregate electric
// coefficient (beta + 1/(l(l+1))) * eps^2/lambda of the renormalized
// electric Hamiltonian. Requires the mu = beta*eps^2/lambda wiring.
struct FiniteLSeries {
  EffectiveOrders orders;
  std::vector<Decomposition> decomposition;  // one entry per order
  double htilde_predicted = 0;
};
FiniteLSeries finite_l_series(const ModelAssembly& a, const Basis& working,
                              int order);

// ---------------------------------------------------------------------------

// Dense sub-block helper: rows/cols of `m` at `idx`.
Eigen::MatrixXcd sub_block(const Eigen::MatrixXcd& m,
                           const std::vector<int>& idx);

// Exact reference: realize the sum of all named terms of `a` on `sector`,
// diagonalize densely, return the `count` lowest eigenvalues.
Eigen::VectorXd exact_ground_sector_spectrum(const ModelAssembly& a,
                                             const Basis& sector, int count);

// Reads the plaquette coefficient off a decomposition; uncertainty is the
// residual norm scaled by the dictionary normalization.
struct PlaquetteCoefficient {
  double value = 0;
  double uncertainty = 0;
};
PlaquetteCoefficient extract_plaquette_coefficient(const Decomposition& d);

// Two-point log-slope for power-law scaling checks.
double log_slope(double x1, double y1, double x2, double y2);

// ---------------------------------------------------------------------------
// Partial trace over auxiliary fermion modes for SU(N) loop assemblies.
// `op` lives on `basis` (over a.modes). The auxiliary M0 configuration is
// either pure (special vertices fully occupied, xi_in = 1) or mixed (one
// fermion per special vertex, uniformly over colors, xi_in = 1/N).
struct FermionTrace {
  Basis gauge_basis;    // link-mode occupations only
  Eigen::MatrixXcd op;  // Tr_F(op * rho_F)
  double xi_in = 1;
};
FermionTrace trace_out_fermions(const ModelAssembly& a, const Basis& basis,
                                const Eigen::MatrixXcd& op, bool mixed);

}  // namespace lgw
