#pragma once
// Per-theory link Hilbert spaces and gauge operators, as dense matrices on the
// (small) local link space:
//   - U(1) truncated spin-gauge link: integer spin ell, E = L_z, normalized
//     ladder U~ = L_+ / sqrt(ell(ell+1));
//   - Z_N clock link: unitary P (diagonal phases) and Q (cyclic lowering),
//     including the hybridized two-species atomic construction for Z_3;
//   - SU(2) prepotential link: Schwinger-boson left/right generators and the
//     2x2 group-element matrix, realized on the N_L = N_R sector of a
//     four-mode boson Fock space with cap N_max.
//
// Local basis conventions (frozen):
//   - U(1): index n = m + ell (m ascending, -ell..ell);
//   - Z_N: index n = m - m_min with centered flux values
//     m in {-(N-1)/2..(N-1)/2} (N odd) or {-N/2..N/2-1} (N even);
//   - SU(2): sector states of (a1,a2,b1,b2) occupations in colexicographic
//     order, exposed via `states`.

#include <Eigen/Dense>

#include "lgw/fock.hpp"

namespace lgw {

struct U1LinkSpace {
  int ell = 1;
  int dim = 3;  // 2*ell + 1
  Eigen::MatrixXcd E;       // diag(m)
  Eigen::MatrixXcd Lp, Lm;  // angular-momentum ladders
  Eigen::MatrixXcd Utilde;  // Lp / sqrt(ell(ell+1))
};

U1LinkSpace u1_link(int ell);

// max |(U~^dag U~ - 1)_{mm}| over |m| <= m_window (m_window < 0: full space).
double u1_unitarity_deficit(int ell, int m_window = -1);

struct ZnLinkSpace {
  int N = 2;
  double delta = 0;  // 2*pi/N
  int dim = 2;
  Eigen::VectorXi m_values;  // centered flux value per basis index
  Eigen::MatrixXcd P;        // diag(exp(i m delta))
  Eigen::MatrixXcd Q;        // cyclic lowering |m> -> |m-1>
  Eigen::MatrixXcd E;        // diag(m): electric proxy for the N->inf bridge
};

ZnLinkSpace zn_link(int N);

// Hybridized atomic construction of the Z_N clock link from 2N bosonic
// species on one link: a_1..a_{N+1} paired with (a_{N+1}, c_2..c_N) into
// hybridized modes b_i = (a_i + partner_i)/sqrt(2), d_i = (a_i - partner_i)/sqrt(2).
struct ZnHybridSpec {
  int N = 3;
  std::vector<double> Delta;        // detunings, size N (pair index 1..N)
  std::vector<double> Omega;        // Rabi couplings; must equal -Delta
  std::vector<double> delta_small;  // residual b-mode energies, size N
  std::vector<double> omega_small;  // residual cross couplings, size N (default 0)
};

struct ZnHybridReport {
  ZnLinkSpace effective;           // the abstract clock space handed downstream
  std::vector<int> b_to_m;         // hybridized mode index i (0-based) -> flux m
  std::vector<double> b_energies;  // coefficient of b_i^dag b_i in H_R
  std::vector<double> d_offsets;   // energy offset of d_i over b_i (= 2*Delta_i)
  Eigen::MatrixXcd q_on_b_sector;  // N x N: constructed Q in the b one-boson sector
  Eigen::MatrixXcd h_r_on_b_sector;
  double q_unitarity_err = 0;      // ||Q^dag Q - 1||_max
  double q_cyclic_err = 0;         // ||Q^N - 1||_max
  double d_leakage = 0;            // ||b-d cross block of H_R||_max
};

ZnHybridReport zn_hybridize(const ZnHybridSpec& spec);

struct Su2LinkSpace {
  int n_max = 4;
  int dim = 0;  // N_L = N_R sector dimension
  std::vector<Occupation> states;   // (a1, a2, b1, b2) occupations
  Eigen::VectorXd n_left;           // N_L per sector state (= N_R)
  std::vector<char> truncation_safe;  // 1 if N_L < n_max (group element exact)
  std::array<Eigen::MatrixXcd, 3> L, R;  // left/right generators
  Eigen::MatrixXcd Lsq, Rsq;             // Casimirs
  // group element U (normalized) and its dressed form
  // W = sqrt(N_L+1) U sqrt(N_R+1) used by the interaction Hamiltonian.
  std::array<std::array<Eigen::MatrixXcd, 2>, 2> U, W;
};

Su2LinkSpace su2_link(int n_max);

}  // namespace lgw
