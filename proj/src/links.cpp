#include "lgw/links.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lgw {

U1LinkSpace u1_link(int ell) {
  if (ell < 1) throw std::invalid_argument("u1_link: ell must be >= 1");
  U1LinkSpace s;
  s.ell = ell;
  s.dim = 2 * ell + 1;
  s.E = Eigen::MatrixXcd::Zero(s.dim, s.dim);
  s.Lp = Eigen::MatrixXcd::Zero(s.dim, s.dim);
  const double l2 = static_cast<double>(ell) * (ell + 1);
  for (int n = 0; n < s.dim; ++n) {
    const int m = n - ell;
    s.E(n, n) = m;
    if (n + 1 < s.dim) s.Lp(n + 1, n) = std::sqrt(l2 - static_cast<double>(m) * (m + 1));
  }
  s.Lm = s.Lp.adjoint();
  s.Utilde = s.Lp / std::sqrt(l2);
  return s;
}

double u1_unitarity_deficit(int ell, int m_window) {
  U1LinkSpace s = u1_link(ell);
  const double l2 = static_cast<double>(ell) * (ell + 1);
  double worst = 0;
  for (int m = -ell; m <= ell; ++m) {
    if (m_window >= 0 && std::abs(m) > m_window) continue;
    // (U~^dag U~)_{mm} = (l(l+1) - m(m+1)) / (l(l+1))
    worst = std::max(worst, std::abs(static_cast<double>(m) * (m + 1)) / l2);
  }
  return worst;
}

ZnLinkSpace zn_link(int N) {
  if (N < 2) throw std::invalid_argument("zn_link: N must be >= 2");
  ZnLinkSpace s;
  s.N = N;
  s.delta = 2.0 * std::numbers::pi / N;
  s.dim = N;
  s.m_values.resize(N);
  const int m_min = (N % 2 == 1) ? -(N - 1) / 2 : -N / 2;
  s.P = Eigen::MatrixXcd::Zero(N, N);
  s.Q = Eigen::MatrixXcd::Zero(N, N);
  s.E = Eigen::MatrixXcd::Zero(N, N);
  for (int n = 0; n < N; ++n) {
    const int m = m_min + n;
    s.m_values(n) = m;
    s.P(n, n) = std::polar(1.0, m * s.delta);
    s.E(n, n) = m;
    // Q |m> = |m-1>, wrapping m_min -> m_max.
    s.Q((n - 1 + N) % N, n) = 1.0;
  }
  return s;
}

ZnHybridReport zn_hybridize(const ZnHybridSpec& spec) {
  const int N = spec.N;
  if (N < 2) throw std::invalid_argument("zn_hybridize: N must be >= 2");
  auto check_size = [&](const std::vector<double>& v, const char* name) {
    if (static_cast<int>(v.size()) != N)
      throw std::invalid_argument(std::string("zn_hybridize: ") + name +
                                  " must list one value per species pair");
  };
  check_size(spec.Delta, "Delta");
  check_size(spec.Omega, "Omega");
  check_size(spec.delta_small, "delta_small");
  std::vector<double> omega = spec.omega_small;
  if (omega.empty()) omega.assign(N, 0.0);
  check_size(omega, "omega_small");
  for (int i = 0; i < N; ++i)
    if (std::abs(spec.Omega[i] + spec.Delta[i]) > 1e-12)
      throw std::invalid_argument(
          "zn_hybridize: hybridization requires Omega_i = -Delta_i");

  // 2N species: a_1..a_{N+1} are modes 0..N, c_2..c_N are modes N+1..2N-1.
  // Pair i (1-based): a_i with partner a_{N+1} (i=1) or c_i (i>1).
  const int n_modes = 2 * N;
  auto pair_modes = [&](int i) -> std::pair<int, int> {
    const int a = i - 1;
    const int p = (i == 1) ? N : N + i - 1;
    return {a, p};
  };

  std::vector<ModeSpec> modes(n_modes);
  for (int m = 0; m < n_modes; ++m)
    modes[m] = ModeSpec{m, Statistics::boson, 1, -1, ""};
  BasisConstraints one_boson;
  TotalRange total;
  for (int m = 0; m < n_modes; ++m) total.modes.push_back(m);
  total.min_total = 1;
  total.max_total = 1;
  one_boson.totals.push_back(total);
  Basis basis = enumerate_basis(modes, one_boson);  // dim 2N, state k = mode k occupied

  // Single-particle ordering check: colex enumeration puts mode k's one-boson
  // state at index k.
  std::vector<int> mode_of_state(basis.dim(), -1);
  for (int s = 0; s < basis.dim(); ++s)
    for (int m = 0; m < n_modes; ++m)
      if (basis.states[s][m]) mode_of_state[s] = m;

  auto hop = [](int to, int from, double coeff) {
    Term t;
    t.coeff = coeff;
    t.factors.push_back({to, FactorKind::create, {}});
    t.factors.push_back({from, FactorKind::annihilate, {}});
    return t;
  };

  TermList h_r, q_terms;
  for (int i = 1; i <= N; ++i) {
    auto [a, p] = pair_modes(i);
    const double diag = spec.Delta[i - 1] + spec.delta_small[i - 1];
    const double cross = spec.Omega[i - 1] + omega[i - 1];
    h_r.push_back(hop(a, a, diag));
    h_r.push_back(hop(p, p, diag));
    h_r.push_back(hop(a, p, cross));
    h_r.push_back(hop(p, a, cross));
  }
  // Q = sum_m b_{m-1}^dag b_m (cyclic) with b_i = (a_i + partner_i)/sqrt(2):
  // b_i^dag b_j = (a_i + p_i)^dag (a_j + p_j) / 2.
  auto b_bilinear = [&](int bi, int bj, double coeff, TermList& out) {
    auto [ai, pi] = pair_modes(bi + 1);
    auto [aj, pj] = pair_modes(bj + 1);
    for (int to : {ai, pi})
      for (int from : {aj, pj}) out.push_back(hop(to, from, coeff / 2.0));
  };
  for (int j = 0; j < N; ++j) b_bilinear((j - 1 + N) % N, j, 1.0, q_terms);

  Eigen::MatrixXcd h_full = Eigen::MatrixXcd(realize(basis, h_r).mat);
  Eigen::MatrixXcd q_full = Eigen::MatrixXcd(realize(basis, q_terms).mat);

  // Transformation to the hybridized single-particle basis: columns are
  // b_1..b_N then d_1..d_N expressed over the one-boson states.
  Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(basis.dim(), 2 * N);
  for (int i = 1; i <= N; ++i) {
    auto [a, p] = pair_modes(i);
    const double r = 1.0 / std::numbers::sqrt2;
    T(a, i - 1) = r;
    T(p, i - 1) = r;
    T(a, N + i - 1) = r;
    T(p, N + i - 1) = -r;
  }
  Eigen::MatrixXcd h_hyb = T.adjoint() * h_full * T;
  Eigen::MatrixXcd q_hyb = T.adjoint() * q_full * T;

  ZnHybridReport rep;
  rep.effective = zn_link(N);
  rep.q_on_b_sector = q_hyb.topLeftCorner(N, N);
  rep.h_r_on_b_sector = h_hyb.topLeftCorner(N, N);
  rep.b_to_m.resize(N);
  for (int i = 0; i < N; ++i) rep.b_to_m[i] = rep.effective.m_values(i);
  rep.b_energies.resize(N);
  rep.d_offsets.resize(N);
  for (int i = 0; i < N; ++i) {
    rep.b_energies[i] = std::real(h_hyb(i, i));
    rep.d_offsets[i] = std::real(h_hyb(N + i, N + i)) - rep.b_energies[i];
  }
  rep.q_unitarity_err =
      (rep.q_on_b_sector.adjoint() * rep.q_on_b_sector -
       Eigen::MatrixXcd::Identity(N, N)).cwiseAbs().maxCoeff();
  Eigen::MatrixXcd qn = Eigen::MatrixXcd::Identity(N, N);
  for (int k = 0; k < N; ++k) qn = rep.q_on_b_sector * qn;
  rep.q_cyclic_err = (qn - Eigen::MatrixXcd::Identity(N, N)).cwiseAbs().maxCoeff();
  rep.d_leakage = std::max(h_hyb.topRightCorner(N, N).cwiseAbs().maxCoeff(),
                           h_hyb.bottomLeftCorner(N, N).cwiseAbs().maxCoeff());
  return rep;
}

Su2LinkSpace su2_link(int n_max) {
  if (n_max < 2) throw std::invalid_argument("su2_link: N_max must be >= 2");
  // Internal modes: 0,1 = left (a1, a2); 2,3 = right (b1, b2).
  std::vector<ModeSpec> modes(4);
  for (int m = 0; m < 4; ++m)
    modes[m] = ModeSpec{m, Statistics::boson, n_max, -1, ""};
  // truncation: N_L = n_a1 + n_a2 <= N_max and likewise on the right
  BasisConstraints caps;
  caps.totals.push_back({{0, 1}, 0, n_max});
  caps.totals.push_back({{2, 3}, 0, n_max});
  Basis full = enumerate_basis(modes, caps);

  auto bilinear = [](int i, int j, cplx coeff) {
    Term t;
    t.coeff = coeff;
    t.factors.push_back({i, FactorKind::create, {}});
    t.factors.push_back({j, FactorKind::annihilate, {}});
    return t;
  };
  const cplx I(0, 1);
  // Pauli matrices (row, col), 0-based.
  // L_a = 1/2 sum_{kl} a_k^dag (sigma_a)_{lk} a_l ; R_a = 1/2 sum b_k^dag (sigma_a)_{kl} b_l.
  auto sigma = [&](int a) {
    Eigen::Matrix2cd s;
    if (a == 0) s << 0, 1, 1, 0;
    else if (a == 1) s << 0, -I, I, 0;
    else s << 1, 0, 0, -1;
    return s;
  };
  std::array<TermList, 3> l_terms, r_terms;
  for (int a = 0; a < 3; ++a) {
    Eigen::Matrix2cd s = sigma(a);
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) {
        if (std::abs(s(l, k)) > 0)
          l_terms[a].push_back(bilinear(k, l, 0.5 * s(l, k)));
        if (std::abs(s(k, l)) > 0)
          r_terms[a].push_back(bilinear(2 + k, 2 + l, 0.5 * s(k, l)));
      }
  }

  // Unnormalized group-element halves:
  //   M_L = [[a1^dag, -a2], [a2^dag, a1]],  M_R = [[b1^dag, b2^dag], [-b2, b1]].
  auto single = [](int mode, FactorKind kind, cplx coeff) {
    Term t;
    t.coeff = coeff;
    t.factors.push_back({mode, kind, {}});
    return TermList{t};
  };
  std::array<std::array<TermList, 2>, 2> ml, mr;
  ml[0][0] = single(0, FactorKind::create, 1.0);
  ml[0][1] = single(1, FactorKind::annihilate, -1.0);
  ml[1][0] = single(1, FactorKind::create, 1.0);
  ml[1][1] = single(0, FactorKind::annihilate, 1.0);
  mr[0][0] = single(2, FactorKind::create, 1.0);
  mr[0][1] = single(3, FactorKind::create, 1.0);
  mr[1][0] = single(3, FactorKind::annihilate, -1.0);
  mr[1][1] = single(2, FactorKind::annihilate, 1.0);

  const int fd = full.dim();
  auto dense = [&](const TermList& ts) {
    return Eigen::MatrixXcd(realize(full, ts).mat);
  };
  // Normalizations as diagonal matrices over the full Fock space:
  // U_L = (N_L+1)^{-1/2} M_L (prefactor acts after M_L),
  // U_R = M_R (N_R+1)^{-1/2} (prefactor acts before M_R).
  Eigen::VectorXd fl(fd), fr(fd), nl(fd), nr(fd);
  for (int s = 0; s < fd; ++s) {
    const auto& occ = full.states[s];
    nl(s) = occ[0] + occ[1];
    nr(s) = occ[2] + occ[3];
    fl(s) = 1.0 / std::sqrt(nl(s) + 1.0);
    fr(s) = 1.0 / std::sqrt(nr(s) + 1.0);
  }
  std::array<std::array<Eigen::MatrixXcd, 2>, 2> u_full, w_full;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Eigen::MatrixXcd acc_u = Eigen::MatrixXcd::Zero(fd, fd);
      Eigen::MatrixXcd acc_w = Eigen::MatrixXcd::Zero(fd, fd);
      for (int c = 0; c < 2; ++c) {
        Eigen::MatrixXcd mlac = dense(ml[a][c]);
        Eigen::MatrixXcd mrcb = dense(mr[c][b]);
        acc_w += mlac * mrcb;
        acc_u += fl.asDiagonal() * mlac * mrcb * fr.asDiagonal();
      }
      u_full[a][b] = acc_u;
      w_full[a][b] = acc_w;
    }

  // Restrict to the N_L = N_R sector.
  std::vector<int> keep;
  for (int s = 0; s < fd; ++s)
    if (nl(s) == nr(s)) keep.push_back(s);

  Su2LinkSpace sp;
  sp.n_max = n_max;
  sp.dim = static_cast<int>(keep.size());
  sp.states.reserve(keep.size());
  sp.n_left.resize(sp.dim);
  sp.truncation_safe.resize(sp.dim);
  for (int i = 0; i < sp.dim; ++i) {
    sp.states.push_back(full.states[keep[i]]);
    sp.n_left(i) = nl(keep[i]);
    sp.truncation_safe[i] = sp.n_left(i) < n_max ? 1 : 0;
  }
  auto restrict_dense = [&](const Eigen::MatrixXcd& m) {
    Eigen::MatrixXcd out(sp.dim, sp.dim);
    for (int i = 0; i < sp.dim; ++i)
      for (int j = 0; j < sp.dim; ++j) out(i, j) = m(keep[i], keep[j]);
    return out;
  };
  sp.Lsq = Eigen::MatrixXcd::Zero(sp.dim, sp.dim);
  sp.Rsq = Eigen::MatrixXcd::Zero(sp.dim, sp.dim);
  for (int a = 0; a < 3; ++a) {
    sp.L[a] = restrict_dense(dense(l_terms[a]));
    sp.R[a] = restrict_dense(dense(r_terms[a]));
    sp.Lsq += sp.L[a] * sp.L[a];
    sp.Rsq += sp.R[a] * sp.R[a];
  }
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      sp.U[a][b] = restrict_dense(u_full[a][b]);
      sp.W[a][b] = restrict_dense(w_full[a][b]);
    }
  return sp;
}

}  // namespace lgw
