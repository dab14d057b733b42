#include <Eigen/Dense>

#include "doctest.h"
#include "lgw/fock.hpp"
#include "lgw/links.hpp"

using namespace lgw;

namespace {
double md(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }
}  // namespace

TEST_CASE("u(1) link: electric eigenvalues, ladder element, ladder property") {
  auto s = u1_link(1);
  CHECK(s.dim == 3);
  CHECK(std::real(s.E(0, 0)) == -1);
  CHECK(std::real(s.E(2, 2)) == 1);
  // <m=1| U~ |m=0> = sqrt(2)/sqrt(2) = 1
  CHECK(std::real(s.Utilde(2, 1)) == doctest::Approx(1.0));
  for (int ell : {1, 2, 3, 7}) {
    auto u = u1_link(ell);
    CHECK(md(u.E * u.Lp - u.Lp * u.E - u.Lp) <= 1e-14);
  }
  CHECK_THROWS_AS(u1_link(0), std::invalid_argument);
}

TEST_CASE("u(1) unitarity deficit: exact values and unitary limit") {
  CHECK(u1_unitarity_deficit(1) == doctest::Approx(1.0));
  CHECK(u1_unitarity_deficit(10, 1) == doctest::Approx(2.0 / 110.0));
  double d5 = u1_unitarity_deficit(5, 1);
  double d10 = u1_unitarity_deficit(10, 1);
  double d20 = u1_unitarity_deficit(20, 1);
  CHECK(d5 > d10);
  CHECK(d10 > d20);
}

TEST_CASE("u(1) link equals the two-species realization E = (Na - Nb)/2") {
  for (int ell : {1, 2, 3}) {
    // two boson species with Na + Nb = 2*ell; m = (Na - Nb)/2
    std::vector<ModeSpec> modes{{0, Statistics::boson, 2 * ell, -1, ""},
                                {1, Statistics::boson, 2 * ell, -1, ""}};
    BasisConstraints c;
    c.totals.push_back({{0, 1}, 2 * ell, 2 * ell});
    Basis b = enumerate_basis(modes, c);
    REQUIRE(b.dim() == 2 * ell + 1);
    // L_+ = a^dag b / ... : Schwinger form L_+ = a0^dag a1
    Term lp{1.0, {{0, FactorKind::create, {}}, {1, FactorKind::annihilate, {}}}};
    Eigen::MatrixXcd Lp = Eigen::MatrixXcd(realize(b, {lp}).mat);
    Eigen::MatrixXcd E = 0.5 * (Eigen::MatrixXcd(ladder(b, 0, LadderKind::number).mat) -
                                Eigen::MatrixXcd(ladder(b, 1, LadderKind::number).mat));
    // basis order: the constrained enumeration emits Nb ascending, i.e.
    // m = ell - Nb descending; reverse to compare with the abstract link
    int d = b.dim();
    Eigen::MatrixXcd Rev = Eigen::MatrixXcd::Zero(d, d);
    for (int i = 0; i < d; ++i) Rev(i, d - 1 - i) = 1;
    auto u = u1_link(ell);
    CHECK(md(Rev * E * Rev - u.E) <= 1e-13);
    CHECK(md(Rev * Lp * Rev - u.Lp) <= 1e-13);
  }
}

TEST_CASE("clock link algebra for several N") {
  for (int N : {2, 3, 5, 8}) {
    auto s = zn_link(N);
    Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(N, N);
    Eigen::MatrixXcd Pn = I, Qn = I;
    for (int k = 0; k < N; ++k) { Pn = s.P * Pn; Qn = s.Q * Qn; }
    CHECK(md(Pn - I) <= 1e-14);
    CHECK(md(Qn - I) <= 1e-14);
    CHECK(md(s.P.adjoint() * s.P - I) <= 1e-14);
    CHECK(md(s.Q.adjoint() * s.Q - I) <= 1e-14);
    CHECK(md(s.P.adjoint() * s.Q * s.P - std::polar(1.0, s.delta) * s.Q) <= 1e-14);
    // conjugation relation implied by P^dag Q P = e^{i delta} Q:
    // Q^k P Q^{-k} = e^{+ik delta} P
    Eigen::MatrixXcd Qk = I;
    for (int k = 1; k <= N; ++k) {
      Qk = s.Q * Qk;
      CHECK(md(Qk * s.P * Qk.adjoint() - std::polar(1.0, k * s.delta) * s.P) <= 1e-13);
    }
  }
  CHECK_THROWS_AS(zn_link(1), std::invalid_argument);
}

TEST_CASE("clock link specifics: Z3 phases and Z2 sign/flip pair") {
  auto z3 = zn_link(3);
  CHECK(z3.m_values(0) == -1);
  CHECK(z3.m_values(2) == 1);
  CHECK(std::arg(z3.P(2, 2)) == doctest::Approx(2.0 * std::acos(-1.0) / 3.0));
  CHECK(std::real(z3.P(1, 1)) == doctest::Approx(1.0));

  auto z2 = zn_link(2);
  CHECK(md(z2.P.adjoint() * z2.Q * z2.P + z2.Q) <= 1e-14);
}

TEST_CASE("large-N clock electric phases reproduce the quadratic spectrum") {
  // cos(m delta) ~ 1 - (delta^2/2) m^2 for small flux: affine match in m^2
  auto s = zn_link(64);
  for (int n = 0; n < s.dim; ++n) {
    int m = s.m_values(n);
    if (std::abs(m) > 4) continue;
    double lhs = std::cos(m * s.delta);
    double affine = 1.0 - 0.5 * s.delta * s.delta * m * m;
    // residual is the quartic remainder, bounded by (m delta)^4 / 24
    CHECK(std::abs(lhs - affine) <= 1.5e-3);
  }
}

TEST_CASE("hybridized Z3 link construction") {
  ZnHybridSpec spec;
  spec.N = 3;
  spec.Delta = {1.0, 2.0, 3.0};
  spec.Omega = {-1.0, -2.0, -3.0};
  const double mu = 0.7;
  spec.delta_small = {mu / 2, -mu, mu / 2};
  auto rep = zn_hybridize(spec);

  // b-sector energies reproduce the clock electric term assignments
  CHECK(rep.b_energies[0] == doctest::Approx(mu / 2));
  CHECK(rep.b_energies[1] == doctest::Approx(-mu));
  CHECK(rep.b_energies[2] == doctest::Approx(mu / 2));
  // d modes are lifted by twice the detuning
  CHECK(rep.d_offsets[0] == doctest::Approx(2.0));
  CHECK(rep.d_offsets[1] == doctest::Approx(4.0));
  CHECK(rep.d_offsets[2] == doctest::Approx(6.0));
  CHECK(rep.d_leakage <= 1e-14);

  // Q maps |b2> -> |b1>, |b3> -> |b2>, |b1> -> |b3>, and is unitary cyclic
  CHECK(std::real(rep.q_on_b_sector(0, 1)) == doctest::Approx(1.0));
  CHECK(std::real(rep.q_on_b_sector(1, 2)) == doctest::Approx(1.0));
  CHECK(std::real(rep.q_on_b_sector(2, 0)) == doctest::Approx(1.0));
  CHECK(rep.q_unitarity_err <= 1e-13);
  CHECK(rep.q_cyclic_err <= 1e-13);
  CHECK(rep.effective.N == 3);

  // mismatched Rabi couplings are rejected
  spec.Omega[1] = 2.0;
  CHECK_THROWS_AS(zn_hybridize(spec), std::invalid_argument);
}

TEST_CASE("su(2) link: casimirs and generator algebra") {
  auto s = su2_link(2);
  // j = N_L / 2: Casimir j(j+1) per sector state
  for (int i = 0; i < s.dim; ++i) {
    double j = s.n_left(i) / 2.0;
    CHECK(std::real(s.Lsq(i, i)) == doctest::Approx(j * (j + 1)).epsilon(1e-12));
  }
  CHECK(md(s.Lsq - s.Rsq) <= 1e-12);

  auto eps = [](int a, int b, int c) {
    return ((a - b + 3) % 3 == 2 && (b - c + 3) % 3 == 2) ? 1.0
           : ((a - b + 3) % 3 == 1 && (b - c + 3) % 3 == 1) ? -1.0 : 0.0;
  };
  const cplx I(0, 1);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      Eigen::MatrixXcd lc = s.L[a] * s.L[b] - s.L[b] * s.L[a];
      Eigen::MatrixXcd rc = s.R[a] * s.R[b] - s.R[b] * s.R[a];
      for (int c = 0; c < 3; ++c) {
        double e = eps(a, b, c);
        if (e != 0.0) {
          lc -= -I * e * s.L[c];
          rc -= I * e * s.R[c];
        }
      }
      CHECK(md(lc) <= 1e-13);
      CHECK(md(rc) <= 1e-13);
      CHECK(md(s.L[a] * s.R[b] - s.R[b] * s.L[a]) <= 1e-13);
    }
}

TEST_CASE("su(2) link: group element transforms and is unitary where safe") {
  auto s = su2_link(2);
  auto sigma = [](int a) {
    Eigen::Matrix2cd m;
    const cplx I(0, 1);
    if (a == 0) m << 0, 1, 1, 0;
    else if (a == 1) m << 0, -I, I, 0;
    else m << 1, 0, 0, -1;
    return m;
  };
  // [L_a, U] = T_a U and [R_a, U] = U T_a on truncation-safe columns
  for (int a = 0; a < 3; ++a) {
    Eigen::Matrix2cd T = 0.5 * sigma(a);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        Eigen::MatrixXcd left = s.L[a] * s.U[r][c] - s.U[r][c] * s.L[a];
        Eigen::MatrixXcd right = s.R[a] * s.U[r][c] - s.U[r][c] * s.R[a];
        for (int d = 0; d < 2; ++d) {
          left -= T(r, d) * s.U[d][c];
          right -= s.U[r][d] * T(d, c);
        }
        for (int col = 0; col < s.dim; ++col)
          if (s.truncation_safe[col]) {
            CHECK(left.col(col).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(right.col(col).cwiseAbs().maxCoeff() <= 1e-12);
          }
      }
  }

  // vacuum: U|0> populates the j=1/2 doublet through the creation entries
  int vac = -1;
  for (int i = 0; i < s.dim; ++i)
    if (s.n_left(i) == 0) vac = i;
  REQUIRE(vac >= 0);
  double norm00 = s.U[0][0].col(vac).norm();
  CHECK(norm00 == doctest::Approx(1.0 / std::sqrt(2.0)));

  // U^dag U = 1 on the truncation-safe sub-block at N_max = 6
  auto s6 = su2_link(6);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(s6.dim, s6.dim);
      for (int k = 0; k < 2; ++k) acc += s6.U[k][r].adjoint() * s6.U[k][c];
      if (r == c) acc -= Eigen::MatrixXcd::Identity(s6.dim, s6.dim);
      double worst = 0;
      for (int col = 0; col < s6.dim; ++col)
        if (s6.truncation_safe[col] && s6.n_left(col) > 0)
          for (int row = 0; row < s6.dim; ++row)
            if (s6.truncation_safe[row] && s6.n_left(row) > 0)
              worst = std::max(worst, std::abs(acc(row, col)));
      CHECK(worst <= 1e-12);
    }
}
