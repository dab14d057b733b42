#include <Eigen/Dense>
#include <algorithm>

#include "doctest.h"
#include "lgw/forge.hpp"

using namespace lgw;

namespace {

ModelConfig chain_config(int sites) {
  ModelConfig c;
  c.spatial_dim = 1;
  c.extents = {sites};
  c.boundary = {Boundary::open};
  return c;
}

ModelConfig plaquette_config() {
  ModelConfig c;
  c.spatial_dim = 2;
  c.extents = {2, 2};
  c.boundary = {Boundary::open, Boundary::open};
  return c;
}

Eigen::VectorXd sorted_eigs(const SparseOperator& op) {
  Eigen::MatrixXcd m(op.mat);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  return es.eigenvalues();
}

double comm_norm(const SparseOperator& a, const SparseOperator& b) {
  return max_abs(commutator(a, b));
}

}  // namespace

TEST_CASE("electric term spectra on a single link") {
  // U(1), ell=1, g^2=2 (mu=1): m^2 spectrum {0,1,1}
  ModelConfig c = chain_config(2);
  c.group = GaugeGroup::u1;
  c.ell = 1;
  c.couplings.g2 = 2.0;
  auto a = assemble_model(c);
  auto e = sorted_eigs(realize_named(a, "H_E"));
  CHECK(e(0) == doctest::Approx(0.0));
  CHECK(e(1) == doctest::Approx(1.0));
  CHECK(e(2) == doctest::Approx(1.0));

  // Z_3, mu=1: -cos(m delta) spectrum {-1, 1/2, 1/2}
  ModelConfig z = chain_config(2);
  z.group = GaugeGroup::zn;
  z.n_clock = 3;
  z.couplings.g2 = 2.0;
  auto az = assemble_model(z);
  auto ez = sorted_eigs(realize_named(az, "H_E"));
  CHECK(ez(0) == doctest::Approx(-1.0));
  CHECK(ez(1) == doctest::Approx(0.5));
  CHECK(ez(2) == doctest::Approx(0.5));

  // SU(2), g^2=2: Casimir j(j+1) -> 3/4 on the j=1/2 quadruplet
  ModelConfig s = chain_config(2);
  s.group = GaugeGroup::su2;
  s.n_max = 2;
  s.couplings.g2 = 2.0;
  auto as = assemble_model(s);
  Eigen::MatrixXcd he(realize_named(as, "H_E").mat);
  for (int i = 0; i < as.su2.dim; ++i)
    if (as.su2.n_left(i) == 1)
      CHECK(std::real(he(i, i)) == doctest::Approx(0.75));
}

TEST_CASE("magnetic term: Z2 plaquette flips with eigenvalues +-1") {
  ModelConfig c = plaquette_config();
  c.group = GaugeGroup::zn;
  c.n_clock = 2;
  auto a = assemble_model(c);
  REQUIRE(a.basis.dim() == 16);
  auto e = sorted_eigs(realize_named(a, "H_B"));
  for (int i = 0; i < 8; ++i) CHECK(e(i) == doctest::Approx(-1.0));
  for (int i = 8; i < 16; ++i) CHECK(e(i) == doctest::Approx(1.0));
}

TEST_CASE("magnetic term: U(1) plaquette maps zero flux to both loop orientations") {
  ModelConfig c = plaquette_config();
  c.group = GaugeGroup::u1;
  c.ell = 1;
  c.couplings.g2 = 2.0;
  auto a = assemble_model(c);
  Occupation zero(a.modes.size(), 1);  // index 1 = m = 0 on each link
  StateVec img = apply_terms(a.terms.at("H_B"), a.modes, zero);
  REQUIRE(img.size() == 2);
  for (const auto& [occ, amp] : img) {
    CHECK(std::abs(amp - cplx(-0.5, 0)) <= 1e-14);  // -1/g^2 * unit elements
    int raised = 0, lowered = 0;
    for (int m : {0, 1, 2, 3}) {
      raised += occ[m] == 2;
      lowered += occ[m] == 0;
    }
    CHECK(raised == 2);  // loop flux: two links up, two down
    CHECK(lowered == 2);
  }
}

TEST_CASE("magnetic term on a chain is the zero operator with warning") {
  ModelConfig c = chain_config(3);
  auto a = assemble_model(c);
  bool warned = false;
  CHECK(magnetic_terms(a, 1.0, &warned).empty());
  CHECK(warned);
}

TEST_CASE("su(2) plaquette trace maps the empty state into all-j=1/2 links") {
  ModelConfig c = plaquette_config();
  c.group = GaugeGroup::su2;
  c.n_max = 2;
  c.build_basis = false;
  auto a = assemble_model(c);
  int vac_idx = -1;
  for (int i = 0; i < a.su2.dim; ++i)
    if (a.su2.n_left(i) == 0) vac_idx = i;
  Occupation vac(a.modes.size(), static_cast<uint8_t>(vac_idx));
  StateVec img = apply_terms(magnetic_terms(a, 1.0), a.modes, vac);
  REQUIRE(!img.empty());
  for (const auto& [occ, amp] : img)
    for (int l = 0; l < 4; ++l)
      CHECK(a.su2.n_left(occ[l]) == 1);  // every link in the fundamental
}

TEST_CASE("hop directionality: moving a fermion toward the link source raises flux") {
  ModelConfig c = chain_config(2);
  c.group = GaugeGroup::u1;
  c.ell = 1;
  c.matter = MatterContent::dynamic;
  c.couplings.eps = 0.25;
  auto a = assemble_model(c);
  // state: link at m=0 (index 1), fermion on site 1
  Occupation st = {1, 0, 1};  // link mode 0, dyn modes 1 (site0), 2 (site1)
  StateVec img = apply_terms(a.terms.at("H_int"), a.modes, st);
  bool found_raise = false;
  for (const auto& [occ, amp] : img)
    if (occ[1] == 1 && occ[2] == 0) {
      found_raise = true;
      CHECK(occ[0] == 2);  // m = +1
      CHECK(std::abs(amp - cplx(0.25, 0)) <= 1e-14);  // eps * <1|U~|0>
    }
  CHECK(found_raise);
  // and the reverse hop from a flux eigenstate lowers it back
  Occupation st2 = {2, 1, 0};
  StateVec img2 = apply_terms(a.terms.at("H_int"), a.modes, st2);
  bool found_lower = false;
  for (const auto& [occ, amp] : img2)
    if (occ[1] == 0 && occ[2] == 1) {
      found_lower = true;
      CHECK(occ[0] == 1);
    }
  CHECK(found_lower);
}

TEST_CASE("constraint term values on placed and displaced matter") {
  ModelConfig c;
  c.spatial_dim = 2;
  c.extents = {3, 3};
  c.boundary = {Boundary::open, Boundary::open};
  c.group = GaugeGroup::u1;
  c.matter = MatterContent::aux_loop;
  c.couplings.lambda = 10.0;
  c.build_basis = false;
  auto a = assemble_model(c);
  auto hc = a.terms.at("H_C");

  Occupation st(a.modes.size(), 0);
  for (int l = 0; l < 12; ++l) st[a.link_mode[l]] = 1;  // m = 0 everywhere
  int special = a.geometry.vertex_id({0, 0});
  st[a.psi_mode[special]] = 1;
  StateVec img = apply_terms(hc, a.modes, st);
  CHECK(std::abs(img.at(st) - cplx(-10.0, 0)) <= 1e-12);

  // displaced by one hop: no penalty term acts, gap lambda
  Occupation st2 = st;
  st2[a.psi_mode[special]] = 0;
  st2[a.psi_mode[a.geometry.vertex_id({0, 1})]] = 1;
  CHECK(apply_terms(hc, a.modes, st2).empty());
}

TEST_CASE("hard-core vertex-boson penalty: double occupation costs 2 lambda") {
  ModelConfig c = plaquette_config();
  c.group = GaugeGroup::zn;
  c.n_clock = 3;
  c.matter = MatterContent::aux_loop;
  c.couplings.lambda = 5.0;
  c.build_basis = false;
  auto a = assemble_model(c);
  Occupation st(a.modes.size(), 0);
  for (int l = 0; l < 4; ++l) st[a.link_mode[l]] = 1;
  st[a.psi_mode[0]] = 2;
  StateVec img = apply_terms(a.terms.at("H_C"), a.modes, st);
  CHECK(std::abs(img.at(st) - cplx(10.0, 0)) <= 1e-12);  // lambda*2*(2-1)
}

TEST_CASE("schwinger chain assembly: dimension and gauge invariance") {
  ModelConfig c = chain_config(4);
  c.group = GaugeGroup::u1;
  c.ell = 1;
  c.matter = MatterContent::dynamic;
  c.couplings.g2 = 1.4;
  c.couplings.M = 0.6;
  c.couplings.eps = 0.3;
  auto a = assemble_model(c);
  CHECK(a.basis.dim() == 432);  // 3^3 * 2^4

  auto h = add(add(realize_named(a, "H_E"), realize_named(a, "H_M")),
               realize_named(a, "H_int"));
  for (int v = 0; v < 4; ++v)
    CHECK(comm_norm(gauss_generator(a, v), h) <= 1e-12);

  // Dirac sea with zero flux: every Gauss value is 0
  Occupation sea(a.modes.size(), 0);
  for (int l = 0; l < 3; ++l) sea[a.link_mode[l]] = 1;
  for (int v = 1; v < 4; v += 2) sea[a.dyn_mode[v]] = 1;
  for (int v = 0; v < 4; ++v) CHECK(gauss_diagonal_value(a, v, sea) == 0);
}

TEST_CASE("staggered mass values") {
  ModelConfig c = chain_config(4);
  c.group = GaugeGroup::u1;
  c.matter = MatterContent::dynamic;
  c.couplings.M = 1.0;
  c.build_basis = false;
  auto a = assemble_model(c);
  auto hm = a.terms.at("H_M");
  Occupation st(a.modes.size(), 0);
  for (int l = 0; l < 3; ++l) st[a.link_mode[l]] = 1;
  Occupation s0 = st;
  s0[a.dyn_mode[0]] = 1;
  CHECK(std::abs(apply_terms(hm, a.modes, s0).at(s0) - cplx(1, 0)) <= 1e-14);
  Occupation s1 = st;
  s1[a.dyn_mode[1]] = 1;
  CHECK(std::abs(apply_terms(hm, a.modes, s1).at(s1) - cplx(-1, 0)) <= 1e-14);
  // Dirac sea on 4 sites: H_M eigenvalue -2M
  Occupation sea = st;
  sea[a.dyn_mode[1]] = 1;
  sea[a.dyn_mode[3]] = 1;
  CHECK(std::abs(apply_terms(hm, a.modes, sea).at(sea) - cplx(-2, 0)) <= 1e-14);
}

TEST_CASE("clock-model gauge invariance is unitary: G H G^dag = H") {
  ModelConfig c = plaquette_config();
  c.group = GaugeGroup::zn;
  c.n_clock = 3;
  c.matter = MatterContent::aux_loop;
  c.couplings.mu_from_beta = true;
  c.couplings.beta = 0.8;
  c.couplings.eps = 0.3;
  c.couplings.lambda = 7.0;
  c.build_basis = false;
  auto a = assemble_model(c);
  // four bosons over four soft-core vertices; the total is conserved
  BasisConstraints cons;
  cons.totals.push_back({a.psi_mode, 4, 4});
  Basis basis = enumerate_basis(a.modes, cons);
  REQUIRE(basis.dim() == 81 * 19);  // 19 cap-2 splittings of 4 bosons
  auto h = add(add(realize(basis, a.terms.at("H_E")),
                   realize(basis, a.terms.at("H_int"))),
               realize(basis, a.terms.at("H_C")));
  CHECK(gauss_is_unitary(a));
  for (int v = 0; v < 4; ++v) {
    auto g = realize(basis, gauss_terms(a, v));
    CHECK(max_abs(add(multiply(multiply(g, h), adjoint(g)), scale(h, -1.0))) <=
          1e-12);
  }
}

TEST_CASE("unitary-proxy gauge invariance with auxiliary fermions") {
  ModelConfig c = plaquette_config();
  c.group = GaugeGroup::u1_proxy;
  c.n_clock = 4;
  c.matter = MatterContent::aux_loop;
  c.couplings.mu_from_beta = true;
  c.couplings.beta = 1.0;
  c.couplings.eps = 0.2;
  c.couplings.lambda = 9.0;
  auto a = assemble_model(c);
  REQUIRE(a.basis.dim() == 256 * 16 * 16);
  auto h = add(add(realize_named(a, "H_E"), realize_named(a, "H_int")),
               realize_named(a, "H_C"));
  for (int v = 0; v < 4; ++v) {
    auto g = gauss_generator(a, v);
    CHECK(max_abs(add(multiply(multiply(g, h), adjoint(g)), scale(h, -1.0))) <=
          1e-12);
  }
}

TEST_CASE("su(2) chain gauge invariance for all three components") {
  ModelConfig c = chain_config(2);
  c.group = GaugeGroup::su2;
  c.n_max = 2;
  c.matter = MatterContent::dynamic;
  c.couplings.g2 = 1.3;
  c.couplings.M = 0.4;
  c.couplings.eps = 0.35;
  auto a = assemble_model(c);
  auto h = add(add(realize_named(a, "H_E"), realize_named(a, "H_M")),
               realize_named(a, "H_int"));
  for (int v = 0; v < 2; ++v)
    for (int comp = 0; comp < 3; ++comp)
      CHECK(comm_norm(gauss_generator(a, v, comp), h) <= 1e-12);

  // the idealized-unitary interaction variant is also gauge invariant
  ModelConfig ci = c;
  ci.su2_idealized_unitary = true;
  auto ai = assemble_model(ci);
  auto hi = add(realize_named(ai, "H_E"), realize_named(ai, "H_int"));
  for (int v = 0; v < 2; ++v)
    for (int comp = 0; comp < 3; ++comp)
      CHECK(comm_norm(gauss_generator(ai, v, comp), hi) <= 1e-12);
}

TEST_CASE("pure-gauge Z3 plaquette: dimension and divergence-free sector") {
  ModelConfig c = plaquette_config();
  c.group = GaugeGroup::zn;
  c.n_clock = 3;
  auto a = assemble_model(c);
  CHECK(a.basis.dim() == 81);
  Basis sector = enumerate_gauss_sector(a, {0, 0, 0, 0});
  CHECK(sector.dim() == 3);  // uniform loop fluxes m in {-1,0,1}
  // the full Hamiltonian commutes with the sector: H_E + H_B block-diagonal
  ModelConfig cu = plaquette_config();
  cu.group = GaugeGroup::u1;
  cu.ell = 1;
  auto au = assemble_model(cu);
  Basis su = enumerate_gauss_sector(au, {0, 0, 0, 0});
  CHECK(su.dim() == 3);
}

TEST_CASE("clock special cases: N=2 quadratic identity, N=3 conjugation") {
  auto z2 = zn_link(2);
  Eigen::MatrixXcd p2 = z2.P * z2.P;
  CHECK((p2 + p2.adjoint() - 2.0 * Eigen::MatrixXcd::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() <= 1e-14);
  auto z3 = zn_link(3);
  CHECK((z3.P * z3.P - z3.P.adjoint()).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("fermion phase flag leaves the spectrum invariant") {
  ModelConfig c = chain_config(3);
  c.group = GaugeGroup::u1;
  c.ell = 1;
  c.matter = MatterContent::dynamic;
  c.couplings.g2 = 1.0;
  c.couplings.M = 0.5;
  c.couplings.eps = 0.4;
  auto a = assemble_model(c);
  ModelConfig cp = c;
  cp.fermion_phase_flag = true;
  auto ap = assemble_model(cp);
  auto h = [&](const ModelAssembly& m) {
    return sorted_eigs(add(add(realize_named(m, "H_E"), realize_named(m, "H_M")),
                           realize_named(m, "H_int")));
  };
  CHECK((h(a) - h(ap)).cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("static charges shift the diagonal Gauss value") {
  ModelConfig c = chain_config(3);
  c.group = GaugeGroup::u1;
  c.ell = 1;
  c.static_charges = {1, 0, -1};
  c.build_basis = false;
  auto a = assemble_model(c);
  // flux tube m=+1 on both links matches the +1/-1 charge pair
  Occupation st(a.modes.size(), 2);
  CHECK(gauss_diagonal_value(a, 0, st) == 0);  // div=+1, q=+1
  CHECK(gauss_diagonal_value(a, 1, st) == 0);
  CHECK(gauss_diagonal_value(a, 2, st) == 0);
}
