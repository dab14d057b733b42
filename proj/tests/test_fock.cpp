#include <Eigen/Dense>

#include "doctest.h"
#include "lgw/fock.hpp"

using namespace lgw;

namespace {

std::vector<ModeSpec> make_modes(std::initializer_list<std::pair<Statistics, int>> spec) {
  std::vector<ModeSpec> modes;
  int id = 0;
  for (auto [st, cap] : spec) modes.push_back({id++, st, cap, -1, ""});
  return modes;
}

Eigen::MatrixXcd dense(const SparseOperator& op) { return Eigen::MatrixXcd(op.mat); }

}  // namespace

TEST_CASE("two fermion modes enumerate in colexicographic order") {
  auto modes = make_modes({{Statistics::fermion, 1}, {Statistics::fermion, 1}});
  Basis b = enumerate_basis(modes);
  REQUIRE(b.dim() == 4);
  CHECK(b.states[0] == Occupation{0, 0});
  CHECK(b.states[1] == Occupation{1, 0});
  CHECK(b.states[2] == Occupation{0, 1});
  CHECK(b.states[3] == Occupation{1, 1});
  CHECK(b.index_of({0, 1}) == 2);
  CHECK(b.index_of({2, 0}) == -1);
}

TEST_CASE("total-number constraint prunes the enumeration") {
  auto modes = make_modes({{Statistics::boson, 2}, {Statistics::boson, 2}, {Statistics::boson, 2}});
  BasisConstraints c;
  c.totals.push_back({{0, 1, 2}, 2, 2});
  Basis b = enumerate_basis(modes, c);
  CHECK(b.dim() == 6);  // compositions of 2 into 3 parts <= 2
  for (const auto& s : b.states) CHECK(int(s[0]) + s[1] + s[2] == 2);
}

TEST_CASE("predicates apply once their support is assigned") {
  auto modes = make_modes({{Statistics::boson, 3}, {Statistics::boson, 3}});
  BasisConstraints c;
  c.predicates.push_back({{0, 1},
                          [](const std::vector<int>& v) { return v[0] == v[1]; },
                          "equal occupations"});
  Basis b = enumerate_basis(modes, c);
  CHECK(b.dim() == 4);
  // contradictory constraints give an empty basis, not an error
  c.predicates.push_back({{0}, [](const std::vector<int>& v) { return v[0] > 5; }, "impossible"});
  CHECK(enumerate_basis(modes, c).dim() == 0);
}

TEST_CASE("dimension cap is enforced") {
  auto modes = make_modes({{Statistics::boson, 9}, {Statistics::boson, 9}});
  CHECK_THROWS_AS(enumerate_basis(modes, {}, 50), std::runtime_error);
}

TEST_CASE("fermionic sign convention: ordered-product parity") {
  auto modes = make_modes({{Statistics::fermion, 1}, {Statistics::fermion, 1}});
  Term t;
  t.factors.push_back({1, FactorKind::annihilate, {}});
  StateVec out = apply_terms({t}, modes, Occupation{1, 1});
  REQUIRE(out.size() == 1);
  CHECK(out.at({1, 0}) == cplx(-1.0, 0.0));  // mode 0 occupied below mode 1

  out = apply_terms({t}, modes, Occupation{0, 1});
  CHECK(out.at({0, 0}) == cplx(1.0, 0.0));
}

TEST_CASE("boson ladder algebra: [N, a^dag] = a^dag and cap annihilation") {
  auto modes = make_modes({{Statistics::boson, 3}});
  Basis b = enumerate_basis(modes);
  auto N = ladder(b, 0, LadderKind::number);
  auto Ad = ladder(b, 0, LadderKind::create);
  auto comm = commutator(N, Ad);
  CHECK(max_abs(add(comm, scale(Ad, -1.0))) == doctest::Approx(0.0).epsilon(1e-14));
  // creation at the cap annihilates
  StateVec top = apply_terms({Term{1.0, {{0, FactorKind::create, {}}}}}, modes, Occupation{3});
  CHECK(top.empty());
  // matrix element sqrt(n+1)
  CHECK(std::real(dense(Ad)(2, 1)) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("local-matrix factors branch over the qudit space") {
  auto modes = make_modes({{Statistics::qudit, 2}});
  Basis b = enumerate_basis(modes);
  Eigen::MatrixXcd cyc = Eigen::MatrixXcd::Zero(3, 3);
  cyc(0, 1) = 1; cyc(1, 2) = 1; cyc(2, 0) = 1;  // lowering with wraparound
  Term t;
  t.coeff = cplx(0, 2);
  t.factors.push_back({0, FactorKind::local_matrix, cyc});
  Eigen::MatrixXcd m = dense(realize(b, {t}));
  CHECK(m(0, 1) == cplx(0, 2));
  CHECK(m(2, 0) == cplx(0, 2));
  CHECK(std::abs(m(1, 1)) == 0.0);
}

TEST_CASE("adjoint of a term list matches the matrix adjoint") {
  auto modes = make_modes({{Statistics::fermion, 1}, {Statistics::boson, 2}, {Statistics::fermion, 1}});
  Basis b = enumerate_basis(modes);
  Term t;
  t.coeff = cplx(0.3, -0.7);
  t.factors.push_back({0, FactorKind::create, {}});
  t.factors.push_back({2, FactorKind::annihilate, {}});
  t.factors.push_back({1, FactorKind::create, {}});
  Eigen::MatrixXcd a = dense(realize(b, {t}));
  Eigen::MatrixXcd ad = dense(realize(b, adjoint(TermList{t})));
  CHECK((ad - a.adjoint()).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("dense product oracle for a two-mode hop") {
  // one fermion on two modes: hop = c0^dag c1 + c1^dag c0
  auto modes = make_modes({{Statistics::fermion, 1}, {Statistics::fermion, 1}});
  Basis b = enumerate_basis(modes);
  Term hop01{1.0, {{0, FactorKind::create, {}}, {1, FactorKind::annihilate, {}}}};
  auto H = realize(b, TermList{hop01} + adjoint(TermList{hop01}));
  Eigen::MatrixXcd h = dense(H);
  Eigen::MatrixXcd expect = Eigen::MatrixXcd::Zero(4, 4);
  expect(1, 2) = 1; expect(2, 1) = 1;  // |10> <-> |01>
  CHECK((h - expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-13));
  // H^2 acts as identity on the one-particle block
  Eigen::MatrixXcd h2 = dense(multiply(H, H));
  CHECK(std::real(h2(1, 1)) == doctest::Approx(1.0));
  CHECK(std::real(h2(0, 0)) == doctest::Approx(0.0));
}

TEST_CASE("operator arithmetic rejects mismatched bases") {
  auto modes = make_modes({{Statistics::boson, 1}});
  Basis b1 = enumerate_basis(modes);
  Basis b2 = enumerate_basis(modes);
  auto n1 = ladder(b1, 0, LadderKind::number);
  auto n2 = ladder(b2, 0, LadderKind::number);
  CHECK_THROWS_AS(add(n1, n2), std::invalid_argument);
  CHECK_THROWS_AS(multiply(n1, n2), std::invalid_argument);
}

TEST_CASE("sector restriction by a diagonal conserved quantity") {
  auto modes = make_modes({{Statistics::boson, 2}, {Statistics::boson, 2}});
  Basis b = enumerate_basis(modes);
  auto total = add(ladder(b, 0, LadderKind::number), ladder(b, 1, LadderKind::number));
  SectorBasis sec = sector_restrict(b, {total}, {2.0});
  CHECK(sec.basis.dim() == 3);
  CHECK_FALSE(sec.empty_flagged);
  for (int i : sec.injection) {
    const auto& s = b.states[i];
    CHECK(int(s[0]) + s[1] == 2);
  }
  // projecting an operator keeps only the block
  auto n0 = ladder(b, 0, LadderKind::number);
  auto n0s = project(sec, n0);
  CHECK(n0s.dim() == 3);
  // a non-diagonal quantity is rejected
  auto hop = ladder(b, 0, LadderKind::create);
  CHECK_THROWS_AS(sector_restrict(b, {hop}, {0.0}), std::invalid_argument);
  // contradictory sector value flags empty
  CHECK(sector_restrict(b, {total}, {17.0}).empty_flagged);
}

TEST_CASE("closure basis reaches exactly the hop orbit of a seed") {
  auto modes = make_modes({{Statistics::fermion, 1}, {Statistics::fermion, 1}, {Statistics::fermion, 1}});
  Term hop01{1.0, {{0, FactorKind::create, {}}, {1, FactorKind::annihilate, {}}}};
  TermList gen = TermList{hop01} + adjoint(TermList{hop01});
  Basis orbit = closure_basis(modes, {Occupation{0, 1, 1}}, {&gen}, 4);
  // mode 2 occupation never changes; modes 0/1 exchange the particle
  CHECK(orbit.dim() == 2);
  CHECK(orbit.index_of({1, 0, 1}) >= 0);
  CHECK(orbit.index_of({0, 1, 1}) >= 0);
}

TEST_CASE("triplet export is row col re im lines") {
  auto modes = make_modes({{Statistics::boson, 1}});
  Basis b = enumerate_basis(modes);
  auto n = ladder(b, 0, LadderKind::number);
  CHECK(to_triplets(n) == "1 1 1 0\n");
}
