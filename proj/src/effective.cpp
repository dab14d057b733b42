#include "lgw/effective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace lgw {

namespace {

Eigen::VectorXd diagonal_of(const Basis& basis, const SparseOperator& op,
                            const char* who) {
  if (op.basis_id != basis.id)
    throw std::invalid_argument(std::string(who) + ": operator on wrong basis");
  Eigen::VectorXd d = Eigen::VectorXd::Zero(op.dim());
  for (int k = 0; k < op.mat.outerSize(); ++k)
    for (SpMat::InnerIterator it(op.mat, k); it; ++it) {
      if (it.row() != it.col()) {
        if (std::abs(it.value()) > 1e-12)
          throw std::invalid_argument(std::string(who) +
                                      ": constraint Hamiltonian must be diagonal");
        continue;
      }
      if (std::abs(std::imag(it.value())) > 1e-12)
        throw std::invalid_argument(std::string(who) +
                                    ": constraint eigenvalues must be real");
      d(it.row()) = std::real(it.value());
    }
  return d;
}

constexpr double kGroundTol = 1e-9;

}  // namespace

Resolvent build_resolvent(const Basis& basis, const SparseOperator& h_c,
                          double gap_tol) {
  Resolvent r;
  r.ec = diagonal_of(basis, h_c, "build_resolvent");
  const double ground = r.ec.minCoeff();
  r.ec.array() -= ground;  // normalize E_C(0) = 0

  double gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < r.ec.size(); ++i) {
    if (r.ec(i) <= kGroundTol) r.m0.push_back(i);
    else gap = std::min(gap, r.ec(i));
  }
  if (std::isfinite(gap) && gap <= gap_tol)
    throw std::runtime_error(
        "build_resolvent: excited constraint level degenerate with the ground "
        "sector (gap below tolerance)");

  std::vector<Eigen::Triplet<cplx>> kt, pt;
  for (int i = 0; i < r.ec.size(); ++i) {
    if (r.ec(i) <= kGroundTol) pt.emplace_back(i, i, 1.0);
    else kt.emplace_back(i, i, 1.0 / r.ec(i));
  }
  r.k.basis_id = basis.id;
  r.k.mat.resize(r.ec.size(), r.ec.size());
  r.k.mat.setFromTriplets(kt.begin(), kt.end());
  r.p0.basis_id = basis.id;
  r.p0.mat.resize(r.ec.size(), r.ec.size());
  r.p0.mat.setFromTriplets(pt.begin(), pt.end());
  return r;
}

namespace {

using M = Eigen::MatrixXcd;

M ad(const M& a, const M& b) { return a * b - b * a; }

// G solves the order-n block-offdiagonal cancellation: G_ij = T_ij/(E_i - E_j)
// on M0 <-> excited blocks, 0 elsewhere.
M solve_rotation(const Eigen::VectorXd& ec, const M& t) {
  const int n = static_cast<int>(ec.size());
  M g = M::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const bool pi = ec(i) <= kGroundTol, pj = ec(j) <= kGroundTol;
      if (pi != pj) g(i, j) = t(i, j) / (ec(i) - ec(j));
    }
  return g;
}

}  // namespace

EffectiveOrders effective_orders(const Eigen::VectorXd& ec,
                                 const Eigen::MatrixXcd& v, int order) {
  if (order < 1 || order > 4)
    throw std::invalid_argument("effective_orders: order must be 1..4");
  const int n = static_cast<int>(ec.size());
  if (v.rows() != n || v.cols() != n)
    throw std::invalid_argument("effective_orders: dimension mismatch");

  EffectiveOrders out;
  out.ec = ec;
  for (int i = 0; i < n; ++i)
    if (ec(i) <= kGroundTol) out.m0.push_back(i);

  const M h0 = ec.cast<cplx>().asDiagonal();
  std::vector<M> t(5);  // t[k] = order-k collected terms, k = 1..order

  t[1] = v;
  const M g1 = solve_rotation(ec, t[1]);
  if (order >= 2) t[2] = ad(g1, v) + 0.5 * ad(g1, ad(g1, h0));
  M g2, g3;
  if (order >= 3) {
    g2 = solve_rotation(ec, t[2]);
    t[3] = ad(g2, v) + 0.5 * (ad(g1, ad(g2, h0)) + ad(g2, ad(g1, h0))) +
           0.5 * ad(g1, ad(g1, v)) + (1.0 / 6.0) * ad(g1, ad(g1, ad(g1, h0)));
  }
  if (order >= 4) {
    g3 = solve_rotation(ec, t[3]);
    t[4] = ad(g3, v) +
           0.5 * (ad(g1, ad(g3, h0)) + ad(g3, ad(g1, h0)) + ad(g2, ad(g2, h0))) +
           0.5 * (ad(g1, ad(g2, v)) + ad(g2, ad(g1, v))) +
           (1.0 / 6.0) * (ad(g1, ad(g1, ad(g2, h0))) + ad(g1, ad(g2, ad(g1, h0))) +
                          ad(g2, ad(g1, ad(g1, h0)))) +
           (1.0 / 6.0) * ad(g1, ad(g1, ad(g1, v))) +
           (1.0 / 24.0) * ad(g1, ad(g1, ad(g1, ad(g1, h0))));
  }
  for (int k = 1; k <= order; ++k) out.h.push_back(sub_block(t[k], out.m0));
  return out;
}

namespace {

// helper matrices P0 projection / resolvent weights as dense diagonals
void split(const Eigen::VectorXd& ec, Eigen::VectorXd& kdiag,
           Eigen::VectorXd& pdiag) {
  kdiag.resize(ec.size());
  pdiag.resize(ec.size());
  for (int i = 0; i < ec.size(); ++i) {
    const bool p = ec(i) <= kGroundTol;
    pdiag(i) = p ? 1.0 : 0.0;
    kdiag(i) = p ? 0.0 : 1.0 / ec(i);
  }
}

}  // namespace

Eigen::MatrixXcd order2_resolvent_formula(const Eigen::VectorXd& ec,
                                          const Eigen::MatrixXcd& v) {
  Eigen::VectorXd kd, pd;
  split(ec, kd, pd);
  M k = kd.cast<cplx>().asDiagonal();
  M p = pd.cast<cplx>().asDiagonal();
  return -(p * v * k * v * p).eval();
}

Eigen::MatrixXcd order3_resolvent_formula(const Eigen::VectorXd& ec,
                                          const Eigen::MatrixXcd& v) {
  Eigen::VectorXd kd, pd;
  split(ec, kd, pd);
  M k = kd.cast<cplx>().asDiagonal();
  M p = pd.cast<cplx>().asDiagonal();
  M a = p * v * k * v * k * v * p;
  M b = p * v * k * k * v * p;
  M c = p * v * p;
  return (a - 0.5 * (b * c + c * b)).eval();
}

EffectiveOrders effective_hamiltonian(const ModelAssembly& a,
                                      const Basis& working, int order) {
  SparseOperator hc = realize(working, a.terms.at("H_C"));
  Eigen::VectorXd ec = diagonal_of(working, hc, "effective_hamiltonian");
  ec.array() -= ec.minCoeff();
  TermList h1 = a.terms.at("H_E");
  if (auto it = a.terms.find("H_int"); it != a.terms.end()) h1 = h1 + it->second;
  Eigen::MatrixXcd v(realize(working, h1).mat);
  return effective_orders(ec, v, order);
}

Decomposition decompose(
    const Eigen::MatrixXcd& op,
    const std::vector<std::pair<std::string, Eigen::MatrixXcd>>& dictionary,
    const std::vector<double>& predicted) {
  const int nd = static_cast<int>(dictionary.size());
  if (static_cast<int>(predicted.size()) != nd)
    throw std::invalid_argument("decompose: one prediction per dictionary entry");
  // entries that vanish on the restricted block carry coefficient 0
  std::vector<int> live;
  for (int i = 0; i < nd; ++i)
    if (dictionary[i].second.norm() > 1e-14) live.push_back(i);
  const int nl = static_cast<int>(live.size());
  Eigen::MatrixXd gram(nl, nl);
  Eigen::VectorXd rhs(nl);
  for (int i = 0; i < nl; ++i) {
    for (int j = 0; j < nl; ++j)
      gram(i, j) = std::real((dictionary[live[i]].second.adjoint() *
                              dictionary[live[j]].second)
                                 .trace());
    rhs(i) = std::real((dictionary[live[i]].second.adjoint() * op).trace());
  }
  Eigen::VectorXd sol = gram.colPivHouseholderQr().solve(rhs);
  Eigen::VectorXd coeff = Eigen::VectorXd::Zero(nd);
  for (int i = 0; i < nl; ++i) coeff(live[i]) = sol(i);

  Decomposition d;
  Eigen::MatrixXcd resid = op;
  for (int i = 0; i < nd; ++i) {
    d.rows.push_back({dictionary[i].first, predicted[i], coeff(i)});
    resid -= coeff(i) * dictionary[i].second;
  }
  d.residual_norm = resid.norm();
  d.residual_max = resid.cwiseAbs().maxCoeff();
  return d;
}

std::vector<std::pair<std::string, TermList>> decomposition_dictionary(
    const ModelAssembly& a) {
  std::vector<std::pair<std::string, TermList>> dict;
  dict.push_back({"constant", {Term{1.0, {}}}});

  auto link_diag = [&](const Eigen::MatrixXcd& m) {
    TermList out;
    for (int l = 0; l < static_cast<int>(a.geometry.links.size()); ++l)
      out.push_back(Term{1.0, {Factor{a.link_mode[l], FactorKind::local_matrix, m}}});
    return out;
  };

  switch (a.config.group) {
    case GaugeGroup::u1:
      dict.push_back({"electric", link_diag(a.u1.E * a.u1.E)});
      dict.push_back({"electric_linear", link_diag(a.u1.E)});
      // L_z^3 = L_z at l = 1; keep the cubic entry only when independent
      if (a.config.ell > 1)
        dict.push_back({"electric_cubic", link_diag(a.u1.E * a.u1.E * a.u1.E)});
      break;
    case GaugeGroup::u1_proxy:
      dict.push_back({"electric", link_diag(a.zn.E * a.zn.E)});
      dict.push_back({"electric_linear", link_diag(a.zn.E)});
      break;
    case GaugeGroup::zn:
      dict.push_back({"electric", link_diag((a.zn.P + a.zn.P.adjoint()).eval())});
      // P^2 + P^dag^2 coincides with lower entries for N <= 3 (N=2: constant,
      // N=3: equals P + P^dag); include it only when independent
      if (a.config.n_clock >= 4)
        dict.push_back(
            {"electric_quadratic",
             link_diag((a.zn.P * a.zn.P + (a.zn.P * a.zn.P).adjoint()).eval())});
      break;
    case GaugeGroup::su2: {
      Eigen::MatrixXcd cas = Eigen::MatrixXcd::Zero(a.su2.dim, a.su2.dim);
      for (int i = 0; i < a.su2.dim; ++i) {
        const double j = a.su2.n_left(i) / 2.0;
        cas(i, i) = j * (j + 1);
      }
      dict.push_back({"electric", link_diag(cas)});
      break;
    }
  }
  if (!a.geometry.plaquettes.empty()) {
    // unit-coefficient plaquette operator (forward product + h.c.)
    const double raw = a.config.group == GaugeGroup::zn ? -2.0 : -1.0;
    dict.push_back({"plaquette", scaled(magnetic_terms(a, 1.0), raw)});
  }
  return dict;
}

std::vector<std::pair<std::string, Eigen::MatrixXcd>> realize_dictionary(
    const ModelAssembly& a, const Basis& working, const std::vector<int>& m0) {
  std::vector<std::pair<std::string, Eigen::MatrixXcd>> out;
  for (const auto& [label, terms] : decomposition_dictionary(a))
    out.push_back(
        {label, sub_block(Eigen::MatrixXcd(realize(working, terms).mat), m0)});
  return out;
}

FiniteLSeries finite_l_series(const ModelAssembly& a, const Basis& working,
                              int order) {
  if (a.config.group != GaugeGroup::u1)
    throw std::invalid_argument("finite_l_series: U(1) truncated links only");
  if (!a.config.couplings.mu_from_beta)
    throw std::invalid_argument(
        "finite_l_series: requires mu = beta*eps^2/lambda wiring");
  FiniteLSeries s;
  s.orders = effective_hamiltonian(a, working, order);
  const auto dict = realize_dictionary(a, working, s.orders.m0);

  // aggregate of the first-order electric coefficient mu = beta eps^2/lambda
  // and the second-order 1/(l(l+1)) renormalization from link-normalized
  // traveler excursions (verified against the measured order-by-order
  // decomposition)
  const auto& c = a.config.couplings;
  const double ll1 = a.config.ell * (a.config.ell + 1.0);
  s.htilde_predicted = (c.beta + 1.0 / ll1) * c.eps * c.eps / c.lambda;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int k = 1; k <= order; ++k) {
    std::vector<double> predicted(dict.size(), nan);
    for (size_t i = 0; i < dict.size(); ++i) {
      if (k == 1 && dict[i].first == "electric") predicted[i] = c.mu();
      if (k == 4 && dict[i].first == "plaquette")
        predicted[i] = -2.0 * std::pow(c.eps, 4) / std::pow(c.lambda, 3);
    }
    s.decomposition.push_back(decompose(s.orders.h[k - 1], dict, predicted));
  }
  return s;
}

Eigen::MatrixXcd sub_block(const Eigen::MatrixXcd& m,
                           const std::vector<int>& idx) {
  Eigen::MatrixXcd out(idx.size(), idx.size());
  for (size_t i = 0; i < idx.size(); ++i)
    for (size_t j = 0; j < idx.size(); ++j) out(i, j) = m(idx[i], idx[j]);
  return out;
}

Eigen::VectorXd exact_ground_sector_spectrum(const ModelAssembly& a,
                                             const Basis& sector, int count) {
  if (sector.dim() == 0)
    throw std::invalid_argument("exact_ground_sector_spectrum: empty sector");
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(sector.dim(), sector.dim());
  for (const auto& [name, terms] : a.terms) h += Eigen::MatrixXcd(realize(sector, terms).mat);
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::runtime_error("exact_ground_sector_spectrum: non-Hermitian sum");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const int n = std::min<int>(count, sector.dim());
  return es.eigenvalues().head(n);
}

PlaquetteCoefficient extract_plaquette_coefficient(const Decomposition& d) {
  for (const auto& row : d.rows)
    if (row.label == "plaquette")
      return {row.measured, d.residual_norm};
  throw std::invalid_argument(
      "extract_plaquette_coefficient: no plaquette entry in decomposition");
}

double log_slope(double x1, double y1, double x2, double y2) {
  return std::log(y1 / y2) / std::log(x1 / x2);
}

FermionTrace trace_out_fermions(const ModelAssembly& a, const Basis& basis,
                                const Eigen::MatrixXcd& op, bool mixed) {
  if (!a.has_aux())
    throw std::invalid_argument("trace_out_fermions: no auxiliary fermions");
  const int n_links = static_cast<int>(a.geometry.links.size());
  const int n_modes = static_cast<int>(a.modes.size());

  // enumerate the M0 matter configurations and their weights
  std::vector<int> psi_specials, chi_specials;
  for (int v = 0; v < a.geometry.n_vertices; ++v) {
    if (a.classes[v].psi_special) psi_specials.push_back(v);
    if (a.classes[v].chi_special) chi_specials.push_back(v);
  }
  std::vector<std::pair<Occupation, double>> configs;  // matter part, weight
  Occupation matter(n_modes - n_links, 0);
  auto matter_of = [&](int mode) { return mode - n_links; };
  if (!mixed) {
    for (int v : psi_specials)
      for (int c = 0; c < a.n_colors; ++c)
        matter[matter_of(a.psi_mode[v * a.n_colors + c])] = 1;
    for (int v : chi_specials)
      for (int c = 0; c < a.n_colors; ++c)
        matter[matter_of(a.chi_mode[v * a.n_colors + c])] = 1;
    configs.push_back({matter, 1.0});
  } else {
    // one fermion per special vertex, uniform over colors
    std::vector<std::vector<int>> choices;
    for (int v : psi_specials) {
      std::vector<int> c;
      for (int col = 0; col < a.n_colors; ++col)
        c.push_back(matter_of(a.psi_mode[v * a.n_colors + col]));
      choices.push_back(c);
    }
    for (int v : chi_specials) {
      std::vector<int> c;
      for (int col = 0; col < a.n_colors; ++col)
        c.push_back(matter_of(a.chi_mode[v * a.n_colors + col]));
      choices.push_back(c);
    }
    size_t total = 1;
    for (const auto& c : choices) total *= c.size();
    for (size_t k = 0; k < total; ++k) {
      Occupation m(n_modes - n_links, 0);
      size_t rem = k;
      for (const auto& c : choices) {
        m[c[rem % c.size()]] = 1;
        rem /= c.size();
      }
      configs.push_back({m, 1.0 / static_cast<double>(total)});
    }
  }

  // index basis states by (gauge part, matter part)
  std::map<Occupation, int> gauge_index;
  std::vector<Occupation> gauge_states;
  for (const auto& s : basis.states) {
    Occupation g(s.begin(), s.begin() + n_links);
    if (gauge_index.emplace(g, static_cast<int>(gauge_states.size())).second)
      gauge_states.push_back(g);
  }
  std::sort(gauge_states.begin(), gauge_states.end(),
            [](const Occupation& x, const Occupation& y) {
              for (int i = static_cast<int>(x.size()) - 1; i >= 0; --i)
                if (x[i] != y[i]) return x[i] < y[i];
              return false;
            });
  gauge_index.clear();
  for (int i = 0; i < static_cast<int>(gauge_states.size()); ++i)
    gauge_index[gauge_states[i]] = i;

  FermionTrace out;
  out.xi_in = mixed ? 1.0 / a.n_colors : 1.0;
  out.gauge_basis.id = Basis::next_id();
  for (int l = 0; l < n_links; ++l) out.gauge_basis.modes.push_back(a.modes[l]);
  out.gauge_basis.states = gauge_states;
  out.gauge_basis.rebuild_index();

  const int gd = static_cast<int>(gauge_states.size());
  out.op = Eigen::MatrixXcd::Zero(gd, gd);
  Occupation full(n_modes, 0);
  auto full_index = [&](const Occupation& g, const Occupation& m) {
    std::copy(g.begin(), g.end(), full.begin());
    std::copy(m.begin(), m.end(), full.begin() + n_links);
    return basis.index_of(full);
  };
  for (int gi = 0; gi < gd; ++gi)
    for (int gj = 0; gj < gd; ++gj) {
      cplx acc = 0;
      for (const auto& [m, w] : configs) {
        const int i = full_index(gauge_states[gi], m);
        const int j = full_index(gauge_states[gj], m);
        if (i >= 0 && j >= 0) acc += w * op(i, j);
      }
      out.op(gi, gj) = acc;
    }
  return out;
}

}  // namespace lgw
