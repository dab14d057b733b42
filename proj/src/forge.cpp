#include "lgw/forge.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lgw {

namespace {

Factor local(int mode, const Eigen::MatrixXcd& m) {
  return Factor{mode, FactorKind::local_matrix, m};
}
Factor num(int mode) { return Factor{mode, FactorKind::number, {}}; }

// vertex phase (-i)^(n1+n2) for the optional canonical transformation
cplx vertex_phase(const LatticeGeometry& g, int v) {
  int s = 0;
  for (int c : g.vertex_coords(v)) s += c;
  const cplx mi(0, -1);
  cplx p(1, 0);
  for (int k = 0; k < ((s % 4) + 4) % 4; ++k) p *= mi;
  return p;
}

}  // namespace

ModelAssembly assemble_model(const ModelConfig& config) {
  ModelAssembly a;
  a.config = config;
  a.geometry = build_lattice(config.spatial_dim, config.extents, config.boundary);
  a.classes = vertex_classes(a.geometry);

  switch (config.group) {
    case GaugeGroup::u1:
      a.u1 = u1_link(config.ell);
      a.link_dim = a.u1.dim;
      break;
    case GaugeGroup::zn:
    case GaugeGroup::u1_proxy:
      a.zn = zn_link(config.n_clock);
      a.link_dim = a.zn.dim;
      break;
    case GaugeGroup::su2:
      a.su2 = su2_link(config.n_max);
      a.link_dim = a.su2.dim;
      break;
  }
  a.n_colors = config.group == GaugeGroup::su2 ? 2 : 1;

  const int n_links = static_cast<int>(a.geometry.links.size());
  const int nv = a.geometry.n_vertices;
  a.link_mode.resize(n_links);
  int id = 0;
  for (int l = 0; l < n_links; ++l) {
    a.link_mode[l] = id;
    a.modes.push_back({id++, Statistics::qudit, a.link_dim - 1, l, "link"});
  }
  const bool zn_bosons = config.group == GaugeGroup::zn;
  auto add_species = [&](std::vector<int>& lookup, Statistics st, int cap,
                         int colors, const char* label) {
    lookup.assign(nv * colors, -1);
    for (int v = 0; v < nv; ++v)
      for (int c = 0; c < colors; ++c) {
        lookup[v * colors + c] = id;
        a.modes.push_back({id++, st, cap, v, label});
      }
  };
  if (a.has_aux()) {
    if (zn_bosons) {
      // Z_N loop matter: one soft-core vertex boson per vertex. A nominal
      // two-species labeling with species-changing hops is dynamically
      // equivalent to this single species (the label is slaved to the vertex
      // parity on every reachable state).
      add_species(a.psi_mode, Statistics::boson, 2, 1, "vertex boson");
    } else {
      add_species(a.psi_mode, Statistics::fermion, 1, a.n_colors, "psi");
      add_species(a.chi_mode, Statistics::fermion, 1, a.n_colors, "chi");
    }
  }
  if (a.has_dyn())
    add_species(a.dyn_mode, Statistics::fermion, 1, a.n_colors, "dyn");

  const CouplingSet& c = config.couplings;
  a.terms["H_E"] = electric_terms(a, c.mu());
  if (!a.geometry.plaquettes.empty() && config.matter == MatterContent::none)
    a.terms["H_B"] = magnetic_terms(a, c.g2);
  if (a.has_aux()) {
    a.terms["H_int"] = link_interaction_terms(a, c.eps, {true, true, false});
    a.terms["H_C"] = constraint_terms(a, c.lambda);
  }
  if (a.has_dyn()) {
    if (config.matter == MatterContent::dynamic) {
      a.terms["H_M"] = mass_terms(a, c.M);
      a.terms["H_int_dyn"] =
          link_interaction_terms(a, c.eps, {false, false, true});
    } else {
      a.terms["H_D"] = dirac_terms(a, c.M, c.gamma);
    }
  }
  if (config.matter == MatterContent::dynamic && a.terms.count("H_int_dyn")) {
    // single-species dynamic models name their hop H_int
    a.terms["H_int"] = a.terms["H_int_dyn"];
    a.terms.erase("H_int_dyn");
  }

  if (config.build_basis)
    a.basis = enumerate_basis(a.modes, {}, config.dimension_cap);
  return a;
}

TermList electric_terms(const ModelAssembly& a, double mu) {
  TermList out;
  for (int l = 0; l < static_cast<int>(a.geometry.links.size()); ++l) {
    Term t;
    switch (a.config.group) {
      case GaugeGroup::u1:
        t.coeff = mu;
        t.factors.push_back(local(a.link_mode[l], a.u1.E * a.u1.E));
        break;
      case GaugeGroup::u1_proxy:
        t.coeff = mu;
        t.factors.push_back(local(a.link_mode[l], a.zn.E * a.zn.E));
        break;
      case GaugeGroup::zn:
        t.coeff = -mu / 2.0;
        t.factors.push_back(
            local(a.link_mode[l], (a.zn.P + a.zn.P.adjoint()).eval()));
        break;
      case GaugeGroup::su2: {
        // symmetric split g_L = g_R = g^2/2: per link mu * j(j+1)
        Eigen::MatrixXcd cas = Eigen::MatrixXcd::Zero(a.su2.dim, a.su2.dim);
        for (int i = 0; i < a.su2.dim; ++i) {
          double j = a.su2.n_left(i) / 2.0;
          cas(i, i) = j * (j + 1);
        }
        t.coeff = mu;
        t.factors.push_back(local(a.link_mode[l], cas));
        break;
      }
    }
    out.push_back(t);
  }
  return out;
}

TermList magnetic_terms(const ModelAssembly& a, double g2, bool* warned_one_d) {
  TermList out;
  if (a.geometry.plaquettes.empty()) {
    if (warned_one_d) *warned_one_d = true;
    return out;
  }
  if (warned_one_d) *warned_one_d = false;
  const double coeff = a.config.group == GaugeGroup::zn ? -0.5 : -1.0 / g2;
  for (const auto& p : a.geometry.plaquettes) {
    if (a.config.group == GaugeGroup::su2) {
      // Tr(U1 U2 U3^dag U4^dag): contract fundamental indices around the loop
      for (int i0 = 0; i0 < 2; ++i0)
        for (int i1 = 0; i1 < 2; ++i1)
          for (int i2 = 0; i2 < 2; ++i2)
            for (int i3 = 0; i3 < 2; ++i3) {
              Term t;
              t.coeff = coeff;
              t.factors.push_back(local(a.link_mode[p.links[0]], a.su2.U[i0][i1]));
              t.factors.push_back(local(a.link_mode[p.links[1]], a.su2.U[i1][i2]));
              t.factors.push_back(
                  local(a.link_mode[p.links[2]], a.su2.U[i3][i2].adjoint().eval()));
              t.factors.push_back(
                  local(a.link_mode[p.links[3]], a.su2.U[i0][i3].adjoint().eval()));
              out.push_back(t);
            }
    } else {
      Eigen::MatrixXcd fwd;
      if (a.config.group == GaugeGroup::u1) fwd = a.u1.Utilde;
      else if (a.config.group == GaugeGroup::u1_proxy) fwd = a.zn.Q.adjoint();
      else fwd = a.zn.Q;
      Eigen::MatrixXcd bwd = fwd.adjoint();
      Term t;
      t.coeff = coeff;
      for (int i = 0; i < 4; ++i)
        t.factors.push_back(
            local(a.link_mode[p.links[i]], p.reversed[i] ? bwd : fwd));
      out.push_back(t);
    }
  }
  return out + adjoint(out);
}

namespace {

// hop terms f_src^dag X f_tgt + h.c. for one species over all links
void add_hops(const ModelAssembly& a, const std::vector<int>& lookup,
              double coeff, TermList& out) {
  if (lookup.empty()) return;
  const bool su2 = a.config.group == GaugeGroup::su2;
  Eigen::MatrixXcd x;
  if (a.config.group == GaugeGroup::u1) x = a.u1.Utilde;
  else if (a.config.group == GaugeGroup::u1_proxy) x = a.zn.Q.adjoint();
  else if (a.config.group == GaugeGroup::zn) x = a.zn.Q;
  TermList half;
  for (int l = 0; l < static_cast<int>(a.geometry.links.size()); ++l) {
    const int s = a.geometry.links[l].source;
    const int t = a.geometry.links[l].target;
    cplx phase(1, 0);
    if (a.config.fermion_phase_flag)
      phase = std::conj(vertex_phase(a.geometry, s)) * vertex_phase(a.geometry, t);
    for (int ca = 0; ca < a.n_colors; ++ca)
      for (int cb = 0; cb < a.n_colors; ++cb) {
        if (!su2 && ca != cb) continue;
        const Eigen::MatrixXcd& link_op =
            su2 ? (a.config.su2_idealized_unitary ? a.su2.U[ca][cb]
                                                  : a.su2.W[ca][cb])
                : x;
        Term term;
        term.coeff = coeff * phase;
        term.factors.push_back(
            {lookup[s * a.n_colors + ca], FactorKind::create, {}});
        term.factors.push_back(local(a.link_mode[l], link_op));
        term.factors.push_back(
            {lookup[t * a.n_colors + cb], FactorKind::annihilate, {}});
        half.push_back(term);
      }
  }
  out = out + half + adjoint(half);
}

}  // namespace

TermList link_interaction_terms(const ModelAssembly& a, double eps,
                                const SpeciesMap& species) {
  const double coeff =
      (a.config.group == GaugeGroup::su2 && !a.config.su2_idealized_unitary)
          ? eps / std::numbers::sqrt2
          : eps;
  TermList out;
  if (species.psi) add_hops(a, a.psi_mode, coeff, out);
  if (species.chi) add_hops(a, a.chi_mode, coeff, out);
  if (species.dyn) add_hops(a, a.dyn_mode, coeff, out);
  if (out.empty())
    throw std::invalid_argument(
        "link_interaction_terms: no requested fermion family is present");
  return out;
}

TermList mass_terms(const ModelAssembly& a, double M) {
  if (!a.has_dyn())
    throw std::invalid_argument("mass_terms: dynamic matter absent");
  TermList out;
  for (int v = 0; v < a.geometry.n_vertices; ++v)
    for (int c = 0; c < a.n_colors; ++c) {
      Term t;
      t.coeff = M * a.classes[v].parity_sign;
      t.factors.push_back(num(a.dyn_mode[v * a.n_colors + c]));
      out.push_back(t);
    }
  return out;
}

TermList dirac_terms(const ModelAssembly& a, double M, double gamma,
                     double counterterm) {
  TermList out = mass_terms(a, M);
  if (gamma != 0.0) add_hops(a, a.dyn_mode, gamma, out);
  if (counterterm != 0.0)
    for (int v = 0; v < a.geometry.n_vertices; ++v)
      if (a.classes[v].psi_special || a.classes[v].chi_special)
        for (int c = 0; c < a.n_colors; ++c) {
          Term t;
          t.coeff = counterterm;
          t.factors.push_back(num(a.dyn_mode[v * a.n_colors + c]));
          out.push_back(t);
        }
  return out;
}

TermList constraint_terms(const ModelAssembly& a, double lambda) {
  if (!a.has_aux())
    throw std::invalid_argument("constraint_terms: auxiliary matter absent");
  TermList out;
  if (a.config.group == GaugeGroup::zn) {
    // hard-core penalty lambda * N_v (N_v - 1) per vertex boson
    for (int v = 0; v < a.geometry.n_vertices; ++v) {
      const int m = a.psi_mode[v];
      Term sq;
      sq.coeff = lambda;
      sq.factors.push_back(num(m));
      sq.factors.push_back(num(m));
      Term lin;
      lin.coeff = -lambda;
      lin.factors.push_back(num(m));
      out.push_back(sq);
      out.push_back(lin);
    }
    return out;
  }
  for (int v = 0; v < a.geometry.n_vertices; ++v)
    for (int c = 0; c < a.n_colors; ++c) {
      if (a.classes[v].psi_special) {
        Term t;
        t.coeff = -lambda;
        t.factors.push_back(num(a.psi_mode[v * a.n_colors + c]));
        out.push_back(t);
      }
      if (a.classes[v].chi_special) {
        Term t;
        t.coeff = -lambda;
        t.factors.push_back(num(a.chi_mode[v * a.n_colors + c]));
        out.push_back(t);
      }
    }
  return out;
}

bool gauss_is_unitary(const ModelAssembly& a) {
  return a.config.group == GaugeGroup::zn ||
         a.config.group == GaugeGroup::u1_proxy;
}

namespace {

// phase sign s of exp(i s delta n_matter) in the unitary clock generator:
// matches the hop convention (Q lowers for zn, Q^dag raises for the proxy)
int clock_matter_sign(const ModelAssembly& a) {
  return a.config.group == GaugeGroup::zn ? -1 : +1;
}

}  // namespace

TermList gauss_terms(const ModelAssembly& a, int vertex, int component) {
  if (vertex < 0 || vertex >= a.geometry.n_vertices)
    throw std::invalid_argument("gauss_terms: unknown vertex");
  IncidentLinks inc = incident_links(a.geometry, vertex);

  if (gauss_is_unitary(a)) {
    Term g;
    g.coeff = std::polar(1.0, -a.zn.delta * a.static_charge(vertex));
    for (int l : inc.positive)
      g.factors.push_back(local(a.link_mode[l], a.zn.P.adjoint().eval()));
    for (int l : inc.negative)
      g.factors.push_back(local(a.link_mode[l], a.zn.P));
    const int s = clock_matter_sign(a);
    auto matter_phase = [&](int mode) {
      const int dim = a.modes[mode].occupation_cap + 1;
      Eigen::MatrixXcd ph = Eigen::MatrixXcd::Zero(dim, dim);
      for (int n = 0; n < dim; ++n) ph(n, n) = std::polar(1.0, s * n * a.zn.delta);
      g.factors.push_back(local(mode, ph));
    };
    if (a.has_aux()) {
      matter_phase(a.psi_mode[vertex]);
      if (!a.chi_mode.empty()) matter_phase(a.chi_mode[vertex]);
    }
    if (a.has_dyn()) matter_phase(a.dyn_mode[vertex]);
    return {g};
  }

  TermList out;
  if (a.config.group == GaugeGroup::u1) {
    for (int l : inc.positive)
      out.push_back(Term{1.0, {local(a.link_mode[l], a.u1.E)}});
    for (int l : inc.negative)
      out.push_back(Term{-1.0, {local(a.link_mode[l], a.u1.E)}});
    double constant = -a.static_charge(vertex);
    if (a.has_dyn()) {
      out.push_back(Term{-1.0, {num(a.dyn_mode[vertex])}});
      constant += 0.5 * (1.0 - a.classes[vertex].parity_sign);  // staggered
    }
    if (a.has_aux()) {
      out.push_back(Term{-1.0, {num(a.psi_mode[vertex])}});
      out.push_back(Term{-1.0, {num(a.chi_mode[vertex])}});
      constant += (a.classes[vertex].psi_special ? 1.0 : 0.0) +
                  (a.classes[vertex].chi_special ? 1.0 : 0.0);
    }
    if (constant != 0.0) out.push_back(Term{constant, {}});
    return out;
  }

  // su2: G_a = sum_{l+} L_a - sum_{l-} R_a - Q_a
  if (component < 0 || component > 2)
    throw std::invalid_argument("gauss_terms: su2 component must be 0..2");
  for (int l : inc.positive)
    out.push_back(Term{1.0, {local(a.link_mode[l], a.su2.L[component])}});
  for (int l : inc.negative)
    out.push_back(Term{-1.0, {local(a.link_mode[l], a.su2.R[component])}});
  const cplx I(0, 1);
  Eigen::Matrix2cd sig;
  if (component == 0) sig << 0, 1, 1, 0;
  else if (component == 1) sig << 0, -I, I, 0;
  else sig << 1, 0, 0, -1;
  auto add_charge = [&](const std::vector<int>& lookup) {
    if (lookup.empty()) return;
    for (int ca = 0; ca < 2; ++ca)
      for (int cb = 0; cb < 2; ++cb) {
        if (std::abs(sig(ca, cb)) == 0) continue;
        Term t;
        t.coeff = -0.5 * sig(ca, cb);
        t.factors.push_back({lookup[vertex * 2 + ca], FactorKind::create, {}});
        t.factors.push_back({lookup[vertex * 2 + cb], FactorKind::annihilate, {}});
        out.push_back(t);
      }
  };
  add_charge(a.psi_mode);
  add_charge(a.chi_mode);
  add_charge(a.dyn_mode);
  return out;
}

SparseOperator realize_named(const ModelAssembly& a, const std::string& name) {
  return realize(a.basis, a.terms.at(name));
}

SparseOperator gauss_generator(const ModelAssembly& a, int vertex,
                               int component) {
  return realize(a.basis, gauss_terms(a, vertex, component));
}

int gauss_diagonal_value(const ModelAssembly& a, int vertex,
                         const Occupation& occ) {
  IncidentLinks inc = incident_links(a.geometry, vertex);
  auto flux = [&](int l) {
    const int n = occ[a.link_mode[l]];
    if (a.config.group == GaugeGroup::u1) return n - a.config.ell;
    return static_cast<int>(a.zn.m_values(n));
  };
  int div = 0;
  for (int l : inc.positive) div += flux(l);
  for (int l : inc.negative) div -= flux(l);

  switch (a.config.group) {
    case GaugeGroup::u1: {
      int val = div - a.static_charge(vertex);
      if (a.has_dyn())
        val += -occ[a.dyn_mode[vertex]] +
               (a.classes[vertex].parity_sign < 0 ? 1 : 0);
      if (a.has_aux())
        val += -occ[a.psi_mode[vertex]] - occ[a.chi_mode[vertex]] +
               (a.classes[vertex].psi_special ? 1 : 0) +
               (a.classes[vertex].chi_special ? 1 : 0);
      return val;
    }
    case GaugeGroup::zn: {
      int val = div - a.static_charge(vertex);
      if (a.has_aux()) val += occ[a.psi_mode[vertex]];
      const int N = a.config.n_clock;
      return ((val % N) + N) % N;
    }
    case GaugeGroup::u1_proxy: {
      int val = div - a.static_charge(vertex);
      if (a.has_aux())
        val -= occ[a.psi_mode[vertex]] + occ[a.chi_mode[vertex]];
      if (a.has_dyn()) val -= occ[a.dyn_mode[vertex]];
      const int N = a.config.n_clock;
      return ((val % N) + N) % N;
    }
    case GaugeGroup::su2:
      throw std::invalid_argument(
          "gauss_diagonal_value: non-abelian Gauss law is not diagonal");
  }
  return 0;
}

Basis enumerate_gauss_sector(const ModelAssembly& a,
                             const std::vector<int>& values, long dimension_cap,
                             const BasisConstraints& extra) {
  if (static_cast<int>(values.size()) != a.geometry.n_vertices)
    throw std::invalid_argument(
        "enumerate_gauss_sector: one target value per vertex required");
  BasisConstraints cons = extra;
  for (int v = 0; v < a.geometry.n_vertices; ++v) {
    IncidentLinks inc = incident_links(a.geometry, v);
    std::vector<int> support;
    for (int l : inc.positive) support.push_back(a.link_mode[l]);
    for (int l : inc.negative) support.push_back(a.link_mode[l]);
    if (a.has_aux()) {
      support.push_back(a.psi_mode[v]);
      if (!a.chi_mode.empty()) support.push_back(a.chi_mode[v]);
    }
    if (a.has_dyn()) support.push_back(a.dyn_mode[v]);
    // reconstruct a sparse occupation carrying only the support modes
    const int n_modes = static_cast<int>(a.modes.size());
    auto accept = [&a, v, support, n_modes, target = values[v]](
                      const std::vector<int>& vals) {
      Occupation occ(n_modes, 0);
      for (size_t i = 0; i < support.size(); ++i)
        occ[support[i]] = static_cast<uint8_t>(vals[i]);
      return gauss_diagonal_value(a, v, occ) == target;
    };
    cons.predicates.push_back({support, accept, "gauss vertex"});
  }
  return enumerate_basis(a.modes, cons, dimension_cap);
}

}  // namespace lgw
