#pragma once
// Model assembly: builds the named Hamiltonian terms (electric, magnetic,
// mass, link interaction, constraint, Dirac) and Gauss-law generators for
// U(1) spin-gauge, Z_N clock, the exactly-unitary U(1) proxy (large-N clock
// with E := m), and SU(2) prepotential theories on a lattice, over one shared
// occupation basis.
//
// Frozen mode order: link modes by link id, then auxiliary psi (vertex-major,
// color-minor), then auxiliary chi, then dynamic fermions, so fermionic sign
// strings are reproducible. Z_N auxiliary matter uses vertex bosons (one per
// vertex, soft-core cap 2) in the psi slot.
//
// Hop directionality: the interaction term attached to link (n -> n+k) is
// f_n^dag * X_link * f_{n+k} + h.c., where X raises the electric flux for
// U(1)-like theories (L_+ normalized, or Q^dag on the unitary proxy), is the
// clock lowering Q for Z_N, and is the 2x2 group-element matrix for SU(2).

#include <map>
#include <optional>
#include <string>

#include "lgw/fock.hpp"
#include "lgw/lattice.hpp"
#include "lgw/links.hpp"

namespace lgw {

enum class GaugeGroup { u1, u1_proxy, zn, su2 };
enum class MatterContent { none, aux_loop, dynamic, aux_and_dynamic };

struct CouplingSet {
  double g2 = 1.0;      // gauge coupling squared
  double eps = 0.0;     // link-interaction strength
  double lambda = 0.0;  // constraint strength
  double beta = 0.0;    // dimensionless ratio; active when mu_from_beta
  bool mu_from_beta = false;
  double M = 0.0;       // staggered mass
  double gamma = 0.0;   // dynamic-fermion hopping
  double xi_in = 1.0;   // SU(N) initial-state factor: 1 (pure) or 1/N (mixed)

  // mu = g^2/2, or beta*eps^2/lambda when the loop-method wiring is active.
  double mu() const {
    return mu_from_beta ? beta * eps * eps / lambda : g2 / 2.0;
  }
};

struct ModelConfig {
  int spatial_dim = 2;
  std::vector<int> extents;
  std::vector<Boundary> boundary;
  GaugeGroup group = GaugeGroup::u1;
  int ell = 1;     // u1 truncation spin
  int n_clock = 3; // zn / u1_proxy clock size
  int n_max = 4;   // su2 prepotential cutoff
  MatterContent matter = MatterContent::none;
  bool su2_idealized_unitary = false;  // use U instead of the dressed form
  bool fermion_phase_flag = false;     // optional (-i)^n canonical transformation
  CouplingSet couplings;
  std::vector<int> static_charges;  // per-vertex c-number Gauss shifts
  bool build_basis = true;
  long dimension_cap = 50'000'000;
};

struct ModelAssembly {
  ModelConfig config;
  LatticeGeometry geometry;
  std::vector<VertexClass> classes;

  // link space templates (identical links); only the group's entry is used
  U1LinkSpace u1;
  ZnLinkSpace zn;
  Su2LinkSpace su2;
  int link_dim = 0;

  std::vector<ModeSpec> modes;
  std::vector<int> link_mode;  // link id -> mode id
  int n_colors = 1;            // fermion colors per species (su2: 2)
  // species mode lookup, flattened vertex*n_colors + color; -1 when absent
  std::vector<int> psi_mode, chi_mode, dyn_mode;

  std::map<std::string, TermList> terms;  // named Hamiltonian pieces
  Basis basis;                            // empty when build_basis = false

  bool has_aux() const {
    return config.matter == MatterContent::aux_loop ||
           config.matter == MatterContent::aux_and_dynamic;
  }
  bool has_dyn() const {
    return config.matter == MatterContent::dynamic ||
           config.matter == MatterContent::aux_and_dynamic;
  }
  int static_charge(int v) const {
    return v < static_cast<int>(config.static_charges.size())
               ? config.static_charges[v]
               : 0;
  }
};

ModelAssembly assemble_model(const ModelConfig& config);

// Which fermion families a term couples; families stay separate in the hops.
struct SpeciesMap {
  bool psi = true;
  bool chi = true;
  bool dyn = true;
};

// Named term builders (symbolic; realize on any basis over assembly.modes).
TermList electric_terms(const ModelAssembly& a, double mu);
// warned_one_d is set when a 1d geometry yields the zero operator.
TermList magnetic_terms(const ModelAssembly& a, double g2,
                        bool* warned_one_d = nullptr);
TermList link_interaction_terms(const ModelAssembly& a, double eps,
                                const SpeciesMap& species = {});
TermList mass_terms(const ModelAssembly& a, double M);
TermList dirac_terms(const ModelAssembly& a, double M, double gamma,
                     double counterterm = 0.0);
TermList constraint_terms(const ModelAssembly& a, double lambda);

// Gauss-law generators. Additive theories (u1, su2): Hermitian generator
// G = div E - charge; su2 has three components (component 0..2).
// Z_N-type theories (zn, u1_proxy): unitary generator
// G = exp(i s delta n_matter) * prod_{l+} P^dag * prod_{l-} P with the matter
// phase sign s matching the hop convention.
TermList gauss_terms(const ModelAssembly& a, int vertex, int component = 0);
bool gauss_is_unitary(const ModelAssembly& a);

// Convenience wrappers realized on assembly.basis.
SparseOperator realize_named(const ModelAssembly& a, const std::string& name);
SparseOperator gauss_generator(const ModelAssembly& a, int vertex,
                               int component = 0);

// The occupation-diagonal Gauss value at a vertex (abelian theories):
// u1: div m - charge; zn / u1_proxy: (div m + s * n_matter) centered into the
// clock window. Includes the -static_charge shift.
int gauss_diagonal_value(const ModelAssembly& a, int vertex,
                         const Occupation& occ);

// Direct enumeration of the physical sector {occ : gauss value(v) == values[v]}
// for abelian theories, without building the full space first. `extra` adds
// further enumeration constraints (e.g. a fermion-number filter).
Basis enumerate_gauss_sector(const ModelAssembly& a,
                             const std::vector<int>& values,
                             long dimension_cap = 50'000'000,
                             const BasisConstraints& extra = {});

}  // namespace lgw
