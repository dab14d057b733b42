#pragma once
// Occupation-number basis enumeration and sparse second-quantized operator
// algebra for mixed bosonic/fermionic/qudit mode sets, with symmetry-sector
// restriction.
//
// Conventions (frozen):
//   - basis states are occupation vectors over the mode list, enumerated in
//     colexicographic order (mode 0 varies fastest);
//   - fermionic operators carry the ordered-product (Jordan-Wigner) sign: the
//     parity of occupied fermion modes preceding the acted-on mode in the
//     frozen mode order;
//   - boson create maps |n> -> sqrt(n+1)|n+1> and annihilates above the cap;
//   - sparse values below 1e-15 (absolute) are dropped.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace lgw {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cplx>;

inline constexpr double kDropTol = 1e-15;

enum class Statistics { boson, fermion, qudit };

struct ModeSpec {
  int id = 0;                         // position in the frozen mode order
  Statistics statistics = Statistics::boson;
  int occupation_cap = 1;             // max occupation (fermion: 1; qudit: dim-1)
  int attachment = -1;                // vertex or link id (bookkeeping only)
  std::string label;
};

// Constraints used during enumeration.
// TotalRange prunes incrementally; Predicate is checked as soon as all its
// support modes are assigned.
struct TotalRange {
  std::vector<int> modes;
  long min_total = 0;
  long max_total = 0;
};
struct Predicate {
  std::vector<int> support;
  // receives the occupations of `support` in the listed order
  std::function<bool(const std::vector<int>&)> accept;
  std::string label;
};

struct BasisConstraints {
  std::vector<TotalRange> totals;
  std::vector<Predicate> predicates;
};

using Occupation = std::vector<uint8_t>;

struct OccupationHash {
  size_t operator()(const Occupation& o) const {
    size_t h = 1469598103934665603ull;
    for (uint8_t b : o) { h ^= b; h *= 1099511628211ull; }
    return h;
  }
};

class Basis {
 public:
  uint64_t id = 0;  // unique identity tag
  std::vector<ModeSpec> modes;
  std::vector<Occupation> states;
  std::string sector_descriptor;  // human-readable sector restriction, if any

  int dim() const { return static_cast<int>(states.size()); }
  int index_of(const Occupation& s) const {
    auto it = index_.find(s);
    return it == index_.end() ? -1 : it->second;
  }
  void rebuild_index();
  static uint64_t next_id();

 private:
  std::unordered_map<Occupation, int, OccupationHash> index_;
};

// Enumerates all occupation vectors obeying the per-mode caps and the given
// constraints, in colexicographic order. Throws if the (unconstrained)
// dimension bound exceeds `dimension_cap` states or if enumeration exceeds it.
// A contradictory constraint set yields an empty basis (flagged, not an error).
Basis enumerate_basis(const std::vector<ModeSpec>& modes,
                      const BasisConstraints& constraints = {},
                      long dimension_cap = 50'000'000);

// ---------------------------------------------------------------------------
// Symbolic product terms (applied right-to-left), realizable on any basis
// over the same mode list.

enum class FactorKind { create, annihilate, number, local_matrix };

struct Factor {
  int mode = 0;
  FactorKind kind = FactorKind::number;
  Eigen::MatrixXcd local;  // for local_matrix: dim x dim on the mode's space
};

struct Term {
  cplx coeff{1.0, 0.0};
  std::vector<Factor> factors;  // factors.back() acts first
};
using TermList = std::vector<Term>;

Term adjoint(const Term& t);
TermList adjoint(const TermList& ts);
TermList operator+(TermList a, const TermList& b);
TermList scaled(TermList ts, cplx c);

// Sparse amplitude map over occupation states (no basis needed).
using StateVec = std::unordered_map<Occupation, cplx, OccupationHash>;

// Applies the term list to a single occupation state / an amplitude map.
// Caps are taken from `modes`. Amplitudes below kDropTol are dropped.
StateVec apply_terms(const TermList& terms, const std::vector<ModeSpec>& modes,
                     const Occupation& state, cplx amp = cplx(1.0, 0.0));
StateVec apply_terms(const TermList& terms, const std::vector<ModeSpec>& modes,
                     const StateVec& vec);

// ---------------------------------------------------------------------------
// Sparse operators bound to a basis identity.

struct SparseOperator {
  uint64_t basis_id = 0;
  SpMat mat;
  int dim() const { return static_cast<int>(mat.rows()); }
};

// Matrix elements of a term list in the given basis. Amplitudes reaching
// states outside the basis are discarded (the basis is assumed closed or
// deliberately restricted; see sector_restrict / closure_basis).
SparseOperator realize(const Basis& basis, const TermList& terms);

// Single ladder operator as a SparseOperator.
enum class LadderKind { create, annihilate, number };
SparseOperator ladder(const Basis& basis, int mode, LadderKind kind);

// Exact sparse arithmetic; basis tags must match (hard error otherwise).
SparseOperator add(const SparseOperator& a, const SparseOperator& b);
SparseOperator scale(const SparseOperator& a, cplx c);
SparseOperator multiply(const SparseOperator& a, const SparseOperator& b);
SparseOperator adjoint(const SparseOperator& a);
SparseOperator commutator(const SparseOperator& a, const SparseOperator& b);
SparseOperator anticommutator(const SparseOperator& a, const SparseOperator& b);
double max_abs(const SpMat& m);
double max_abs(const SparseOperator& a);
void prune(SpMat& m, double tol = kDropTol);

// ---------------------------------------------------------------------------
// Sector restriction by diagonal conserved quantities.

struct SectorBasis {
  Basis basis;                 // restricted basis (new identity)
  std::vector<int> injection;  // restricted index -> original index
  uint64_t parent_id = 0;
  bool empty_flagged = false;  // contradictory values -> empty, not an error
};

// Keeps the states on which every listed diagonal operator takes the given
// value (within `tol`). Non-diagonal sector operators are rejected.
SectorBasis sector_restrict(const Basis& basis,
                            const std::vector<SparseOperator>& quantities,
                            const std::vector<double>& values,
                            double tol = 1e-9);

// Restriction of an operator on the parent basis to the sector block.
SparseOperator project(const SectorBasis& sector, const SparseOperator& op);

// ---------------------------------------------------------------------------
// Reachability closure: the span of `seeds` under at most `depth` applications
// of the generator terms, as a basis (states in colexicographic order).
Basis closure_basis(const std::vector<ModeSpec>& modes,
                    const std::vector<Occupation>& seeds,
                    const std::vector<const TermList*>& generators, int depth,
                    long dimension_cap = 50'000'000);

// Documented triplet text format: one "row col real imag" line per entry
// (docs/formats.md), for cross-checking against independent oracles.
std::string to_triplets(const SparseOperator& op);

}  // namespace lgw
