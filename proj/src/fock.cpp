#include "lgw/fock.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace lgw {

void Basis::rebuild_index() {
  index_.clear();
  index_.reserve(states.size() * 2);
  for (int i = 0; i < static_cast<int>(states.size()); ++i) index_[states[i]] = i;
}

uint64_t Basis::next_id() {
  static std::atomic<uint64_t> counter{1};
  return counter.fetch_add(1);
}

namespace {

bool colex_less(const Occupation& a, const Occupation& b) {
  for (int i = static_cast<int>(a.size()) - 1; i >= 0; --i)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

}  // namespace

Basis enumerate_basis(const std::vector<ModeSpec>& modes,
                      const BasisConstraints& constraints, long dimension_cap) {
  const int n = static_cast<int>(modes.size());
  for (int i = 0; i < n; ++i) {
    if (modes[i].id != i)
      throw std::invalid_argument("enumerate_basis: mode ids must be 0..n-1 in order");
    if (modes[i].statistics == Statistics::fermion && modes[i].occupation_cap != 1)
      throw std::invalid_argument("enumerate_basis: fermion cap must be 1");
    if (modes[i].occupation_cap < 1)
      throw std::invalid_argument("enumerate_basis: occupation cap must be >= 1");
  }

  // Incremental bookkeeping for TotalRange pruning.
  const auto& totals = constraints.totals;
  std::vector<long> run_sum(totals.size(), 0), run_capacity(totals.size(), 0);
  std::vector<std::vector<int>> totals_of_mode(n);
  for (size_t c = 0; c < totals.size(); ++c) {
    for (int m : totals[c].modes) {
      totals_of_mode[m].push_back(static_cast<int>(c));
      run_capacity[c] += modes[m].occupation_cap;
    }
  }
  // Predicates trigger when their lowest support mode has been assigned
  // (assignment order runs from the highest mode down).
  std::vector<std::vector<int>> preds_at_level(n);
  for (size_t p = 0; p < constraints.predicates.size(); ++p) {
    const auto& pr = constraints.predicates[p];
    if (pr.support.empty())
      throw std::invalid_argument("enumerate_basis: predicate with empty support");
    int lo = *std::min_element(pr.support.begin(), pr.support.end());
    preds_at_level[lo].push_back(static_cast<int>(p));
  }

  Basis basis;
  basis.id = Basis::next_id();
  basis.modes = modes;

  Occupation occ(n, 0);
  std::vector<int> support_vals;
  long count = 0;

  // Depth-first assignment, highest mode first, values ascending: emits the
  // states in colexicographic order (mode 0 varies fastest).
  std::function<void(int)> recurse = [&](int level) {
    if (level < 0) {
      if (++count > dimension_cap)
        throw std::runtime_error("enumerate_basis: dimension cap exceeded");
      basis.states.push_back(occ);
      return;
    }
    for (int v = 0; v <= modes[level].occupation_cap; ++v) {
      occ[level] = static_cast<uint8_t>(v);
      bool ok = true;
      for (int c : totals_of_mode[level]) {
        run_sum[c] += v;
        run_capacity[c] -= modes[level].occupation_cap;
      }
      for (int c : totals_of_mode[level]) {
        if (run_sum[c] > totals[c].max_total ||
            run_sum[c] + run_capacity[c] < totals[c].min_total) {
          ok = false;
          break;
        }
      }
      if (ok) {
        for (int p : preds_at_level[level]) {
          const auto& pr = constraints.predicates[p];
          support_vals.resize(pr.support.size());
          for (size_t i = 0; i < pr.support.size(); ++i)
            support_vals[i] = occ[pr.support[i]];
          if (!pr.accept(support_vals)) { ok = false; break; }
        }
      }
      if (ok) recurse(level - 1);
      for (int c : totals_of_mode[level]) {
        run_sum[c] -= v;
        run_capacity[c] += modes[level].occupation_cap;
      }
    }
    occ[level] = 0;
  };
  if (n > 0) recurse(n - 1);
  basis.rebuild_index();
  return basis;
}

// ---------------------------------------------------------------------------

Term adjoint(const Term& t) {
  Term out;
  out.coeff = std::conj(t.coeff);
  for (auto it = t.factors.rbegin(); it != t.factors.rend(); ++it) {
    Factor f = *it;
    switch (f.kind) {
      case FactorKind::create: f.kind = FactorKind::annihilate; break;
      case FactorKind::annihilate: f.kind = FactorKind::create; break;
      case FactorKind::number: break;
      case FactorKind::local_matrix: f.local = f.local.adjoint().eval(); break;
    }
    out.factors.push_back(std::move(f));
  }
  return out;
}

TermList adjoint(const TermList& ts) {
  TermList out;
  out.reserve(ts.size());
  for (const Term& t : ts) out.push_back(adjoint(t));
  return out;
}

TermList operator+(TermList a, const TermList& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

TermList scaled(TermList ts, cplx c) {
  for (Term& t : ts) t.coeff *= c;
  return ts;
}

namespace {

int jw_sign(const std::vector<ModeSpec>& modes, const Occupation& occ, int mode) {
  int parity = 0;
  for (int i = 0; i < mode; ++i)
    if (modes[i].statistics == Statistics::fermion && occ[i]) parity ^= 1;
  return parity ? -1 : 1;
}

void apply_factors(const Term& term, int fi, const std::vector<ModeSpec>& modes,
                   Occupation& occ, cplx amp, StateVec& out) {
  if (std::abs(amp) < kDropTol) return;
  if (fi < 0) {
    out[occ] += amp;
    return;
  }
  const Factor& f = term.factors[fi];
  const ModeSpec& ms = modes[f.mode];
  const int n = occ[f.mode];
  switch (f.kind) {
    case FactorKind::number:
      apply_factors(term, fi - 1, modes, occ, amp * static_cast<double>(n), out);
      return;
    case FactorKind::create: {
      if (n + 1 > ms.occupation_cap) return;
      double w = (ms.statistics == Statistics::fermion)
                     ? static_cast<double>(jw_sign(modes, occ, f.mode))
                     : std::sqrt(static_cast<double>(n + 1));
      occ[f.mode] = static_cast<uint8_t>(n + 1);
      apply_factors(term, fi - 1, modes, occ, amp * w, out);
      occ[f.mode] = static_cast<uint8_t>(n);
      return;
    }
    case FactorKind::annihilate: {
      if (n == 0) return;
      double w = (ms.statistics == Statistics::fermion)
                     ? static_cast<double>(jw_sign(modes, occ, f.mode))
                     : std::sqrt(static_cast<double>(n));
      occ[f.mode] = static_cast<uint8_t>(n - 1);
      apply_factors(term, fi - 1, modes, occ, amp * w, out);
      occ[f.mode] = static_cast<uint8_t>(n);
      return;
    }
    case FactorKind::local_matrix: {
      const int d = ms.occupation_cap + 1;
      if (f.local.rows() != d || f.local.cols() != d)
        throw std::invalid_argument("apply_terms: local matrix dimension mismatch");
      for (int r = 0; r < d; ++r) {
        cplx v = f.local(r, n);
        if (std::abs(v) < kDropTol) continue;
        occ[f.mode] = static_cast<uint8_t>(r);
        apply_factors(term, fi - 1, modes, occ, amp * v, out);
      }
      occ[f.mode] = static_cast<uint8_t>(n);
      return;
    }
  }
}

}  // namespace

StateVec apply_terms(const TermList& terms, const std::vector<ModeSpec>& modes,
                     const Occupation& state, cplx amp) {
  StateVec out;
  Occupation occ = state;
  for (const Term& t : terms)
    apply_factors(t, static_cast<int>(t.factors.size()) - 1, modes, occ,
                  amp * t.coeff, out);
  return out;
}

StateVec apply_terms(const TermList& terms, const std::vector<ModeSpec>& modes,
                     const StateVec& vec) {
  StateVec out;
  for (const auto& [state, amp] : vec) {
    Occupation occ = state;
    for (const Term& t : terms)
      apply_factors(t, static_cast<int>(t.factors.size()) - 1, modes, occ,
                    amp * t.coeff, out);
  }
  return out;
}

// ---------------------------------------------------------------------------

SparseOperator realize(const Basis& basis, const TermList& terms) {
  std::vector<Eigen::Triplet<cplx>> trips;
  for (int s = 0; s < basis.dim(); ++s) {
    StateVec image = apply_terms(terms, basis.modes, basis.states[s]);
    for (const auto& [state, amp] : image) {
      int r = basis.index_of(state);
      if (r >= 0 && std::abs(amp) > kDropTol)
        trips.emplace_back(r, s, amp);
    }
  }
  SparseOperator op;
  op.basis_id = basis.id;
  op.mat.resize(basis.dim(), basis.dim());
  op.mat.setFromTriplets(trips.begin(), trips.end());
  prune(op.mat);
  return op;
}

SparseOperator ladder(const Basis& basis, int mode, LadderKind kind) {
  if (mode < 0 || mode >= static_cast<int>(basis.modes.size()))
    throw std::invalid_argument("ladder: unknown mode");
  Term t;
  Factor f;
  f.mode = mode;
  switch (kind) {
    case LadderKind::create: f.kind = FactorKind::create; break;
    case LadderKind::annihilate: f.kind = FactorKind::annihilate; break;
    case LadderKind::number: f.kind = FactorKind::number; break;
  }
  t.factors.push_back(f);
  return realize(basis, {t});
}

namespace {
void check_same_basis(const SparseOperator& a, const SparseOperator& b) {
  if (a.basis_id != b.basis_id)
    throw std::invalid_argument("operator arithmetic: basis identity mismatch");
}
}  // namespace

SparseOperator add(const SparseOperator& a, const SparseOperator& b) {
  check_same_basis(a, b);
  SparseOperator out{a.basis_id, a.mat + b.mat};
  prune(out.mat);
  return out;
}

SparseOperator scale(const SparseOperator& a, cplx c) {
  SparseOperator out{a.basis_id, (a.mat * c).eval()};
  prune(out.mat);
  return out;
}

SparseOperator multiply(const SparseOperator& a, const SparseOperator& b) {
  check_same_basis(a, b);
  SparseOperator out{a.basis_id, (a.mat * b.mat).eval()};
  prune(out.mat);
  return out;
}

SparseOperator adjoint(const SparseOperator& a) {
  SparseOperator out{a.basis_id, SpMat(a.mat.adjoint())};
  return out;
}

SparseOperator commutator(const SparseOperator& a, const SparseOperator& b) {
  check_same_basis(a, b);
  SparseOperator out{a.basis_id, (a.mat * b.mat - b.mat * a.mat).eval()};
  prune(out.mat);
  return out;
}

SparseOperator anticommutator(const SparseOperator& a, const SparseOperator& b) {
  check_same_basis(a, b);
  SparseOperator out{a.basis_id, (a.mat * b.mat + b.mat * a.mat).eval()};
  prune(out.mat);
  return out;
}

double max_abs(const SpMat& m) {
  double mx = 0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      mx = std::max(mx, std::abs(it.value()));
  return mx;
}

double max_abs(const SparseOperator& a) { return max_abs(a.mat); }

void prune(SpMat& m, double tol) {
  m.prune([tol](const Eigen::Index&, const Eigen::Index&, const cplx& v) {
    return std::abs(v) > tol;
  });
}

// ---------------------------------------------------------------------------

SectorBasis sector_restrict(const Basis& basis,
                            const std::vector<SparseOperator>& quantities,
                            const std::vector<double>& values, double tol) {
  if (quantities.size() != values.size())
    throw std::invalid_argument("sector_restrict: quantities/values size mismatch");
  std::vector<Eigen::VectorXd> diags;
  for (const auto& q : quantities) {
    if (q.basis_id != basis.id)
      throw std::invalid_argument("sector_restrict: operator on wrong basis");
    Eigen::VectorXd d = Eigen::VectorXd::Zero(basis.dim());
    for (int k = 0; k < q.mat.outerSize(); ++k)
      for (SpMat::InnerIterator it(q.mat, k); it; ++it) {
        if (it.row() != it.col()) {
          if (std::abs(it.value()) > 1e-12)
            throw std::invalid_argument(
                "sector_restrict: non-diagonal sector operator rejected");
          continue;
        }
        if (std::abs(std::imag(it.value())) > 1e-12)
          throw std::invalid_argument(
              "sector_restrict: sector operator must be real diagonal");
        d(it.row()) = std::real(it.value());
      }
    diags.push_back(std::move(d));
  }

  SectorBasis out;
  out.parent_id = basis.id;
  out.basis.id = Basis::next_id();
  out.basis.modes = basis.modes;
  for (int s = 0; s < basis.dim(); ++s) {
    bool keep = true;
    for (size_t q = 0; q < diags.size(); ++q)
      if (std::abs(diags[q](s) - values[q]) > tol) { keep = false; break; }
    if (keep) {
      out.basis.states.push_back(basis.states[s]);
      out.injection.push_back(s);
    }
  }
  out.basis.rebuild_index();
  out.empty_flagged = out.basis.states.empty();
  return out;
}

SparseOperator project(const SectorBasis& sector, const SparseOperator& op) {
  if (op.basis_id != sector.parent_id)
    throw std::invalid_argument("project: operator on wrong parent basis");
  const int parent_dim = op.dim();
  std::vector<int> to_restricted(parent_dim, -1);
  for (int i = 0; i < static_cast<int>(sector.injection.size()); ++i)
    to_restricted[sector.injection[i]] = i;
  std::vector<Eigen::Triplet<cplx>> trips;
  for (int k = 0; k < op.mat.outerSize(); ++k)
    for (SpMat::InnerIterator it(op.mat, k); it; ++it) {
      int r = to_restricted[it.row()], c = to_restricted[it.col()];
      if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
    }
  SparseOperator out;
  out.basis_id = sector.basis.id;
  out.mat.resize(sector.basis.dim(), sector.basis.dim());
  out.mat.setFromTriplets(trips.begin(), trips.end());
  return out;
}

// ---------------------------------------------------------------------------

Basis closure_basis(const std::vector<ModeSpec>& modes,
                    const std::vector<Occupation>& seeds,
                    const std::vector<const TermList*>& generators, int depth,
                    long dimension_cap) {
  std::unordered_map<Occupation, char, OccupationHash> seen;
  std::deque<Occupation> frontier;
  for (const auto& s : seeds) {
    if (seen.emplace(s, 1).second) frontier.push_back(s);
  }
  for (int d = 0; d < depth; ++d) {
    std::deque<Occupation> next;
    for (const auto& s : frontier) {
      for (const TermList* gen : generators) {
        StateVec image = apply_terms(*gen, modes, s);
        for (const auto& [state, amp] : image) {
          (void)amp;
          if (seen.emplace(state, 1).second) {
            next.push_back(state);
            if (static_cast<long>(seen.size()) > dimension_cap)
              throw std::runtime_error("closure_basis: dimension cap exceeded");
          }
        }
      }
    }
    frontier.swap(next);
    if (frontier.empty()) break;
  }
  Basis basis;
  basis.id = Basis::next_id();
  basis.modes = modes;
  basis.states.reserve(seen.size());
  for (const auto& [state, flag] : seen) {
    (void)flag;
    basis.states.push_back(state);
  }
  std::sort(basis.states.begin(), basis.states.end(), colex_less);
  basis.rebuild_index();
  return basis;
}

std::string to_triplets(const SparseOperator& op) {
  std::ostringstream os;
  os.precision(17);
  for (int k = 0; k < op.mat.outerSize(); ++k)
    for (SpMat::InnerIterator it(op.mat, k); it; ++it)
      os << it.row() << " " << it.col() << " " << std::real(it.value()) << " "
         << std::imag(it.value()) << "\n";
  return os.str();
}

}  // namespace lgw
