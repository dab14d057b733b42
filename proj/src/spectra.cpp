#include "lgw/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#ifdef LGW_HAVE_LAPACKE
#include <complex>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>
#endif

namespace lgw {

namespace {

void check_hermitian(const SparseOperator& op, double tol) {
  if (max_abs(add(op, scale(adjoint(op), -1.0))) > tol)
    throw std::invalid_argument("diagonalize: operator is not Hermitian");
}

bool is_real(const Eigen::MatrixXcd& m) {
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i)
      if (std::abs(m(i, j).imag()) > 0) return false;
  return true;
}

}  // namespace

DenseSpectrum diagonalize_dense(const SparseOperator& op, bool want_vectors,
                                double herm_tol) {
  check_hermitian(op, herm_tol);
  const int n = op.dim();
  DenseSpectrum out;
  if (n == 0) return out;
  Eigen::MatrixXcd dense(op.mat);
  // exact Hermitization so backends see a clean input
  dense = ((dense + dense.adjoint()) / 2.0).eval();

#ifdef LGW_HAVE_LAPACKE
  out.values.resize(n);
  const char jobz = want_vectors ? 'V' : 'N';
  if (is_real(dense)) {
    Eigen::MatrixXd real = dense.real();
    const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, jobz, 'L', n,
                                    real.data(), n, out.values.data());
    if (info != 0) throw std::runtime_error("dsyevd failed");
    if (want_vectors) out.vectors = real.cast<cplx>();
  } else {
    const int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, jobz, 'L', n,
                                    dense.data(), n, out.values.data());
    if (info != 0) throw std::runtime_error("zheevd failed");
    if (want_vectors) out.vectors = dense;
  }
#else
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      dense, want_vectors ? Eigen::ComputeEigenvectors
                          : Eigen::EigenvaluesOnly);
  out.values = es.eigenvalues();
  if (want_vectors) out.vectors = es.eigenvectors();
#endif
  return out;
}

IterativeSpectrum diagonalize_lowest(const SparseOperator& op, int k,
                                     double tol, int max_iter, uint64_t seed) {
  check_hermitian(op, 1e-12);
  const int n = op.dim();
  if (k <= 0 || k > n)
    throw std::invalid_argument("diagonalize_lowest: bad k");
  IterativeSpectrum out;
  if (max_iter <= 0) max_iter = std::min(n, std::max(30 * k, 300));

  // Lock-and-deflate Lanczos with full reorthogonalization: each restart
  // locates the lowest eigenpair orthogonal to the locked ones, so
  // degenerate multiplets are recovered copy by copy.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Eigen::VectorXcd> locked;
  std::vector<double> vals, resids;
  int total_iters = 0;
  bool all_ok = true;

  auto orth_against = [](Eigen::VectorXcd& w,
                         const std::vector<Eigen::VectorXcd>& vs) {
    for (const auto& v : vs) w -= v.dot(w) * v;
  };

  while (static_cast<int>(locked.size()) < k) {
    Eigen::VectorXcd r(n);
    for (int i = 0; i < n; ++i) r(i) = cplx(g(rng), g(rng));
    orth_against(r, locked);
    if (r.norm() <= 1e-12) {  // locked span exhausts the space
      all_ok = false;
      break;
    }
    r.normalize();

    std::vector<Eigen::VectorXcd> basis;
    std::vector<double> alpha, beta;
    const int need = k - static_cast<int>(locked.size());

    // lowest Ritz pairs of the current tridiagonal factorization
    auto lowest_pairs = [&](int count, std::vector<double>* rs,
                            std::vector<Eigen::VectorXcd>* vecs) {
      const int m = static_cast<int>(alpha.size());
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      std::vector<double> vv;
      for (int j = 0; j < std::min(count, m); ++j) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
        for (int i = 0; i < m; ++i) v += es.eigenvectors()(i, j) * basis[i];
        v.normalize();
        vv.push_back(es.eigenvalues()(j));
        rs->push_back((op.mat * v - es.eigenvalues()(j) * v).norm());
        vecs->push_back(v);
      }
      return vv;
    };

    bool exhausted = false;
    bool locked_one = false;
    for (int it = 0; it < max_iter; ++it) {
      basis.push_back(r);
      ++total_iters;
      Eigen::VectorXcd w = op.mat * basis.back();
      alpha.push_back(std::real(basis.back().dot(w)));
      for (int pass = 0; pass < 2; ++pass) {
        orth_against(w, basis);
        orth_against(w, locked);
      }
      const double nb = w.norm();
      exhausted = nb <= 1e-13;
      const int m = static_cast<int>(alpha.size());
      if (m % 5 == 0 || exhausted || it == max_iter - 1) {
        std::vector<double> rs;
        std::vector<Eigen::VectorXcd> vecs;
        std::vector<double> vv =
            lowest_pairs(exhausted ? need : 1, &rs, &vecs);
        // lock every converged pair (all of them on exhaustion)
        bool any = false;
        for (size_t j = 0; j < vv.size(); ++j)
          if (rs[j] <= tol || exhausted) {
            vals.push_back(vv[j]);
            resids.push_back(rs[j]);
            locked.push_back(vecs[j]);
            all_ok = all_ok && rs[j] <= tol;
            any = true;
            if (static_cast<int>(locked.size()) >= k) break;
          }
        if (any) {
          locked_one = true;
          break;
        }
        if (exhausted) break;
      }
      if (exhausted) break;
      beta.push_back(nb);
      r = w / nb;
    }
    if (!locked_one) {  // restart budget spent without convergence
      std::vector<double> rs;
      std::vector<Eigen::VectorXcd> vecs;
      std::vector<double> vv = lowest_pairs(1, &rs, &vecs);
      if (!vv.empty()) {
        vals.push_back(vv[0]);
        resids.push_back(rs[0]);
        locked.push_back(vecs[0]);
      }
      all_ok = false;
      if (vv.empty()) break;
    }
  }

  // ascending order (deflation finds levels nearly in order already)
  std::vector<int> idx(vals.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return vals[a] < vals[b]; });
  out.values.resize(static_cast<int>(vals.size()));
  out.residuals.resize(static_cast<int>(vals.size()));
  for (size_t i = 0; i < idx.size(); ++i) {
    out.values(static_cast<int>(i)) = vals[idx[i]];
    out.residuals(static_cast<int>(i)) = resids[idx[i]];
  }
  out.iterations = total_iters;
  out.converged = all_ok && static_cast<int>(vals.size()) == k;
  return out;
}

double coupling_x(double lambda, double eps, long ell, double beta) {
  if (eps <= 0) throw std::invalid_argument("coupling_x: eps must be positive");
  if (ell <= 0) throw std::invalid_argument("coupling_x: ell must be positive");
  const double ld = static_cast<double>(ell);
  return 0.5 * (beta + 1.0 / (ld * (ld + 1.0))) * lambda * lambda /
         (eps * eps);
}

SpectrumComparison compare_spectra(const Eigen::VectorXd& e,
                                   const Eigen::VectorXd& e_tilde) {
  if (e.size() == 0 || e_tilde.size() == 0)
    throw std::invalid_argument("compare_spectra: empty spectrum");
  SpectrumComparison out;
  const int n = static_cast<int>(std::min(e.size(), e_tilde.size()));
  out.truncated = e.size() != e_tilde.size();
  Eigen::VectorXd a = e.head(n), b = e_tilde.head(n);
  Eigen::VectorXd diff = a - b;
  out.mean_shift = diff.mean();
  out.residuals = diff.array() - out.mean_shift;
  const double var = n > 1 ? out.residuals.squaredNorm() / (n - 1) : 0.0;
  const double sd = std::sqrt(var);
  if (std::abs(out.mean_shift) < 1e-14) {
    out.division_guard = true;
    out.d = std::numeric_limits<double>::infinity();
  } else {
    out.d = std::abs(sd / out.mean_shift);
  }
  const double span = b.maxCoeff() - b.minCoeff();
  out.scale_mismatch =
      span > 0 ? std::abs(a.mean() - b.mean()) / span
               : std::abs(a.mean() - b.mean());
  return out;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-300)
    throw std::invalid_argument("fit_line: degenerate abscissae");
  LinearFit f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  return f;
}

namespace {

// exact U(1) strong-coupling sector ground energy with static charges
double u1_pair_energy(const ModelConfig& chain, int r) {
  ModelConfig c = chain;
  c.couplings.eps = 0.0;
  c.matter = MatterContent::none;
  c.build_basis = false;
  const int nv = c.extents[0];
  c.static_charges.assign(nv, 0);
  if (r > 0) {
    c.static_charges[0] = 1;
    c.static_charges[r] = -1;
  }
  auto a = assemble_model(c);
  Basis sector = enumerate_gauss_sector(a, std::vector<int>(nv, 0));
  if (sector.dim() == 0)
    throw std::runtime_error("flux_tube_scan: empty charge sector (raise ell)");
  auto he = realize(sector, a.terms.at("H_E"));
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < sector.dim(); ++i)
    best = std::min(best, std::real(he.mat.coeff(i, i)));
  return best;
}

// exact SU(2) strong-coupling ground energy: minimize mu * sum C(j_l) over
// chain link representations subject to the fusion rules at each vertex,
// with static fundamental (j = 1/2) charges at vertices 0 and r
double su2_pair_energy(const ModelConfig& chain, int r) {
  const int n_links = chain.extents[0] - 1;
  const double mu = chain.couplings.g2 / 2.0;
  const double j_cap = chain.n_max / 2.0;
  // DP over twice-j of the running fused representation along the chain
  const int tmax = static_cast<int>(2 * j_cap);
  std::vector<double> cost(tmax + 1,
                           std::numeric_limits<double>::infinity());
  cost[r > 0 ? 1 : 0] = 0.0;  // after vertex 0 (charge present iff r > 0)
  for (int l = 0; l < n_links; ++l) {
    // link l carries the current fused representation
    std::vector<double> next(tmax + 1,
                             std::numeric_limits<double>::infinity());
    for (int t = 0; t <= tmax; ++t) {
      if (!std::isfinite(cost[t])) continue;
      const double j = t / 2.0;
      const double c = cost[t] + mu * j * (j + 1.0);
      // fuse with the static charge at vertex l+1 (j = 1/2 at vertex r)
      if (r > 0 && l + 1 == r) {
        for (int dt : {-1, 1}) {
          const int u = t + dt;
          if (u >= 0 && u <= tmax) next[u] = std::min(next[u], c);
        }
      } else {
        next[t] = std::min(next[t], c);
      }
    }
    cost = next;
  }
  if (!std::isfinite(cost[0]))
    throw std::runtime_error("flux_tube_scan: no singlet fusion path");
  return cost[0];  // everything must fuse back to a singlet at the far end
}

}  // namespace

FluxTubeScan flux_tube_scan(const ModelConfig& chain,
                            const std::vector<int>& separations) {
  if (chain.spatial_dim != 1 || chain.extents.size() != 1)
    throw std::invalid_argument("flux_tube_scan: open chain geometry required");
  const int nv = chain.extents[0];
  FluxTubeScan out;
  std::vector<double> xs, ys;
  for (int r : separations) {
    if (r < 0 || r >= nv)
      throw std::invalid_argument("flux_tube_scan: separation exceeds chain");
    double e, e0;
    if (chain.group == GaugeGroup::su2) {
      e = su2_pair_energy(chain, r);
      e0 = su2_pair_energy(chain, 0);
    } else if (chain.group == GaugeGroup::u1) {
      e = u1_pair_energy(chain, r);
      e0 = u1_pair_energy(chain, 0);
    } else {
      throw std::invalid_argument(
          "flux_tube_scan: u1 or su2 chain expected");
    }
    out.points.push_back({r, e - e0});
    xs.push_back(static_cast<double>(r));
    ys.push_back(e - e0);
  }
  if (xs.size() >= 2) out.fit = fit_line(xs, ys);
  return out;
}

}  // namespace lgw
