#include "ratvol/numerics.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lapack_decl.hpp"

namespace ratvol::numerics {

namespace {

std::atomic<double>& rank_tol_storage() {
  static std::atomic<double> tol = [] {
    if (const char* env = std::getenv("RATVOL_RANK_TOL")) {
      const double v = std::atof(env);
      if (v > 0.0 && v < 1.0) return v;
    }
    return 1e-10;
  }();
  return tol;
}

}  // namespace

double default_rank_tol() { return rank_tol_storage().load(); }

void set_default_rank_tol(double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("rank tolerance must be in (0,1)");
  rank_tol_storage().store(tol);
}

bool all_finite(const CMatrix& m) { return m.allFinite(); }

SvdResult svd(const CMatrix& m) {
  if (!all_finite(m)) throw KernelFailureError("svd: input has NaN/Inf entries");
  Eigen::JacobiSVD<CMatrix> dec(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (dec.info() != Eigen::Success) {
    throw KernelFailureError("svd failed on " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + " matrix");
  }
  return {dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

Index numerical_rank(const CMatrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<CMatrix> dec(m);
  const auto& s = dec.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  const double thresh = rel_tol * s(0);
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > thresh) ++r;
  return r;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace detail {

void move_schur_eigenvalue(CMatrix& t, CMatrix& v, Index ifst, Index ilst) {
  const int n = static_cast<int>(t.rows());
  const int f = static_cast<int>(ifst) + 1;
  const int l = static_cast<int>(ilst) + 1;
  int info = 0;
  lapackf::ztrexc_("V", &n, t.data(), &n, v.data(), &n, &f, &l, &info);
  if (info != 0) throw KernelFailureError("ztrexc failed, info=" + std::to_string(info));
}

void move_pencil_eigenvalue(CMatrix& nn, CMatrix& ee, CMatrix& qh, CMatrix& z,
                            Index ifst, Index ilst) {
  const int n = static_cast<int>(nn.rows());
  const int wantq = 1, wantz = 1;
  const int f = static_cast<int>(ifst) + 1;
  int l = static_cast<int>(ilst) + 1;
  int info = 0;
  lapackf::ztgexc_(&wantq, &wantz, &n, nn.data(), &n, ee.data(), &n, qh.data(), &n,
                   z.data(), &n, &f, &l, &info);
  if (info != 0)
    throw DegeneratePencilError("ztgexc failed (ill-conditioned swap), info=" +
                                std::to_string(info));
}

void generalized_schur(const CMatrix& n, const CMatrix& e, CMatrix& nn, CMatrix& ee,
                       CMatrix& qh, CMatrix& z) {
  const int dim = static_cast<int>(n.rows());
  nn = n;
  ee = e;
  qh.resize(dim, dim);
  z.resize(dim, dim);
  if (dim == 0) return;
  int sdim = 0, info = 0;
  std::vector<Complex> alpha(dim), beta(dim);
  std::vector<double> rwork(8 * dim);
  Complex wksize;
  int lwork = -1;
  lapackf::zgges_("V", "V", "N", nullptr, &dim, nn.data(), &dim, ee.data(), &dim, &sdim,
                  alpha.data(), beta.data(), qh.data(), &dim, z.data(), &dim, &wksize,
                  &lwork, rwork.data(), nullptr, &info);
  lwork = static_cast<int>(wksize.real()) + 8;
  std::vector<Complex> work(lwork);
  lapackf::zgges_("V", "V", "N", nullptr, &dim, nn.data(), &dim, ee.data(), &dim, &sdim,
                  alpha.data(), beta.data(), qh.data(), &dim, z.data(), &dim, work.data(),
                  &lwork, rwork.data(), nullptr, &info);
  if (info != 0) throw KernelFailureError("zgges failed, info=" + std::to_string(info));
}

}  // namespace detail

SchurResult schur_ordered(const CMatrix& m, const EigSelector& select) {
  if (m.rows() != m.cols()) throw DimensionError("schur_ordered: matrix must be square");
  if (!all_finite(m)) throw KernelFailureError("schur_ordered: non-finite input");
  const Index n = m.rows();
  SchurResult res;
  if (n == 0) {
    res.v.resize(0, 0);
    res.t.resize(0, 0);
    return res;
  }
  Eigen::ComplexSchur<CMatrix> schur(m, /*computeU=*/true);
  if (schur.info() != Eigen::Success)
    throw KernelFailureError("complex Schur failed on dimension " + std::to_string(n));
  res.t = schur.matrixT();
  res.v = schur.matrixU();

  Index target = 0;
  while (target < n) {
    Index found = -1;
    for (Index i = target; i < n; ++i) {
      if (select(res.t(i, i))) {
        found = i;
        break;
      }
    }
    if (found < 0) break;
    if (found != target) detail::move_schur_eigenvalue(res.t, res.v, found, target);
    ++target;
  }
  res.selected = target;
  return res;
}

QzResult qz_ordered(const CMatrix& e, const CMatrix& n, const PencilSelector& select) {
  if (e.rows() != e.cols() || n.rows() != n.cols() || e.rows() != n.rows())
    throw DimensionError("qz_ordered: matrices must be square and of equal size");
  if (!all_finite(e) || !all_finite(n)) throw KernelFailureError("qz_ordered: non-finite input");
  const Index dim = e.rows();
  QzResult res;
  CMatrix qh;
  detail::generalized_schur(n, e, res.nn, res.ee, qh, res.z);

  // A vanishing diagonal pair signals a singular pencil.
  const double scale = std::max(res.nn.cwiseAbs().maxCoeff(), res.ee.cwiseAbs().maxCoeff());
  for (Index i = 0; i < dim; ++i) {
    if (std::abs(res.nn(i, i)) < 1e-14 * scale && std::abs(res.ee(i, i)) < 1e-14 * scale)
      throw DegeneratePencilError("qz_ordered: singular pencil (alpha=beta=0 at position " +
                                  std::to_string(i) + ")");
  }

  Index target = 0;
  while (target < dim) {
    Index found = -1;
    for (Index i = target; i < dim; ++i) {
      if (select(res.nn(i, i), res.ee(i, i))) {
        found = i;
        break;
      }
    }
    if (found < 0) break;
    if (found != target)
      detail::move_pencil_eigenvalue(res.nn, res.ee, qh, res.z, found, target);
    ++target;
  }
  res.selected = target;
  res.q = qh.adjoint();
  return res;
}

namespace {

// Bartels-Stewart core: given the Schur forms, solve via ztrsyl.
CMatrix sylvester_triangular(const CMatrix& ta, const CMatrix& tb, const CMatrix& rhs,
                             bool conj_b) {
  const int m = static_cast<int>(ta.rows());
  const int n = static_cast<int>(tb.rows());
  CMatrix x = rhs;
  if (m == 0 || n == 0) return x;
  const int isgn = 1;
  double scale = 1.0;
  int info = 0;
  lapackf::ztrsyl_("N", conj_b ? "C" : "N", &isgn, &m, &n, ta.data(), &m, tb.data(), &n,
                   x.data(), &m, &scale, &info);
  if (info < 0) throw KernelFailureError("ztrsyl: bad argument " + std::to_string(-info));
  if (info == 1 || scale == 0.0)
    throw SingularEquationError("sylvester: spectra overlap (ztrsyl info=1)");
  return x / scale;
}

}  // namespace

CMatrix solve_sylvester(const CMatrix& a, const CMatrix& b, const CMatrix& c) {
  if (a.rows() != a.cols() || b.rows() != b.cols())
    throw DimensionError("solve_sylvester: a and b must be square");
  if (c.rows() != a.rows() || c.cols() != b.rows())
    throw DimensionError("solve_sylvester: c must be a.rows() x b.rows()");
  if (a.size() == 0 || b.size() == 0) return CMatrix::Zero(c.rows(), c.cols());

  Eigen::ComplexSchur<CMatrix> sa(a, true), sb(b, true);
  if (sa.info() != Eigen::Success || sb.info() != Eigen::Success)
    throw KernelFailureError("solve_sylvester: Schur decomposition failed");

  const double sep_scale = a.norm() + b.norm();
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j)
      if (std::abs(sa.matrixT()(i, i) + sb.matrixT()(j, j)) < 1e-14 * sep_scale)
        throw SingularEquationError("solve_sylvester: spectra of a and -b overlap");

  const CMatrix rhs = -(sa.matrixU().adjoint() * c * sb.matrixU());
  const CMatrix y = sylvester_triangular(sa.matrixT(), sb.matrixT(), rhs, false);
  return sa.matrixU() * y * sb.matrixU().adjoint();
}

CMatrix solve_lyapunov(const CMatrix& a, const CMatrix& q) {
  if (a.rows() != a.cols() || q.rows() != q.cols() || a.rows() != q.rows())
    throw DimensionError("solve_lyapunov: a and q must be square of equal size");
  if (a.size() == 0) return CMatrix(0, 0);
  return LyapunovSolver(a).solve(q);
}

LyapunovSolver::LyapunovSolver(const CMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("LyapunovSolver: a must be square");
  if (a.size() == 0) return;
  Eigen::ComplexSchur<CMatrix> sa(a, true);
  if (sa.info() != Eigen::Success)
    throw KernelFailureError("LyapunovSolver: Schur decomposition failed");
  for (Index i = 0; i < a.rows(); ++i)
    if (sa.matrixT()(i, i).real() >= 0.0)
      throw StabilityViolationError("LyapunovSolver: a has an eigenvalue with Re >= 0");
  u_ = sa.matrixU();
  t_ = sa.matrixT();
}

CMatrix LyapunovSolver::solve(const CMatrix& q) const {
  if (q.rows() != u_.rows() || q.cols() != u_.rows())
    throw DimensionError("LyapunovSolver: q has wrong dimensions");
  if (q.size() == 0) return CMatrix(0, 0);
  const CMatrix rhs = -(u_.adjoint() * q * u_);
  const CMatrix y = sylvester_triangular(t_, t_, rhs, true);
  CMatrix p = u_ * y * u_.adjoint();
  return (p + p.adjoint()) / 2.0;
}

}  // namespace ratvol::numerics
