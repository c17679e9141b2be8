#include "ratvol/realization.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>

namespace ratvol {

Realization::Realization(CMatrix a_, CMatrix b_, CMatrix c_, CMatrix d_)
    : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), d(std::move(d_)) {
  const Index n = a.rows();
  if (a.cols() != n) throw DimensionError("Realization: A must be square");
  if (b.rows() != n) throw DimensionError("Realization: B has wrong row count");
  if (c.cols() != n) throw DimensionError("Realization: C has wrong column count");
  if (d.rows() != c.rows() || d.cols() != b.cols())
    throw DimensionError("Realization: D must be p x m");
  if (!numerics::all_finite(a) || !numerics::all_finite(b) || !numerics::all_finite(c) ||
      !numerics::all_finite(d))
    throw DimensionError("Realization: non-finite entries");
}

bool Realization::strictly_proper(double tol) const {
  if (d.size() == 0) return true;
  const double scale = 1.0 + b.norm() * c.norm();
  return d.norm() <= tol * scale;
}

Realization Realization::constant(const CMatrix& d) {
  return Realization(CMatrix(0, 0), CMatrix::Zero(0, d.cols()), CMatrix::Zero(d.rows(), 0), d);
}

Realization Realization::constant_scalar(Complex value) {
  CMatrix d(1, 1);
  d(0, 0) = value;
  return constant(d);
}

CMatrix evaluate(const Realization& r, Complex s) {
  if (r.state_dim() == 0) return r.d;
  CMatrix m = -r.a;
  m.diagonal().array() += s;
  Eigen::PartialPivLU<CMatrix> lu(m);
  const double rc = lu.rcond();
  if (!(rc > 1e-14))
    throw PoleEvaluationError("evaluate: s is numerically a pole (rcond=" +
                              std::to_string(rc) + ")");
  return r.c * lu.solve(r.b) + r.d;
}

Complex evaluate_scalar(const Realization& r, Complex s) {
  if (!r.is_scalar()) throw DimensionError("evaluate_scalar: realization is not scalar");
  return evaluate(r, s)(0, 0);
}

Realization adjoint(const Realization& r) {
  return Realization(-r.a.adjoint(), r.c.adjoint(), -r.b.adjoint(), r.d.adjoint());
}

Realization add(const Realization& r1, const Realization& r2) {
  if (r1.in_dim() != r2.in_dim() || r1.out_dim() != r2.out_dim())
    throw DimensionError("add: input/output dimensions differ");
  const Index n1 = r1.state_dim(), n2 = r2.state_dim();
  CMatrix a = CMatrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = r1.a;
  a.bottomRightCorner(n2, n2) = r2.a;
  CMatrix b(n1 + n2, r1.in_dim());
  b.topRows(n1) = r1.b;
  b.bottomRows(n2) = r2.b;
  CMatrix c(r1.out_dim(), n1 + n2);
  c.leftCols(n1) = r1.c;
  c.rightCols(n2) = r2.c;
  return Realization(std::move(a), std::move(b), std::move(c), r1.d + r2.d);
}

Realization multiply(const Realization& r1, const Realization& r2) {
  if (r1.in_dim() != r2.out_dim())
    throw DimensionError("multiply: inner dimensions differ");
  const Index n1 = r1.state_dim(), n2 = r2.state_dim();
  CMatrix a = CMatrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = r1.a;
  a.topRightCorner(n1, n2) = r1.b * r2.c;
  a.bottomRightCorner(n2, n2) = r2.a;
  CMatrix b(n1 + n2, r2.in_dim());
  b.topRows(n1) = r1.b * r2.d;
  b.bottomRows(n2) = r2.b;
  CMatrix c(r1.out_dim(), n1 + n2);
  c.leftCols(n1) = r1.c;
  c.rightCols(n2) = r1.d * r2.c;
  return Realization(std::move(a), std::move(b), std::move(c), r1.d * r2.d);
}

Realization scale_output(const Realization& r, Complex k) {
  return Realization(r.a, r.b, k * r.c, k * r.d);
}

Realization arg_scale_times_s(const Realization& r, Complex y) {
  if (y == Complex(0, 0))
    throw DegenerateScalingError("arg_scale_times_s: y must be nonzero");
  if (!r.strictly_proper())
    throw DimensionError("arg_scale_times_s: realization must be strictly proper");
  return Realization(r.a / y, r.a * r.b / (y * y), r.c, r.c * r.b / y);
}

namespace detail {

// Unitary u with u^* v = ||v|| e_1 (aligned to a real positive leading entry).
static CMatrix compress_to_e1(const Eigen::VectorXcd& v) {
  const Index n = v.size();
  const double nrm = v.norm();
  CMatrix u = CMatrix::Identity(n, n);
  if (nrm == 0.0) return u;
  // Householder reflection mapping v to alpha*e1, then a phase to make it ||v||.
  Complex alpha = -nrm;
  if (std::abs(v(0)) > 0.0) alpha = -(v(0) / std::abs(v(0))) * nrm;
  Eigen::VectorXcd w = v;
  w(0) -= alpha;
  const double wn2 = w.squaredNorm();
  CMatrix h = CMatrix::Identity(n, n);
  if (wn2 > 0.0) h -= (2.0 / wn2) * (w * w.adjoint());
  // h^* v = h v = alpha e1; rotate the first coordinate phase to make it positive.
  CMatrix phase = CMatrix::Identity(n, n);
  phase(0, 0) = std::conj(alpha) / std::abs(alpha);
  // u^* = phase * h  =>  u = h^* phase^* = h phase^*
  u = h * phase.adjoint();
  return u;
}

PencilStaircase pencil_staircase(const CMatrix& a, const CMatrix& b, const CMatrix& c,
                                 double rel_tol, Index forced_codegree) {
  const Index n = a.rows();
  if (b.cols() != 1 || c.rows() != 1)
    throw DimensionError("pencil_staircase: scalar channel required");
  if (forced_codegree == 0 || forced_codegree > n)
    throw ZeroFunctionError("pencil_staircase: forced co-degree out of range");
  const double bnorm = b.norm();
  if (bnorm <= 0.0 || !numerics::all_finite(b))
    throw ZeroFunctionError("pencil_staircase: B is numerically zero");
  const double cnorm = c.norm();
  if (cnorm <= 0.0) throw ZeroFunctionError("pencil_staircase: C is numerically zero");
  const double anorm = a.norm();

  // State-space compressions.
  CMatrix u = compress_to_e1(-b);  // u^*(-b) = ||b|| e1
  CMatrix abar = u.adjoint() * a * u;
  CMatrix cbar = c * u;

  Index codeg = 0;
  for (Index k = 0; k < n; ++k) {
    bool pop;
    if (forced_codegree > 0) {
      pop = (k + 1 == forced_codegree);
      // Leakage of an evolved realization below the pinned co-degree is
      // projected out so the pencil keeps its block-triangular structure.
      if (!pop) cbar(0, k) = 0.0;
    } else {
      pop = std::abs(cbar(0, k)) > rel_tol * cnorm;
    }
    if (!pop && k + 1 == n)
      throw ZeroFunctionError("pencil_staircase: all Markov parameters vanish");
    if (k + 1 < n) {
      // Compress column k of abar below row k (needed for the pencil structure
      // even at the pop step).
      Eigen::VectorXcd sub = abar.block(k + 1, k, n - k - 1, 1);
      if (pop || sub.norm() > 0.0) {
        if (!pop && forced_codegree < 0 &&
            sub.norm() <= rel_tol * std::max(anorm, 1e-300))
          throw ZeroFunctionError("pencil_staircase: function is numerically zero");
        CMatrix uk = compress_to_e1(sub);
        CMatrix ufull = CMatrix::Identity(n, n);
        ufull.bottomRightCorner(n - k - 1, n - k - 1) = uk;
        abar = ufull.adjoint() * abar * ufull;
        cbar = cbar * ufull;
        u = u * ufull;
      }
    }
    if (pop) {
      codeg = k + 1;
      break;
    }
  }
  const Index cq = codeg;

  // Assemble the permuted, rotated pencil on n+1 dimensions.
  const Index np = n + 1;
  CMatrix nfull = CMatrix::Zero(np, np);
  nfull.topLeftCorner(n, n) = abar;
  nfull.block(0, n, n, 1) = -(u.adjoint() * b);
  nfull.block(n, 0, 1, n) = cbar;
  CMatrix efull = CMatrix::Zero(np, np);
  efull.topLeftCorner(n, n) = CMatrix::Identity(n, n);

  // Column permutation: last column first. Row permutation: last row to cq+1.
  Eigen::VectorXi colperm(np), rowperm(np);
  colperm(0) = static_cast<int>(n);
  for (Index j = 1; j < np; ++j) colperm(j) = static_cast<int>(j - 1);
  for (Index i = 0; i < cq; ++i) rowperm(i) = static_cast<int>(i);
  rowperm(cq) = static_cast<int>(n);
  for (Index i = cq + 1; i < np; ++i) rowperm(i) = static_cast<int>(i - 1);

  CMatrix pr = CMatrix::Zero(np, np), pc = CMatrix::Zero(np, np);
  for (Index i = 0; i < np; ++i) pr(i, rowperm(i)) = 1.0;
  for (Index j = 0; j < np; ++j) pc(colperm(j), j) = 1.0;

  CMatrix nperm = pr * nfull * pc;
  CMatrix eperm = pr * efull * pc;
  CMatrix qpre = pr;  // accumulates left transforms
  // u acted on states only; fold into the permuted transforms.
  CMatrix ublk = CMatrix::Identity(np, np);
  ublk.topLeftCorner(n, n) = u;
  qpre = pr * ublk.adjoint();
  CMatrix zfull = ublk * pc;

  // Givens on rows cq, cq+1 (0-based) clearing the beta entry under alpha.
  if (cq + 1 < np) {
    const Complex al = nperm(cq, cq);
    const Complex be = nperm(cq + 1, cq);
    const double gn = std::sqrt(std::norm(al) + std::norm(be));
    if (gn > 0.0 && std::abs(be) > 0.0) {
      CMatrix g = CMatrix::Identity(np, np);
      g(cq, cq) = std::conj(al) / gn;
      g(cq, cq + 1) = std::conj(be) / gn;
      g(cq + 1, cq) = -be / gn;
      g(cq + 1, cq + 1) = al / gn;
      nperm = g * nperm;
      eperm = g * eperm;
      qpre = g * qpre;
    }
  }

  // Clean exact zeros in the leading block columns.
  for (Index j = 0; j <= cq && j < np; ++j)
    for (Index i = j + 1; i < np; ++i) nperm(i, j) = 0.0;
  eperm.col(0).setZero();
  for (Index j = 1; j <= cq && j < np; ++j) {
    for (Index i = 0; i < np; ++i)
      if (i + 1 != j) eperm(i, j) = 0.0;
  }

  PencilStaircase out;
  out.nn = std::move(nperm);
  out.ee = std::move(eperm);
  out.qh = qpre.adjoint();
  out.z = std::move(zfull);
  out.codegree = cq;
  return out;
}

}  // namespace detail

namespace {

// One-sided unitary controllability staircase: returns the reachable leading
// block (kept Markov parameters are exact, the dropped coupling is below
// rel_tol * ||A||).
void controllable_part(CMatrix& a, CMatrix& b, CMatrix& c, double rel_tol) {
  const Index n = a.rows();
  if (n == 0 || b.norm() == 0.0) {
    a = CMatrix(0, 0);
    b = CMatrix::Zero(0, b.cols());
    c = CMatrix::Zero(c.rows(), 0);
    return;
  }
  const double anorm = std::max(a.norm(), 1e-300);
  CMatrix u = detail::compress_to_e1(b);
  CMatrix abar = u.adjoint() * a * u;
  CMatrix bbar = u.adjoint() * b;
  CMatrix cbar = c * u;
  Index reach = n;
  for (Index k = 0; k + 1 < n; ++k) {
    Eigen::VectorXcd sub = abar.block(k + 1, k, n - k - 1, 1);
    if (sub.norm() <= rel_tol * anorm) {
      reach = k + 1;
      break;
    }
    CMatrix uk = detail::compress_to_e1(sub);
    CMatrix ufull = CMatrix::Identity(n, n);
    ufull.bottomRightCorner(n - k - 1, n - k - 1) = uk;
    abar = ufull.adjoint() * abar * ufull;
    cbar = cbar * ufull;
    u = u * ufull;
  }
  a = abar.topLeftCorner(reach, reach);
  b = bbar.topRows(reach);
  c = cbar.leftCols(reach);
}

}  // namespace

Realization staircase_minimal_reduce(const Realization& r, double rel_tol) {
  if (!r.is_scalar())
    throw DimensionError("staircase_minimal_reduce: scalar channel required");
  CMatrix a = r.a, b = r.b, c = r.c;
  controllable_part(a, b, c, rel_tol);
  // Observability pass via the dual pair.
  CMatrix ad = a.adjoint(), bd = c.adjoint(), cd = b.adjoint();
  controllable_part(ad, bd, cd, rel_tol);
  return Realization(ad.adjoint(), cd.adjoint(), bd.adjoint(), r.d);
}

CoDegreeReport staircase_codegree(const Realization& r, double rel_tol) {
  if (rel_tol < 0.0) rel_tol = numerics::default_rank_tol();
  if (!r.is_scalar()) throw DimensionError("staircase_codegree: scalar channel required");
  auto st = detail::pencil_staircase(r.a, r.b, r.c, rel_tol);
  CoDegreeReport rep;
  rep.codegree = st.codegree;
  rep.basis = st.z.leftCols(st.codegree + 1);
  rep.staircase_q = st.qh.adjoint();
  rep.staircase_z = st.z;
  return rep;
}

namespace {

// Square root factor L (with P = L L^*) of a hermitian PSD matrix, clipping
// small negative eigenvalues from roundoff.
CMatrix psd_sqrt_factor(const CMatrix& p) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es((p + p.adjoint()) / 2.0);
  if (es.info() != Eigen::Success)
    throw KernelFailureError("psd_sqrt_factor: eigendecomposition failed");
  Eigen::VectorXd lam = es.eigenvalues();
  const double lmax = std::max(lam.maxCoeff(), 0.0);
  Eigen::VectorXd root = lam.cwiseMax(0.0).cwiseSqrt();
  (void)lmax;
  return es.eigenvectors() * root.asDiagonal();
}

// Balanced-truncation reduction of a stable subsystem: drops Hankel singular
// values below rel_tol * sigma_max. Returns false (outputs untouched) when
// nothing falls below the threshold, so that callers can keep the original
// coordinates and their exact zero structure.
bool reduce_stable_part(const CMatrix& a, const CMatrix& b, const CMatrix& c,
                        double rel_tol, CMatrix& ra, CMatrix& rb, CMatrix& rc) {
  const Index n = a.rows();
  if (n == 0) return false;
  const CMatrix p = numerics::solve_lyapunov(a, b * b.adjoint());
  const CMatrix q = numerics::solve_lyapunov(a.adjoint(), c.adjoint() * c);
  const CMatrix lp = psd_sqrt_factor(p);
  const CMatrix lq = psd_sqrt_factor(q);
  auto dec = numerics::svd(lq.adjoint() * lp);
  const auto& sig = dec.s;
  const double smax = sig.size() ? sig(0) : 0.0;
  Index keep = 0;
  for (Index i = 0; i < sig.size(); ++i)
    if (sig(i) > rel_tol * smax && sig(i) > 0.0) ++keep;
  if (keep == n) return false;
  if (keep == 0) {
    ra = CMatrix(0, 0);
    rb = CMatrix::Zero(0, b.cols());
    rc = CMatrix::Zero(c.rows(), 0);
    return true;
  }
  Eigen::VectorXd sk = sig.head(keep);
  Eigen::VectorXd si = sk.cwiseSqrt().cwiseInverse();
  const CMatrix t = si.asDiagonal() * dec.u.leftCols(keep).adjoint() * lq.adjoint();
  const CMatrix tinv = lp * dec.v.leftCols(keep) * si.asDiagonal();
  ra = t * a * tinv;
  rb = t * b;
  rc = c * tinv;
  return true;
}

}  // namespace

Realization minimal_reduce(const Realization& r, double rel_tol) {
  const Index n = r.state_dim();
  if (n == 0) return r;
  const double anorm = std::max(r.a.norm(), 1.0);
  // Split; if eigenvalues sit numerically on the axis, leave the realization alone.
  Eigen::ComplexEigenSolver<CMatrix> eig(r.a, /*computeEigenvectors=*/false);
  for (Index i = 0; i < n; ++i)
    if (std::abs(eig.eigenvalues()(i).real()) < 1e-13 * anorm) return r;

  auto sch = numerics::schur_ordered(r.a, [](Complex l) { return l.real() < 0.0; });
  const Index ns = sch.selected;
  const CMatrix bt = sch.v.adjoint() * r.b;
  const CMatrix ct = r.c * sch.v;

  if (ns == n) {
    CMatrix ra, rb, rc;
    if (!reduce_stable_part(sch.t, bt, ct, rel_tol, ra, rb, rc)) return r;
    return Realization(std::move(ra), std::move(rb), std::move(rc), r.d);
  }
  // Block-diagonalize the stable/antistable split: T11 X - X T22 = T12.
  const CMatrix t11 = sch.t.topLeftCorner(ns, ns);
  const CMatrix t22 = sch.t.bottomRightCorner(n - ns, n - ns);
  const CMatrix t12 = sch.t.topRightCorner(ns, n - ns);
  const CMatrix x = numerics::solve_sylvester(t11, -t22, -t12);
  const CMatrix b1 = bt.topRows(ns) + x * bt.bottomRows(n - ns);
  const CMatrix b2 = bt.bottomRows(n - ns);
  const CMatrix c1 = ct.leftCols(ns);
  const CMatrix c2 = ct.rightCols(n - ns) - c1 * x;

  CMatrix sa, sb, sc, aa, ab, ac;
  const bool sred = reduce_stable_part(t11, b1, c1, rel_tol, sa, sb, sc);
  // Reflect the antistable part, reduce, reflect back.
  const bool ared = reduce_stable_part(-t22, b2, -c2, rel_tol, aa, ab, ac);
  if (!sred && !ared) return r;
  if (!sred) {
    sa = t11;
    sb = b1;
    sc = c1;
  }
  if (!ared) {
    aa = -t22;
    ab = b2;
    ac = -c2;
  }
  Realization stab(std::move(sa), std::move(sb), std::move(sc),
                   CMatrix::Zero(r.out_dim(), r.in_dim()));
  Realization anti(-aa, std::move(ab), -ac, CMatrix::Zero(r.out_dim(), r.in_dim()));
  Realization sum = add(stab, anti);
  return Realization(sum.a, sum.b, sum.c, r.d);
}

}  // namespace ratvol
