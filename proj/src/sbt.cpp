#include "ratvol/sbt.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace ratvol {

namespace {

// Hermitian PSD square root with negative-eigenvalue clipping.
CMatrix psd_sqrt(const CMatrix& p) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es((p + p.adjoint()) / 2.0);
  if (es.info() != Eigen::Success)
    throw KernelFailureError("psd_sqrt: eigendecomposition failed");
  Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

// Pmin together with Qmin, the minimal solution of the dual LMI. The maximal
// primal solution is Qmin^{-1}; the balancing below never forms that inverse,
// which keeps near-nonminimal summands (tiny positive real singular values)
// tractable.
struct GramianPair {
  CMatrix pmin, qmin;
  Index codegree_half = 0;
  bool near_axis_warning = false;
};

GramianPair extremal_pair(const SpectralSummand& z, const FactorOptions& opts) {
  auto prep = detail::prepare_summand_pencil(z, opts);
  auto fmin = detail::extract_factor(z, prep, FactorSide::min_phase, opts);

  SpectralSummand zdual(z.a.adjoint(), z.c.adjoint(), z.m.adjoint(), false);
  auto prep_dual = detail::prepare_summand_pencil(zdual, opts);
  if (prep_dual.codegree_half != prep.codegree_half)
    throw FactorizationFailureError("extremal gramians: primal/dual co-degree mismatch");
  auto fdual = detail::extract_factor(zdual, prep_dual, FactorSide::min_phase, opts);

  GramianPair out;
  out.pmin = std::move(fmin.p);
  out.qmin = std::move(fdual.p);
  out.codegree_half = prep.codegree_half;
  out.near_axis_warning = prep.near_axis_warning || prep_dual.near_axis_warning;
  return out;
}

struct BalancingData {
  Eigen::VectorXd sigma;
  CMatrix u, v;    // svd factors of sqrt(Pmin) sqrt(Qmin)
  CMatrix lp, lq;  // hermitian square roots
};

BalancingData balancing_data(const GramianPair& gr) {
  BalancingData bd;
  bd.lp = psd_sqrt(gr.pmin);
  bd.lq = psd_sqrt(gr.qmin);
  auto dec = numerics::svd(bd.lp * bd.lq);
  bd.sigma = dec.s;
  bd.u = dec.u;
  bd.v = dec.v;
  return bd;
}

// Leading m rows/columns of the balancing pair: t = S^{-1/2} V^* Lq,
// r = Lp U S^{-1/2}; then t P_min t^* = r^* Q_min r = diag(sigma_1..m).
SpectralSummand truncated_summand(const SpectralSummand& z, const BalancingData& bd,
                                  Index m) {
  Eigen::VectorXd s = bd.sigma.head(m).cwiseMax(1e-150);
  Eigen::VectorXd si = s.cwiseSqrt().cwiseInverse();
  const CMatrix t = si.asDiagonal() * bd.v.leftCols(m).adjoint() * bd.lq;
  const CMatrix r = bd.lp * bd.u.leftCols(m) * si.asDiagonal();
  return SpectralSummand(t * z.a * r, t * z.m, z.c * r, false);
}

}  // namespace

ExtremalGramians extremal_gramians(const SpectralSummand& z, const FactorOptions& opts) {
  auto pair = extremal_pair(z, opts);
  ExtremalGramians out;
  out.pmin = pair.pmin;
  out.codegree_half = pair.codegree_half;
  out.near_axis_warning = pair.near_axis_warning;
  // Pmax = Qmin^{-1}, formed with eigenvalue clipping; callers that need the
  // extremal pair without an inversion should balance or truncate instead.
  Eigen::SelfAdjointEigenSolver<CMatrix> es((pair.qmin + pair.qmin.adjoint()) / 2.0);
  if (es.info() != Eigen::Success)
    throw KernelFailureError("extremal_gramians: eigendecomposition failed");
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmax > 0.0))
    throw IllConditionedFactorizationError("extremal_gramians: dual gramian is zero");
  Eigen::VectorXd inv = es.eigenvalues().cwiseMax(1e-14 * lmax).cwiseInverse();
  out.pmax = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
  return out;
}

BalancedSummand balance(const SpectralSummand& z, const FactorOptions& opts) {
  auto pair = extremal_pair(z, opts);
  auto bd = balancing_data(pair);
  BalancedSummand out;
  out.summand = truncated_summand(z, bd, z.dim());
  out.sigma = bd.sigma;
  out.codegree_half = pair.codegree_half;
  return out;
}

SpectralSummand truncate(const BalancedSummand& b, Index m) {
  const Index n = b.summand.dim();
  if (m < b.codegree_half)
    throw InfiniteBoundError("truncate: m below the co-degree gives an infinite bound");
  if (m > n) throw DimensionError("truncate: m exceeds the state dimension");
  return SpectralSummand(b.summand.a.topLeftCorner(m, m), b.summand.m.topRows(m),
                         b.summand.c.leftCols(m), false);
}

double relative_error_bound(const Eigen::VectorXd& sigma, Index m) {
  if (m < 0 || m > sigma.size()) throw ConfigError("relative_error_bound: bad m");
  double prod = 1.0;
  for (Index k = m; k < sigma.size(); ++k) {
    const double s = sigma(k);
    if (s >= 1.0) return std::numeric_limits<double>::infinity();
    const double f = (1.0 + s) / (1.0 - s);
    prod *= f * f;
    if (!std::isfinite(prod)) return std::numeric_limits<double>::infinity();
  }
  return prod - 1.0;
}

double pdf_error_bound(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("pdf_error_bound: tau must be in (0,1)");
  return 2.0 * tau / (1.0 - tau);
}

TruncationResult truncate_to_tolerance(const SpectralSummand& z, double tau,
                                       const FactorOptions& opts) {
  if (!(tau > 0.0 && tau < 1.0))
    throw ConfigError("truncate_to_tolerance: tau must be in (0,1)");
  auto pair = extremal_pair(z, opts);
  auto bd = balancing_data(pair);
  const Index n = z.dim();
  TruncationResult res;
  res.n_full = n;
  res.codegree_half = pair.codegree_half;
  res.sigma = bd.sigma;
  Index pick = n;
  double achieved = 0.0;
  for (Index m = pair.codegree_half; m <= n; ++m) {
    const double rb = relative_error_bound(bd.sigma, m);
    if (!std::isfinite(rb) || rb >= 1.0) continue;
    const double bound = rb > 0.0 ? pdf_error_bound(rb) : 0.0;
    if (bound <= tau) {
      pick = m;
      achieved = bound;
      break;
    }
  }
  res.m = pick;
  res.achieved_bound = achieved;
  res.summand = truncated_summand(z, bd, pick);
  return res;
}

}  // namespace ratvol
