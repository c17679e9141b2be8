#include "ratvol/ratpdf.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <functional>
#include <numbers>

namespace ratvol {

namespace {

constexpr double kPi = std::numbers::pi;
const Complex kI(0.0, 1.0);

void check_stable(const CMatrix& a, const char* who) {
  if (a.rows() == 0) return;
  Eigen::ComplexEigenSolver<CMatrix> eig(a, false);
  for (Index i = 0; i < a.rows(); ++i)
    if (eig.eigenvalues()(i).real() >= 0.0)
      throw InvalidSummandError(std::string(who) + ": A is not asymptotically stable");
}

}  // namespace

SpectralSummand::SpectralSummand(CMatrix a_, CMatrix m_, CMatrix c_, bool check_stability)
    : a(std::move(a_)), m(std::move(m_)), c(std::move(c_)) {
  const Index n = a.rows();
  if (a.cols() != n || m.rows() != n || m.cols() != 1 || c.rows() != 1 || c.cols() != n)
    throw DimensionError("SpectralSummand: expected [n x n, n x 1, 1 x n]");
  if (check_stability) check_stable(a, "SpectralSummand");
}

Realization SpectralSummand::to_realization() const {
  return Realization(a, m, c, CMatrix::Zero(1, 1));
}

Realization SpectralFactor::to_realization() const {
  return Realization(a, b, c, CMatrix::Zero(1, 1));
}

Realization SpectralDensity::to_realization() const {
  return Realization(f, g, h, CMatrix::Zero(1, 1));
}

double SpectralDensity::value_at(double x) const {
  return evaluate_scalar(to_realization(), Complex(0.0, x)).real();
}

SpectralDensity density_from_summand(const SpectralSummand& z) {
  const Index n = z.dim();
  CMatrix f = CMatrix::Zero(2 * n, 2 * n);
  f.topLeftCorner(n, n) = z.a;
  f.bottomRightCorner(n, n) = -z.a.adjoint();
  CMatrix g(2 * n, 1);
  g.topRows(n) = z.m;
  g.bottomRows(n) = z.c.adjoint();
  CMatrix h(1, 2 * n);
  h.leftCols(n) = z.c;
  h.rightCols(n) = -z.m.adjoint();
  return {std::move(f), std::move(g), std::move(h)};
}

SpectralDensity density_from_factor(const SpectralFactor& k) {
  const Index n = k.dim();
  CMatrix f = CMatrix::Zero(2 * n, 2 * n);
  f.topLeftCorner(n, n) = k.a;
  f.topRightCorner(n, n) = -k.b * k.b.adjoint();
  f.bottomRightCorner(n, n) = -k.a.adjoint();
  CMatrix g = CMatrix::Zero(2 * n, 1);
  g.bottomRows(n) = k.c.adjoint();
  CMatrix h = CMatrix::Zero(1, 2 * n);
  h.leftCols(n) = k.c;
  return {std::move(f), std::move(g), std::move(h)};
}

SpectralSummand summand_from_factor(const SpectralFactor& k) {
  const CMatrix p = numerics::solve_lyapunov(k.a, k.b * k.b.adjoint());
  return SpectralSummand(k.a, p * k.c.adjoint(), k.c, /*check_stability=*/false);
}

SpectralSummand summand_from_density(const SpectralDensity& phi) {
  const Index n2 = phi.dim();
  const double fnorm = std::max(phi.f.norm(), 1.0);
  {
    Eigen::ComplexEigenSolver<CMatrix> eig(phi.f, false);
    for (Index i = 0; i < n2; ++i)
      if (std::abs(eig.eigenvalues()(i).real()) < 1e-12 * fnorm)
        throw AxisPoleError("summand_from_density: F has an eigenvalue on the imaginary axis");
  }
  auto sch = numerics::schur_ordered(phi.f, [](Complex l) { return l.real() < 0.0; });
  const Index ns = sch.selected;
  if (ns == 0 || ns == n2)
    throw AxisPoleError("summand_from_density: F has no stable/antistable split");
  const CMatrix f11 = sch.t.topLeftCorner(ns, ns);
  const CMatrix f22 = sch.t.bottomRightCorner(n2 - ns, n2 - ns);
  const CMatrix f12 = sch.t.topRightCorner(ns, n2 - ns);
  // -F11 P + P F22 + F12 = 0.
  const CMatrix p = numerics::solve_sylvester(-f11, f22, f12);
  const CMatrix gt = sch.v.adjoint() * phi.g;
  CMatrix m = gt.topRows(ns) + p * gt.bottomRows(n2 - ns);
  CMatrix c = (phi.h * sch.v).leftCols(ns);
  return SpectralSummand(f11, std::move(m), std::move(c), /*check_stability=*/false);
}

RationalPdf RationalPdf::from_summand(SpectralSummand z, double rank_tol) {
  if (rank_tol < 0.0) rank_tol = numerics::default_rank_tol();
  const Complex cm = z.cm();
  if (!(cm.real() > 0.0) || std::abs(cm.imag()) > 1e-9 * std::abs(cm.real()))
    throw InvalidSummandError("RationalPdf: CM is not real positive");
  auto density = density_from_summand(z);
  auto rep = staircase_codegree(density.to_realization(), rank_tol);
  RationalPdf pdf;
  pdf.summand = std::move(z);
  pdf.norm_const = 2.0 * kPi * cm.real();
  pdf.codegree = rep.codegree;
  return pdf;
}

RationalPdf RationalPdf::from_summand_with_codegree(SpectralSummand z, Index codegree) {
  const Complex cm = z.cm();
  if (!(cm.real() > 0.0) || std::abs(cm.imag()) > 1e-9 * std::abs(cm.real()))
    throw InvalidSummandError("RationalPdf: CM is not real positive");
  RationalPdf pdf;
  pdf.summand = std::move(z);
  pdf.norm_const = 2.0 * kPi * cm.real();
  pdf.codegree = codegree;
  return pdf;
}

SpectralSummand RationalPdf::normalized_summand() const {
  SpectralSummand z = summand;
  z.c /= norm_const;
  return z;
}

std::vector<Complex> raw_moments(const SpectralSummand& z, Index max_l) {
  const Complex cm = z.cm();
  std::vector<Complex> out;
  out.reserve(max_l + 1);
  CMatrix w = z.m;
  Complex pw(1.0, 0.0);  // (-i)^l
  for (Index l = 0; l <= max_l; ++l) {
    out.push_back(pw * (z.c * w)(0, 0) / cm);
    w = z.a * w;
    pw *= -kI;
  }
  return out;
}

MomentsResult normalize_and_moments(const SpectralSummand& z, Index max_l, double rank_tol) {
  const Complex cm = z.cm();
  if (!(cm.real() > 0.0) || std::abs(cm.imag()) > 1e-9 * std::abs(cm.real()))
    throw InvalidSummandError("normalize_and_moments: CM is not real positive");
  if (rank_tol < 0.0) rank_tol = numerics::default_rank_tol();
  auto rep = staircase_codegree(density_from_summand(z).to_realization(), rank_tol);
  if (max_l > rep.codegree - 2)
    throw MomentExistenceError("normalize_and_moments: moments exist only up to order " +
                               std::to_string(rep.codegree - 2));
  MomentsResult res;
  res.norm_const = 2.0 * kPi * cm.real();
  res.moments = raw_moments(z, max_l);
  return res;
}

SpectralSummand scale_rv(const SpectralSummand& z, double a) {
  if (a == 0.0) throw DegenerateScalingError("scale_rv: a must be nonzero");
  if (a > 0.0) return SpectralSummand(a * z.a, z.m, z.c, false);
  return SpectralSummand(-a * z.a.adjoint(), z.c.adjoint(), z.m.adjoint(), false);
}

SpectralSummand convolve(const SpectralSummand& z1, const SpectralSummand& z2) {
  const Index n1 = z1.dim(), n2 = z2.dim();
  CMatrix a = numerics::kron(z1.a, CMatrix::Identity(n2, n2)) +
              numerics::kron(CMatrix::Identity(n1, n1), z2.a);
  return SpectralSummand(std::move(a), numerics::kron(z1.m, z2.m),
                         numerics::kron(z1.c, z2.c), false);
}

namespace {

struct SpectralBlock {
  CMatrix a, m, c;
  bool single = false;  // all eigenvalues coincide (nilpotent A - lambda I)
  Complex lambda;
};

bool detect_single_eigenvalue(const CMatrix& a, Complex& lambda) {
  const Index p = a.rows();
  lambda = a.trace() / double(p);
  if (p == 1) return true;
  CMatrix d = a;
  d.diagonal().array() -= lambda;
  const double dn = d.norm();
  if (dn == 0.0) return true;
  CMatrix power = d / dn;
  for (Index k = 1; k < p; ++k) power = power * (d / dn);
  return power.norm() < 1e-10;
}

// Splits a summand into spectral blocks along eigenvalue clusters (relative
// join radius wide enough to absorb the root smear of multiple eigenvalues).
std::vector<SpectralBlock> split_spectral_blocks(const SpectralSummand& z,
                                                 double join_rel = 1e-2) {
  std::vector<SpectralBlock> out;
  const Index n = z.dim();
  if (n == 0) return out;

  Eigen::ComplexSchur<CMatrix> schur(z.a, true);
  if (schur.info() != Eigen::Success)
    throw KernelFailureError("split_spectral_blocks: Schur failed");
  CMatrix t = schur.matrixT();
  CMatrix v = schur.matrixU();

  // Union-find clustering of the diagonal.
  std::vector<int> parent(n);
  for (Index i = 0; i < n; ++i) parent[i] = int(i);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  double scale = 0.0;
  for (Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(t(i, i)));
  scale = std::max(scale, 1e-300);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (std::abs(t(i, i) - t(j, j)) <= join_rel * scale) parent[find(int(j))] = find(int(i));

  // Resolve cluster labels, then reorder so clusters are contiguous (stable
  // selection by the cluster of the first unplaced position).
  std::vector<int> label(n);
  for (Index i = 0; i < n; ++i) label[i] = find(int(i));
  Index placed = 0;
  while (placed < n) {
    const int cid = label[placed];
    Index target = placed;
    for (Index i = placed; i < n; ++i) {
      if (label[i] == cid) {
        if (i != target) {
          numerics::detail::move_schur_eigenvalue(t, v, i, target);
          const int moved = label[i];
          for (Index k = i; k > target; --k) label[k] = label[k - 1];
          label[target] = moved;
        }
        ++target;
      }
    }
    placed = target;
  }

  // Peel clusters off the front, block-diagonalizing against the rest.
  CMatrix tt = t;
  CMatrix mm = v.adjoint() * z.m;
  CMatrix cc = z.c * v;
  while (tt.rows() > 0) {
    const Index nn = tt.rows();
    Index p = 1;
    while (p < nn && std::abs(tt(p, p) - tt(0, 0)) <= join_rel * scale) ++p;
    SpectralBlock blk;
    if (p == nn) {
      blk.a = tt;
      blk.m = mm;
      blk.c = cc;
      blk.single = detect_single_eigenvalue(blk.a, blk.lambda);
      out.push_back(std::move(blk));
      break;
    }
    const CMatrix t11 = tt.topLeftCorner(p, p);
    const CMatrix t22 = tt.bottomRightCorner(nn - p, nn - p);
    const CMatrix t12 = tt.topRightCorner(p, nn - p);
    const CMatrix x = numerics::solve_sylvester(t11, -t22, -t12);
    blk.a = t11;
    blk.m = mm.topRows(p) + x * mm.bottomRows(nn - p);
    blk.c = cc.leftCols(p);
    blk.single = detect_single_eigenvalue(blk.a, blk.lambda);
    CMatrix c2 = cc.rightCols(nn - p) - blk.c * x;
    out.push_back(std::move(blk));
    tt = t22;
    mm = mm.bottomRows(nn - p).eval();
    cc = std::move(c2);
  }
  return out;
}

// Exact convolution of two single-eigenvalue blocks: Jordan-type result of
// dimension p + q - 1 with coefficients C (N1 (x) I + I (x) N2)^k M.
SpectralBlock convolve_single_blocks(const SpectralBlock& b1, const SpectralBlock& b2) {
  const Index p = b1.a.rows(), q = b2.a.rows();
  const Index r = p + q - 1;
  CMatrix n1 = b1.a;
  n1.diagonal().array() -= b1.lambda;
  CMatrix n2 = b2.a;
  n2.diagonal().array() -= b2.lambda;
  CMatrix vmat = b1.m * b2.m.transpose();  // p x q
  SpectralBlock out;
  out.single = true;
  out.lambda = b1.lambda + b2.lambda;
  out.a = CMatrix::Zero(r, r);
  for (Index i = 0; i < r; ++i) {
    out.a(i, i) = out.lambda;
    if (i + 1 < r) out.a(i, i + 1) = 1.0;
  }
  out.m = CMatrix::Zero(r, 1);
  for (Index k = 0; k < r; ++k) {
    out.m(k, 0) = (b1.c * vmat * b2.c.transpose())(0, 0);
    if (k + 1 < r) vmat = n1 * vmat + vmat * n2.transpose();
  }
  out.c = CMatrix::Zero(1, r);
  out.c(0, 0) = 1.0;
  // Rebalance the chain: the raw coefficients span many decades, which would
  // hide absolute errors behind a huge ||M||. Diagonal similarity with a
  // geometric ladder equalizes them.
  if (r > 1) {
    const double a0 = std::abs(out.m(0, 0));
    const double ar = std::abs(out.m(r - 1, 0));
    if (a0 > 0.0 && ar > 0.0) {
      const double gamma = std::pow(ar / a0, 1.0 / double(r - 1));
      if (gamma > 2.0 || gamma < 0.5) {
        double d = 1.0;
        for (Index k = 0; k < r; ++k) {
          out.m(k, 0) /= d;
          out.c(0, k) *= d;
          if (k + 1 < r) out.a(k, k + 1) = gamma;
          d *= gamma;
        }
      }
    }
  }
  return out;
}

bool has_multi_single_cluster(const CMatrix& a, double join_rel = 1e-2) {
  const Index n = a.rows();
  if (n < 2) return false;
  Eigen::ComplexEigenSolver<CMatrix> es(a, false);
  double scale = 1e-300;
  for (Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(es.eigenvalues()(i)));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (std::abs(es.eigenvalues()(i) - es.eigenvalues()(j)) <= join_rel * scale)
        return true;
  return false;
}

}  // namespace

SpectralSummand convolve_minimal(const SpectralSummand& z1, const SpectralSummand& z2) {
  // Collapsing only pays when both sides carry repeated poles.
  if (!has_multi_single_cluster(z1.a) || !has_multi_single_cluster(z2.a))
    return convolve(z1, z2);
  auto blocks1 = split_spectral_blocks(z1);
  auto blocks2 = split_spectral_blocks(z2);
  std::vector<SpectralBlock> pieces;
  for (const auto& b1 : blocks1) {
    for (const auto& b2 : blocks2) {
      if (b1.single && b2.single && b1.a.rows() > 1 && b2.a.rows() > 1) {
        pieces.push_back(convolve_single_blocks(b1, b2));
      } else {
        SpectralBlock blk;
        blk.a = numerics::kron(b1.a, CMatrix::Identity(b2.a.rows(), b2.a.rows())) +
                numerics::kron(CMatrix::Identity(b1.a.rows(), b1.a.rows()), b2.a);
        blk.m = numerics::kron(b1.m, b2.m);
        blk.c = numerics::kron(b1.c, b2.c);
        pieces.push_back(std::move(blk));
      }
    }
  }
  Index total = 0;
  for (const auto& b : pieces) total += b.a.rows();
  CMatrix a = CMatrix::Zero(total, total);
  CMatrix m = CMatrix::Zero(total, 1);
  CMatrix c = CMatrix::Zero(1, total);
  Index at = 0;
  for (const auto& b : pieces) {
    const Index nb = b.a.rows();
    a.block(at, at, nb, nb) = b.a;
    m.block(at, 0, nb, 1) = b.m;
    c.block(0, at, 1, nb) = b.c;
    at += nb;
  }
  return SpectralSummand(std::move(a), std::move(m), std::move(c), false);
}

Realization compose(const Realization& g1, const Realization& g2) {
  if (!g2.is_scalar()) throw DimensionError("compose: g2 must be scalar");
  const Index n1 = g1.state_dim(), n2 = g2.state_dim();
  const Complex d2 = g2.d.size() ? g2.d(0, 0) : Complex(0, 0);

  CMatrix a1s = g1.a;
  a1s.diagonal().array() -= d2;
  {
    Eigen::ComplexEigenSolver<CMatrix> eig(g1.a, false);
    const double scale = std::max({g1.a.norm(), std::abs(d2), 1.0});
    for (Index i = 0; i < n1; ++i)
      if (std::abs(eig.eigenvalues()(i) - d2) < 1e-12 * scale)
        throw ImproperCompositionError("compose: d2 is an eigenvalue of A1");
  }
  Eigen::PartialPivLU<CMatrix> lu(a1s);
  const CMatrix inv = lu.inverse();

  CMatrix a = numerics::kron(CMatrix::Identity(n1, n1), g2.a) +
              numerics::kron(inv, g2.b * g2.c);
  CMatrix b = -numerics::kron(inv * g1.b, g2.b);
  CMatrix c = numerics::kron(g1.c * inv, g2.c);
  CMatrix d = g1.d - g1.c * (inv * g1.b);
  return Realization(std::move(a), std::move(b), std::move(c), std::move(d));
}

RationalPdf make_cauchy(double scale, double location) {
  if (!(scale > 0.0)) throw UnsupportedDensityError("make_cauchy: scale must be positive");
  CMatrix a(1, 1), m(1, 1), c(1, 1);
  a(0, 0) = Complex(-scale, location);
  m(0, 0) = 1.0 / (2.0 * kPi);
  c(0, 0) = 1.0;
  RationalPdf pdf;
  pdf.summand = SpectralSummand(std::move(a), std::move(m), std::move(c), false);
  pdf.norm_const = 1.0;
  pdf.codegree = 2;
  return pdf;
}

RationalPdf make_scaled_t_odd(int df) {
  if (df < 3 || df % 2 == 0)
    throw UnsupportedDensityError("make_scaled_t_odd: df must be odd and >= 3");
  const int m = (df + 1) / 2;
  const double beta = std::sqrt(static_cast<double>(df - 2));
  // pdf(0) of the unit-variance scaled t.
  const double c_norm =
      std::tgamma((df + 1) / 2.0) / (std::sqrt((df - 2) * kPi) * std::tgamma(df / 2.0));
  const double kappa = std::sqrt(c_norm) * std::pow(beta, m);

  CMatrix a = CMatrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    a(i, i) = -beta;
    if (i + 1 < m) a(i, i + 1) = 1.0;
  }
  CMatrix b = CMatrix::Zero(m, 1);
  b(m - 1, 0) = kappa;
  CMatrix c = CMatrix::Zero(1, m);
  c(0, 0) = 1.0;

  SpectralFactor k{std::move(a), std::move(b), std::move(c), true};
  SpectralSummand z = summand_from_factor(k);
  const Complex cm = z.cm();
  const double nc = 2.0 * kPi * cm.real();
  if (std::abs(nc - 1.0) > 1e-9)
    throw InvalidSummandError("make_scaled_t_odd: normalization check failed");
  RationalPdf pdf;
  pdf.summand = std::move(z);
  pdf.norm_const = nc;
  pdf.codegree = df + 1;
  return pdf;
}

double pdf_eval(const RationalPdf& p, double x) {
  double val;
  if (p.summand.dim() == 0) {
    val = 0.0;
  } else {
    val = 2.0 * evaluate_scalar(p.summand.to_realization(), Complex(0.0, x)).real() /
          p.norm_const;
  }
  if (val < 0.0) {
    if (val > -1e-12) return 0.0;
    throw InvalidSummandError("pdf_eval: density is negative at x=" + std::to_string(x));
  }
  return val;
}

namespace detail {

PreparedPencil prepare_summand_pencil(const SpectralSummand& z, const FactorOptions& opts) {
  double rank_tol = opts.rank_tol < 0.0 ? numerics::default_rank_tol() : opts.rank_tol;
  const Index n = z.dim();
  auto density = density_from_summand(z);
  auto st = ratvol::detail::pencil_staircase(density.f, density.g, density.h, rank_tol,
                                             opts.known_codegree);
  if (st.codegree % 2 != 0)
    throw FactorizationFailureError("factorization: co-degree of Phi is odd (" +
                                    std::to_string(st.codegree) + ")");
  PreparedPencil prep;
  prep.codegree_half = st.codegree / 2;
  const Index np = 2 * n + 1;
  const Index lead = st.codegree + 1;
  const Index trail = np - lead;
  prep.nn = std::move(st.nn);
  prep.ee = std::move(st.ee);
  prep.qh = std::move(st.qh);
  prep.z = std::move(st.z);

  if (trail > 0) {
    CMatrix tn = prep.nn.bottomRightCorner(trail, trail);
    CMatrix te = prep.ee.bottomRightCorner(trail, trail);
    CMatrix qh2, z2, tnn, tee;
    numerics::detail::generalized_schur(tn, te, tnn, tee, qh2, z2);
    prep.nn.bottomRightCorner(trail, trail) = tnn;
    prep.ee.bottomRightCorner(trail, trail) = tee;
    prep.nn.topRightCorner(lead, trail) *= z2;
    prep.ee.topRightCorner(lead, trail) *= z2;
    prep.qh.rightCols(trail) *= qh2;
    prep.z.rightCols(trail) *= z2;
  }
  // Clean roundoff below the diagonal.
  for (Index j = 0; j < np; ++j)
    for (Index i = j + 1; i < np; ++i) {
      prep.nn(i, j) = 0.0;
      prep.ee(i, j) = 0.0;
    }

  // Finite zeros and their scale.
  double scale = 0.0;
  std::vector<Complex> zeros;
  const double emax = prep.ee.cwiseAbs().maxCoeff();
  for (Index i = lead; i < np; ++i) {
    if (std::abs(prep.ee(i, i)) < 1e-13 * std::max(emax, 1.0))
      throw FactorizationFailureError(
          "factorization: unexpected infinite eigenvalue in the finite pencil block");
    const Complex lam = prep.nn(i, i) / prep.ee(i, i);
    zeros.push_back(lam);
    scale = std::max(scale, std::abs(lam));
  }
  prep.zero_scale = std::max(scale, 1.0);
  for (Complex lam : zeros) {
    if (std::abs(lam.real()) < opts.axis_fail_tol * prep.zero_scale)
      throw IllConditionedFactorizationError(
          "factorization: zero of Phi numerically on the imaginary axis");
    if (std::abs(lam.real()) < opts.near_axis_tol * prep.zero_scale)
      prep.near_axis_warning = true;
  }
  if (prep.near_axis_warning)
    std::fputs("ratvol: warning: spectral zeros close to the imaginary axis\n", stderr);
  return prep;
}

FactorizationResult extract_factor(const SpectralSummand& z, const PreparedPencil& prep,
                                   FactorSide side, const FactorOptions& opts) {
  const Index n = z.dim();
  const Index np = 2 * n + 1;
  const Index c = prep.codegree_half;
  const Index lead = 2 * c + 1;

  CMatrix nn = prep.nn, ee = prep.ee, qh = prep.qh, zz = prep.z;

  const bool want_antistable = (side == FactorSide::min_phase);
  auto selected = [&](Index i) {
    const Complex lam = nn(i, i) / ee(i, i);
    return want_antistable ? (lam.real() > 0.0) : (lam.real() < 0.0);
  };

  // Count the finite eigenvalues on the wanted side.
  Index count = 0;
  for (Index i = lead; i < np; ++i)
    if (selected(i)) ++count;
  if (count != n - c)
    throw FactorizationFailureError("factorization: expected " + std::to_string(n - c) +
                                    " selected zeros, found " + std::to_string(count));

  // Move them to positions c+1 .. n (0-based), right after the first c+1
  // infinite positions.
  for (Index target = c + 1; target < n + 1; ++target) {
    Index found = -1;
    for (Index i = target; i < np; ++i) {
      if (std::abs(ee(i, i)) <= 1e-13 * std::max(ee.cwiseAbs().maxCoeff(), 1.0)) continue;
      if (selected(i)) {
        found = i;
        break;
      }
    }
    if (found < 0) throw FactorizationFailureError("factorization: reordering lost a zero");
    if (found != target) numerics::detail::move_pencil_eigenvalue(nn, ee, qh, zz, found, target);
  }

  // Deflating-subspace basis and the LMI solution P.
  const CMatrix basis = zz.leftCols(n + 1);
  const CMatrix z1 = basis.block(0, 1, n, n);
  const CMatrix z2 = basis.block(n, 1, n, n);
  Eigen::ColPivHouseholderQR<CMatrix> qr(z2.transpose());
  qr.setThreshold(1e-13);
  if (!qr.isInvertible())
    throw IllConditionedFactorizationError(
        "factorization: deflating basis is degenerate (near-nonminimal summand; "
        "reduce before factorizing)");
  CMatrix p = qr.solve(z1.transpose()).transpose();
  p = (p + p.adjoint()) / 2.0;

  // L(P) must be PSD of rank one: L = [B;0][B;0]^*. The pencil solution of P
  // is polluted along weakly reachable directions, so gate it loosely here;
  // the decisive check happens after the Lyapunov refinement below.
  CMatrix lam = -z.a * p - p * z.a.adjoint();
  lam = (lam + lam.adjoint()) / 2.0;
  {
    const CMatrix resm0 = z.m - p * z.c.adjoint();
    CMatrix lfull = CMatrix::Zero(n + 1, n + 1);
    lfull.topLeftCorner(n, n) = lam;
    lfull.block(0, n, n, 1) = resm0;
    lfull.block(n, 0, 1, n) = resm0.adjoint();
    Eigen::JacobiSVD<CMatrix> lsvd(lfull);
    const auto& sv = lsvd.singularValues();
    const double s1 = sv(0);
    const double defect = sv.size() > 1 ? sv(1) / std::max(s1, 1e-300) : 0.0;
    if (!(s1 > 0.0) || defect > std::max(1e-2, opts.rank_one_tol))
      throw FactorizationFailureError("factorization: L(P) rank-one defect " +
                                      std::to_string(defect));
  }

  Eigen::SelfAdjointEigenSolver<CMatrix> es(lam);
  const Index last = n - 1;
  const double l1 = es.eigenvalues()(last);
  if (!(l1 > 0.0))
    throw FactorizationFailureError("factorization: L(P) has no positive eigenvalue");
  if (es.eigenvalues()(0) < -std::max(1e-2, opts.rank_one_tol) * l1)
    throw FactorizationFailureError("factorization: L(P) is not positive semidefinite");
  CMatrix b = std::sqrt(l1) * es.eigenvectors().col(last);

  // Fix the unimodular phase by the first significant entry.
  for (Index i = 0; i < n; ++i) {
    if (std::abs(b(i, 0)) > 1e-12 * b.norm()) {
      b *= std::conj(b(i, 0)) / std::abs(b(i, 0));
      break;
    }
  }

  // Refinement: the extremal solution is the gramian of its own factor,
  // A P + P A^* + B B^* = 0. A Gauss-Newton polish of B against the second
  // LMI identity M = P C^* removes the error the deflating-subspace division
  // leaves along weakly reachable directions.
  numerics::LyapunovSolver lyap(z.a);
  const double mscale = std::max(z.m.norm(), 1e-300);
  CMatrix pref = lyap.solve(b * b.adjoint());
  double defect = (z.m - pref * z.c.adjoint()).norm() / mscale;
  for (int iter = 0; iter < 4 && defect > 1e-13; ++iter) {
    const CMatrix r = z.m - pref * z.c.adjoint();
    // Real-linear system: d/dB of (P(B) C^*) applied to unit directions.
    Eigen::MatrixXd jac(2 * n, 2 * n);
    for (Index j = 0; j < n; ++j) {
      for (int comp = 0; comp < 2; ++comp) {
        CMatrix e = CMatrix::Zero(n, 1);
        e(j, 0) = comp == 0 ? Complex(1, 0) : Complex(0, 1);
        const CMatrix dp = lyap.solve(e * b.adjoint() + b * e.adjoint());
        const CMatrix dr = dp * z.c.adjoint();
        for (Index i = 0; i < n; ++i) {
          jac(i, 2 * j + comp) = dr(i, 0).real();
          jac(n + i, 2 * j + comp) = dr(i, 0).imag();
        }
      }
    }
    Eigen::VectorXd rhs(2 * n);
    for (Index i = 0; i < n; ++i) {
      rhs(i) = r(i, 0).real();
      rhs(n + i) = r(i, 0).imag();
    }
    Eigen::BDCSVD<Eigen::MatrixXd> jsvd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    jsvd.setThreshold(1e-12);
    const Eigen::VectorXd delta = jsvd.solve(rhs);
    CMatrix bnew = b;
    for (Index j = 0; j < n; ++j) bnew(j, 0) += Complex(delta(2 * j), delta(2 * j + 1));
    const CMatrix pnew = lyap.solve(bnew * bnew.adjoint());
    const double dnew = (z.m - pnew * z.c.adjoint()).norm() / mscale;
    if (!(dnew < defect)) break;
    b = std::move(bnew);
    pref = pnew;
    defect = dnew;
  }
  if (defect > opts.rank_one_tol)
    throw FactorizationFailureError("factorization: refined L(P) defect " +
                                    std::to_string(defect));
  // Re-fix the phase after polishing.
  for (Index i = 0; i < n; ++i) {
    if (std::abs(b(i, 0)) > 1e-12 * b.norm()) {
      b *= std::conj(b(i, 0)) / std::abs(b(i, 0));
      break;
    }
  }

  FactorizationResult res;
  res.k = SpectralFactor{z.a, std::move(b), z.c, side == FactorSide::min_phase};
  res.p = std::move(pref);
  res.codegree_half = c;
  res.near_axis_warning = prep.near_axis_warning;
  res.rank_defect = defect;
  return res;
}

}  // namespace detail

FactorizationResult factor_from_summand(const SpectralSummand& z, FactorSide side,
                                        const FactorOptions& opts) {
  auto prep = detail::prepare_summand_pencil(z, opts);
  return detail::extract_factor(z, prep, side, opts);
}

}  // namespace ratvol
