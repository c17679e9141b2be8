#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>

#include "ratvol/errors.hpp"

namespace ratvol::numerics {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

// Relative tolerance used for rank decisions (staircase compressions,
// rank-one LMI check). Overridable via the RATVOL_RANK_TOL environment
// variable or set_default_rank_tol().
double default_rank_tol();
void set_default_rank_tol(double tol);

// Generalized eigenvalues with |Re| below this multiple of the pencil scale
// trigger a near-imaginary-axis warning.
inline constexpr double kNearAxisRelTol = 1e-8;

bool all_finite(const CMatrix& m);

struct SvdResult {
  CMatrix u;          // unitary, rows x min(rows,cols)..rows depending on thinness
  Eigen::VectorXd s;  // singular values, descending
  CMatrix v;          // unitary
};

// Full SVD m = u * diag(s) * v^*.
SvdResult svd(const CMatrix& m);

using EigSelector = std::function<bool(Complex)>;

struct SchurResult {
  CMatrix v;  // unitary
  CMatrix t;  // upper triangular, v^* m v = t
  Index selected = 0;
};

// Complex Schur decomposition with the eigenvalues satisfying `select`
// moved to the leading diagonal positions (relative order preserved).
SchurResult schur_ordered(const CMatrix& m, const EigSelector& select);

// select(alpha, beta): generalized eigenvalue alpha/beta of the pair;
// beta == 0 encodes an infinite eigenvalue.
using PencilSelector = std::function<bool(Complex alpha, Complex beta)>;

struct QzResult {
  CMatrix q;  // unitary, q * e * z = ee
  CMatrix z;  // unitary
  CMatrix ee;  // upper triangular
  CMatrix nn;  // upper triangular, q * n * z = nn
  Index selected = 0;
};

// Ordered QZ of the pencil lambda*e - n: eigenvalues nn(i,i)/ee(i,i) with
// select(nn(i,i), ee(i,i)) true occupy the leading positions.
QzResult qz_ordered(const CMatrix& e, const CMatrix& n, const PencilSelector& select);

// Solves a X + X b + c = 0 (spectra of a and -b must be disjoint).
CMatrix solve_sylvester(const CMatrix& a, const CMatrix& b, const CMatrix& c);

// Solves a P + P a^* + q = 0 for stable a and hermitian q; P hermitian.
CMatrix solve_lyapunov(const CMatrix& a, const CMatrix& q);

// Repeated Lyapunov solves against a fixed stable a: the Schur form is
// computed once.
class LyapunovSolver {
 public:
  explicit LyapunovSolver(const CMatrix& a);
  CMatrix solve(const CMatrix& q) const;  // a P + P a^* + q = 0

 private:
  CMatrix u_, t_;
};

// Number of singular values exceeding rel_tol * (largest singular value).
Index numerical_rank(const CMatrix& m, double rel_tol);

CMatrix kron(const CMatrix& a, const CMatrix& b);

namespace detail {

// Moves the diagonal position ifst of the triangular pair (nn, ee) to ilst
// (0-based) by unitary equivalences, accumulating qh (left, vsl convention:
// pencil = qh * triangular * z^H) and z. Wraps LAPACK ztgexc.
void move_pencil_eigenvalue(CMatrix& nn, CMatrix& ee, CMatrix& qh, CMatrix& z,
                            Index ifst, Index ilst);

// Moves diagonal position ifst of upper-triangular t to ilst, accumulating
// the unitary v (m = v t v^*). Wraps LAPACK ztrexc.
void move_schur_eigenvalue(CMatrix& t, CMatrix& v, Index ifst, Index ilst);

// Unordered generalized Schur of the pencil lambda*e - n via zgges:
// qh^* n z = nn, qh^* e z = ee with nn, ee upper triangular.
void generalized_schur(const CMatrix& n, const CMatrix& e, CMatrix& nn, CMatrix& ee,
                       CMatrix& qh, CMatrix& z);

}  // namespace detail

}  // namespace ratvol::numerics
