#pragma once

#include "ratvol/numerics.hpp"

namespace ratvol {

using numerics::CMatrix;
using numerics::Complex;
using numerics::Index;

// State-space realization of the proper rational matrix function
// C (sI - A)^{-1} B + D with A: n x n, B: n x m, C: p x n, D: p x m.
struct Realization {
  CMatrix a, b, c, d;

  Realization() = default;
  Realization(CMatrix a_, CMatrix b_, CMatrix c_, CMatrix d_);

  Index state_dim() const { return a.rows(); }
  Index in_dim() const { return b.cols(); }
  Index out_dim() const { return c.rows(); }

  bool is_scalar() const { return in_dim() == 1 && out_dim() == 1; }
  bool strictly_proper(double tol = 1e-12) const;

  // n = 0 realization of a constant function.
  static Realization constant(const CMatrix& d);
  static Realization constant_scalar(Complex value);
};

// Evaluates C (sI - A)^{-1} B + D via a linear solve.
CMatrix evaluate(const Realization& r, Complex s);
Complex evaluate_scalar(const Realization& r, Complex s);

// G^*(s) = conj(G(-conj(s))): realization [-A^*, C^*, -B^*, D^*].
Realization adjoint(const Realization& r);

Realization add(const Realization& r1, const Realization& r2);
Realization multiply(const Realization& r1, const Realization& r2);
Realization scale_output(const Realization& r, Complex k);

// For strictly proper r, realization of G(s) = r(y s) * s, y != 0:
// [A/y, A B / y^2, C, C B / y].
Realization arg_scale_times_s(const Realization& r, Complex y);

struct CoDegreeReport {
  Index codegree = 0;
  CMatrix basis;        // orthonormal columns spanning the infinite-divisor subspace
  CMatrix staircase_q;  // unitary, staircase_q * N * staircase_z block triangular
  CMatrix staircase_z;  // unitary
};

// Co-degree of a scalar strictly proper realization via the staircase form of
// the pencil [lambda I - A, B; -C, 0]. Rank decisions use rel_tol relative to
// the norms of B, C.
CoDegreeReport staircase_codegree(const Realization& r, double rel_tol = -1.0);

// Removes numerically uncontrollable/unobservable states: balanced truncation
// of the stable part and of the reflected antistable part with threshold
// rel_tol on the Hankel singular values.
Realization minimal_reduce(const Realization& r, double rel_tol = 1e-12);

// Unitary controllability/observability staircase reduction for scalar
// realizations: drops exactly unreachable/unobservable coordinates without
// re-balancing, so the leading Markov parameters (and with them the co-degree
// structure) are preserved to machine precision.
Realization staircase_minimal_reduce(const Realization& r, double rel_tol = 1e-13);

namespace detail {

// Result of the staircase reduction of the pencil [lambda I - A, B; -C, 0]
// for a scalar strictly proper (A, B, C): the leading (codegree+1) block of
// (nn, ee) is triangular and carries the infinite elementary divisor; the
// trailing block holds the finite zero structure (not yet triangularized).
// Conventions: pencil_n = qh * nn * z^H, pencil_e = qh * ee * z^H.
struct PencilStaircase {
  CMatrix nn, ee;
  CMatrix qh, z;
  Index codegree = 0;
};

// forced_codegree >= 0 pins the co-degree from external bookkeeping instead
// of threshold detection; output-row entries below the forced position are
// projected to zero (they are numerical leakage of an evolved realization).
PencilStaircase pencil_staircase(const CMatrix& a, const CMatrix& b, const CMatrix& c,
                                 double rel_tol, Index forced_codegree = -1);

}  // namespace detail

}  // namespace ratvol
