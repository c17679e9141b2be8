#pragma once

#include <vector>

#include "ratvol/realization.hpp"

namespace ratvol {

// Stable strictly proper Z(s) = C (sI - A)^{-1} M with Z + Z^* = Phi.
struct SpectralSummand {
  CMatrix a, m, c;

  SpectralSummand() = default;
  SpectralSummand(CMatrix a_, CMatrix m_, CMatrix c_, bool check_stability = true);

  Index dim() const { return a.rows(); }
  Realization to_realization() const;
  Complex cm() const { return (c * m)(0, 0); }
};

// Stable strictly proper K(s) = C (sI - A)^{-1} B with K K^* = Phi.
struct SpectralFactor {
  CMatrix a, b, c;
  bool min_phase = true;

  Index dim() const { return a.rows(); }
  Realization to_realization() const;
};

// Strictly proper realization of the spectral density Phi itself.
struct SpectralDensity {
  CMatrix f, g, h;

  Index dim() const { return f.rows(); }
  Realization to_realization() const;
  // Phi(ix) for real x.
  double value_at(double x) const;
};

// A rational probability density: spectral summand plus the normalization
// constant 2*pi*CM and the co-degree of Phi.
struct RationalPdf {
  SpectralSummand summand;
  double norm_const = 1.0;
  Index codegree = 0;

  // Computes norm_const from CM and the co-degree by staircase reduction.
  static RationalPdf from_summand(SpectralSummand z, double rank_tol = -1.0);
  // Trusts a caller-supplied co-degree (used where the recursion pins it).
  static RationalPdf from_summand_with_codegree(SpectralSummand z, Index codegree);

  // Summand rescaled so that norm_const == 1.
  SpectralSummand normalized_summand() const;
};

SpectralDensity density_from_summand(const SpectralSummand& z);
SpectralDensity density_from_factor(const SpectralFactor& k);

// Appendix route via the Lyapunov equation AP + PA^* + BB^* = 0, M = PC^*.
SpectralSummand summand_from_factor(const SpectralFactor& k);

// Schur split of F plus a Sylvester solve extracts the stable summand.
SpectralSummand summand_from_density(const SpectralDensity& phi);

enum class FactorSide { min_phase, max_phase };

struct FactorOptions {
  double rank_tol = -1.0;        // staircase rank decisions; -1 = library default
  double rank_one_tol = 1e-5;    // relative sigma_2/sigma_1 bound on L(P)
  double near_axis_tol = 1e-8;   // |Re(zero)| below this * scale -> warning
  double axis_fail_tol = 1e-13;  // |Re(zero)| below this * scale -> error
  // Co-degree of Phi pinned by external bookkeeping (the filter recursion);
  // -1 detects it by the staircase threshold instead.
  Index known_codegree = -1;
};

struct FactorizationResult {
  SpectralFactor k;
  CMatrix p;                   // extremal LMI solution (min or max element)
  Index codegree_half = 0;     // c with co-degree(Phi) = 2c
  bool near_axis_warning = false;
  double rank_defect = 0.0;    // sigma_2/sigma_1 of L(P)
};

// Spectral factorization via the pencil of the positive real lemma.
FactorizationResult factor_from_summand(const SpectralSummand& z, FactorSide side,
                                        const FactorOptions& opts = {});

struct MomentsResult {
  double norm_const = 0.0;
  std::vector<Complex> moments;  // moments[l] = E(X^l), l = 0..max_l
};

// Prop.-style normalization constant 2*pi*CM and moments (-i)^l CA^lM / CM.
// Verifies max_l against the co-degree computed by staircase reduction.
MomentsResult normalize_and_moments(const SpectralSummand& z, Index max_l,
                                    double rank_tol = -1.0);

// Moments without the co-degree gate (callers that track it themselves).
std::vector<Complex> raw_moments(const SpectralSummand& z, Index max_l);

// Summand of a*X.
SpectralSummand scale_rv(const SpectralSummand& z, double a);

// Summand of X1 + X2 (Kronecker construction). The result is unnormalized
// even if the inputs are normalized.
SpectralSummand convolve(const SpectralSummand& z1, const SpectralSummand& z2);

// Same function as convolve(), but coinciding-pole (Jordan-type) blocks of
// the two arguments are convolved by exact nilpotent algebra into blocks of
// dimension p+q-1 instead of p*q. Removes the exact non-minimality that the
// plain Kronecker form produces when both inputs carry multiple poles.
SpectralSummand convolve_minimal(const SpectralSummand& z1, const SpectralSummand& z2);

// Realization of the composition G1 o g2 (g2 scalar proper, d2 not an
// eigenvalue of A1).
Realization compose(const Realization& g1, const Realization& g2);

RationalPdf make_cauchy(double scale, double location = 0.0);

// Unit-variance scaled Student t with an odd number of degrees of freedom.
RationalPdf make_scaled_t_odd(int df);

// (Z(ix) + Z^*(ix)) / norm_const, tiny negatives from roundoff clamped to 0.
double pdf_eval(const RationalPdf& p, double x);

namespace detail {

// Triangularized pencil of a summand shared by the min/max factorizations.
struct PreparedPencil {
  CMatrix nn, ee, qh, z;
  Index codegree_half = 0;
  bool near_axis_warning = false;
  double zero_scale = 0.0;
};

PreparedPencil prepare_summand_pencil(const SpectralSummand& z, const FactorOptions& opts);

FactorizationResult extract_factor(const SpectralSummand& z, const PreparedPencil& prep,
                                   FactorSide side, const FactorOptions& opts);

}  // namespace detail

}  // namespace ratvol
