#pragma once

#include "ratvol/ratpdf.hpp"

namespace ratvol {

struct ExtremalGramians {
  CMatrix pmin, pmax;
  Index codegree_half = 0;
  bool near_axis_warning = false;
};

// Minimal and maximal solutions of the positive real LMI, from the min- and
// max-phase spectral factorizations (one pencil reduction, two reorderings).
ExtremalGramians extremal_gramians(const SpectralSummand& z, const FactorOptions& opts = {});

struct BalancedSummand {
  SpectralSummand summand;   // positive-real balanced coordinates
  Eigen::VectorXd sigma;     // positive real singular values, descending
  Index codegree_half = 0;   // c; sigma_1..sigma_c equal 1
};

BalancedSummand balance(const SpectralSummand& z, const FactorOptions& opts = {});

// Leading m x m subsystem of the balanced realization; requires m >= c.
SpectralSummand truncate(const BalancedSummand& b, Index m);

// prod_{k=m+1}^{n} ((1+sigma_k)/(1-sigma_k))^2 - 1; +inf if the discarded
// tail contains sigma >= 1.
double relative_error_bound(const Eigen::VectorXd& sigma, Index m);

// 2*tau/(1-tau) for the density-level bound.
double pdf_error_bound(double tau);

struct TruncationResult {
  SpectralSummand summand;
  Index m = 0;
  Index n_full = 0;
  Index codegree_half = 0;
  double achieved_bound = 0.0;  // pdf-level bound at the chosen m
  Eigen::VectorXd sigma;
};

// Smallest m >= c whose pdf-level bound does not exceed tau.
TruncationResult truncate_to_tolerance(const SpectralSummand& z, double tau,
                                       const FactorOptions& opts = {});

}  // namespace ratvol
