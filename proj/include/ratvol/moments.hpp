#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ratvol/errors.hpp"

namespace ratvol::moments {

// Structural inputs for the closed-form moment machinery: raw moments of W,
// the second and first absolute moments of U, the volatility polynomial and
// the parameters (a, psi, sigma).
struct MomentSpec {
  std::vector<double> m_w;   // m_w[k] = E W^k, k = 0..order
  double e_u2 = 1.0;         // E U^2
  double e_abs_u = 0.0;      // E |U|
  Eigen::VectorXd v_coeffs;  // V(x) = sum_j v_j x^j
  double a = 0.0;
  double psi = 1.0;
  double sigma = 1.0;

  int degree() const { return static_cast<int>(v_coeffs.size()) - 1; }
  void validate() const;  // m_W order >= 2d and |a| < 1

  // V(sigma x) coefficients v_j * sigma^j.
  Eigen::VectorXd v_sigma() const;

  // Paper configuration: scaled-t disturbances, V = (1 + x/(2d))^d + 0.1.
  static MomentSpec paper(double a, double psi, double sigma, int d = 4, int n_w = 9,
                          int n_u = 3);
};

// Raw moments of the unit-variance scaled t distribution, orders 0..k_max.
std::vector<double> scaled_t_moments(int df, int k_max);
double scaled_t_e_abs(int df);

// E X^k for the stationary AR(1) state, k = 0..k_max.
std::vector<double> mx_recursion(const MomentSpec& spec, int k_max);

// Lower-triangular F with F(i,l) = C(i,l) a^l M_W(i-l); F M_X = M_X.
Eigen::MatrixXd f_matrix(const MomentSpec& spec);

// E[vec(X) vec(X)'] with vec(X) = (1, X, ..., X^d)'.
Eigen::MatrixXd second_moment_matrix(const MomentSpec& spec);

// Cov(V(sigma X_{t+k}), V(sigma X_t)).
double acf_vx(const MomentSpec& spec, int k);

struct AbsYMoments {
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> acov;  // lags 1..size
};

AbsYMoments abs_y_moments(const MomentSpec& spec, int lags);

// (E|Y|, Var|Y|, Cov_1..Cov_lags) as one vector, the MM moment map.
Eigen::VectorXd theoretical_moment_vector(const MomentSpec& spec, int lags);
Eigen::VectorXd sample_moment_vector(const std::vector<double>& ys, int lags);

// Sample autocorrelations of ys itself (white-noise checks).
std::vector<double> sample_autocorrelations(const std::vector<double>& ys, int lags);

struct MmEstimate {
  double a = 0.0, psi = 0.0, sigma = 0.0;
  double objective = 0.0;
  int lags = 0;
};

// Nelder-Mead refinement from a given start against a fixed sample vector.
MmEstimate mm_refine(const MomentSpec& structural, const Eigen::VectorXd& sample_vec,
                     int lags, double a0, double psi0, double sigma0);

// Multi-start method-of-moments fit of (a, psi, sigma).
MmEstimate mm_estimate(const std::vector<double>& ys, int lags,
                       const MomentSpec& structural);

}  // namespace ratvol::moments
