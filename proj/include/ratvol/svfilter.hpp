#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "ratvol/ratpdf.hpp"
#include "ratvol/sbt.hpp"

namespace ratvol {

// Discrete-time stochastic volatility model
//   X_{t+1} = a X_t + W_t,   Y_t = psi V(sigma X_t) U_t
// with rationally distributed disturbances.
struct SvModel {
  double a = 0.9;
  double psi = 1.0;
  double sigma = 1.0;
  Eigen::VectorXd v_coeffs;  // V(x) = sum_j v_j x^j, positive polynomial
  RationalPdf pdf_w, pdf_u, pdf_x1;
  double e_abs_u = 0.0;  // E|U|, for the |Y| forecasts

  int degree() const { return static_cast<int>(v_coeffs.size()) - 1; }
  Eigen::VectorXd v_sigma() const;
  double v_at(double x) const;
  int k_w() const { return static_cast<int>(pdf_w.codegree); }

  void validate() const;

  // Paper configuration: scaled-t disturbances (n_w, n_u), initial state
  // scaled-t (n_x) with variance 1/(1-a^2), V = (1+x/(2d))^d + 0.1.
  static SvModel paper_model(double a, double psi, double sigma, int d = 4, int n_w = 9,
                             int n_u = 3, int n_x = 9);
};

struct StepDiagnostics {
  int t = 0;
  double c_t = 0.0;
  double loglik = 0.0;       // cumulative
  double forecast_abs_y = 0.0;
  double ex_pred = 0.0;      // E[X_{t+1} | Y_1^t] from the reduced pdf
  double ev_pred = 0.0;      // E[V(sigma X_{t+1}) | Y_1^t] from the reduced pdf
  double ex_full = 0.0;      // same quantities from the pre-truncation pdf
  double ev_full = 0.0;
  int n_full = 0;
  int m_reduced = 0;
  int k_update = 0;          // ledger k_{t|t}
  int k_predict = 0;         // ledger k_{t+1|t}
  int k_update_staircase = -1;   // staircase-verified (when enabled)
  int k_predict_staircase = -1;
  double bound = 0.0;        // achieved pdf-level truncation bound
  double grid_error = -1.0;  // measured max relative pdf error (when enabled)
  Eigen::VectorXd sigma_tail;
};

struct FilterState {
  RationalPdf predictive;  // p_{X_t | Y_1^{t-1}}, normalized
  int t = 1;
  double loglik = 0.0;
};

struct FilterOptions {
  double tau = 0.02;
  double reduce_tol = 1e-13;    // unitary staircase reduction threshold
  bool compute_forecasts = true;  // needs co-degrees of W and X1 >= d + 2
  bool verify_codegree = false;
  double verify_tol = 1e-6;     // staircase detection floor for the ledger check
  bool grid_check = false;      // measure the truncation error on a grid
  double grid_lo = -20.0, grid_hi = 20.0;
  int grid_points = 400;
  bool dump_pdf_grid = false;   // store the reduced predictive pdf on the grid
  FactorOptions factor;
};

FilterState init_filter(const SvModel& model);

// Bayes update: returns the normalized posterior p_{X_t|Y_1^t} and the
// normalization constant c_t = p_{Y_t|Y_1^{t-1}}(y).
std::pair<RationalPdf, double> update(const RationalPdf& predictive, double y,
                                      const SvModel& model, const FilterOptions& opts = {});

// Prediction: scale by a, convolve with W, renormalize.
RationalPdf predict(const RationalPdf& posterior, const SvModel& model);

// update -> predict -> minimal_reduce -> SBT truncation; fills diagnostics.
FilterState step(const FilterState& state, double y, const SvModel& model,
                 const FilterOptions& opts = {}, StepDiagnostics* diag = nullptr);

struct FilterRun {
  std::vector<StepDiagnostics> steps;
  std::vector<double> forecast_abs_y;  // E(|Y_t| | Y_1^{t-1})
  double loglik = 0.0;
  FilterState final_state;
  Eigen::VectorXd grid_x;                   // when dump_pdf_grid
  std::vector<Eigen::VectorXd> pdf_grids;   // reduced predictive per step
};

FilterRun run_filter(const SvModel& model, const std::vector<double>& ys,
                     const FilterOptions& opts = {});

// E[X^j | pdf] combined with the polynomial: sum_j v_j E[X^j].
double polynomial_expectation(const SpectralSummand& z, const Eigen::VectorXd& coeffs);

}  // namespace ratvol
