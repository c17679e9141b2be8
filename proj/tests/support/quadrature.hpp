#pragma once

// Test-only quadrature oracles built on GSL. Kept independent of the
// library's state-space normalization path on purpose.

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <functional>
#include <stdexcept>

namespace testsupport {

inline double call_fn(double x, void* p) {
  auto* f = static_cast<std::function<double(double)>*>(p);
  return (*f)(x);
}

// Adaptive integration over the whole real line (GSL QAGI).
inline double integrate_R(const std::function<double(double)>& f, double abs_tol = 1e-10,
                          double rel_tol = 1e-10, size_t limit = 4096) {
  static const int once = [] {
    gsl_set_error_handler_off();
    return 0;
  }();
  (void)once;
  gsl_integration_workspace* w = gsl_integration_workspace_alloc(limit);
  std::function<double(double)> fn = f;
  gsl_function g;
  g.function = &call_fn;
  g.params = &fn;
  double result = 0.0, err = 0.0;
  const int status = gsl_integration_qagi(&g, abs_tol, rel_tol, limit, w, &result, &err);
  gsl_integration_workspace_free(w);
  if (status != 0 && status != GSL_EROUND)
    throw std::runtime_error("integrate_R failed, gsl status " + std::to_string(status));
  return result;
}

// Whole-line integration via the substitution x = tan(theta) on a finite
// interval; robust for integrands with algebraic tails.
inline double integrate_R_tan(const std::function<double(double)>& f,
                              double abs_tol = 1e-10, double rel_tol = 1e-9);

// Adaptive integration on a finite interval (GSL QAGS).
inline double integrate_ab(const std::function<double(double)>& f, double a, double b,
                           double abs_tol = 1e-10, double rel_tol = 1e-10,
                           size_t limit = 4096) {
  gsl_integration_workspace* w = gsl_integration_workspace_alloc(limit);
  std::function<double(double)> fn = f;
  gsl_function g;
  g.function = &call_fn;
  g.params = &fn;
  double result = 0.0, err = 0.0;
  const int status = gsl_integration_qags(&g, a, b, abs_tol, rel_tol, limit, w, &result, &err);
  gsl_integration_workspace_free(w);
  if (status != 0 && status != GSL_EROUND)
    throw std::runtime_error("integrate_ab failed, gsl status " + std::to_string(status));
  return result;
}

inline double integrate_R_tan(const std::function<double(double)>& f, double abs_tol,
                              double rel_tol) {
  (void)abs_tol;
  (void)rel_tol;
  // Fixed-order Gauss-Legendre after x = tan(theta); the transformed
  // integrand is smooth up to the endpoints for algebraic tails.
  std::function<double(double)> fn = f;
  gsl_function g;
  g.function = &call_fn;
  auto transformed = [&](double th) {
    const double c = std::cos(th);
    return f(std::tan(th)) / (c * c);
  };
  std::function<double(double)> tf = transformed;
  g.params = &tf;
  const double half = 1.5707963267948966;
  gsl_integration_glfixed_table* t1 = gsl_integration_glfixed_table_alloc(601);
  gsl_integration_glfixed_table* t2 = gsl_integration_glfixed_table_alloc(907);
  const double v1 = gsl_integration_glfixed(&g, -half, half, t1);
  const double v2 = gsl_integration_glfixed(&g, -half, half, t2);
  gsl_integration_glfixed_table_free(t1);
  gsl_integration_glfixed_table_free(t2);
  if (std::abs(v1 - v2) > 1e-7 * (1.0 + std::abs(v2)))
    throw std::runtime_error("integrate_R_tan did not converge");
  return v2;
}

}  // namespace testsupport
