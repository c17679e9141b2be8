#pragma once

// Brute-force likelihood oracle for the stochastic volatility model: nested
// quadrature of the joint density on Gauss-Legendre nodes after x = tan(theta).
// Uses only closed-form density callbacks; independent of the state-space path.

#include <gsl/gsl_integration.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace testsupport {

using DensityFn = std::function<double(double)>;

inline double volatility_poly(const Eigen::VectorXd& v, double x) {
  double acc = 0.0;
  for (Eigen::Index j = v.size() - 1; j >= 0; --j) acc = acc * x + v(j);
  return acc;
}

namespace detail_lik {

inline double likelihood_at_order(const DensityFn& p_x1, const DensityFn& p_w,
                                  const DensityFn& p_u, double a, double psi, double sigma,
                                  const Eigen::VectorXd& v,
                                  const std::vector<double>& ys, int order) {
  gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(order);
  std::vector<double> node(order), weight(order);
  const double half = 1.5707963267948966;
  for (int i = 0; i < order; ++i) {
    double th, w;
    gsl_integration_glfixed_point(-half, half, i, &th, &w, tab);
    const double c = std::cos(th);
    node[i] = std::tan(th);
    weight[i] = w / (c * c);
  }
  gsl_integration_glfixed_table_free(tab);

  auto obs_weight = [&](double x, double y) {
    const double vol = psi * volatility_poly(v, sigma * x);
    return p_u(y / vol) / vol;
  };

  const int t_len = static_cast<int>(ys.size());
  // g_t(x) = p(y_t..y_T | X_t = x), backward recursion on the node grid.
  std::vector<double> g(order);
  for (int i = 0; i < order; ++i) g[i] = obs_weight(node[i], ys[t_len - 1]);
  for (int t = t_len - 2; t >= 0; --t) {
    std::vector<double> gnew(order);
    for (int i = 0; i < order; ++i) {
      double acc = 0.0;
      for (int j = 0; j < order; ++j)
        acc += weight[j] * p_w(node[j] - a * node[i]) * g[j];
      gnew[i] = obs_weight(node[i], ys[t]) * acc;
    }
    g.swap(gnew);
  }
  double lik = 0.0;
  for (int i = 0; i < order; ++i) lik += weight[i] * p_x1(node[i]) * g[i];
  return lik;
}

}  // namespace detail_lik

// Likelihood p(y_1, ..., y_T) with a convergence check over two node counts.
inline double nested_likelihood(const DensityFn& p_x1, const DensityFn& p_w,
                                const DensityFn& p_u, double a, double psi, double sigma,
                                const Eigen::VectorXd& v, const std::vector<double>& ys,
                                double rel_tol = 2e-7) {
  const double v1 = detail_lik::likelihood_at_order(p_x1, p_w, p_u, a, psi, sigma, v, ys, 601);
  const double v2 = detail_lik::likelihood_at_order(p_x1, p_w, p_u, a, psi, sigma, v, ys, 901);
  if (std::abs(v1 - v2) > rel_tol * std::abs(v2))
    throw std::runtime_error("nested_likelihood did not converge");
  return v2;
}

inline DensityFn cauchy_density(double scale = 1.0) {
  return [scale](double x) {
    return scale / (M_PI * (x * x + scale * scale));
  };
}

// Closed-form unit-variance scaled Student t, df odd.
inline DensityFn scaled_t_density(int df) {
  const double cn = std::tgamma((df + 1) / 2.0) /
                    (std::sqrt((df - 2) * M_PI) * std::tgamma(df / 2.0));
  return [cn, df](double u) {
    return cn * std::pow(1.0 + u * u / (df - 2), -(df + 1) / 2.0);
  };
}

}  // namespace testsupport
