#include "ratvol/moments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace ratvol::moments {

namespace {

constexpr double kPi = std::numbers::pi;

double binom(int n, int k) {
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r *= double(n - k + j) / double(j);
  return r;
}

// Exact-rational binomial expansion of (1 + x/(2d))^d + 0.1.
Eigen::VectorXd paper_v(int d) {
  if (d < 1) throw ConfigError("paper volatility polynomial needs d >= 1");
  Eigen::VectorXd v(d + 1);
  for (int j = 0; j <= d; ++j) {
    // C(d,j) / (2d)^j with int64 numerator/denominator, one rounding.
    long long num = 1, den = 1;
    for (int i = 1; i <= j; ++i) {
      num *= (d - j + i);
      den *= i;
    }
    long long p = 1;
    for (int i = 0; i < j; ++i) p *= 2 * d;
    v(j) = double(num) / (double(den) * double(p));
  }
  v(0) += 0.1;
  return v;
}

}  // namespace

void MomentSpec::validate() const {
  const int d = degree();
  if (d < 0) throw ConfigError("MomentSpec: empty volatility polynomial");
  if (static_cast<int>(m_w.size()) < 2 * d + 1)
    throw ConfigError("MomentSpec: need W moments up to order 2d");
  if (!(std::abs(a) < 1.0)) throw ConfigError("MomentSpec: |a| < 1 required");
  if (!m_w.empty() && m_w[0] != 1.0) throw ConfigError("MomentSpec: M_W(0) must be 1");
}

Eigen::VectorXd MomentSpec::v_sigma() const {
  Eigen::VectorXd v = v_coeffs;
  double p = 1.0;
  for (int j = 0; j < v.size(); ++j) {
    v(j) *= p;
    p *= sigma;
  }
  return v;
}

MomentSpec MomentSpec::paper(double a, double psi, double sigma, int d, int n_w, int n_u) {
  MomentSpec spec;
  spec.m_w = scaled_t_moments(n_w, 2 * d);
  spec.e_u2 = 1.0;
  spec.e_abs_u = scaled_t_e_abs(n_u);
  spec.v_coeffs = paper_v(d);
  spec.a = a;
  spec.psi = psi;
  spec.sigma = sigma;
  spec.validate();
  return spec;
}

std::vector<double> scaled_t_moments(int df, int k_max) {
  if (k_max >= df)
    throw MomentExistenceError("scaled t with " + std::to_string(df) +
                               " df has no moment of order " + std::to_string(k_max));
  std::vector<double> m(k_max + 1, 0.0);
  m[0] = 1.0;
  for (int k = 2; k <= k_max; k += 2) {
    const int half = k / 2;
    double val = 1.0;
    for (int j = 1; j <= half; ++j) val *= double(2 * j - 1) / double(df - 2 * j);
    val *= std::pow(double(df - 2), half);
    m[k] = val;
  }
  return m;
}

double scaled_t_e_abs(int df) {
  if (df < 2) throw MomentExistenceError("scaled_t_e_abs: df must exceed 1");
  return 2.0 * std::sqrt(double(df - 2)) * std::tgamma((df + 1) / 2.0) /
         ((df - 1) * std::sqrt(kPi) * std::tgamma(df / 2.0));
}

std::vector<double> mx_recursion(const MomentSpec& spec, int k_max) {
  if (k_max >= static_cast<int>(spec.m_w.size()))
    throw MomentExistenceError("mx_recursion: k_max exceeds available W moments");
  std::vector<double> mx(k_max + 1, 0.0);
  mx[0] = 1.0;
  for (int k = 1; k <= k_max; ++k) {
    double s = 0.0;
    for (int l = 0; l < k; ++l)
      s += binom(k, l) * std::pow(spec.a, l) * spec.m_w[k - l] * mx[l];
    mx[k] = s / (1.0 - std::pow(spec.a, k));
  }
  return mx;
}

Eigen::MatrixXd f_matrix(const MomentSpec& spec) {
  const int d = spec.degree();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(d + 1, d + 1);
  for (int i = 0; i <= d; ++i)
    for (int l = 0; l <= i; ++l)
      f(i, l) = binom(i, l) * std::pow(spec.a, l) * spec.m_w[i - l];
  return f;
}

Eigen::MatrixXd second_moment_matrix(const MomentSpec& spec) {
  const int d = spec.degree();
  auto mx = mx_recursion(spec, 2 * d);
  Eigen::MatrixXd e(d + 1, d + 1);
  for (int i = 0; i <= d; ++i)
    for (int j = 0; j <= d; ++j) e(i, j) = mx[i + j];
  return e;
}

double acf_vx(const MomentSpec& spec, int k) {
  const int d = spec.degree();
  const Eigen::VectorXd v = spec.v_sigma();
  const auto mxv = mx_recursion(spec, 2 * d);
  Eigen::VectorXd mvec(d + 1);
  for (int i = 0; i <= d; ++i) mvec(i) = mxv[i];
  const Eigen::MatrixXd exx = second_moment_matrix(spec);
  if (k == 0) return v.dot((exx - mvec * mvec.transpose()) * v);
  Eigen::MatrixXd g = f_matrix(spec);
  g.col(0) -= mvec;  // F - M_X e with e = (1,0,...,0)
  Eigen::VectorXd w = g * (exx * v);
  for (int j = 1; j < k; ++j) w = g * w;
  return v.dot(w);
}

AbsYMoments abs_y_moments(const MomentSpec& spec, int lags) {
  spec.validate();
  const int d = spec.degree();
  const Eigen::VectorXd v = spec.v_sigma();
  const auto mx = mx_recursion(spec, 2 * d);
  double ev = 0.0;
  for (int j = 0; j <= d; ++j) ev += v(j) * mx[j];
  // V(sigma x)^2 coefficients by convolution.
  Eigen::VectorXd vv = Eigen::VectorXd::Zero(2 * d + 1);
  for (int i = 0; i <= d; ++i)
    for (int j = 0; j <= d; ++j) vv(i + j) += v(i) * v(j);
  double ev2 = 0.0;
  for (int j = 0; j <= 2 * d; ++j) ev2 += vv(j) * mx[j];

  AbsYMoments out;
  out.mean = spec.psi * ev * spec.e_abs_u;
  out.variance = spec.psi * spec.psi * (ev2 * spec.e_u2 - ev * ev * spec.e_abs_u * spec.e_abs_u);
  out.acov.resize(lags);
  for (int k = 1; k <= lags; ++k)
    out.acov[k - 1] = spec.psi * spec.psi * acf_vx(spec, k) * spec.e_abs_u * spec.e_abs_u;
  return out;
}

Eigen::VectorXd theoretical_moment_vector(const MomentSpec& spec, int lags) {
  auto m = abs_y_moments(spec, lags);
  Eigen::VectorXd out(2 + lags);
  out(0) = m.mean;
  out(1) = m.variance;
  for (int k = 0; k < lags; ++k) out(2 + k) = m.acov[k];
  return out;
}

Eigen::VectorXd sample_moment_vector(const std::vector<double>& ys, int lags) {
  const int t = static_cast<int>(ys.size());
  if (t <= lags + 10) throw EstimationFailureError("series too short for the requested lags");
  std::vector<double> ab(t);
  for (int i = 0; i < t; ++i) ab[i] = std::abs(ys[i]);
  double mean = 0.0;
  for (double v : ab) mean += v;
  mean /= t;
  Eigen::VectorXd out(2 + lags);
  out(0) = mean;
  double var = 0.0;
  for (double v : ab) var += (v - mean) * (v - mean);
  out(1) = var / t;  // biased normalization
  for (int k = 1; k <= lags; ++k) {
    double c = 0.0;
    for (int i = 0; i + k < t; ++i) c += (ab[i + k] - mean) * (ab[i] - mean);
    out(1 + k) = c / t;
  }
  return out;
}

std::vector<double> sample_autocorrelations(const std::vector<double>& ys, int lags) {
  const int t = static_cast<int>(ys.size());
  double mean = 0.0;
  for (double v : ys) mean += v;
  mean /= t;
  double c0 = 0.0;
  for (double v : ys) c0 += (v - mean) * (v - mean);
  c0 /= t;
  std::vector<double> acf(lags, 0.0);
  for (int k = 1; k <= lags; ++k) {
    double c = 0.0;
    for (int i = 0; i + k < t; ++i) c += (ys[i + k] - mean) * (ys[i] - mean);
    acf[k - 1] = (c / t) / c0;
  }
  return acf;
}

namespace {

// Parameter transform keeping a in (-alim, alim) and psi, sigma positive.
struct ParamMap {
  double alim = 0.999;
  Eigen::Vector3d to_unconstrained(double a, double psi, double sigma) const {
    const double ac = std::clamp(a / alim, -0.999999, 0.999999);
    return {std::atanh(ac), std::log(psi), std::log(sigma)};
  }
  void from_unconstrained(const Eigen::Vector3d& u, double& a, double& psi,
                          double& sigma) const {
    a = alim * std::tanh(u(0));
    psi = std::exp(std::clamp(u(1), -30.0, 30.0));
    sigma = std::exp(std::clamp(u(2), -30.0, 30.0));
  }
};

double nelder_mead(const std::function<double(const Eigen::Vector3d&)>& f,
                   Eigen::Vector3d& x, double step, int max_iter) {
  constexpr int n = 3;
  std::array<Eigen::Vector3d, n + 1> pts;
  std::array<double, n + 1> val;
  pts[0] = x;
  val[0] = f(x);
  for (int i = 0; i < n; ++i) {
    pts[i + 1] = x;
    pts[i + 1](i) += step;
    val[i + 1] = f(pts[i + 1]);
  }
  auto order = [&] {
    std::array<int, n + 1> idx{0, 1, 2, 3};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return val[a] < val[b]; });
    std::array<Eigen::Vector3d, n + 1> p2;
    std::array<double, n + 1> v2;
    for (int i = 0; i <= n; ++i) {
      p2[i] = pts[idx[i]];
      v2[i] = val[idx[i]];
    }
    pts = p2;
    val = v2;
  };
  order();
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(val[n] - val[0]) <= 1e-15 * (std::abs(val[0]) + 1e-300) + 1e-300) break;
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (int i = 0; i < n; ++i) centroid += pts[i];
    centroid /= n;
    const Eigen::Vector3d xr = centroid + (centroid - pts[n]);
    const double fr = f(xr);
    if (fr < val[0]) {
      const Eigen::Vector3d xe = centroid + 2.0 * (centroid - pts[n]);
      const double fe = f(xe);
      if (fe < fr) {
        pts[n] = xe;
        val[n] = fe;
      } else {
        pts[n] = xr;
        val[n] = fr;
      }
    } else if (fr < val[n - 1]) {
      pts[n] = xr;
      val[n] = fr;
    } else {
      const Eigen::Vector3d xc = centroid + 0.5 * (pts[n] - centroid);
      const double fc = f(xc);
      if (fc < val[n]) {
        pts[n] = xc;
        val[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
          val[i] = f(pts[i]);
        }
      }
    }
    order();
  }
  x = pts[0];
  return val[0];
}

}  // namespace

MmEstimate mm_refine(const MomentSpec& structural, const Eigen::VectorXd& sample_vec,
                     int lags, double a0, double psi0, double sigma0) {
  ParamMap map;
  auto objective = [&](const Eigen::Vector3d& u) {
    double a, psi, sigma;
    map.from_unconstrained(u, a, psi, sigma);
    MomentSpec s = structural;
    s.a = a;
    s.psi = psi;
    s.sigma = sigma;
    const Eigen::VectorXd m = theoretical_moment_vector(s, lags);
    return (m - sample_vec).squaredNorm();
  };
  Eigen::Vector3d u = map.to_unconstrained(a0, psi0, sigma0);
  double best = nelder_mead(objective, u, 0.25, 600);
  // Restart from the found point with a smaller simplex.
  best = nelder_mead(objective, u, 0.02, 600);
  best = nelder_mead(objective, u, 0.002, 600);
  MmEstimate est;
  map.from_unconstrained(u, est.a, est.psi, est.sigma);
  est.objective = best;
  est.lags = lags;
  return est;
}

MmEstimate mm_estimate(const std::vector<double>& ys, int lags, const MomentSpec& structural) {
  const Eigen::VectorXd mhat = sample_moment_vector(ys, lags);
  if (!(mhat(1) > 0.0))
    throw EstimationFailureError("mm_estimate: degenerate series (zero variance of |Y|)");

  // 8 coarse starts; psi matched to the sample mean of |Y| at each (a, sigma).
  const double a_grid[4] = {0.2, 0.5, 0.8, 0.95};
  const double s_grid[2] = {0.4, 1.2};
  MmEstimate best;
  best.objective = std::numeric_limits<double>::infinity();
  for (double a0 : a_grid) {
    for (double s0 : s_grid) {
      MomentSpec s = structural;
      s.a = a0;
      s.psi = 1.0;
      s.sigma = s0;
      const double m1 = theoretical_moment_vector(s, 0)(0);
      const double psi0 = (m1 > 0.0 && mhat(0) > 0.0) ? mhat(0) / m1 : 1.0;
      MmEstimate cand = mm_refine(structural, mhat, lags, a0, psi0, s0);
      if (cand.objective < best.objective) best = cand;
    }
  }
  return best;
}

}  // namespace ratvol::moments
