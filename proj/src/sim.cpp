#include "ratvol/sim.hpp"

#include <cmath>
#include <numbers>

namespace ratvol::sim {

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(th);
  have_spare_ = true;
  return r * std::cos(th);
}

std::uint64_t Rng::derive(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 mix of base and stream index
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double sample_scaled_t(int df, Rng& rng) {
  if (df < 3) throw ConfigError("sample_scaled_t: df must be >= 3");
  const double z = rng.normal();
  double chi2 = 0.0;
  for (int i = 0; i < df; ++i) {
    const double n = rng.normal();
    chi2 += n * n;
  }
  return z / std::sqrt(chi2 / df) * std::sqrt(double(df - 2) / double(df));
}

std::vector<double> sample_scaled_t(int df, int count, Rng& rng) {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = sample_scaled_t(df, rng);
  return out;
}

Eigen::VectorXd paper_v_coeffs(int d) {
  if (d < 1) throw ConfigError("paper_v_coeffs: d >= 1 required");
  Eigen::VectorXd v(d + 1);
  for (int j = 0; j <= d; ++j) {
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

double poly_eval(const Eigen::VectorXd& coeffs, double x) {
  double acc = 0.0;
  for (Eigen::Index j = coeffs.size() - 1; j >= 0; --j) acc = acc * x + coeffs(j);
  return acc;
}

void SimConfig::validate() const {
  if (!(std::abs(a) < 1.0) || a == 0.0)
    throw ConfigError("SimConfig: need 0 < |a| < 1");
  if (!(psi >= 0.0) || !(sigma >= 0.0)) throw ConfigError("SimConfig: psi, sigma >= 0");
  if (t_len < 1) throw ConfigError("SimConfig: T >= 1");
  if (n_w < 3 || n_u < 3 || n_x < 3) throw ConfigError("SimConfig: df >= 3");
}

SimPath simulate(const SimConfig& cfg) {
  cfg.validate();
  Eigen::VectorXd v = cfg.v_coeffs.size() ? cfg.v_coeffs : paper_v_coeffs(4);
  Rng rng(cfg.seed);
  SimPath path;
  path.xs.resize(cfg.t_len);
  path.ys.resize(cfg.t_len);
  double x = sample_scaled_t(cfg.n_x, rng) / std::sqrt(1.0 - cfg.a * cfg.a);
  for (int t = 0; t < cfg.t_len; ++t) {
    path.xs[t] = x;
    const double u = sample_scaled_t(cfg.n_u, rng);
    path.ys[t] = cfg.psi * poly_eval(v, cfg.sigma * x) * u;
    const double w = sample_scaled_t(cfg.n_w, rng);
    x = cfg.a * x + w;
  }
  return path;
}

}  // namespace ratvol::sim
