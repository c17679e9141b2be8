#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "ratvol/errors.hpp"

namespace ratvol::sim {

// Deterministic normal generator: mt19937_64 bits plus an explicit
// Box-Muller, so a seed pins the whole path.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // (0, 1]
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1p-53;
  }

  double normal();

  // Derived stream seed for independent replications.
  static std::uint64_t derive(std::uint64_t base, std::uint64_t stream);

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// One draw of the unit-variance scaled t: z / sqrt(chi2_df / df) * sqrt((df-2)/df).
double sample_scaled_t(int df, Rng& rng);
std::vector<double> sample_scaled_t(int df, int count, Rng& rng);

struct SimConfig {
  double a = 0.9;
  double psi = 2.0;
  double sigma = 1.5;
  Eigen::VectorXd v_coeffs;  // defaults to the d=4 paper polynomial when empty
  int n_w = 9;
  int n_u = 3;
  int n_x = 9;   // degrees of freedom of the initial state
  int t_len = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimPath {
  std::vector<double> xs;
  std::vector<double> ys;
};

// X_{t+1} = a X_t + W_t, Y_t = psi V(sigma X_t) U_t with scaled-t disturbances
// and X_1 scaled-t with variance 1/(1-a^2).
SimPath simulate(const SimConfig& cfg);

// Expanded coefficients of (1 + x/(2d))^d + 0.1.
Eigen::VectorXd paper_v_coeffs(int d);

double poly_eval(const Eigen::VectorXd& coeffs, double x);

}  // namespace ratvol::sim
