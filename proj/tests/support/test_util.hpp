#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>

namespace testsupport {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

inline CMatrix random_cmatrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen,
                              double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * Complex(dist(gen), dist(gen));
  return m;
}

// Random unitary via QR of a random complex matrix.
inline CMatrix random_unitary(Eigen::Index n, std::mt19937_64& gen) {
  CMatrix m = random_cmatrix(n, n, gen);
  Eigen::HouseholderQR<CMatrix> qr(m);
  CMatrix q = qr.householderQ();
  return q;
}

// Random stable matrix with eigenvalue real parts in [-re_hi, -re_lo].
inline CMatrix random_stable(Eigen::Index n, std::mt19937_64& gen, double re_lo = 0.2,
                             double re_hi = 2.0) {
  std::uniform_real_distribution<double> re(re_lo, re_hi), im(-2.0, 2.0);
  CMatrix d = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) d(i, i) = Complex(-re(gen), im(gen));
  // Similarity by a moderately conditioned transform.
  CMatrix t = CMatrix::Identity(n, n) + 0.3 * random_cmatrix(n, n, gen);
  return t * d * t.inverse();
}

inline double rel_err(Complex got, Complex want) {
  const double denom = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / denom;
}

}  // namespace testsupport
