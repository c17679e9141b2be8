#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <complex>
#include <random>
#include <vector>

#include "ratvol/numerics.hpp"
#include "support/test_util.hpp"

using namespace ratvol;
using numerics::CMatrix;
using numerics::Complex;
using testsupport::random_cmatrix;
using testsupport::random_stable;
using testsupport::random_unitary;

TEST_CASE("svd basics") {
  CMatrix id = CMatrix::Identity(2, 2);
  auto r = numerics::svd(id);
  CHECK(r.s(0) == doctest::Approx(1.0));
  CHECK(r.s(1) == doctest::Approx(1.0));

  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = 4.0;
  auto r2 = numerics::svd(d);
  CHECK(r2.s(0) == doctest::Approx(4.0));
  CHECK(r2.s(1) == doctest::Approx(3.0));
}

TEST_CASE("svd unitarity and reconstruction") {
  std::mt19937_64 gen(11);
  CMatrix m = random_cmatrix(5, 3, gen);
  auto r = numerics::svd(m);
  CHECK((r.u.adjoint() * r.u - CMatrix::Identity(5, 5)).norm() < 1e-12);
  CHECK((r.v.adjoint() * r.v - CMatrix::Identity(3, 3)).norm() < 1e-12);

  for (Eigen::Index n : {20, 200}) {
    CMatrix big = random_cmatrix(n, n, gen);
    auto rb = numerics::svd(big);
    CMatrix rec = rb.u.leftCols(rb.s.size()) * rb.s.asDiagonal() *
                  rb.v.leftCols(rb.s.size()).adjoint();
    CHECK((rec - big).norm() <= 1e-12 * big.norm() * std::sqrt(double(n)));
    for (Eigen::Index i = 0; i + 1 < rb.s.size(); ++i) CHECK(rb.s(i) >= rb.s(i + 1));
  }
}

TEST_CASE("schur_ordered diagonal and jordan cases") {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  auto r = numerics::schur_ordered(m, [](Complex l) { return l.real() < 0.0; });
  CHECK(r.t(0, 0).real() == doctest::Approx(-1.0));
  CHECK(r.t(1, 1).real() == doctest::Approx(1.0));
  CHECK(r.selected == 1);
  CHECK((r.v * r.t * r.v.adjoint() - m).norm() < 1e-12);

  CMatrix j = CMatrix::Zero(2, 2);
  j(0, 1) = 1.0;
  auto rj = numerics::schur_ordered(j, [](Complex l) { return l.real() < 0.0; });
  CHECK(std::abs(rj.t(0, 0)) < 1e-14);
  CHECK(std::abs(rj.t(1, 0)) < 1e-14);
  CHECK(std::abs(rj.t(0, 1)) == doctest::Approx(1.0));
}

TEST_CASE("schur_ordered splits a scrambled known spectrum") {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 20; ++rep) {
    // Known spectrum: two stable, two antistable.
    std::vector<Complex> eigs = {{-1.5, 0.3}, {-0.4, -1.0}, {0.7, 0.2}, {1.2, -0.5}};
    CMatrix t = CMatrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i) t(i, i) = eigs[i];
    t(0, 2) = 0.7;
    t(1, 3) = -0.9;
    CMatrix s = CMatrix::Identity(4, 4) + 0.4 * random_cmatrix(4, 4, gen);
    CMatrix m = s * t * s.inverse();

    auto r = numerics::schur_ordered(m, [](Complex l) { return l.real() < 0.0; });
    CHECK(r.selected == 2);
    CHECK(r.t(0, 0).real() < 0.0);
    CHECK(r.t(1, 1).real() < 0.0);
    CHECK(r.t(2, 2).real() > 0.0);
    CHECK(r.t(3, 3).real() > 0.0);
    CHECK((r.v.adjoint() * r.v - CMatrix::Identity(4, 4)).norm() < 1e-12);
    CHECK((r.v * r.t * r.v.adjoint() - m).norm() < 1e-10 * m.norm());

    // Eigenvalue multiset is preserved.
    std::vector<double> got, want;
    for (int i = 0; i < 4; ++i) {
      got.push_back(std::abs(r.t(i, i)));
      want.push_back(std::abs(eigs[i]));
    }
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    for (int i = 0; i < 4; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-8));
  }
}

TEST_CASE("qz_ordered simple pencils") {
  CMatrix e = CMatrix::Identity(2, 2);
  CMatrix n = CMatrix::Zero(2, 2);
  n(0, 0) = 2.0;
  n(1, 1) = -2.0;
  auto r = numerics::qz_ordered(e, n, [](Complex a, Complex b) {
    return (a / b).real() > 0.0;
  });
  CHECK((r.nn(0, 0) / r.ee(0, 0)).real() == doctest::Approx(2.0));
  CHECK((r.nn(1, 1) / r.ee(1, 1)).real() == doctest::Approx(-2.0));
  CHECK((r.q * e * r.z - r.ee).norm() < 1e-12);
  CHECK((r.q * n * r.z - r.nn).norm() < 1e-12);

  // One finite eigenvalue 1, one infinite (signaled by ee(i,i) = 0).
  CMatrix e2 = CMatrix::Zero(2, 2);
  e2(0, 0) = 1.0;
  CMatrix n2 = CMatrix::Identity(2, 2);
  auto r2 = numerics::qz_ordered(e2, n2, [](Complex, Complex b) {
    return std::abs(b) > 1e-10;  // finite first
  });
  CHECK(std::abs(r2.ee(0, 0)) > 1e-10);
  CHECK((r2.nn(0, 0) / r2.ee(0, 0)).real() == doctest::Approx(1.0));
  CHECK(std::abs(r2.ee(1, 1)) < 1e-12);
}

TEST_CASE("qz_ordered recovers a planted generalized spectrum") {
  std::mt19937_64 gen(17);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 5;
    std::vector<Complex> eigs;
    CMatrix tn = random_cmatrix(n, n, gen).triangularView<Eigen::Upper>();
    CMatrix te = random_cmatrix(n, n, gen).triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i) {
      te(i, i) += 3.0;  // keep the pencil regular and well conditioned
      eigs.push_back(tn(i, i) / te(i, i));
    }
    CMatrix ql = random_unitary(n, gen), qr = random_unitary(n, gen);
    CMatrix nm = ql * tn * qr;
    CMatrix em = ql * te * qr;
    auto r = numerics::qz_ordered(em, nm, [](Complex a, Complex b) {
      return (a / b).real() < 0.0;
    });
    std::vector<double> got, want;
    for (int i = 0; i < n; ++i) {
      got.push_back(std::abs(r.nn(i, i) / r.ee(i, i)));
      want.push_back(std::abs(eigs[i]));
    }
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    for (int i = 0; i < n; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-8));
    // Unitary transforms, triangular results.
    CHECK((r.q.adjoint() * r.q - CMatrix::Identity(n, n)).norm() < 1e-12);
    CHECK((r.z.adjoint() * r.z - CMatrix::Identity(n, n)).norm() < 1e-12);
    CHECK((r.q * em * r.z - r.ee).norm() < 1e-10 * em.norm());
    CHECK((r.q * nm * r.z - r.nn).norm() < 1e-10 * nm.norm());
    // Selected eigenvalues lead.
    bool trailing = false;
    for (int i = 0; i < n; ++i) {
      const bool sel = (r.nn(i, i) / r.ee(i, i)).real() < 0.0;
      if (!sel) trailing = true;
      if (trailing) CHECK(!sel);
    }
  }
}

TEST_CASE("solve_sylvester scalar and planted") {
  CMatrix a(1, 1), b(1, 1), c(1, 1);
  a(0, 0) = -2.0;
  b(0, 0) = -3.0;
  c(0, 0) = 10.0;
  auto x = numerics::solve_sylvester(a, b, c);
  CHECK(x(0, 0).real() == doctest::Approx(2.0));

  CMatrix i2 = CMatrix::Identity(2, 2);
  auto x2 = numerics::solve_sylvester(-i2, -i2, i2);
  CHECK((x2 - 0.5 * i2).norm() < 1e-14);

  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 10; ++rep) {
    CMatrix as = random_stable(4, gen);
    CMatrix bs = random_stable(3, gen);
    CMatrix x0 = random_cmatrix(4, 3, gen);
    CMatrix cc = -(as * x0 + x0 * bs);
    auto got = numerics::solve_sylvester(as, bs, cc);
    CHECK((got - x0).norm() < 1e-9 * x0.norm());
    CHECK((as * got + got * bs + cc).norm() <
          1e-10 * (as.norm() + bs.norm()) * got.norm() + 1e-12 * cc.norm());
  }
}

TEST_CASE("solve_sylvester rejects overlapping spectra") {
  CMatrix a(1, 1), b(1, 1), c(1, 1);
  a(0, 0) = 1.0;
  b(0, 0) = -1.0;
  c(0, 0) = 1.0;
  CHECK_THROWS_AS(numerics::solve_sylvester(a, b, c), SingularEquationError);
}

TEST_CASE("solve_lyapunov basics") {
  CMatrix a(1, 1), q(1, 1);
  a(0, 0) = -1.0;
  q(0, 0) = 1.0 / M_PI;
  auto p = numerics::solve_lyapunov(a, q);
  CHECK(p(0, 0).real() == doctest::Approx(1.0 / (2.0 * M_PI)));

  CMatrix i2 = CMatrix::Identity(2, 2);
  auto p0 = numerics::solve_lyapunov(-i2, CMatrix::Zero(2, 2));
  CHECK(p0.norm() < 1e-14);

  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 10; ++rep) {
    CMatrix as = random_stable(4, gen);
    CMatrix w = random_cmatrix(4, 4, gen);
    CMatrix p0h = w * w.adjoint();  // planted PSD
    CMatrix qq = -(as * p0h + p0h * as.adjoint());
    auto got = numerics::solve_lyapunov(as, qq);
    CHECK((got - p0h).norm() < 1e-9 * p0h.norm());
    CHECK((got - got.adjoint()).norm() < 1e-12 * got.norm());
  }

  CMatrix bad(1, 1);
  bad(0, 0) = 0.5;
  CHECK_THROWS_AS(numerics::solve_lyapunov(bad, q), StabilityViolationError);
}

TEST_CASE("solve_lyapunov matches the integral gramian") {
  // P = int_0^inf exp(a t) q exp(a^* t) dt for stable a, via trapezoid on a
  // diagonalizable instance.
  std::mt19937_64 gen(23);
  for (int rep = 0; rep < 3; ++rep) {
    const int n = 4;
    CMatrix a = random_stable(n, gen, 0.5, 2.0);
    CMatrix b = random_cmatrix(n, 1, gen);
    CMatrix q = b * b.adjoint();
    auto p = numerics::solve_lyapunov(a, q);

    Eigen::ComplexEigenSolver<CMatrix> es(a);
    const CMatrix v = es.eigenvectors();
    const CMatrix vinv = v.inverse();
    auto expat = [&](double t) {
      Eigen::VectorXcd d(n);
      for (int i = 0; i < n; ++i) d(i) = std::exp(es.eigenvalues()(i) * t);
      return CMatrix(v * d.asDiagonal() * vinv);
    };
    const double tmax = 40.0;
    const int steps = 160000;
    CMatrix acc = CMatrix::Zero(n, n);
    CMatrix prev = q;  // exp(0) q exp(0)
    const double h = tmax / steps;
    for (int k = 1; k <= steps; ++k) {
      const CMatrix e = expat(k * h);
      const CMatrix cur = e * q * e.adjoint();
      acc += 0.5 * h * (prev + cur);
      prev = cur;
    }
    CHECK((acc - p).norm() < 1e-6 * std::max(1.0, p.norm()));
  }
}

TEST_CASE("numerical_rank") {
  CHECK(numerics::numerical_rank(CMatrix::Zero(3, 3), 1e-10) == 0);
  CHECK(numerics::numerical_rank(CMatrix::Identity(3, 3), 1e-10) == 3);
  std::mt19937_64 gen(9);
  CMatrix u = random_cmatrix(4, 1, gen), v = random_cmatrix(4, 1, gen);
  CHECK(numerics::numerical_rank(u * v.adjoint(), 1e-10) == 1);
}

TEST_CASE("rank tolerance knob") {
  const double orig = numerics::default_rank_tol();
  numerics::set_default_rank_tol(1e-8);
  CHECK(numerics::default_rank_tol() == doctest::Approx(1e-8));
  numerics::set_default_rank_tol(orig);
  CHECK_THROWS_AS(numerics::set_default_rank_tol(2.0), ConfigError);
}
