#include <doctest.h>

#include <cmath>
#include <random>

#include "ratvol/svfilter.hpp"
#include "ratvol/sim.hpp"
#include "support/likelihood_oracle.hpp"
#include "support/quadrature.hpp"
#include "support/test_util.hpp"

using namespace ratvol;
using testsupport::random_cmatrix;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Cauchy disturbances everywhere: the smallest model the filter accepts.
SvModel toy_cauchy_model(double a = 0.9, double psi = 1.3, double sigma = 1.0) {
  SvModel m;
  m.a = a;
  m.psi = psi;
  m.sigma = sigma;
  m.v_coeffs = sim::paper_v_coeffs(4);
  m.pdf_w = make_cauchy(1.0);
  m.pdf_u = make_cauchy(1.0);
  m.pdf_x1 = make_cauchy(1.0);
  m.e_abs_u = 0.0;  // |U| has no mean for Cauchy U; forecasts stay disabled
  m.validate();
  return m;
}

double pdf_at(const SpectralSummand& z, double x) {
  return 2.0 * evaluate_scalar(z.to_realization(), Complex(0, x)).real();
}

FilterOptions no_forecast_opts() {
  FilterOptions o;
  o.compute_forecasts = false;
  return o;
}

}  // namespace

TEST_CASE("paper model construction") {
  auto m = SvModel::paper_model(0.9, 2.0, 1.5);
  CHECK(m.degree() == 4);
  CHECK(m.v_at(0.0) == doctest::Approx(1.1));
  CHECK(m.pdf_w.codegree == 10);
  CHECK(m.pdf_u.codegree == 4);
  CHECK(m.pdf_x1.codegree == 10);
  CHECK(m.e_abs_u == doctest::Approx(2.0 / kPi));
  // X1 variance is 1/(1-a^2).
  auto mom = raw_moments(m.pdf_x1.summand, 2);
  CHECK(mom[2].real() == doctest::Approx(1.0 / (1.0 - 0.81)).epsilon(1e-9));

  // A polynomial with a real root is rejected.
  SvModel bad = m;
  bad.v_coeffs = Eigen::VectorXd::Zero(2);
  bad.v_coeffs << 0.0, 1.0;  // V(x) = x
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("single update step: positivity and mass") {
  auto m = toy_cauchy_model();
  auto st = init_filter(m);
  auto [posterior, ct] = update(st.predictive, 0.7, m, no_forecast_opts());
  CHECK(ct > 0.0);
  CHECK(posterior.codegree == 2 + 4);
  // Posterior integrates to one.
  const auto zn = posterior.normalized_summand();
  const double mass =
      testsupport::integrate_R([&](double x) { return pdf_at(zn, x); });
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
  // Nonnegative on a grid.
  for (int i = 0; i < 100; ++i) {
    const double x = -15.0 + 30.0 * i / 99.0;
    CHECK(pdf_at(zn, x) > -1e-12);
  }
}

TEST_CASE("update c_t matches direct quadrature of prior * weight") {
  auto m = toy_cauchy_model();
  auto st = init_filter(m);
  const double y = -1.4;
  auto [posterior, ct] = update(st.predictive, y, m, no_forecast_opts());
  auto pu = testsupport::cauchy_density(1.0);
  const double want = testsupport::integrate_R([&](double x) {
    const double vol = m.psi * testsupport::volatility_poly(m.v_coeffs, m.sigma * x);
    return (1.0 / (kPi * (1 + x * x))) * pu(y / vol) / vol;
  });
  CHECK(ct == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("y = 0 observation short-circuit") {
  auto m = toy_cauchy_model();
  auto st = init_filter(m);
  auto [posterior, ct] = update(st.predictive, 0.0, m, no_forecast_opts());
  CHECK(ct > 0.0);
  auto pu = testsupport::cauchy_density(1.0);
  const double want = testsupport::integrate_R([&](double x) {
    const double vol = m.psi * testsupport::volatility_poly(m.v_coeffs, m.sigma * x);
    return (1.0 / (kPi * (1 + x * x))) * pu(0.0) / vol;
  });
  CHECK(ct == doctest::Approx(want).epsilon(1e-6));
  // Posterior proportional to prior / V on a few points.
  const auto zn = posterior.normalized_summand();
  auto prior_over_v = [&](double x) {
    const double vol = m.psi * testsupport::volatility_poly(m.v_coeffs, m.sigma * x);
    return (1.0 / (kPi * (1 + x * x))) * pu(0.0) / vol / ct;
  };
  for (double x : {-2.0, 0.0, 1.5})
    CHECK(pdf_at(zn, x) == doctest::Approx(prior_over_v(x)).epsilon(1e-7));
}

TEST_CASE("sigma = 0 degenerates the update to the prior") {
  auto m = toy_cauchy_model(0.9, 1.0, 0.0);
  auto st = init_filter(m);
  auto [posterior, ct] = update(st.predictive, 0.8, m, no_forecast_opts());
  CHECK(posterior.codegree == st.predictive.codegree);
  for (double x : {-1.0, 0.2, 3.0})
    CHECK(pdf_at(posterior.normalized_summand(), x) ==
          doctest::Approx(pdf_at(st.predictive.normalized_summand(), x)).epsilon(1e-10));
  // c_t equals the constant weight p_U(y / (psi 1.1)) / (psi 1.1).
  const double vol = 1.0 * 1.1;
  CHECK(ct == doctest::Approx((1.0 / (kPi * (1 + std::pow(0.8 / vol, 2)))) / vol));
}

TEST_CASE("predict: co-degree rule, mass, symmetry") {
  auto m = SvModel::paper_model(0.9, 1.0, 1.0);
  auto st = init_filter(m);
  auto [posterior, ct] = update(st.predictive, 0.5, m, no_forecast_opts());
  CHECK(posterior.codegree == 14);
  auto pred = predict(posterior, m);
  CHECK(pred.codegree == 10);  // min(14, k_W = 10)
  const double mass = testsupport::integrate_R(
      [&](double x) { return pdf_at(pred.normalized_summand(), x); });
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-7));

  // Symmetric posterior and W give a symmetric predictive.
  auto t9 = make_scaled_t_odd(9);
  auto spred = predict(t9, m);
  for (double x : {0.4, 1.7, 3.0})
    CHECK(pdf_at(spred.normalized_summand(), x) ==
          doctest::Approx(pdf_at(spred.normalized_summand(), -x)).epsilon(1e-9));
}

TEST_CASE("likelihood for T = 3 equals the nested quadrature oracle") {
  auto m = toy_cauchy_model(0.9, 1.3, 1.0);
  const std::vector<double> ys = {0.6, -1.8, 0.3};
  FilterOptions opts = no_forecast_opts();
  auto run = run_filter(m, ys, opts);
  double prod = 1.0;
  for (const auto& s : run.steps) prod *= s.c_t;
  CHECK(std::log(prod) == doctest::Approx(run.loglik).epsilon(1e-12));

  const double oracle = testsupport::nested_likelihood(
      testsupport::cauchy_density(1.0), testsupport::cauchy_density(1.0),
      testsupport::cauchy_density(1.0), m.a, m.psi, m.sigma, m.v_coeffs, ys);
  CHECK(prod == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("paper-config step: orders, ledger, truncation consistency") {
  auto m = SvModel::paper_model(0.9, 2.0, 1.5);
  auto st = init_filter(m);
  FilterOptions opts;
  opts.verify_codegree = true;
  opts.grid_check = true;
  StepDiagnostics diag;
  auto st2 = step(st, 1.1, m, opts, &diag);
  // k_{1|1} = 10 + 4, k_{2|1} = min(14, 10).
  CHECK(diag.k_update == 14);
  CHECK(diag.k_predict == 10);
  CHECK(diag.k_update_staircase == 14);
  CHECK(diag.k_predict_staircase == 10);
  CHECK(diag.n_full > diag.m_reduced);
  CHECK(diag.bound <= 0.02);
  CHECK(diag.grid_error >= 0.0);
  CHECK(diag.grid_error <= diag.bound);
  // Pre/post-truncation moments agree far beyond the pdf bound.
  CHECK(std::abs(diag.ex_full - diag.ex_pred) <=
        1e-8 * std::max(1.0, std::abs(diag.ex_full)));
  CHECK(std::abs(diag.ev_full - diag.ev_pred) <= 1e-8 * std::abs(diag.ev_full));
  CHECK(st2.loglik == doctest::Approx(std::log(diag.c_t)));
}

TEST_CASE("filter is invariant under a state-space transform of the input") {
  auto m = SvModel::paper_model(0.9, 1.0, 1.0);
  std::mt19937_64 gen(23);
  const Index n = m.pdf_x1.summand.dim();
  CMatrix t = CMatrix::Identity(n, n) + 0.3 * random_cmatrix(n, n, gen);
  SvModel mt = m;
  mt.pdf_x1.summand = SpectralSummand(t * m.pdf_x1.summand.a * t.inverse(),
                                      t * m.pdf_x1.summand.m,
                                      m.pdf_x1.summand.c * t.inverse(), false);
  const std::vector<double> ys = {0.4, -0.9, 1.6};
  auto r1 = run_filter(m, ys);
  auto r2 = run_filter(mt, ys);
  for (size_t i = 0; i < ys.size(); ++i) {
    CHECK(r1.steps[i].c_t == doctest::Approx(r2.steps[i].c_t).epsilon(1e-8));
    CHECK(r1.steps[i].ex_pred == doctest::Approx(r2.steps[i].ex_pred).epsilon(1e-8));
  }
}

TEST_CASE("run_filter: empty input and forecast guard") {
  auto m = SvModel::paper_model(0.9, 1.0, 1.0);
  auto empty = run_filter(m, {});
  CHECK(empty.loglik == 0.0);
  CHECK(empty.steps.empty());
  CHECK(empty.forecast_abs_y.empty());

  auto toy = toy_cauchy_model();
  CHECK_THROWS_AS(run_filter(toy, {0.5}), ConfigError);  // forecasts impossible
}

TEST_CASE("short paper-config run produces sensible forecasts") {
  auto m = SvModel::paper_model(0.9, 2.0, 1.5);
  sim::SimConfig cfg;
  cfg.a = 0.9;
  cfg.psi = 2.0;
  cfg.sigma = 1.5;
  cfg.t_len = 8;
  cfg.seed = 42;
  auto path = sim::simulate(cfg);
  auto run = run_filter(m, path.ys);
  CHECK(run.steps.size() == 8);
  for (double f : run.forecast_abs_y) {
    CHECK(std::isfinite(f));
    CHECK(f > 0.0);
  }
  // Co-degree ledger along the run.
  for (const auto& s : run.steps) {
    CHECK(s.k_update == std::min(s.k_predict, 10) + 4);
    CHECK(s.k_predict == 10);
    CHECK(s.bound <= 0.02);
  }
  // Step failure carries the time index.
  try {
    FilterState bad;
    bad.predictive = m.pdf_x1;
    bad.predictive.summand.m *= 0.0;  // destroys CM > 0
    bad.t = 5;
    step(bad, 0.1, m, FilterOptions{});
    CHECK(false);
  } catch (const StepFailureError& e) {
    CHECK(e.step() == 5);
  }
}
