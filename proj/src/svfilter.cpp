#include "ratvol/svfilter.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <numbers>

#include "ratvol/moments.hpp"
#include "ratvol/sim.hpp"

namespace ratvol {

namespace {

constexpr double kPi = std::numbers::pi;
const Complex kI(0.0, 1.0);

// Unitary staircase reduction: drops exactly-dead states and keeps the
// co-degree structure bit-faithful (a balancing reduction would wash it out).
SpectralSummand reduce_summand(const SpectralSummand& z, double tol) {
  Realization red = staircase_minimal_reduce(z.to_realization(), tol);
  return SpectralSummand(red.a, red.b, red.c, false);
}

// Companion realization of g2(s) = i / V(-i s) for the sigma-scaled
// polynomial coefficients; strictly proper with d2 = 0 and co-degree d.
Realization companion_g2(const Eigen::VectorXd& veff, int deff) {
  CMatrix a = CMatrix::Zero(deff, deff);
  std::vector<Complex> w(deff + 1);
  Complex pw(1.0, 0.0);  // (-i)^j
  for (int j = 0; j <= deff; ++j) {
    w[j] = veff(j) * pw;
    pw *= -kI;
  }
  for (int i = 0; i + 1 < deff; ++i) a(i, i + 1) = 1.0;
  for (int j = 0; j < deff; ++j) a(deff - 1, j) = -w[j] / w[deff];
  CMatrix b = CMatrix::Zero(deff, 1);
  b(deff - 1, 0) = 1.0;
  CMatrix c = CMatrix::Zero(1, deff);
  c(0, 0) = kI / w[deff];
  return Realization(std::move(a), std::move(b), std::move(c), CMatrix::Zero(1, 1));
}

}  // namespace

Eigen::VectorXd SvModel::v_sigma() const {
  Eigen::VectorXd v = v_coeffs;
  double p = 1.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    v(j) *= p;
    p *= sigma;
  }
  return v;
}

double SvModel::v_at(double x) const { return sim::poly_eval(v_coeffs, x); }

void SvModel::validate() const {
  if (!(std::abs(a) < 1.0) || a == 0.0)
    throw ConfigError("SvModel: a must satisfy 0 < |a| < 1");
  if (!(psi > 0.0)) throw ConfigError("SvModel: psi must be positive");
  if (!(sigma >= 0.0)) throw ConfigError("SvModel: sigma must be nonnegative");
  const int d = degree();
  if (d < 1) throw ConfigError("SvModel: V must have degree >= 1");
  // V must have no real roots: companion eigenvalue check.
  if (v_coeffs(d) == 0.0) throw ConfigError("SvModel: leading V coefficient is zero");
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i + 1 < d; ++i) comp(i, i + 1) = 1.0;
  for (int j = 0; j < d; ++j) comp(d - 1, j) = -v_coeffs(j) / v_coeffs(d);
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  for (int i = 0; i < d; ++i) {
    const auto r = es.eigenvalues()(i);
    if (std::abs(r.imag()) < 1e-9 * (1.0 + std::abs(r.real())))
      throw ConfigError("SvModel: V(x) has a real root; V must be positive");
  }
  if (v_at(0.0) <= 0.0) throw ConfigError("SvModel: V is not positive");
  if (pdf_w.summand.dim() == 0 || pdf_u.summand.dim() == 0 || pdf_x1.summand.dim() == 0)
    throw ConfigError("SvModel: disturbance densities not set");
}

SvModel SvModel::paper_model(double a, double psi, double sigma, int d, int n_w, int n_u,
                             int n_x) {
  SvModel m;
  m.a = a;
  m.psi = psi;
  m.sigma = sigma;
  m.v_coeffs = sim::paper_v_coeffs(d);
  m.pdf_w = make_scaled_t_odd(n_w);
  m.pdf_u = make_scaled_t_odd(n_u);
  RationalPdf x1 = make_scaled_t_odd(n_x);
  const double s = 1.0 / std::sqrt(1.0 - a * a);
  RationalPdf scaled;
  scaled.summand = scale_rv(x1.summand, s);
  scaled.norm_const = x1.norm_const;  // scaling by s > 0 leaves CM unchanged
  scaled.codegree = x1.codegree;
  m.pdf_x1 = std::move(scaled);
  m.e_abs_u = moments::scaled_t_e_abs(n_u);
  m.validate();
  return m;
}

double polynomial_expectation(const SpectralSummand& z, const Eigen::VectorXd& coeffs) {
  const auto mom = raw_moments(z, coeffs.size() - 1);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < coeffs.size(); ++j) acc += coeffs(j) * mom[j].real();
  return acc;
}

namespace {

// NaN when the co-degree does not cover the polynomial degree.
double guarded_expectation(const SpectralSummand& z, Index codegree,
                           const Eigen::VectorXd& coeffs) {
  if (codegree - 2 < coeffs.size() - 1) return std::numeric_limits<double>::quiet_NaN();
  return polynomial_expectation(z, coeffs);
}

}  // namespace

FilterState init_filter(const SvModel& model) {
  model.validate();
  FilterState st;
  st.predictive = model.pdf_x1;
  // Stored normalized.
  st.predictive.summand = st.predictive.normalized_summand();
  st.predictive.norm_const = 1.0;
  st.t = 1;
  st.loglik = 0.0;
  return st;
}

std::pair<RationalPdf, double> update(const RationalPdf& predictive, double y,
                                      const SvModel& model, const FilterOptions& opts) {
  // Observation equation Y = psi V(sigma X) U: the update divides by the full
  // volatility polynomial psi * V(sigma x).
  const Eigen::VectorXd veff = model.psi * model.v_sigma();
  int deff = model.degree();
  while (deff > 0 && veff(deff) == 0.0) --deff;

  if (deff == 0) {
    // Constant volatility: the update weight does not depend on x.
    const double v0 = veff(0);
    const double ct = pdf_eval(model.pdf_u, y / v0) / v0;
    if (!(ct > 0.0)) throw FactorizationFailureError("update: nonpositive weight");
    return {predictive, ct};
  }

  SpectralSummand zp = reduce_summand(predictive.normalized_summand(), opts.reduce_tol);
  FactorOptions fo1 = opts.factor;
  fo1.known_codegree = predictive.codegree;  // ledger value
  auto k1 = factor_from_summand(zp, FactorSide::min_phase, fo1);

  const Realization g2 = companion_g2(veff, deff);

  Realization weight;
  if (y != 0.0) {
    auto phi_u = density_from_summand(model.pdf_u.normalized_summand());
    Realization g1 = scale_output(arg_scale_times_s(phi_u.to_realization(), y), -kI);
    weight = compose(g1, g2);
  } else {
    const double pu0 = pdf_eval(model.pdf_u, 0.0);
    weight = scale_output(g2, -kI * pu0);
  }
  // A valid update weight is strictly proper; drop the roundoff feedthrough.
  const double dscale = 1.0 + weight.b.norm() * weight.c.norm();
  if (weight.d.norm() > 1e-8 * dscale)
    throw FactorizationFailureError("update: composed weight has a large feedthrough");
  SpectralDensity wd{weight.a, weight.b, weight.c};

  SpectralSummand zw = reduce_summand(summand_from_density(wd), opts.reduce_tol);
  FactorOptions fo2 = opts.factor;
  fo2.known_codegree = deff;  // co-degree of the composed weight density
  auto k2 = factor_from_summand(zw, FactorSide::min_phase, fo2);

  Realization kprod = multiply(k1.k.to_realization(), k2.k.to_realization());
  SpectralFactor kpost{kprod.a, kprod.b, kprod.c, true};
  SpectralSummand zpost = summand_from_factor(kpost);

  const Complex cm = zpost.cm();
  if (!(cm.real() > 0.0) || std::abs(cm.imag()) > 1e-8 * std::abs(cm.real()))
    throw FactorizationFailureError("update: posterior mass is not real positive");
  const double ct = 2.0 * kPi * cm.real();
  zpost.c /= ct;

  RationalPdf posterior =
      RationalPdf::from_summand_with_codegree(std::move(zpost), predictive.codegree + deff);
  return {std::move(posterior), ct};
}

RationalPdf predict(const RationalPdf& posterior, const SvModel& model) {
  SpectralSummand zs = scale_rv(posterior.normalized_summand(), model.a);
  SpectralSummand zc = convolve_minimal(zs, model.pdf_w.normalized_summand());
  const Complex cm = zc.cm();
  if (!(cm.real() > 0.0) || std::abs(cm.imag()) > 1e-8 * std::abs(cm.real()))
    throw InvalidSummandError("predict: predictive mass is not real positive");
  zc.c /= 2.0 * kPi * cm.real();
  const Index kpred = std::min<Index>(posterior.codegree, model.pdf_w.codegree);
  return RationalPdf::from_summand_with_codegree(std::move(zc), kpred);
}

namespace {

int staircase_codegree_of_density(const RationalPdf& pdf, double rank_tol) {
  auto density = density_from_summand(pdf.summand);
  auto rep = staircase_codegree(density.to_realization(), rank_tol);
  return static_cast<int>(rep.codegree);
}

}  // namespace

FilterState step(const FilterState& state, double y, const SvModel& model,
                 const FilterOptions& opts, StepDiagnostics* diag) {
  try {
    auto [posterior, ct] = update(state.predictive, y, model, opts);
    RationalPdf pred_full = predict(posterior, model);

    // The raw Kronecker convolution keeps the co-degree structure exact,
    // which the pinned pencil staircase relies on; the positive-real
    // truncation performs the whole order reduction with its bound.
    SpectralSummand zraw = reduce_summand(pred_full.normalized_summand(), opts.reduce_tol);
    const Index n_raw = zraw.dim();
    FactorOptions fot = opts.factor;
    fot.known_codegree = pred_full.codegree;
    auto trunc = truncate_to_tolerance(zraw, opts.tau, fot);

    SpectralSummand zred = trunc.summand;
    const Complex cmr = zred.cm();
    if (!(cmr.real() > 0.0))
      throw InvalidSummandError("step: truncated mass is not positive");
    zred.c /= 2.0 * kPi * cmr.real();

    FilterState next;
    next.predictive = RationalPdf::from_summand_with_codegree(zred, pred_full.codegree);
    next.t = state.t + 1;
    next.loglik = state.loglik + std::log(ct);

    if (diag) {
      diag->t = state.t;
      diag->c_t = ct;
      diag->loglik = next.loglik;
      diag->n_full = static_cast<int>(n_raw);
      diag->m_reduced = static_cast<int>(trunc.m);
      diag->k_update = static_cast<int>(posterior.codegree);
      diag->k_predict = static_cast<int>(pred_full.codegree);
      diag->bound = trunc.achieved_bound;
      diag->sigma_tail = trunc.sigma;
      const Eigen::VectorXd veff = model.v_sigma();
      Eigen::VectorXd first(2);
      first << 0.0, 1.0;
      const Index kp = pred_full.codegree;
      diag->ex_full = guarded_expectation(zraw, kp, first);
      diag->ev_full = guarded_expectation(zraw, kp, veff);
      diag->ex_pred = guarded_expectation(next.predictive.summand, kp, first);
      diag->ev_pred = guarded_expectation(next.predictive.summand, kp, veff);
      if (opts.verify_codegree) {
        diag->k_update_staircase = staircase_codegree_of_density(posterior, opts.verify_tol);
        diag->k_predict_staircase =
            staircase_codegree_of_density(next.predictive, opts.verify_tol);
      }
      if (opts.grid_check) {
        double worst = 0.0;
        const Realization rf = zraw.to_realization();
        const Realization rr = next.predictive.summand.to_realization();
        const double mass_full = 2.0 * kPi * zraw.cm().real();
        for (int i = 0; i < opts.grid_points; ++i) {
          const double x =
              opts.grid_lo + (opts.grid_hi - opts.grid_lo) * i / (opts.grid_points - 1);
          const double pf =
              2.0 * evaluate_scalar(rf, Complex(0, x)).real() / mass_full;
          const double pr = 2.0 * evaluate_scalar(rr, Complex(0, x)).real();
          if (pf > 0.0) worst = std::max(worst, std::abs(pf - pr) / pf);
        }
        diag->grid_error = worst;
      }
    }
    return next;
  } catch (const Error& e) {
    throw StepFailureError(state.t, e.what());
  }
}

FilterRun run_filter(const SvModel& model, const std::vector<double>& ys,
                     const FilterOptions& opts) {
  FilterRun out;
  FilterState st = init_filter(model);
  const Eigen::VectorXd veff = model.v_sigma();
  const int d = model.degree();
  if (opts.compute_forecasts &&
      (model.pdf_w.codegree < d + 2 || model.pdf_x1.codegree < d + 2))
    throw ConfigError(
        "run_filter: |Y| forecasts need co-degrees of W and X1 of at least d + 2");

  if (opts.dump_pdf_grid) {
    out.grid_x.resize(opts.grid_points);
    for (int i = 0; i < opts.grid_points; ++i)
      out.grid_x(i) =
          opts.grid_lo + (opts.grid_hi - opts.grid_lo) * i / (opts.grid_points - 1);
  }

  for (double y : ys) {
    const double ev_prior =
        opts.compute_forecasts ? polynomial_expectation(st.predictive.summand, veff)
                               : std::numeric_limits<double>::quiet_NaN();
    out.forecast_abs_y.push_back(model.psi * model.e_abs_u * ev_prior);
    StepDiagnostics diag;
    st = step(st, y, model, opts, &diag);
    diag.forecast_abs_y = out.forecast_abs_y.back();
    out.steps.push_back(std::move(diag));
    if (opts.dump_pdf_grid) {
      Eigen::VectorXd g(opts.grid_points);
      const Realization r = st.predictive.summand.to_realization();
      for (int i = 0; i < opts.grid_points; ++i)
        g(i) = 2.0 * evaluate_scalar(r, Complex(0, out.grid_x(i))).real();
      out.pdf_grids.push_back(std::move(g));
    }
  }
  out.loglik = st.loglik;
  out.final_state = std::move(st);
  return out;
}

}  // namespace ratvol
