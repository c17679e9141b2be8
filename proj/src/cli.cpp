#include "ratvol/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "ratvol/moments.hpp"
#include "ratvol/sbt.hpp"
#include "ratvol/serialize.hpp"
#include "ratvol/sim.hpp"
#include "ratvol/svfilter.hpp"

namespace ratvol {

namespace {

using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_manifest(const std::string& out_path, const std::string& subcommand,
                    const json& config, const std::vector<std::string>& inputs) {
  json m;
  m["subcommand"] = subcommand;
  m["config"] = config;
  m["inputs"] = inputs;
  m["output"] = out_path;
  m["tool_version"] = kToolVersion;
  write_file(out_path + ".manifest.json", m.dump(2) + "\n");
}

std::vector<double> read_csv_column(const std::string& path, const std::string& col) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open input CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty input CSV: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) header.push_back(tok);
  }
  int idx = -1;
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == col) idx = static_cast<int>(i);
  if (idx < 0) throw ConfigError("column '" + col + "' not found in " + path);
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.back() == '\r') line.pop_back();
    std::stringstream ss(line);
    std::string tok;
    int j = 0;
    double val = 0.0;
    bool got = false;
    while (std::getline(ss, tok, ',')) {
      if (j == idx) {
        val = std::stod(tok);
        got = true;
      }
      ++j;
    }
    if (!got) throw ConfigError("short row in " + path);
    out.push_back(val);
  }
  if (out.empty()) throw ConfigError("no data rows in " + path);
  return out;
}

std::vector<double> log_returns(const std::vector<double>& prices) {
  if (prices.size() < 2) throw ConfigError("need at least two prices for returns");
  std::vector<double> r(prices.size() - 1);
  for (size_t i = 0; i + 1 < prices.size(); ++i) {
    if (!(prices[i] > 0.0) || !(prices[i + 1] > 0.0))
      throw ConfigError("prices must be positive for log returns");
    r[i] = std::log(prices[i + 1] / prices[i]);
  }
  return r;
}

struct ModelFlags {
  double a = 0.9, psi = 1.0, sigma = 1.0;
  int d = 4, n_w = 9, n_u = 3, n_x = 9;

  void attach(CLI::App* app) {
    app->add_option("--a", a, "AR coefficient of the latent state");
    app->add_option("--psi", psi, "volatility level");
    app->add_option("--sigma", sigma, "state scaling inside V");
    app->add_option("--d", d, "degree of the volatility polynomial V");
    app->add_option("--n-w", n_w, "degrees of freedom of W (odd)");
    app->add_option("--n-u", n_u, "degrees of freedom of U (odd)");
    app->add_option("--n-x", n_x, "degrees of freedom of the initial state (odd)");
  }
  json to_json() const {
    return json{{"a", a},     {"psi", psi}, {"sigma", sigma}, {"d", d},
                {"n_w", n_w}, {"n_u", n_u}, {"n_x", n_x}};
  }
};

int cmd_simulate(const ModelFlags& mf, int t_len, std::uint64_t seed,
                 const std::string& out) {
  sim::SimConfig cfg;
  cfg.a = mf.a;
  cfg.psi = mf.psi;
  cfg.sigma = mf.sigma;
  cfg.v_coeffs = sim::paper_v_coeffs(mf.d);
  cfg.n_w = mf.n_w;
  cfg.n_u = mf.n_u;
  cfg.n_x = mf.n_x;
  cfg.t_len = t_len;
  cfg.seed = seed;
  auto path = sim::simulate(cfg);
  std::ostringstream ss;
  ss << "t,x,y\n";
  for (int t = 0; t < cfg.t_len; ++t)
    ss << (t + 1) << ',' << fmt(path.xs[t]) << ',' << fmt(path.ys[t]) << '\n';
  write_file(out, ss.str());
  json cj = mf.to_json();
  cj["T"] = t_len;
  cj["seed"] = seed;
  write_manifest(out, "simulate", cj, {});
  return 0;
}

int cmd_filter(const ModelFlags& mf, const std::string& input, const std::string& col,
               bool from_prices, double tau, const std::string& out,
               const std::string& grid_out, double grid_lo, double grid_hi, int grid_points,
               const std::string& state_out, bool verbose) {
  std::vector<double> ys = read_csv_column(input, col);
  if (from_prices) ys = log_returns(ys);

  SvModel model = SvModel::paper_model(mf.a, mf.psi, mf.sigma, mf.d, mf.n_w, mf.n_u, mf.n_x);
  FilterOptions opts;
  opts.tau = tau;
  opts.dump_pdf_grid = !grid_out.empty();
  opts.grid_lo = grid_lo;
  opts.grid_hi = grid_hi;
  opts.grid_points = grid_points;
  auto run = run_filter(model, ys, opts);

  std::ostringstream ss;
  ss << "t,c_t,loglik,e_x,e_v,forecast_absy,n_full,m_reduced,bound\n";
  for (const auto& s : run.steps) {
    ss << s.t << ',' << fmt(s.c_t) << ',' << fmt(s.loglik) << ',' << fmt(s.ex_pred) << ','
       << fmt(s.ev_pred) << ',' << fmt(s.forecast_abs_y) << ',' << s.n_full << ','
       << s.m_reduced << ',' << fmt(s.bound) << '\n';
  }
  write_file(out, ss.str());
  json cj = mf.to_json();
  cj["tau"] = tau;
  cj["column"] = col;
  cj["log_returns"] = from_prices;
  write_manifest(out, "filter", cj, {input});

  if (verbose) {
    for (const auto& s : run.steps) {
      json line{{"t", s.t},
                {"n", s.n_full},
                {"m", s.m_reduced},
                {"c", s.k_predict / 2},
                {"bound", s.bound}};
      std::vector<double> tail;
      for (Eigen::Index i = s.m_reduced; i < s.sigma_tail.size(); ++i)
        tail.push_back(s.sigma_tail(i));
      line["sigma_tail"] = tail;
      std::fprintf(stderr, "%s\n", line.dump().c_str());
    }
  }

  if (!grid_out.empty()) {
    std::ostringstream gs;
    gs << "t,x,pdf\n";
    for (size_t k = 0; k < run.pdf_grids.size(); ++k)
      for (Eigen::Index i = 0; i < run.grid_x.size(); ++i)
        gs << (k + 1) << ',' << fmt(run.grid_x(i)) << ',' << fmt(run.pdf_grids[k](i))
           << '\n';
    write_file(grid_out, gs.str());
    write_manifest(grid_out, "filter", cj, {input});
  }
  if (!state_out.empty()) {
    write_file(state_out, pdf_to_json(run.final_state.predictive) + "\n");
    write_manifest(state_out, "filter", cj, {input});
  }
  return 0;
}

int cmd_estimate(const ModelFlags& mf, const std::string& input, const std::string& col,
                 bool from_prices, int lags, const std::string& out,
                 const std::string& acf_out) {
  std::vector<double> ys = read_csv_column(input, col);
  if (from_prices) ys = log_returns(ys);
  auto structural = moments::MomentSpec::paper(mf.a, mf.psi, mf.sigma, mf.d, mf.n_w, mf.n_u);
  auto est = moments::mm_estimate(ys, lags, structural);

  json j{{"a_hat", est.a},
         {"psi_hat", est.psi},
         {"sigma_hat", est.sigma},
         {"objective", est.objective},
         {"lags", est.lags}};
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    write_file(out, text);
    json cj = mf.to_json();
    cj["lags"] = lags;
    write_manifest(out, "estimate", cj, {input});
  }

  if (!acf_out.empty()) {
    auto sample = moments::sample_moment_vector(ys, lags);
    moments::MomentSpec fitted = structural;
    fitted.a = est.a;
    fitted.psi = est.psi;
    fitted.sigma = est.sigma;
    auto theo = moments::theoretical_moment_vector(fitted, lags);
    std::ostringstream ss;
    ss << "lag,sample,fitted\n";
    ss << "mean," << fmt(sample(0)) << ',' << fmt(theo(0)) << '\n';
    ss << "var," << fmt(sample(1)) << ',' << fmt(theo(1)) << '\n';
    for (int k = 1; k <= lags; ++k)
      ss << k << ',' << fmt(sample(1 + k)) << ',' << fmt(theo(1 + k)) << '\n';
    write_file(acf_out, ss.str());
    json cj = mf.to_json();
    cj["lags"] = lags;
    write_manifest(acf_out, "estimate", cj, {input});
  }
  return 0;
}

int cmd_moments(const ModelFlags& mf, int lags, const std::string& out) {
  auto spec = moments::MomentSpec::paper(mf.a, mf.psi, mf.sigma, mf.d, mf.n_w, mf.n_u);
  auto m = moments::abs_y_moments(spec, lags);
  json j{{"e_abs_y", m.mean}, {"var_abs_y", m.variance}};
  json acov = json::array(), corr = json::array();
  for (double c : m.acov) {
    acov.push_back(c);
    corr.push_back(m.variance > 0 ? c / m.variance : 0.0);
  }
  j["acov_abs_y"] = acov;
  j["corr_abs_y"] = corr;
  j["lags"] = lags;
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    write_file(out, text);
    json cj = mf.to_json();
    cj["lags"] = lags;
    write_manifest(out, "moments", cj, {});
  }
  return 0;
}

int cmd_density_eval(const std::string& pdf_path, std::vector<double> xs,
                     const std::string& grid, const std::string& out) {
  RationalPdf pdf = pdf_from_json(read_file(pdf_path));
  if (!grid.empty()) {
    double lo, hi;
    int n;
    if (std::sscanf(grid.c_str(), "%lf:%lf:%d", &lo, &hi, &n) != 3 || n < 2)
      throw ConfigError("--grid expects lo:hi:points");
    for (int i = 0; i < n; ++i) xs.push_back(lo + (hi - lo) * i / (n - 1));
  }
  if (xs.empty()) throw ConfigError("density eval needs --x or --grid");
  std::ostringstream ss;
  ss << "x,pdf\n";
  for (double x : xs) ss << fmt(x) << ',' << fmt(pdf_eval(pdf, x)) << '\n';
  if (out.empty()) {
    std::fputs(ss.str().c_str(), stdout);
  } else {
    write_file(out, ss.str());
    write_manifest(out, "density-eval", json{{"pdf", pdf_path}}, {pdf_path});
  }
  return 0;
}

int cmd_density_convolve(const std::string& p1, const std::string& p2,
                         const std::string& out) {
  RationalPdf a = pdf_from_json(read_file(p1));
  RationalPdf b = pdf_from_json(read_file(p2));
  SpectralSummand z = convolve(a.normalized_summand(), b.normalized_summand());
  RationalPdf res = RationalPdf::from_summand_with_codegree(
      z, std::min(a.codegree, b.codegree));
  write_file(out, pdf_to_json(res) + "\n");
  write_manifest(out, "density-convolve", json{{"pdf1", p1}, {"pdf2", p2}}, {p1, p2});
  return 0;
}

int cmd_density_reduce(const std::string& pdf_path, double tau, const std::string& out) {
  RationalPdf pdf = pdf_from_json(read_file(pdf_path));
  auto res = truncate_to_tolerance(pdf.normalized_summand(), tau);
  RationalPdf red = RationalPdf::from_summand_with_codegree(res.summand, pdf.codegree);
  write_file(out, pdf_to_json(red) + "\n");
  json cj{{"pdf", pdf_path}, {"tau", tau},    {"n", res.n_full},
          {"m", res.m},      {"bound", res.achieved_bound}};
  write_manifest(out, "density-reduce", cj, {pdf_path});
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"state-space calculus for rational densities and the stochastic "
               "volatility filter"};
  app.require_subcommand(1);

  ModelFlags mf;

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "simulate a trajectory");
  ModelFlags sim_mf;
  sim_mf.psi = 2.0;
  sim_mf.sigma = 1.5;
  sim_mf.attach(sim_cmd);
  int sim_T = 100;
  std::uint64_t sim_seed = 1;
  std::string sim_out = "sim.csv";
  sim_cmd->add_option("--T", sim_T, "series length");
  sim_cmd->add_option("--seed", sim_seed, "RNG seed");
  sim_cmd->add_option("--out", sim_out, "output CSV path");

  // filter
  auto* fil_cmd = app.add_subcommand("filter", "run the volatility filter");
  ModelFlags fil_mf;
  fil_mf.attach(fil_cmd);
  std::string fil_in, fil_col = "y", fil_out = "filter.csv", fil_grid_out, fil_state_out;
  bool fil_prices = false, fil_verbose = false;
  double fil_tau = 0.02, fil_grid_lo = -20.0, fil_grid_hi = 20.0;
  int fil_grid_points = 400;
  fil_cmd->add_option("--input", fil_in, "input CSV")->required();
  fil_cmd->add_option("--col", fil_col, "input column (observations or prices)");
  fil_cmd->add_flag("--log-returns", fil_prices,
                    "treat the column as prices S_t and filter log(S_{t+1}/S_t)");
  fil_cmd->add_option("--tau", fil_tau, "SBT tolerance");
  fil_cmd->add_option("--out", fil_out, "per-step output CSV");
  fil_cmd->add_option("--pdf-grid-out", fil_grid_out, "per-step pdf grid CSV");
  fil_cmd->add_option("--grid-lo", fil_grid_lo, "grid lower end");
  fil_cmd->add_option("--grid-hi", fil_grid_hi, "grid upper end");
  fil_cmd->add_option("--grid-points", fil_grid_points, "grid points");
  fil_cmd->add_option("--state-out", fil_state_out, "final predictive pdf JSON");
  fil_cmd->add_flag("--verbose", fil_verbose, "truncation diagnostics as JSON lines");

  // estimate
  auto* est_cmd = app.add_subcommand("estimate", "method-of-moments fit");
  ModelFlags est_mf;
  est_mf.attach(est_cmd);
  std::string est_in, est_col = "y", est_out, est_acf_out;
  bool est_prices = false;
  int est_lags = 10;
  est_cmd->add_option("--input", est_in, "input CSV")->required();
  est_cmd->add_option("--col", est_col, "input column");
  est_cmd->add_flag("--log-returns", est_prices, "treat the column as prices");
  est_cmd->add_option("--lags", est_lags, "autocovariance lags (25 for the FX protocol)");
  est_cmd->add_option("--out", est_out, "output JSON (stdout if omitted)");
  est_cmd->add_option("--acf-out", est_acf_out, "sample-vs-fitted ACF table CSV");

  // moments
  auto* mom_cmd = app.add_subcommand("moments", "closed-form |Y| moments");
  ModelFlags mom_mf;
  mom_mf.attach(mom_cmd);
  int mom_lags = 10;
  std::string mom_out;
  mom_cmd->add_option("--lags", mom_lags, "autocovariance lags");
  mom_cmd->add_option("--out", mom_out, "output JSON (stdout if omitted)");

  // density tools
  auto* den_cmd = app.add_subcommand("density", "pdf utilities on JSON files");
  den_cmd->require_subcommand(1);
  auto* ev_cmd = den_cmd->add_subcommand("eval", "evaluate a pdf");
  std::string ev_pdf, ev_grid, ev_out;
  std::vector<double> ev_xs;
  ev_cmd->add_option("--pdf", ev_pdf, "pdf JSON")->required();
  ev_cmd->add_option("--x", ev_xs, "evaluation points");
  ev_cmd->add_option("--grid", ev_grid, "lo:hi:points");
  ev_cmd->add_option("--out", ev_out, "output CSV (stdout if omitted)");
  auto* cv_cmd = den_cmd->add_subcommand("convolve", "convolve two pdfs");
  std::string cv_p1, cv_p2, cv_out = "convolved.json";
  cv_cmd->add_option("--pdf1", cv_p1)->required();
  cv_cmd->add_option("--pdf2", cv_p2)->required();
  cv_cmd->add_option("--out", cv_out);
  auto* rd_cmd = den_cmd->add_subcommand("reduce", "SBT-reduce a pdf");
  std::string rd_pdf, rd_out = "reduced.json";
  double rd_tau = 0.02;
  rd_cmd->add_option("--pdf", rd_pdf)->required();
  rd_cmd->add_option("--tau", rd_tau);
  rd_cmd->add_option("--out", rd_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim_cmd->parsed()) return cmd_simulate(sim_mf, sim_T, sim_seed, sim_out);
    if (fil_cmd->parsed())
      return cmd_filter(fil_mf, fil_in, fil_col, fil_prices, fil_tau, fil_out, fil_grid_out,
                        fil_grid_lo, fil_grid_hi, fil_grid_points, fil_state_out,
                        fil_verbose);
    if (est_cmd->parsed())
      return cmd_estimate(est_mf, est_in, est_col, est_prices, est_lags, est_out,
                          est_acf_out);
    if (mom_cmd->parsed()) return cmd_moments(mom_mf, mom_lags, mom_out);
    if (den_cmd->parsed()) {
      if (ev_cmd->parsed()) return cmd_density_eval(ev_pdf, ev_xs, ev_grid, ev_out);
      if (cv_cmd->parsed()) return cmd_density_convolve(cv_p1, cv_p2, cv_out);
      if (rd_cmd->parsed()) return cmd_density_reduce(rd_pdf, rd_tau, rd_out);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "ratvol: config error: %s\n", e.what());
    return 2;
  } catch (const StepFailureError& e) {
    std::fprintf(stderr, "ratvol: numerical failure: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "ratvol: numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ratvol: error: %s\n", e.what());
    return 2;
  }
  return 2;
}

}  // namespace ratvol
