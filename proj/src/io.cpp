#include "hdnsm/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace hdnsm {

namespace {

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delim)) out.push_back(cell);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  const std::string v = trim(cell);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x))
    throw std::runtime_error("non-numeric cell at row " + std::to_string(row) + " column " +
                             column + ": '" + v + "'");
  return x;
}

// Count of selected covariates; the unpenalized intercept column is excluded.
std::size_t covariates(const LassoFit& fit) {
  std::size_t c = 0;
  for (Eigen::Index j : fit.support)
    if (j != 0) ++c;
  return c;
}

std::vector<double> parse_double_list(const std::string& v) {
  std::vector<double> out;
  for (const auto& piece : split(v, ','))
    if (!trim(piece).empty()) out.push_back(std::stod(trim(piece)));
  return out;
}

}  // namespace

Dataset load_csv_dataset(const std::string& path, const ColumnRoles& roles) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split(line, ',');

  auto find_col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("missing column: " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t y_col = find_col(roles.outcome);
  const std::size_t t_col = find_col(roles.treatment);

  std::vector<std::size_t> x_cols;
  std::vector<std::string> x_names;
  if (roles.controls.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (j != y_col && j != t_col) {
        x_cols.push_back(j);
        x_names.push_back(header[j]);
      }
  } else {
    for (const auto& name : roles.controls) {
      x_cols.push_back(find_col(name));
      x_names.push_back(name);
    }
  }

  std::vector<double> y, t;
  std::vector<std::vector<double>> x_rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size())
      throw std::runtime_error("row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    y.push_back(parse_cell(cells[y_col], row, header[y_col]));
    t.push_back(parse_cell(cells[t_col], row, header[t_col]));
    std::vector<double> xr;
    xr.reserve(x_cols.size());
    for (std::size_t j : x_cols) xr.push_back(parse_cell(cells[j], row, header[j]));
    x_rows.push_back(std::move(xr));
  }
  if (y.empty()) throw std::runtime_error("no data rows in " + path);

  Dataset data;
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto p = static_cast<Eigen::Index>(x_cols.size());
  data.y = Eigen::Map<Eigen::VectorXd>(y.data(), n);
  data.t = Eigen::Map<Eigen::VectorXd>(t.data(), n);
  data.x.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      data.x(i, j) = x_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  data.x_names = x_names;
  return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "y,t";
  for (const auto& name : data.x_names) out << ',' << name;
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << fmt_full(data.y[i]) << ',' << fmt_full(data.t[i]);
    for (Eigen::Index j = 0; j < data.p(); ++j) out << ',' << fmt_full(data.x(i, j));
    out << '\n';
  }
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void apply_config(RunConfig& config, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "bandwidth_override" || key == "bandwidth")
      config.tuning.bandwidth_override = std::stod(value);
    else if (key == "bandwidth_scale")
      config.tuning.bandwidth_scale = std::stod(value);
    else if (key == "ell_n_constant")
      config.tuning.ell_n_constant = std::stod(value);
    else if (key == "loading_iterations")
      config.tuning.loading_iterations = std::stoi(value);
    else if (key == "lasso_tol")
      config.tuning.lasso_tol = std::stod(value);
    else if (key == "lasso_max_sweeps")
      config.tuning.lasso_max_sweeps = std::stoi(value);
    else if (key == "density_floor")
      config.tuning.density_floor = std::stod(value);
    else if (key == "penalize_intercept")
      config.tuning.penalize_intercept = (value == "true" || value == "1");
    else if (key == "u_grid_size")
      config.tuning.u_grid_size = std::stoi(value);
    else if (key == "t_grid_size")
      config.tuning.t_grid_size = std::stoi(value);
    else if (key == "kernel") {
      if (value == "epanechnikov")
        config.tuning.kernel = KernelKind::Epanechnikov;
      else if (value == "uniform")
        config.tuning.kernel = KernelKind::Uniform;
      else
        throw std::runtime_error("unknown kernel: " + value);
    } else if (key == "n")
      config.dgp.n = std::stol(value);
    else if (key == "p")
      config.dgp.p = std::stol(value);
    else if (key == "copula_decay")
      config.dgp.copula_decay = std::stod(value);
    else if (key == "seed")
      config.seed = std::stoull(value);
    else if (key == "taus")
      config.tau_list = parse_double_list(value);
    else if (key == "B")
      config.bootstrap_reps = std::stoi(value);
    else if (key == "reps")
      config.study.replications = std::stoi(value);
    else if (key == "t_eval")
      config.study.t_eval = parse_double_list(value);
    else if (key == "oracle_draws")
      config.study.oracle_draws = std::stol(value);
    else if (key == "alpha")
      config.ci_alpha = std::stod(value);
    else if (key == "multiplier") {
      if (value == "exponential")
        config.multiplier = MultiplierKind::Exponential;
      else if (value == "normal")
        config.multiplier = MultiplierKind::Normal;
      else if (value == "ones")
        config.multiplier = MultiplierKind::Ones;
      else
        throw std::runtime_error("unknown multiplier: " + value);
    } else if (key == "flavor") {
      if (value == "lasso")
        config.use_post_lasso = false;
      else if (value == "post-lasso")
        config.use_post_lasso = true;
      else
        throw std::runtime_error("unknown estimator flavor: " + value);
    } else if (key == "input")
      config.input_path = value;
    else if (key == "out")
      config.output_dir = value;
    else if (key == "outcome")
      config.columns.outcome = value;
    else if (key == "treatment")
      config.columns.treatment = value;
    else if (key == "controls") {
      config.columns.controls.clear();
      if (value != "all-others")
        for (const auto& piece : split(value, ','))
          if (!trim(piece).empty()) config.columns.controls.push_back(trim(piece));
    } else if (key == "exec") {
      if (value == "serial")
        config.exec = ExecMode::serial;
      else if (value == "parallel")
        config.exec = ExecMode::parallel;
      else
        throw std::runtime_error("unknown exec mode: " + value);
    } else
      throw std::runtime_error("unknown config key: " + key);
  }
}

void validate_config(const RunConfig& config) {
  for (double tau : config.tau_list)
    if (!(tau > 0.0 && tau < 1.0)) throw std::runtime_error("tau out of range");
  if ((config.mode == RunMode::Estimate || config.mode == RunMode::Bootstrap) &&
      config.input_path.empty())
    throw std::runtime_error("estimate/bootstrap modes require an input file");
  if (config.bootstrap_reps < 1) throw std::runtime_error("B must be >= 1");
  if (!(config.ci_alpha > 0.0 && config.ci_alpha < 1.0))
    throw std::runtime_error("alpha out of range");
}

namespace {

nlohmann::json tuning_json(const TuningConfig& t, const PenaltyLevels* penalties, double h) {
  nlohmann::json j;
  j["bandwidth"] = h;
  j["bandwidth_scale"] = t.bandwidth_scale;
  j["ell_n_constant"] = t.ell_n_constant;
  j["loading_iterations"] = t.loading_iterations;
  j["lasso_tol"] = t.lasso_tol;
  j["lasso_max_sweeps"] = t.lasso_max_sweeps;
  j["density_floor"] = t.density_floor;
  j["u_grid_size"] = t.u_grid_size;
  j["t_grid_size"] = t.t_grid_size;
  j["kernel"] = t.kernel == KernelKind::Epanechnikov ? "epanechnikov" : "uniform";
  if (penalties) {
    j["ell_n"] = penalties->ell_n;
    j["lambda_regression"] = penalties->lambda_regression;
    j["lambda_density"] = penalties->lambda_density;
  }
  return j;
}

void write_curves_csv(const std::string& path, const CurveEstimate& curve,
                      const ConfidenceBand* band) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out << "t,tau,mu,mu_lo,mu_hi,mu_slope,mu_slope_lo,mu_slope_hi,"
         "q,q_lo,q_hi,q_slope,q_slope_lo,q_slope_hi\n";
  const auto nt = static_cast<Eigen::Index>(curve.t_grid.size());
  const auto ntau = static_cast<Eigen::Index>(curve.tau_list.size());
  for (Eigen::Index ti = 0; ti < nt; ++ti) {
    for (Eigen::Index a = 0; a < ntau; ++a) {
      out << fmt_full(curve.t_grid[static_cast<std::size_t>(ti)]) << ','
          << fmt_full(curve.tau_list[static_cast<std::size_t>(a)]) << ','
          << fmt_full(curve.mu[ti]) << ',' << fmt_full(band ? band->mu_lo[ti] : nan) << ','
          << fmt_full(band ? band->mu_hi[ti] : nan) << ',' << fmt_full(curve.mu_slope[ti]) << ','
          << fmt_full(band ? band->mu_slope_lo[ti] : nan) << ','
          << fmt_full(band ? band->mu_slope_hi[ti] : nan) << ',' << fmt_full(curve.q(a, ti))
          << ',' << fmt_full(band ? band->q_lo(a, ti) : nan) << ','
          << fmt_full(band ? band->q_hi(a, ti) : nan) << ',' << fmt_full(curve.q_slope(a, ti))
          << ',' << fmt_full(band ? band->q_slope_lo(a, ti) : nan) << ','
          << fmt_full(band ? band->q_slope_hi(a, ti) : nan) << '\n';
    }
  }
}

void write_alpha_csv(const std::string& path, const CurveEstimate& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "t,u,alpha_raw,alpha_rearranged\n";
  for (Eigen::Index ti = 0; ti < static_cast<Eigen::Index>(curve.t_grid.size()); ++ti)
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(curve.u_grid.size()); ++k)
      out << fmt_full(curve.t_grid[static_cast<std::size_t>(ti)]) << ','
          << fmt_full(curve.u_grid[static_cast<std::size_t>(k)]) << ','
          << fmt_full(curve.alpha_raw(ti, k)) << ',' << fmt_full(curve.alpha_rearranged(ti, k))
          << '\n';
}

void write_selection_csv(const std::string& path, const EstimationContext& ctx,
                         const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "t,estimator,u,support_size,top_selected\n";
  auto top_names = [&](const LassoFit& fit) {
    std::vector<Eigen::Index> idx = fit.support;
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(fit.coefficients[a]) > std::abs(fit.coefficients[b]);
    });
    std::string names;
    for (std::size_t k = 0; k < idx.size() && k < 5; ++k) {
      if (k) names += ';';
      names += data.basis_name(idx[k]);
    }
    return names;
  };
  for (const auto& ns : ctx.nuisances) {
    // selection reporting always refers to the Lasso step
    out << fmt_full(ns.t) << ",ls,," << covariates(ns.ls_fit) << ',' << top_names(ns.ls_fit)
        << '\n';
    out << fmt_full(ns.t) << ",density,," << covariates(ns.density_fit) << ','
        << top_names(ns.density_fit) << '\n';
    for (std::size_t k = 0; k < ns.u_grid.size(); ++k)
      out << fmt_full(ns.t) << ",logistic," << fmt_full(ns.u_grid[k]) << ','
          << covariates(ns.logistic_fits[k].first) << ','
          << top_names(ns.logistic_fits[k].first) << '\n';
  }
}

}  // namespace

void write_mc_report_csv(const std::string& path, const McReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "statistic,tau,t,truth,bias,rmse,coverage,avg_ci_width,replicates_used\n";
  for (const auto& row : report.rows)
    out << row.statistic << ',' << fmt_full(row.tau) << ',' << fmt_full(row.t) << ','
        << fmt_full(row.truth) << ',' << fmt_full(row.bias) << ',' << fmt_full(row.rmse) << ','
        << fmt_full(row.coverage) << ',' << fmt_full(row.avg_ci_width) << ','
        << row.replicates_used << '\n';
}

int run(const RunConfig& config) {
  validate_config(config);
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  const auto out_path = [&](const std::string& name) {
    return (fs::path(config.output_dir) / name).string();
  };

  nlohmann::json report;
  report["seed"] = config.seed;
  report["taus"] = config.tau_list;
  report["flavor"] = config.use_post_lasso ? "post-lasso" : "lasso";

  if (config.mode == RunMode::Simulate) {
    DgpConfig dgp = config.dgp;
    dgp.seed = config.seed;
    const Dataset data = simulate_dgp(dgp);
    write_dataset_csv(out_path("data.csv"), data);
    report["mode"] = "simulate";
    report["n"] = dgp.n;
    report["p"] = dgp.p;
    std::ofstream(out_path("report.json")) << report.dump(2) << '\n';
    return 0;
  }

  if (config.mode == RunMode::McStudy) {
    DgpConfig dgp = config.dgp;
    dgp.seed = config.seed;
    McStudyConfig study = config.study;
    study.tau_list = config.tau_list;
    study.bootstrap_reps = config.bootstrap_reps;
    study.multiplier = config.multiplier;
    study.ci_alpha = config.ci_alpha;
    study.use_post_lasso = config.use_post_lasso;
    const McReport mc = run_mc_study(dgp, config.tuning, study, config.exec);
    write_mc_report_csv(out_path("mc_report.csv"), mc);

    // one fitted example dataset for the plot-ready files
    const Dataset data = simulate_dgp(dgp);
    const RunGrids grids = default_grids(data, config.tuning, config.tau_list, study.t_eval);
    const EstimationContext ctx =
        prepare_context(data, grids, config.tuning, config.use_post_lasso, config.exec);
    const CurveEstimate point = estimate_curves_from(ctx, nullptr, config.exec);
    MultiplierSpec mspec{config.multiplier, config.bootstrap_reps, config.seed};
    const BootstrapDraws draws = bootstrap_curves(ctx, mspec, config.exec);
    const ConfidenceBand band = modified_percentile_ci(draws, point, config.ci_alpha);
    write_curves_csv(out_path("curves.csv"), point, &band);
    write_alpha_csv(out_path("alpha.csv"), point);
    write_selection_csv(out_path("selection.csv"), ctx, data);

    report["mode"] = "mc-study";
    report["replications"] = mc.replications;
    report["failed_replications"] = mc.failed_replications;
    report["B"] = config.bootstrap_reps;
    report["tuning"] = tuning_json(config.tuning, &ctx.penalties, ctx.h);
    std::ofstream(out_path("report.json")) << report.dump(2) << '\n';
    return 0;
  }

  const Dataset data = load_csv_dataset(config.input_path, config.columns);
  const RunGrids grids = default_grids(data, config.tuning, config.tau_list);
  const EstimationContext ctx =
      prepare_context(data, grids, config.tuning, config.use_post_lasso, config.exec);
  const CurveEstimate point = estimate_curves_from(ctx, nullptr, config.exec);

  ConfidenceBand band;
  const ConfidenceBand* band_ptr = nullptr;
  if (config.mode == RunMode::Bootstrap) {
    MultiplierSpec mspec{config.multiplier, config.bootstrap_reps, config.seed};
    const BootstrapDraws draws = bootstrap_curves(ctx, mspec, config.exec);
    band = modified_percentile_ci(draws, point, config.ci_alpha);
    band_ptr = &band;
    report["B"] = config.bootstrap_reps;
    report["B_effective"] = band.b_effective;
  }
  write_curves_csv(out_path("curves.csv"), point, band_ptr);
  write_alpha_csv(out_path("alpha.csv"), point);
  write_selection_csv(out_path("selection.csv"), ctx, data);

  // support-size summaries per first-stage estimator
  std::vector<double> ls_sizes, dens_sizes, logi_sizes;
  for (const auto& ns : ctx.nuisances) {
    ls_sizes.push_back(static_cast<double>(covariates(ns.ls_fit)));
    dens_sizes.push_back(static_cast<double>(covariates(ns.density_fit)));
    for (const auto& [lf, pf] : ns.logistic_fits)
      logi_sizes.push_back(static_cast<double>(covariates(lf)));
  }
  auto median_of = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  report["mode"] = config.mode == RunMode::Bootstrap ? "bootstrap" : "estimate";
  report["n"] = data.n();
  report["p"] = data.p();
  report["median_support_ls"] = median_of(ls_sizes);
  report["median_support_density"] = median_of(dens_sizes);
  report["median_support_logistic"] = median_of(logi_sizes);
  report["tuning"] = tuning_json(config.tuning, &ctx.penalties, ctx.h);
  std::ofstream(out_path("report.json")) << report.dump(2) << '\n';
  return 0;
}

}  // namespace hdnsm
