#include "ptfa/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ptfa/baselines.hpp"
#include "ptfa/csv.hpp"
#include "ptfa/em_dfm.hpp"
#include "ptfa/em_missing.hpp"
#include "ptfa/em_mixed_frequency.hpp"
#include "ptfa/em_static.hpp"
#include "ptfa/em_sv.hpp"
#include "ptfa/forecast.hpp"
#include "ptfa/simulation.hpp"

namespace ptfa::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct FitOptions {
  std::string method = "ptfa";
  std::string input;
  std::string targets;
  std::string x_file;
  std::string y_file;
  int k = 1;
  double tolerance = 1e-6;
  int max_iter = 1000;
  double lambda_x = 0.94;
  double lambda_y = 0.94;
  int ratio = 0;
  std::string ratios_file;
  std::uint64_t seed = 0;
  bool estimate_innovation_variance = false;
  std::string out_dir = ".";
};

struct SimulateOptions {
  std::string dgp = "simple";
  int reps = 200;
  std::uint64_t seed = 0;
  int T = 200, p = 10, q = 3, k = 2;
  double sigma_x = 1.0, sigma_y = 1.0, rho_x = 0.5, rho_y = 0.5;
  double missing_x = 0.0, missing_y = 0.0;
  std::string methods = "ptfa,pls";
  std::string grid = "none";
  std::string cells;
  std::string grid_x;
  std::string grid_y;
  double tolerance = 1e-6;
  int max_iter = 1000;
  int jobs = 1;
  std::string out;
  std::string replications_out;
};

struct ForecastOptions {
  std::string input;
  std::string targets;
  int window = 120;
  std::string horizons = "1";
  std::string methods = "ptfa";
  std::string ks = "1";
  double tolerance = 1e-6;
  int max_iter = 500;
  double lambda = 0.94;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "'" + item + "' is not a number");
    }
  }
  return out;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) {
    try {
      size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "'" + item + "' is not an integer");
    }
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  return out;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<std::string> factor_names(int k) {
  std::vector<std::string> out;
  for (int j = 1; j <= k; ++j) out.push_back("f" + std::to_string(j));
  return out;
}

std::vector<std::string> row_labels(const csv::Table& source, Eigen::Index rows) {
  if (source.has_labels() && static_cast<Eigen::Index>(source.labels.size()) == rows) return source.labels;
  std::vector<std::string> out;
  for (Eigen::Index t = 0; t < rows; ++t) out.push_back(std::to_string(t));
  return out;
}

csv::Table make_table(std::string label_name, std::vector<std::string> labels, std::vector<std::string> columns,
                      Matrix values) {
  csv::Table t;
  t.label_name = std::move(label_name);
  t.labels = std::move(labels);
  t.columns = std::move(columns);
  t.values = std::move(values);
  return t;
}

struct LoadedPanel {
  Matrix X;
  Matrix Y;
  std::vector<std::string> x_names;
  std::vector<std::string> y_names;
  csv::Table x_source;  // for row labels
  csv::Table y_source;
};

LoadedPanel load_panel(const FitOptions& o) {
  LoadedPanel out;
  if (!o.input.empty()) {
    if (!o.x_file.empty() || !o.y_file.empty()) {
      throw Error(ErrorCode::InvalidArgument, "use either --input or --x-file/--y-file");
    }
    if (o.targets.empty()) throw Error(ErrorCode::InvalidArgument, "--targets is required with --input");
    const csv::Table table = csv::read_file(o.input);
    out.y_names = split_list(o.targets);
    out.x_names = table.columns_except(out.y_names);
    if (out.x_names.empty()) throw Error(ErrorCode::InvalidArgument, "no feature columns remain");
    out.Y = table.select(out.y_names);
    out.X = table.select(out.x_names);
    out.x_source = table;
    out.y_source = table;
    return out;
  }
  if (o.x_file.empty() || o.y_file.empty()) {
    throw Error(ErrorCode::InvalidArgument, "provide --input with --targets, or both --x-file and --y-file");
  }
  out.x_source = csv::read_file(o.x_file);
  out.y_source = csv::read_file(o.y_file);
  out.X = out.x_source.values;
  out.Y = out.y_source.values;
  out.x_names = out.x_source.columns;
  out.y_names = out.y_source.columns;
  return out;
}

void write_report(const fs::path& path, const FitResult& r, const json& summary) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path.string());
  for (size_t i = 0; i < r.change_path.size(); ++i) {
    json line;
    line["iteration"] = i + 1;
    line["loglik"] = i + 1 < r.loglik_path.size() ? number(r.loglik_path[i + 1]) : json(nullptr);
    line["param_change"] = number(r.change_path[i]);
    out << line.dump() << '\n';
  }
  out << summary.dump() << '\n';
}

json fit_summary(const std::string& method, const FitResult& r, const FitOptions& o) {
  json s;
  s["summary"] = true;
  s["method"] = method;
  s["k"] = o.k;
  s["converged"] = r.converged;
  s["n_iter"] = r.n_iter;
  s["initial_loglik"] = r.loglik_path.empty() ? json(nullptr) : number(r.loglik_path.front());
  s["final_loglik"] = r.loglik_path.empty() ? json(nullptr) : number(r.loglik_path.back());
  s["foc_residual"] = number(r.foc_residual);
  s["sigma2_x"] = number(r.params.sigma2_x);
  s["sigma2_y"] = number(r.params.sigma2_y);
  return s;
}

void write_ptfa_outputs(const fs::path& dir, const LoadedPanel& data, const FitResult& r, Eigen::Index factor_rows,
                        const csv::Table& factor_source) {
  std::vector<std::string> names = data.x_names;
  names.insert(names.end(), data.y_names.begin(), data.y_names.end());
  csv::write_file((dir / "loadings.csv").string(),
                  make_table("variable", names, factor_names(r.params.k()), r.params.stacked()));
  const std::string label = factor_source.has_labels() ? factor_source.label_name : "t";
  csv::write_file((dir / "factors.csv").string(),
                  make_table(label, row_labels(factor_source, factor_rows), factor_names(r.params.k()), r.posterior.M));
}

int cmd_fit(const FitOptions& o, std::ostream& out) {
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  LoadedPanel data = load_panel(o);

  EmConfig config;
  config.k = o.k;
  config.tolerance = o.tolerance;
  config.max_iter = o.max_iter;
  config.seed = o.seed;
  config.track_loglik = true;

  const bool mf = o.method == "ptfa-mf";
  if ((o.ratio != 0 || !o.ratios_file.empty()) && !mf) {
    throw Error(ErrorCode::InvalidArgument, "--ratio and --ratios apply only to --method ptfa-mf");
  }
  if (o.method != "ptfa-sv" && (o.lambda_x != 0.94 || o.lambda_y != 0.94)) {
    throw Error(ErrorCode::InvalidArgument, "--lambda-x and --lambda-y apply only to --method ptfa-sv");
  }
  if (o.method != "ptfa-dfm" && o.estimate_innovation_variance) {
    throw Error(ErrorCode::InvalidArgument, "--estimate-innovation-variance applies only to --method ptfa-dfm");
  }

  FitResult result;
  json summary;
  Matrix sigma_path;  // T x 2 when time-varying
  if (mf) {
    std::vector<int> ratios;
    if (!o.ratios_file.empty()) {
      const csv::Table rt = csv::read_file(o.ratios_file);
      for (Eigen::Index t = 0; t < rt.values.rows(); ++t) {
        const double v = rt.values(t, 0);
        if (!(v >= 1.0) || std::floor(v) != v) throw Error(ErrorCode::InvalidArgument, "ratios must be positive integers");
        ratios.push_back(static_cast<int>(v));
      }
    } else {
      if (o.ratio < 1) throw Error(ErrorCode::InvalidArgument, "--method ptfa-mf needs --ratio >= 1 or --ratios");
      ratios.assign(static_cast<size_t>(data.Y.rows()), o.ratio);
    }
    const MixedFrequencyPanel panel = make_mixed_frequency_panel(data.X, data.Y, ratios);
    result = fit_mixed_frequency(panel, config);
    summary = fit_summary(o.method, result, o);
    write_ptfa_outputs(dir, data, result, panel.X_hf.rows(), data.x_source);
    summary["r2"] = number(r_squared(panel.Y, mf_fitted_targets(result.params, panel)).average);
  } else {
    const bool tolerant = o.method == "ptfa-missing" || o.method == "ptfa-dfm";
    const DataPanel panel = standardize(data.X, data.Y, tolerant ? MissingPolicy::ZeroImpute : MissingPolicy::Error);
    if (o.method == "ptfa") {
      result = fit(panel, config);
    } else if (o.method == "ptfa-missing") {
      result = fit_missing(panel, config).fit;
    } else if (o.method == "ptfa-sv") {
      SvConfig sv;
      sv.base = config;
      sv.lambda_x = o.lambda_x;
      sv.lambda_y = o.lambda_y;
      const SvFitResult r = fit_sv(panel, sv);
      result = r.fit;
      sigma_path.resize(panel.T(), 2);
      sigma_path << r.volatility.sigma2_x, r.volatility.sigma2_y;
    } else if (o.method == "ptfa-dfm") {
      DfmConfig dfm;
      dfm.base = config;
      dfm.fix_innovation_variance = !o.estimate_innovation_variance;
      const DfmFitResult r = fit_dfm(panel, dfm);
      result = r.fit;
      summary["A"] = json::array();
      for (Eigen::Index i = 0; i < r.params.A.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < r.params.A.cols(); ++j) row.push_back(number(r.params.A(i, j)));
        summary["A"].push_back(row);
      }
      summary["f0"] = json::array();
      for (Eigen::Index i = 0; i < r.params.f0.size(); ++i) summary["f0"].push_back(number(r.params.f0(i)));
      summary["sigma_v"] = json::array();
      for (Eigen::Index i = 0; i < r.params.Sigma_v.rows(); ++i) summary["sigma_v"].push_back(number(r.params.Sigma_v(i, i)));
      summary["spectral_radius"] = number(r.params.spectral_radius());
      summary["warnings"] = r.warnings;
      for (const auto& w : r.warnings) out << "warning: " << w << '\n';
    } else {
      BaselineMethod method;
      if (o.method == "pls") {
        method = BaselineMethod::PLS;
      } else if (o.method == "pca") {
        method = BaselineMethod::PCA;
      } else if (o.method == "ppca") {
        method = BaselineMethod::PPCA;
      } else {
        throw Error(ErrorCode::InvalidArgument, "unknown method '" + o.method + "'");
      }
      detail::require_complete(panel, o.method.c_str());
      const BaselineFit b = fit_baseline(method, panel.X, panel.Y, o.k);
      csv::write_file((dir / "loadings.csv").string(), make_table("variable", data.x_names, factor_names(o.k), b.weights));
      const std::string label = data.x_source.has_labels() ? data.x_source.label_name : "t";
      csv::write_file((dir / "factors.csv").string(),
                      make_table(label, row_labels(data.x_source, panel.T()), factor_names(o.k), b.scores));
      json s;
      s["summary"] = true;
      s["method"] = o.method;
      s["k"] = o.k;
      s["r2"] = number(r_squared(panel.Y, b.fitted).average);
      if (method == BaselineMethod::PPCA) s["noise_variance"] = number(b.noise_variance);
      std::ofstream report(dir / "fit_report.jsonl");
      report << s.dump() << '\n';
      out << o.method << ": r2 " << csv::format_number(r_squared(panel.Y, b.fitted).average) << '\n';
      return kExitOk;
    }
    const json extra = summary;
    summary = fit_summary(o.method, result, o);
    for (auto it = extra.begin(); it != extra.end(); ++it) summary[it.key()] = it.value();
    summary["r2"] = number(r_squared(panel.Y, fitted_targets(result.params, result.posterior)).average);
    write_ptfa_outputs(dir, data, result, panel.T(), data.x_source);
  }

  if (sigma_path.size() == 0) {
    sigma_path.resize(1, 2);
    sigma_path << result.params.sigma2_x, result.params.sigma2_y;
    csv::write_file((dir / "variances.csv").string(), make_table("t", {"all"}, {"sigma2_x", "sigma2_y"}, sigma_path));
  } else {
    const std::string label = data.x_source.has_labels() ? data.x_source.label_name : "t";
    csv::write_file((dir / "variances.csv").string(),
                    make_table(label, row_labels(data.x_source, sigma_path.rows()), {"sigma2_x", "sigma2_y"}, sigma_path));
  }
  write_report(dir / "fit_report.jsonl", result, summary);
  out << o.method << ": " << (result.converged ? "converged" : "stopped at max-iter") << " after " << result.n_iter
      << " iterations\n";
  return result.converged ? kExitOk : kExitMaxIter;
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  DgpSpec spec;
  spec.kind = parse_dgp_kind(o.dgp);
  spec.T = o.T;
  spec.p = o.p;
  spec.q = o.q;
  spec.k = o.k;
  spec.sigma_x = o.sigma_x;
  spec.sigma_y = o.sigma_y;
  spec.rho_x = o.rho_x;
  spec.rho_y = o.rho_y;
  spec.seed = o.seed;
  spec.validate();

  std::vector<SimMethod> methods;
  for (const auto& m : split_list(o.methods)) methods.push_back(parse_sim_method(m));
  ReplicationOptions ro;
  ro.n_reps = o.reps;
  ro.jobs = o.jobs;
  ro.tolerance = o.tolerance;
  ro.max_iter = o.max_iter;

  int nx = 0, ny = 0;
  if (!o.cells.empty()) {
    const auto pos = o.cells.find('x');
    if (pos == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--cells expects NxM");
    const auto a = parse_ints(o.cells.substr(0, pos));
    const auto b = parse_ints(o.cells.substr(pos + 1));
    if (a.size() != 1 || b.size() != 1 || a[0] < 1 || b[0] < 1) {
      throw Error(ErrorCode::InvalidArgument, "--cells expects NxM with positive N and M");
    }
    nx = a[0];
    ny = b[0];
  }
  GridReport report;
  if (o.grid == "none") {
    ro.missing_x = o.missing_x;
    ro.missing_y = o.missing_y;
    report.grid = "none";
    report.cells.push_back({spec.sigma_x, spec.sigma_y, run_replications(spec, methods, ro)});
  } else if (o.grid == "noise" || o.grid == "missing") {
    const bool noise = o.grid == "noise";
    const double lo = noise ? 0.1 : 0.0;
    const double hi = noise ? 5.0 : 0.48;
    std::vector<double> gx = o.grid_x.empty() ? linspace(lo, hi, nx > 0 ? nx : 3) : parse_doubles(o.grid_x);
    std::vector<double> gy = o.grid_y.empty() ? linspace(lo, hi, ny > 0 ? ny : 3) : parse_doubles(o.grid_y);
    report = noise ? noise_grid(spec, gx, gy, methods, ro) : missing_grid(spec, gx, gy, methods, ro);
  } else {
    throw Error(ErrorCode::InvalidArgument, "--grid must be none, noise or missing");
  }

  auto emit = [&](const std::string& path, auto writer) {
    if (path.empty() || path == "-") {
      out << csv::kVersionLine << '\n';
      writer(out, report);
      return;
    }
    std::ofstream f(path);
    if (!f) throw Error(ErrorCode::ParseError, "cannot write " + path);
    f << csv::kVersionLine << '\n';
    writer(f, report);
  };
  emit(o.out, [](std::ostream& s, const GridReport& r) { write_summary_csv(s, r); });
  if (!o.replications_out.empty()) {
    emit(o.replications_out, [](std::ostream& s, const GridReport& r) { write_replications_csv(s, r); });
  }
  return kExitOk;
}

int cmd_forecast(const ForecastOptions& o, std::ostream& out) {
  if (o.targets.empty()) throw Error(ErrorCode::InvalidArgument, "--targets is required");
  const csv::Table table = csv::read_file(o.input);
  const std::vector<std::string> y_names = split_list(o.targets);
  const std::vector<std::string> x_names = table.columns_except(y_names);
  if (x_names.empty()) throw Error(ErrorCode::InvalidArgument, "no feature columns remain");
  ForecastSpec spec;
  spec.window = o.window;
  spec.horizons = parse_ints(o.horizons);
  spec.ks = parse_ints(o.ks);
  spec.methods.clear();
  for (const auto& m : split_list(o.methods)) spec.methods.push_back(parse_forecast_method(m));
  spec.tolerance = o.tolerance;
  spec.max_iter = o.max_iter;
  spec.lambda = o.lambda;
  spec.seed = o.seed;
  spec.jobs = o.jobs;
  const ForecastTable result = rolling_evaluate(table.select(x_names), table.select(y_names), spec);
  if (o.out.empty() || o.out == "-") {
    out << csv::kVersionLine << '\n';
    write_msfe_csv(out, result);
  } else {
    std::ofstream f(o.out);
    if (!f) throw Error(ErrorCode::ParseError, "cannot write " + o.out);
    f << csv::kVersionLine << '\n';
    write_msfe_csv(f, result);
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probabilistic targeted factor analysis"};
  app.require_subcommand(1);

  FitOptions fo;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a model and write loadings, factors, variances and a report");
  fit_cmd->add_option("--method", fo.method, "ptfa, ptfa-missing, ptfa-mf, ptfa-sv, ptfa-dfm, pls, pca or ppca")
      ->check(CLI::IsMember({"ptfa", "ptfa-missing", "ptfa-mf", "ptfa-sv", "ptfa-dfm", "pls", "pca", "ppca"}));
  fit_cmd->add_option("--input", fo.input, "Panel CSV holding features and targets");
  fit_cmd->add_option("--targets", fo.targets, "Comma-separated target columns of --input");
  fit_cmd->add_option("--x-file", fo.x_file, "Feature CSV (high-frequency for ptfa-mf)");
  fit_cmd->add_option("--y-file", fo.y_file, "Target CSV (low-frequency for ptfa-mf)");
  fit_cmd->add_option("--k", fo.k, "Number of factors")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--tol", fo.tolerance, "Convergence tolerance on the parameter change")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iter", fo.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--lambda-x", fo.lambda_x, "Feature volatility decay (ptfa-sv)")->check(CLI::Range(0.0, 0.999999));
  fit_cmd->add_option("--lambda-y", fo.lambda_y, "Target volatility decay (ptfa-sv)")->check(CLI::Range(0.0, 0.999999));
  fit_cmd->add_option("--ratio", fo.ratio, "High-frequency periods per target period (ptfa-mf)");
  fit_cmd->add_option("--ratios", fo.ratios_file, "CSV with one ratio per target period (ptfa-mf)");
  fit_cmd->add_option("--seed", fo.seed, "Seed for the random starting loadings");
  fit_cmd->add_flag("--estimate-innovation-variance", fo.estimate_innovation_variance,
                    "Estimate the factor innovation variance (ptfa-dfm)");
  fit_cmd->add_option("--out", fo.out_dir, "Output directory");

  SimulateOptions so;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Run replicated simulation experiments");
  sim_cmd->add_option("--dgp", so.dgp, "simple, system or nongaussian")
      ->check(CLI::IsMember({"simple", "system", "nongaussian"}));
  sim_cmd->add_option("--reps", so.reps, "Replications per cell")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", so.seed, "Base seed");
  sim_cmd->add_option("--T", so.T, "Observations")->check(CLI::Range(2, 1000000));
  sim_cmd->add_option("--p", so.p, "Features")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--q", so.q, "Targets")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--k", so.k, "Factors")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--sigma-x", so.sigma_x, "Feature noise scale");
  sim_cmd->add_option("--sigma-y", so.sigma_y, "Target noise scale");
  sim_cmd->add_option("--rho-x", so.rho_x, "Feature noise Toeplitz parameter (system)");
  sim_cmd->add_option("--rho-y", so.rho_y, "Target noise Toeplitz parameter (system)");
  sim_cmd->add_option("--missing-x", so.missing_x, "Fraction of feature cells removed")->check(CLI::Range(0.0, 0.9));
  sim_cmd->add_option("--missing-y", so.missing_y, "Fraction of target cells removed")->check(CLI::Range(0.0, 0.9));
  sim_cmd->add_option("--methods", so.methods, "Comma-separated: ptfa, ptfa-missing, pls, pca, ppca");
  sim_cmd->add_option("--grid", so.grid, "none, noise or missing");
  sim_cmd->add_option("--cells", so.cells, "Grid size NxM over the default range");
  sim_cmd->add_option("--grid-x", so.grid_x, "Comma-separated first grid axis");
  sim_cmd->add_option("--grid-y", so.grid_y, "Comma-separated second grid axis");
  sim_cmd->add_option("--tol", so.tolerance, "EM tolerance")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--max-iter", so.max_iter, "EM iteration cap")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--jobs", so.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--out", so.out, "Summary CSV (median R^2 per cell and method); '-' for stdout");
  sim_cmd->add_option("--replications-out", so.replications_out, "Per-replication CSV");

  ForecastOptions xo;
  CLI::App* fc_cmd = app.add_subcommand("forecast", "Rolling-window out-of-sample MSFE table");
  fc_cmd->add_option("--input", xo.input, "Raw panel CSV")->required();
  fc_cmd->add_option("--targets", xo.targets, "Comma-separated target columns")->required();
  fc_cmd->add_option("--window", xo.window, "Rolling window length")->check(CLI::PositiveNumber);
  fc_cmd->add_option("--horizons", xo.horizons, "Comma-separated forecast horizons");
  fc_cmd->add_option("--methods", xo.methods, "Comma-separated: ptfa, ptfa-dfm, ptfa-sv, pls, pca, ppca, null");
  fc_cmd->add_option("--ks", xo.ks, "Comma-separated factor counts");
  fc_cmd->add_option("--tol", xo.tolerance, "EM tolerance")->check(CLI::PositiveNumber);
  fc_cmd->add_option("--max-iter", xo.max_iter, "EM iteration cap")->check(CLI::PositiveNumber);
  fc_cmd->add_option("--lambda", xo.lambda, "Volatility decay for ptfa-sv")->check(CLI::Range(0.0, 0.999999));
  fc_cmd->add_option("--seed", xo.seed, "Seed for the random starting loadings");
  fc_cmd->add_option("--jobs", xo.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  fc_cmd->add_option("--out", xo.out, "MSFE CSV; '-' for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fo, out);
    if (sim_cmd->parsed()) return cmd_simulate(so, out);
    if (fc_cmd->parsed()) return cmd_forecast(xo, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace ptfa::cli
