#include "ptfa/forecast.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <thread>

#include "ptfa/baselines.hpp"
#include "ptfa/em_dfm.hpp"
#include "ptfa/em_static.hpp"
#include "ptfa/em_sv.hpp"

namespace ptfa {

namespace {

constexpr ForecastMethod kAllMethods[] = {ForecastMethod::Ptfa, ForecastMethod::PtfaDfm, ForecastMethod::PtfaSv,
                                          ForecastMethod::Pls,  ForecastMethod::Pca,     ForecastMethod::Ppca,
                                          ForecastMethod::Null};

}  // namespace

std::string_view to_string(ForecastMethod method) noexcept {
  switch (method) {
    case ForecastMethod::Ptfa: return "ptfa";
    case ForecastMethod::PtfaDfm: return "ptfa-dfm";
    case ForecastMethod::PtfaSv: return "ptfa-sv";
    case ForecastMethod::Pls: return "pls";
    case ForecastMethod::Pca: return "pca";
    case ForecastMethod::Ppca: return "ppca";
    case ForecastMethod::Null: return "null";
  }
  return "unknown";
}

ForecastMethod parse_forecast_method(std::string_view name) {
  for (ForecastMethod m : kAllMethods) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown forecast method '" + std::string(name) + "'");
}

void ForecastSpec::validate(int T) const {
  if (horizons.empty() || methods.empty() || ks.empty()) {
    throw Error(ErrorCode::InvalidArgument, "horizons, methods and ks must be non-empty");
  }
  for (int h : horizons) {
    if (h < 0) throw Error(ErrorCode::InvalidArgument, "horizons must be non-negative");
  }
  for (int k : ks) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  }
  if (!(lambda >= 0.0 && lambda < 1.0)) throw Error(ErrorCode::InvalidArgument, "lambda must lie in [0, 1)");
  const int h_max = *std::max_element(horizons.begin(), horizons.end());
  if (window < 2 || window + h_max > T) {
    throw Error(ErrorCode::InsufficientData, "window + max horizon exceeds the number of rows");
  }
  if (window - h_max < 2) throw Error(ErrorCode::InsufficientData, "window leaves fewer than two training pairs");
}

WindowForecast forecast_at(const Matrix& raw_X, const Matrix& raw_Y, int t, int h, ForecastMethod method, int k,
                           const ForecastSpec& spec) {
  const int w = spec.window;
  const int start = t - w + 1;
  if (start < 0 || t >= raw_X.rows() || raw_X.rows() != raw_Y.rows()) {
    throw Error(ErrorCode::InsufficientData, "window end " + std::to_string(t) + " lacks a full window");
  }
  const int n = w - h;
  if (n < 2) throw Error(ErrorCode::InsufficientData, "window leaves fewer than two training pairs");

  const DataPanel window = standardize(raw_X.middleRows(start, w), raw_Y.middleRows(start, w));
  const Matrix X_train = window.X.topRows(n);
  const Matrix Y_train = window.Y.bottomRows(n);
  const Matrix x_last = window.X.bottomRows(1);

  WindowForecast out;
  out.scaler = window.scaler;
  EmConfig config;
  config.k = k;
  config.tolerance = spec.tolerance;
  config.max_iter = spec.max_iter;
  config.seed = spec.seed;
  config.compute_foc = false;
  const DataPanel train = DataPanel::from_standardized(X_train, Y_train);

  switch (method) {
    case ForecastMethod::Null:
      out.forecast = Vector::Zero(raw_Y.cols());
      break;
    case ForecastMethod::Ptfa: {
      const FitResult r = fit(train, config);
      out.forecast = predict_targets(r.params, x_last).row(0).transpose();
      break;
    }
    case ForecastMethod::PtfaSv: {
      SvConfig sv;
      sv.base = config;
      sv.lambda_x = spec.lambda;
      sv.lambda_y = spec.lambda;
      const SvFitResult r = fit_sv(train, sv);
      FactorParams latest = r.fit.params;
      latest.sigma2_x = r.volatility.sigma2_x(r.volatility.sigma2_x.size() - 1);
      out.forecast = predict_targets(latest, x_last).row(0).transpose();
      break;
    }
    case ForecastMethod::PtfaDfm: {
      DfmConfig dfm;
      dfm.base = config;
      const DfmFitResult r = fit_dfm(train, dfm);
      // Extend the posterior over the whole window: the last h periods have
      // features but no paired target yet.
      const DfmPosterior post = dfm_posterior(r.params, window.X, Y_train);
      out.forecast = r.params.base.Q * post.M.bottomRows(1).transpose();
      break;
    }
    case ForecastMethod::Pls:
      out.forecast = fit_nipals_pls(X_train, Y_train, k).predict(x_last).row(0).transpose();
      break;
    case ForecastMethod::Pca:
      out.forecast = fit_pca_regression(X_train, Y_train, k).predict(x_last).row(0).transpose();
      break;
    case ForecastMethod::Ppca:
      out.forecast = fit_ppca_regression(X_train, Y_train, k).predict(x_last).row(0).transpose();
      break;
  }
  if (!out.forecast.allFinite()) throw Error(ErrorCode::DegenerateInit, "forecast is not finite");
  return out;
}

ForecastTable rolling_evaluate(const Matrix& raw_X, const Matrix& raw_Y, const ForecastSpec& spec) {
  if (raw_X.rows() != raw_Y.rows()) throw Error(ErrorCode::DimensionMismatch, "X and Y row counts differ");
  const int T = static_cast<int>(raw_X.rows());
  spec.validate(T);
  const int first = spec.window - 1;
  const int h_min = *std::min_element(spec.horizons.begin(), spec.horizons.end());
  const int last = T - 1 - h_min;

  struct Job {
    ForecastMethod method;
    int horizon;
    int k;
  };
  std::vector<Job> jobs_list;
  for (ForecastMethod m : spec.methods) {
    for (int h : spec.horizons) {
      if (m == ForecastMethod::Null) {
        jobs_list.push_back({m, h, 0});
        continue;
      }
      for (int k : spec.ks) jobs_list.push_back({m, h, k});
    }
  }

  ForecastTable table;
  for (int t = first; t <= last; ++t) table.window_ends.push_back(t);
  const int n_windows = static_cast<int>(table.window_ends.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  table.squared_errors.assign(jobs_list.size(), std::vector<double>(static_cast<size_t>(n_windows), nan));
  // Marks evaluation points that exist for a horizon (t + h < T).
  std::vector<std::vector<char>> valid(jobs_list.size(), std::vector<char>(static_cast<size_t>(n_windows), 0));

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n_windows; i = next++) {
      const int t = table.window_ends[static_cast<size_t>(i)];
      for (size_t j = 0; j < jobs_list.size(); ++j) {
        const Job& job = jobs_list[j];
        if (t + job.horizon >= T) continue;
        valid[j][static_cast<size_t>(i)] = 1;
        try {
          const WindowForecast f = forecast_at(raw_X, raw_Y, t, job.horizon, job.method, std::max(job.k, 1), spec);
          const Vector actual = f.scaler.scale_y(raw_Y.row(t + job.horizon)).row(0).transpose();
          table.squared_errors[j][static_cast<size_t>(i)] = (actual - f.forecast).squaredNorm() / static_cast<double>(actual.size());
        } catch (const Error&) {
          // recorded as NaN and counted as a failure
        }
      }
    }
  };
  int jobs = spec.jobs > 0 ? spec.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min(jobs, std::max(n_windows, 1));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  for (size_t j = 0; j < jobs_list.size(); ++j) {
    MsfeRow row{jobs_list[j].method, jobs_list[j].horizon, jobs_list[j].k, nan, 0, 0};
    double sum = 0.0;
    for (int i = 0; i < n_windows; ++i) {
      if (!valid[j][static_cast<size_t>(i)]) continue;
      const double e = table.squared_errors[j][static_cast<size_t>(i)];
      if (std::isnan(e)) {
        ++row.n_failed;
      } else {
        sum += e;
        ++row.n_points;
      }
    }
    if (row.n_points > 0) row.msfe = sum / static_cast<double>(row.n_points);
    table.rows.push_back(row);
  }
  return table;
}

void write_msfe_csv(std::ostream& out, const ForecastTable& table) {
  out << "method,horizon,k,msfe,n_points,n_failed\n";
  char buf[32];
  for (const MsfeRow& row : table.rows) {
    if (std::isnan(row.msfe)) {
      std::snprintf(buf, sizeof buf, "NA");
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", row.msfe);
    }
    out << to_string(row.method) << ',' << row.horizon << ',' << row.k << ',' << buf << ',' << row.n_points << ','
        << row.n_failed << '\n';
  }
}

}  // namespace ptfa
