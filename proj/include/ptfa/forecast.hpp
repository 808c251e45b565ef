#pragma once

// Rolling-window direct h-step forecast evaluation. At each window end t the
// window rows [t - w + 1, t] are standardized on their own, every method is
// fit on the pairs (x_s, y_{s+h}) inside the window, and the forecast of
// y_{t+h} is made from x_t.

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "ptfa/core.hpp"

namespace ptfa {

enum class ForecastMethod { Ptfa, PtfaDfm, PtfaSv, Pls, Pca, Ppca, Null };

std::string_view to_string(ForecastMethod method) noexcept;
ForecastMethod parse_forecast_method(std::string_view name);

struct ForecastSpec {
  int window = 120;
  std::vector<int> horizons{1};
  std::vector<ForecastMethod> methods{ForecastMethod::Ptfa};
  std::vector<int> ks{1};
  double tolerance = 1e-6;
  int max_iter = 500;
  double lambda = 0.94;  // decay for ptfa-sv
  std::uint64_t seed = 0;
  int jobs = 1;  // 0 = hardware concurrency

  /// Throws InsufficientData unless window + max horizon <= T and every
  /// window leaves at least two training pairs.
  void validate(int T) const;
};

struct WindowForecast {
  Vector forecast;  // standardized with the window's target scaler
  Scaler scaler;
};

/// Forecast of y_{t+h} made at window end t (0-based row). Reads rows <= t only.
WindowForecast forecast_at(const Matrix& raw_X, const Matrix& raw_Y, int t, int h, ForecastMethod method, int k,
                           const ForecastSpec& spec);

struct MsfeRow {
  ForecastMethod method;
  int horizon;
  int k;
  double msfe;    // mean over evaluation points and targets, standardized scale
  int n_points;   // successful evaluation points
  int n_failed;
};

struct ForecastTable {
  std::vector<MsfeRow> rows;
  /// Squared errors per row (outer) and evaluation point (inner, averaged over
  /// targets); NaN for failed fits.
  std::vector<std::vector<double>> squared_errors;
  std::vector<int> window_ends;
};

ForecastTable rolling_evaluate(const Matrix& raw_X, const Matrix& raw_Y, const ForecastSpec& spec);

/// Header method,horizon,k,msfe,n_points,n_failed.
void write_msfe_csv(std::ostream& out, const ForecastTable& table);

}  // namespace ptfa
