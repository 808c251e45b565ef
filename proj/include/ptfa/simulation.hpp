#pragma once

// Synthetic panels with known factors and loadings, and replication harnesses
// that compare estimators by in-sample R^2 across seeds and parameter grids.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ptfa/core.hpp"

namespace ptfa {

enum class DgpKind { Simple, System, NonGaussian };

std::string_view to_string(DgpKind kind) noexcept;
DgpKind parse_dgp_kind(std::string_view name);

/// Loadings are U(0, 1), factors N(0, I) (or a VAR(1) with coefficient
/// factor_persistence * I and unit innovations).
///   Simple:      e_x ~ N(0, sigma_x^2 I),               e_y ~ N(0, sigma_y^2 I)
///   System:      e_x ~ N(0, sigma_x^2 Toeplitz(rho_x)), e_y ~ N(0, sigma_y^2 Toeplitz(rho_y))
///   NonGaussian: e_x = sigma_x t_3,                     e_y = sigma_y (chi2_1 - 1)
struct DgpSpec {
  DgpKind kind = DgpKind::Simple;
  int T = 200;
  int p = 10;
  int q = 3;
  int k = 2;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double rho_x = 0.5;
  double rho_y = 0.5;
  double factor_persistence = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DgpTruth {
  Matrix P;
  Matrix Q;
  Matrix F;
  Matrix Y_clean;  // F Q'
};

struct SimulatedData {
  Matrix raw_X;
  Matrix raw_Y;
  DgpTruth truth;
};

SimulatedData generate(const DgpSpec& spec, std::mt19937_64& rng);
/// Uses a generator seeded with spec.seed.
SimulatedData generate(const DgpSpec& spec);

/// Generator for replication `rep` of a run seeded with `seed`.
std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream = 0);

/// Sets round(rate * rows * cols) cells, chosen uniformly without replacement, to NaN.
Matrix mask_at_random(const Matrix& raw, double rate, std::mt19937_64& rng);

enum class SimMethod {
  Ptfa,           // static EM; zero-imputes masked cells
  PtfaInnerLoop,  // EM with the imputation step inside the loop
  Pls,
  Pca,
  Ppca,
};

std::string_view to_string(SimMethod method) noexcept;
SimMethod parse_sim_method(std::string_view name);

struct ReplicationOptions {
  int n_reps = 200;
  int jobs = 1;  // worker threads; 0 = hardware concurrency
  double tolerance = 1e-6;
  int max_iter = 1000;
  double missing_x = 0.0;
  double missing_y = 0.0;
};

/// r2(rep, method) holds the average R^2 across targets against the
/// standardized complete targets; NaN marks a failed fit.
struct ReplicationReport {
  DgpSpec spec;
  std::vector<SimMethod> methods;
  Matrix r2;
  std::vector<std::string> errors;  // one line per failed fit

  int n_reps() const { return static_cast<int>(r2.rows()); }
  int column(SimMethod method) const;
  /// Successful samples for `method`.
  std::vector<double> samples(SimMethod method) const;
  double median(SimMethod method) const;
  int n_failed(SimMethod method) const;
  /// r2(a) - r2(b) per replication where both succeeded.
  std::vector<double> paired_difference(SimMethod a, SimMethod b) const;
  /// Fraction of paired replications with r2(a) >= r2(b).
  double win_fraction(SimMethod a, SimMethod b) const;
};

/// Standardized panel (masked cells zero-filled) for replication `rep`, and
/// the complete targets on the same scale.
struct ReplicationData {
  DataPanel panel;
  Matrix Y_true;
  DgpTruth truth;
};

ReplicationData replication_data(const DgpSpec& spec, std::uint64_t rep, const ReplicationOptions& options);

/// Average R^2 of one method's in-sample fitted targets against Y_true; throws on fit failure.
double method_r2(SimMethod method, const ReplicationData& data, int k, const ReplicationOptions& options,
                 std::uint64_t init_seed);

ReplicationReport run_replications(const DgpSpec& spec, const std::vector<SimMethod>& methods,
                                   const ReplicationOptions& options);

struct GridCell {
  double x = 0.0;
  double y = 0.0;
  ReplicationReport report;
};

struct GridReport {
  std::string grid;  // "noise" or "missing"
  std::vector<GridCell> cells;
};

/// Cells (sigma_x, sigma_y) over the Cartesian product of the two grids.
GridReport noise_grid(const DgpSpec& base, const std::vector<double>& sigma_x, const std::vector<double>& sigma_y,
                      const std::vector<SimMethod>& methods, const ReplicationOptions& options);

/// Cells (missing_x, missing_y); rates must lie in [0, 0.9].
GridReport missing_grid(const DgpSpec& base, const std::vector<double>& rate_x, const std::vector<double>& rate_y,
                        const std::vector<SimMethod>& methods, const ReplicationOptions& options);

double median(std::vector<double> values);

/// One row per replication and method: grid,x,y,rep,method,r2
void write_replications_csv(std::ostream& out, const GridReport& report);
/// One row per cell and method: grid,x,y,method,median_r2,n,n_failed
void write_summary_csv(std::ostream& out, const GridReport& report);

}  // namespace ptfa
