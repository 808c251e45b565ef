#include "ptfa/simulation.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

#include "ptfa/baselines.hpp"
#include "ptfa/em_missing.hpp"
#include "ptfa/em_static.hpp"

namespace ptfa {

std::string_view to_string(DgpKind kind) noexcept {
  switch (kind) {
    case DgpKind::Simple: return "simple";
    case DgpKind::System: return "system";
    case DgpKind::NonGaussian: return "nongaussian";
  }
  return "unknown";
}

DgpKind parse_dgp_kind(std::string_view name) {
  if (name == "simple") return DgpKind::Simple;
  if (name == "system") return DgpKind::System;
  if (name == "nongaussian") return DgpKind::NonGaussian;
  throw Error(ErrorCode::InvalidArgument, "unknown DGP '" + std::string(name) + "'");
}

std::string_view to_string(SimMethod method) noexcept {
  switch (method) {
    case SimMethod::Ptfa: return "ptfa";
    case SimMethod::PtfaInnerLoop: return "ptfa-missing";
    case SimMethod::Pls: return "pls";
    case SimMethod::Pca: return "pca";
    case SimMethod::Ppca: return "ppca";
  }
  return "unknown";
}

SimMethod parse_sim_method(std::string_view name) {
  for (SimMethod m : {SimMethod::Ptfa, SimMethod::PtfaInnerLoop, SimMethod::Pls, SimMethod::Pca, SimMethod::Ppca}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

void DgpSpec::validate() const {
  if (T < 2 || p < 1 || q < 1 || k < 1) throw Error(ErrorCode::InvalidArgument, "DGP needs T >= 2 and p, q, k >= 1");
  if (!(sigma_x >= 0.0) || !(sigma_y >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise scales must be >= 0");
  if (!(std::abs(rho_x) <= 1.0) || !(std::abs(rho_y) <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "Toeplitz parameters must lie in [-1, 1]");
  }
  if (!(std::abs(factor_persistence) < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "factor persistence must lie in (-1, 1)");
  }
}

namespace {

Matrix draw(int rows, int cols, auto& dist, std::mt19937_64& rng) {
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out(i, j) = dist(rng);
  }
  return out;
}

/// Symmetric square root of sigma^2 * Toeplitz(rho); valid for |rho| = 1 too.
Matrix toeplitz_root(int n, double rho, double sigma) {
  Matrix C(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) C(i, j) = std::pow(rho, std::abs(i - j));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(C);
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return sigma * eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix noise_block(const DgpSpec& spec, int cols, double sigma, double rho, bool is_target, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (spec.kind) {
    case DgpKind::Simple:
      return sigma * draw(spec.T, cols, normal, rng);
    case DgpKind::System:
      return draw(spec.T, cols, normal, rng) * toeplitz_root(cols, rho, sigma);
    case DgpKind::NonGaussian:
      if (is_target) {
        std::chi_squared_distribution<double> chi2(1.0);
        return sigma * (draw(spec.T, cols, chi2, rng).array() - 1.0).matrix();
      } else {
        std::student_t_distribution<double> student(3.0);
        return sigma * draw(spec.T, cols, student, rng);
      }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown DGP");
}

}  // namespace

SimulatedData generate(const DgpSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  SimulatedData out;
  out.truth.P = draw(spec.p, spec.k, uniform, rng);
  out.truth.Q = draw(spec.q, spec.k, uniform, rng);
  out.truth.F = draw(spec.T, spec.k, normal, rng);
  if (spec.factor_persistence != 0.0) {
    for (int t = 1; t < spec.T; ++t) out.truth.F.row(t) += spec.factor_persistence * out.truth.F.row(t - 1);
  }
  out.truth.Y_clean = out.truth.F * out.truth.Q.transpose();
  out.raw_X = out.truth.F * out.truth.P.transpose() + noise_block(spec, spec.p, spec.sigma_x, spec.rho_x, false, rng);
  out.raw_Y = out.truth.Y_clean + noise_block(spec, spec.q, spec.sigma_y, spec.rho_y, true, rng);
  return out;
}

SimulatedData generate(const DgpSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  return generate(spec, rng);
}

std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

Matrix mask_at_random(const Matrix& raw, double rate, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw Error(ErrorCode::InvalidArgument, "missing rate must lie in [0, 1]");
  const Eigen::Index n = raw.size();
  const auto n_missing = static_cast<Eigen::Index>(std::llround(rate * static_cast<double>(n)));
  std::vector<Eigen::Index> cells(static_cast<size_t>(n));
  std::iota(cells.begin(), cells.end(), Eigen::Index{0});
  // Partial Fisher-Yates: the first n_missing cells become a uniform sample.
  for (Eigen::Index i = 0; i < n_missing; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(cells[static_cast<size_t>(i)], cells[static_cast<size_t>(pick(rng))]);
  }
  Matrix out = raw;
  for (Eigen::Index i = 0; i < n_missing; ++i) out.data()[cells[static_cast<size_t>(i)]] = std::numeric_limits<double>::quiet_NaN();
  return out;
}

ReplicationData replication_data(const DgpSpec& spec, std::uint64_t rep, const ReplicationOptions& options) {
  std::mt19937_64 rng = replication_rng(spec.seed, rep);
  SimulatedData sim = generate(spec, rng);
  Matrix X = sim.raw_X;
  Matrix Y = sim.raw_Y;
  if (options.missing_x > 0.0 || options.missing_y > 0.0) {
    std::mt19937_64 mask_rng = replication_rng(spec.seed, rep, 1);
    X = mask_at_random(X, options.missing_x, mask_rng);
    Y = mask_at_random(Y, options.missing_y, mask_rng);
  }
  ReplicationData out;
  out.panel = standardize(X, Y, MissingPolicy::ZeroImpute);
  out.Y_true = out.panel.scaler.scale_y(sim.raw_Y);
  out.truth = std::move(sim.truth);
  return out;
}

double method_r2(SimMethod method, const ReplicationData& data, int k, const ReplicationOptions& options,
                 std::uint64_t init_seed) {
  const DataPanel& panel = data.panel;
  Matrix fitted;
  EmConfig config;
  config.k = k;
  config.tolerance = options.tolerance;
  config.max_iter = options.max_iter;
  config.seed = init_seed;
  config.compute_foc = false;
  switch (method) {
    case SimMethod::Ptfa: {
      const FitResult r = fit(DataPanel::from_standardized(panel.X, panel.Y), config);
      fitted = fitted_targets(r.params, r.posterior);
      break;
    }
    case SimMethod::PtfaInnerLoop: {
      const MissingFitResult r = fit_missing(panel, config);
      fitted = fitted_targets(r.fit.params, r.fit.posterior);
      break;
    }
    case SimMethod::Pls: fitted = fit_nipals_pls(panel.X, panel.Y, k).fitted; break;
    case SimMethod::Pca: fitted = fit_pca_regression(panel.X, panel.Y, k).fitted; break;
    case SimMethod::Ppca: fitted = fit_ppca_regression(panel.X, panel.Y, k).fitted; break;
  }
  return r_squared(data.Y_true, fitted).average;
}

int ReplicationReport::column(SimMethod method) const {
  const auto it = std::find(methods.begin(), methods.end(), method);
  if (it == methods.end()) throw Error(ErrorCode::InvalidArgument, "method not in report");
  return static_cast<int>(it - methods.begin());
}

std::vector<double> ReplicationReport::samples(SimMethod method) const {
  const int c = column(method);
  std::vector<double> out;
  for (Eigen::Index r = 0; r < r2.rows(); ++r) {
    if (!std::isnan(r2(r, c))) out.push_back(r2(r, c));
  }
  return out;
}

double ReplicationReport::median(SimMethod method) const { return ptfa::median(samples(method)); }

int ReplicationReport::n_failed(SimMethod method) const {
  return static_cast<int>(r2.col(column(method)).array().isNaN().count());
}

std::vector<double> ReplicationReport::paired_difference(SimMethod a, SimMethod b) const {
  const int ca = column(a);
  const int cb = column(b);
  std::vector<double> out;
  for (Eigen::Index r = 0; r < r2.rows(); ++r) {
    if (!std::isnan(r2(r, ca)) && !std::isnan(r2(r, cb))) out.push_back(r2(r, ca) - r2(r, cb));
  }
  return out;
}

double ReplicationReport::win_fraction(SimMethod a, SimMethod b) const {
  const std::vector<double> d = paired_difference(a, b);
  if (d.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto wins = std::count_if(d.begin(), d.end(), [](double v) { return v >= 0.0; });
  return static_cast<double>(wins) / static_cast<double>(d.size());
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
  return 0.5 * (lower + upper);
}

ReplicationReport run_replications(const DgpSpec& spec, const std::vector<SimMethod>& methods,
                                   const ReplicationOptions& options) {
  spec.validate();
  if (options.n_reps < 1) throw Error(ErrorCode::InvalidArgument, "n_reps must be at least 1");
  if (methods.empty()) throw Error(ErrorCode::InvalidArgument, "at least one method is required");
  const int n_methods = static_cast<int>(methods.size());
  ReplicationReport report;
  report.spec = spec;
  report.methods = methods;
  report.r2 = Matrix::Constant(options.n_reps, n_methods, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::vector<std::string>> errors(static_cast<size_t>(options.n_reps));

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int rep = next++; rep < options.n_reps; rep = next++) {
      std::vector<std::string>& errs = errors[static_cast<size_t>(rep)];
      ReplicationData data;
      try {
        data = replication_data(spec, static_cast<std::uint64_t>(rep), options);
      } catch (const Error& e) {
        errs.push_back("rep " + std::to_string(rep) + ": data: " + e.what());
        continue;
      }
      const std::uint64_t init_seed = replication_rng(spec.seed, static_cast<std::uint64_t>(rep), 2)();
      for (int m = 0; m < n_methods; ++m) {
        try {
          report.r2(rep, m) = method_r2(methods[static_cast<size_t>(m)], data, spec.k, options, init_seed);
        } catch (const Error& e) {
          errs.push_back("rep " + std::to_string(rep) + ": " + std::string(to_string(methods[static_cast<size_t>(m)])) +
                         ": " + e.what());
        }
      }
    }
  };
  int jobs = options.jobs > 0 ? options.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min(jobs, options.n_reps);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (auto& errs : errors) {
    for (auto& e : errs) report.errors.push_back(std::move(e));
  }
  return report;
}

GridReport noise_grid(const DgpSpec& base, const std::vector<double>& sigma_x, const std::vector<double>& sigma_y,
                      const std::vector<SimMethod>& methods, const ReplicationOptions& options) {
  GridReport out;
  out.grid = "noise";
  for (double sx : sigma_x) {
    for (double sy : sigma_y) {
      if (!(sx > 0.0) || !(sy > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid noise levels must be positive");
      DgpSpec spec = base;
      spec.sigma_x = sx;
      spec.sigma_y = sy;
      out.cells.push_back({sx, sy, run_replications(spec, methods, options)});
    }
  }
  return out;
}

GridReport missing_grid(const DgpSpec& base, const std::vector<double>& rate_x, const std::vector<double>& rate_y,
                        const std::vector<SimMethod>& methods, const ReplicationOptions& options) {
  GridReport out;
  out.grid = "missing";
  for (double rx : rate_x) {
    for (double ry : rate_y) {
      if (!(rx >= 0.0 && rx <= 0.9) || !(ry >= 0.0 && ry <= 0.9)) {
        throw Error(ErrorCode::InvalidArgument, "missing rates must lie in [0, 0.9]");
      }
      ReplicationOptions cell = options;
      cell.missing_x = rx;
      cell.missing_y = ry;
      out.cells.push_back({rx, ry, run_replications(base, methods, cell)});
    }
  }
  return out;
}

namespace {

void write_number(std::ostream& out, double v) {
  if (std::isnan(v)) {
    out << "NA";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

void write_replications_csv(std::ostream& out, const GridReport& report) {
  out << "grid,x,y,rep,method,r2\n";
  for (const GridCell& cell : report.cells) {
    const ReplicationReport& r = cell.report;
    for (int rep = 0; rep < r.n_reps(); ++rep) {
      for (size_t m = 0; m < r.methods.size(); ++m) {
        out << report.grid << ',';
        write_number(out, cell.x);
        out << ',';
        write_number(out, cell.y);
        out << ',' << rep << ',' << to_string(r.methods[m]) << ',';
        write_number(out, r.r2(rep, static_cast<Eigen::Index>(m)));
        out << '\n';
      }
    }
  }
}

void write_summary_csv(std::ostream& out, const GridReport& report) {
  out << "grid,x,y,method,median_r2,n,n_failed\n";
  for (const GridCell& cell : report.cells) {
    const ReplicationReport& r = cell.report;
    for (SimMethod m : r.methods) {
      out << report.grid << ',';
      write_number(out, cell.x);
      out << ',';
      write_number(out, cell.y);
      out << ',' << to_string(m) << ',';
      write_number(out, r.median(m));
      out << ',' << r.n_reps() << ',' << r.n_failed(m) << '\n';
    }
  }
}

}  // namespace ptfa
