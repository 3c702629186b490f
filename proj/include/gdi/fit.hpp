#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "gdi/model.hpp"

namespace gdi {

struct Coefficient {
  std::string name;
  /// NaN when the column was dropped for rank deficiency.
  double value = 0.0;
};

struct FitResult {
  std::vector<Coefficient> coefficients;
  double rss = 0.0;
  std::size_t n = 0;
  /// Number of estimated coefficients (columns kept after rank checks).
  std::size_t p = 0;
  double sigma2_mle = 0.0;
  /// +infinity when `perfect_fit` is set.
  double loglik = 0.0;
  double theta_used = 1.0;
  bool theta_was_estimated = false;
  bool perfect_fit = false;
  std::vector<std::string> dropped;

  double coefficient(std::string_view name) const;
};

/// Least squares on an already expanded matrix. Rank-deficient columns are
/// dropped (the later of any collinear set) and listed in `dropped`.
FitResult ols(const ModelMatrix& matrix, std::span<const double> response);

namespace detail {

struct LeastSquares {
  Eigen::VectorXd coefficients;  // NaN for dropped columns
  std::vector<bool> kept;
  std::size_t rank = 0;
  double rss = 0.0;
};

/// Householder QR least squares with deterministic trailing-column dropping.
LeastSquares solve_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// True when rss is negligible relative to the total sum of squares `tss`.
bool is_perfect_fit(double rss, double tss);

/// Gaussian log-likelihood at the ML variance rss / n; +inf for a perfect fit.
double gaussian_loglik(double rss, std::size_t n, bool perfect);

}  // namespace detail

/// Number of parameters: p + 1 for σ² + 1 when θ was estimated.
std::size_t parameter_count(const FitResult& fit);

/// Both throw PerfectFit when rss is zero.
double aic(const FitResult& fit);
double bic(const FitResult& fit);

struct FTestResult {
  double f = 0.0;
  std::size_t df1 = 0;
  std::size_t df2 = 0;
  double p_value = 1.0;
};

/// Extra-sum-of-squares F test of `reduced` inside `full`.
FTestResult f_test(const FitResult& reduced, const FitResult& full);

nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const FTestResult& test);

/// JSON cannot hold infinities; they are written as the strings "inf"/"-inf".
nlohmann::json json_number(double value);

}  // namespace gdi
