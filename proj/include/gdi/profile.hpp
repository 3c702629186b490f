#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gdi/fit.hpp"
#include "gdi/model.hpp"

namespace gdi {

struct ProfileOptions {
  double lower = 0.01;
  double upper = 2.5;
  /// Golden-section tolerance on θ.
  double tol = 1e-5;
  int grid_points = 101;
  double alpha = 0.05;
  /// Bisection tolerance for CI bounds.
  double ci_tol = 1e-6;
  /// Threads for the grid pre-scan; 1 keeps it serial.
  int threads = 1;
};

/// A CI side: a bound, or empty when no crossing exists inside the search interval.
using CiBound = std::optional<double>;

struct ConfidenceInterval {
  CiBound lower;
  CiBound upper;
  bool converged() const noexcept { return lower.has_value() && upper.has_value(); }
  bool contains(double theta) const noexcept { return converged() && *lower <= theta && theta <= *upper; }
};

struct LrTest {
  double statistic = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

struct ThetaEstimate {
  double theta_hat = 1.0;
  double loglik_max = 0.0;
  ConfidenceInterval ci;
  double alpha = 0.05;
  LrTest lr_vs_one;
  /// θ̂ within tol of a search bound.
  bool boundary_maximum = false;
  /// Perfect fit reached: loglik is +inf and the CI collapses to θ̂.
  bool degenerate = false;
  int evaluations = 0;
};

/// Profile log-likelihood of one (design, response, spec) triple.
///
/// Rows with identical composition and structures are pooled into
/// sufficient statistics (count, mean, within-group sum of squares), so each
/// evaluation solves a weighted problem over distinct rows only. The result
/// equals plain OLS on the expanded matrix.
class ProfileProblem {
 public:
  ProfileProblem(const Design& design, std::span<const double> response, InteractionSpec spec);

  double loglik(double theta) const;
  double rss(double theta) const;
  /// Full fit at θ with coefficient names in design_matrix order.
  FitResult fit(double theta, bool theta_estimated = false) const;

  const InteractionSpec& spec() const noexcept { return spec_; }
  std::size_t observations() const noexcept { return n_; }
  double total_sum_of_squares() const noexcept { return tss_; }
  std::size_t group_count() const noexcept { return static_cast<std::size_t>(fixed_.rows()); }

 private:
  struct Pair {
    std::size_t i;
    std::size_t j;
    double log_product;
  };

  Eigen::MatrixXd build(double theta) const;

  InteractionSpec spec_;
  std::size_t species_ = 0;
  std::size_t n_ = 0;
  double tss_ = 0.0;
  double pure_error_ = 0.0;
  Eigen::VectorXd sqrt_weight_;
  Eigen::VectorXd weighted_mean_;
  Eigen::MatrixXd fixed_;  // weighted fixed columns (identities / intercept / indicators)
  Eigen::MatrixXd structures_;  // weighted structure columns
  std::vector<std::string> fixed_names_;
  std::vector<std::string> structure_names_;
  std::optional<PairLayout> layout_;
  std::vector<std::vector<Pair>> pairs_;  // per group, non-zero pairs only
};

/// Reference path: design_matrix + ols at one θ.
double profile_loglik(const Design& design, std::span<const double> response, const InteractionSpec& spec,
                      double theta);

/// Grid pre-scan, golden-section refinement, CI and LR test against θ = 1.
ThetaEstimate estimate_theta(const ProfileProblem& problem, const ProfileOptions& options = {});
ThetaEstimate estimate_theta(const Design& design, std::span<const double> response, const InteractionSpec& spec,
                             const ProfileOptions& options = {});

/// Profile-likelihood interval {θ : l(θ) > l_max - q/2}, q the chi-squared(1)
/// quantile at 1 - alpha. Each side is bracketed by geometric expansion from
/// θ̂ toward its bound, then bisected.
ConfidenceInterval profile_interval(const std::function<double(double)>& loglik, double theta_hat,
                                    double loglik_max, const ProfileOptions& options);
ConfidenceInterval theta_ci(const ProfileProblem& problem, double theta_hat, const ProfileOptions& options = {});

LrTest lr_test_theta(const ProfileProblem& problem, double theta_hat, double alpha = 0.05);
LrTest lr_test_from_logliks(double loglik_hat, double loglik_one, double alpha);

nlohmann::json to_json(const ThetaEstimate& estimate);

}  // namespace gdi
