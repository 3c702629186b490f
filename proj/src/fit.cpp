#include "gdi/fit.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "gdi/distributions.hpp"
#include "gdi/error.hpp"

namespace gdi {

namespace {

constexpr double kCollinearTolerance = 1e-9;
constexpr double kPerfectFitRatio = 1e-20;

double total_sum_of_squares(std::span<const double> y) {
  if (y.empty()) return 0.0;
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double tss = 0.0;
  for (double v : y) tss += (v - mean) * (v - mean);
  if (tss == 0.0)
    for (double v : y) tss += v * v;
  return tss;
}

}  // namespace

namespace detail {

LeastSquares solve_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  LeastSquares out;
  out.kept.assign(static_cast<std::size_t>(p), true);
  out.coefficients = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
  if (p == 0) {
    out.rss = y.squaredNorm();
    return out;
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::Index diag = std::min(n, p);
  bool deficient = false;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double norm = x.col(j).norm();
    if (j >= diag || norm == 0.0 || std::abs(qr.matrixQR()(j, j)) <= kCollinearTolerance * norm) {
      out.kept[static_cast<std::size_t>(j)] = false;
      deficient = true;
    }
  }

  Eigen::MatrixXd reduced;
  const Eigen::MatrixXd* active = &x;
  if (deficient) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < p; ++j)
      if (out.kept[static_cast<std::size_t>(j)]) keep.push_back(j);
    reduced.resize(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) reduced.col(static_cast<Eigen::Index>(k)) = x.col(keep[k]);
    active = &reduced;
    qr.compute(reduced);
  }
  const Eigen::Index r = active->cols();
  out.rank = static_cast<std::size_t>(r);
  if (r == 0) {
    out.rss = y.squaredNorm();
    return out;
  }

  // Qᵀy; the tail beyond the rank is the residual in the rotated basis.
  Eigen::VectorXd qty = y;
  qty.applyOnTheLeft(qr.householderQ().adjoint());
  const Eigen::VectorXd beta =
      qr.matrixQR().topLeftCorner(r, r).triangularView<Eigen::Upper>().solve(qty.head(r));
  out.rss = qty.tail(n - r).squaredNorm();

  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < p; ++j)
    if (out.kept[static_cast<std::size_t>(j)]) out.coefficients(j) = beta(k++);
  return out;
}

bool is_perfect_fit(double rss, double tss) {
  if (rss <= 0.0) return true;
  return rss <= kPerfectFitRatio * tss;
}

double gaussian_loglik(double rss, std::size_t n, bool perfect) {
  if (perfect) return std::numeric_limits<double>::infinity();
  const double nn = static_cast<double>(n);
  return -0.5 * nn * (std::log(2.0 * std::numbers::pi) + std::log(rss / nn) + 1.0);
}

}  // namespace detail

double FitResult::coefficient(std::string_view name) const {
  for (const auto& c : coefficients)
    if (c.name == name) return c.value;
  throw Error(ErrorCode::InvalidArgument, "no coefficient named '" + std::string(name) + "'");
}

FitResult ols(const ModelMatrix& matrix, std::span<const double> response) {
  const auto n = static_cast<std::size_t>(matrix.values.rows());
  if (n != response.size())
    throw Error(ErrorCode::DimensionMismatch, "matrix has " + std::to_string(n) + " rows, response has " +
                                                  std::to_string(response.size()) + " values");
  if (matrix.columns.size() != static_cast<std::size_t>(matrix.values.cols()))
    throw Error(ErrorCode::DimensionMismatch, "column names do not match matrix width");
  if (static_cast<std::size_t>(matrix.values.cols()) > n)
    throw Error(ErrorCode::DimensionMismatch, "more columns (" + std::to_string(matrix.values.cols()) +
                                                  ") than observations (" + std::to_string(n) + ")");

  const Eigen::Map<const Eigen::VectorXd> y(response.data(), static_cast<Eigen::Index>(n));
  const auto ls = detail::solve_least_squares(matrix.values, y);

  FitResult fit;
  fit.n = n;
  fit.p = ls.rank;
  fit.rss = ls.rss;
  fit.theta_used = matrix.theta_used;
  for (std::size_t j = 0; j < matrix.columns.size(); ++j) {
    fit.coefficients.push_back(Coefficient{matrix.columns[j], ls.coefficients(static_cast<Eigen::Index>(j))});
    if (!ls.kept[j]) fit.dropped.push_back(matrix.columns[j]);
  }
  fit.perfect_fit = detail::is_perfect_fit(ls.rss, total_sum_of_squares(response));
  if (fit.perfect_fit) fit.rss = std::max(fit.rss, 0.0);
  fit.sigma2_mle = fit.rss / static_cast<double>(n);
  fit.loglik = detail::gaussian_loglik(fit.rss, n, fit.perfect_fit);
  return fit;
}

std::size_t parameter_count(const FitResult& fit) { return fit.p + 1 + (fit.theta_was_estimated ? 1 : 0); }

double aic(const FitResult& fit) {
  if (fit.perfect_fit) throw Error(ErrorCode::PerfectFit, "AIC undefined for a zero-residual fit");
  return -2.0 * fit.loglik + 2.0 * static_cast<double>(parameter_count(fit));
}

double bic(const FitResult& fit) {
  if (fit.perfect_fit) throw Error(ErrorCode::PerfectFit, "BIC undefined for a zero-residual fit");
  return -2.0 * fit.loglik + static_cast<double>(parameter_count(fit)) * std::log(static_cast<double>(fit.n));
}

FTestResult f_test(const FitResult& reduced, const FitResult& full) {
  if (reduced.n != full.n) throw Error(ErrorCode::NotNested, "fits use different observation counts");
  if (full.p <= reduced.p)
    throw Error(ErrorCode::NotNested, "full model has " + std::to_string(full.p) + " coefficients, reduced has " +
                                          std::to_string(reduced.p));
  if (full.n <= full.p) throw Error(ErrorCode::ZeroResidualDf, "full model leaves no residual degrees of freedom");
  if (full.rss <= 0.0) throw Error(ErrorCode::PerfectFit, "full model has zero residual sum of squares");
  FTestResult t;
  t.df1 = full.p - reduced.p;
  t.df2 = full.n - full.p;
  const double numerator = std::max(reduced.rss - full.rss, 0.0) / static_cast<double>(t.df1);
  const double denominator = full.rss / static_cast<double>(t.df2);
  t.f = numerator / denominator;
  t.p_value = f_sf(t.f, static_cast<double>(t.df1), static_cast<double>(t.df2));
  return t;
}

nlohmann::json json_number(double value) {
  if (std::isnan(value)) return nullptr;
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return value;
}

nlohmann::json to_json(const FitResult& fit) {
  nlohmann::json coefficients = nlohmann::json::object();
  for (const auto& c : fit.coefficients) coefficients[c.name] = json_number(c.value);
  nlohmann::json j{
      {"coefficients", coefficients},
      {"rss", fit.rss},
      {"n", fit.n},
      {"p", fit.p},
      {"sigma2_mle", fit.sigma2_mle},
      {"loglik", json_number(fit.loglik)},
      {"theta_used", fit.theta_used},
      {"theta_was_estimated", fit.theta_was_estimated},
      {"perfect_fit", fit.perfect_fit},
      {"dropped", fit.dropped},
  };
  if (fit.perfect_fit) {
    j["aic"] = "-inf";
    j["bic"] = "-inf";
  } else {
    j["aic"] = aic(fit);
    j["bic"] = bic(fit);
  }
  return j;
}

nlohmann::json to_json(const FTestResult& test) {
  return {{"f", json_number(test.f)}, {"df1", test.df1}, {"df2", test.df2}, {"p_value", test.p_value}};
}

}  // namespace gdi
