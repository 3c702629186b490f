#include "gdi/profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "gdi/distributions.hpp"
#include "gdi/error.hpp"

namespace gdi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// rss / TSS below which the golden-section result is polished further.
constexpr double kNearPerfectRatio = 1e-8;

}  // namespace

ProfileProblem::ProfileProblem(const Design& design, std::span<const double> response, InteractionSpec spec)
    : spec_(std::move(spec)), species_(design.species_count()), n_(response.size()) {
  const auto rows = design.rows();
  if (rows.size() != response.size())
    throw Error(ErrorCode::DimensionMismatch, "design has " + std::to_string(rows.size()) + " rows, response has " +
                                                  std::to_string(response.size()) + " values");
  for (std::size_t r = 0; r < response.size(); ++r)
    if (!std::isfinite(response[r]))
      throw Error(ErrorCode::InvalidArgument, "response row " + std::to_string(r + 1) + " is not finite");

  // Pool identical rows.
  std::map<std::pair<std::vector<double>, Structures>, std::size_t> index;
  std::vector<std::size_t> group_of(rows.size());
  std::vector<std::size_t> first_row;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto [it, inserted] =
        index.emplace(std::make_pair(rows[r].proportions(), rows[r].structures()), first_row.size());
    if (inserted) first_row.push_back(r);
    group_of[r] = it->second;
  }
  const std::size_t groups = first_row.size();
  std::vector<double> count(groups, 0.0);
  std::vector<double> mean(groups, 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    count[group_of[r]] += 1.0;
    mean[group_of[r]] += response[r];
  }
  for (std::size_t g = 0; g < groups; ++g) mean[g] /= count[g];
  pure_error_ = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double d = response[r] - mean[group_of[r]];
    pure_error_ += d * d;
  }
  double grand = 0.0;
  for (double y : response) grand += y;
  grand /= static_cast<double>(n_);
  tss_ = 0.0;
  for (double y : response) tss_ += (y - grand) * (y - grand);
  if (tss_ == 0.0)
    for (double y : response) tss_ += y * y;

  const auto gi = static_cast<Eigen::Index>(groups);
  sqrt_weight_.resize(gi);
  weighted_mean_.resize(gi);
  for (std::size_t g = 0; g < groups; ++g) {
    sqrt_weight_(static_cast<Eigen::Index>(g)) = std::sqrt(count[g]);
    weighted_mean_(static_cast<Eigen::Index>(g)) = std::sqrt(count[g]) * mean[g];
  }

  // Fixed block.
  if (spec_.family == Family::Null) {
    fixed_names_ = {"intercept"};
    fixed_ = sqrt_weight_;
  } else if (spec_.family == Family::CommunityFactor) {
    std::map<CommunityKey, std::size_t> levels;
    std::vector<std::size_t> level_of(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto [it, inserted] = levels.emplace(community_key(rows[r]), levels.size());
      level_of[r] = it->second;
    }
    fixed_ = Eigen::MatrixXd::Zero(gi, static_cast<Eigen::Index>(levels.size()));
    for (std::size_t k = 0; k < levels.size(); ++k) fixed_names_.push_back("community_" + std::to_string(k + 1));
    for (std::size_t g = 0; g < groups; ++g)
      fixed_(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(level_of[first_row[g]])) =
          sqrt_weight_(static_cast<Eigen::Index>(g));
  } else {
    fixed_.resize(gi, static_cast<Eigen::Index>(species_));
    for (std::size_t i = 0; i < species_; ++i) fixed_names_.push_back("beta_" + std::to_string(i + 1));
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t i = 0; i < species_; ++i)
        fixed_(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(i)) =
            sqrt_weight_(static_cast<Eigen::Index>(g)) * rows[first_row[g]].proportions()[i];
  }

  const auto structures = structure_columns(design);
  structure_names_ = structures.names;
  structures_.resize(gi, structures.values.cols());
  for (std::size_t g = 0; g < groups; ++g)
    structures_.row(static_cast<Eigen::Index>(g)) =
        sqrt_weight_(static_cast<Eigen::Index>(g)) * structures.values.row(static_cast<Eigen::Index>(first_row[g]));

  if (has_theta(spec_.family)) {
    layout_.emplace(species_, spec_);
    pairs_.resize(groups);
    for (std::size_t g = 0; g < groups; ++g) {
      const auto& p = rows[first_row[g]].proportions();
      for (std::size_t i = 0; i < species_; ++i)
        for (std::size_t j = i + 1; j < species_; ++j)
          if (p[i] > 0.0 && p[j] > 0.0) pairs_[g].push_back(Pair{i, j, std::log(p[i] * p[j])});
    }
  }
}

Eigen::MatrixXd ProfileProblem::build(double theta) const {
  const Eigen::Index groups = fixed_.rows();
  const Eigen::Index p0 = fixed_.cols();
  const Eigen::Index q = layout_ ? static_cast<Eigen::Index>(layout_->column_count()) : 0;
  const Eigen::Index ps = structures_.cols();
  Eigen::MatrixXd x(groups, p0 + q + ps);
  x.leftCols(p0) = fixed_;
  if (q > 0) {
    check_theta(theta);
    const double factor =
        (spec_.reparameterized && species_ >= 2) ? scaling_factor(static_cast<int>(species_), theta) : 1.0;
    auto block = x.middleCols(p0, q);
    block.setZero();
    for (Eigen::Index g = 0; g < groups; ++g) {
      const double w = sqrt_weight_(g) * factor;
      for (const Pair& pair : pairs_[static_cast<std::size_t>(g)]) {
        const double term = w * std::exp(theta * pair.log_product);
        for (std::size_t c : layout_->targets(pair.i, pair.j)) block(g, static_cast<Eigen::Index>(c)) += term;
      }
    }
  }
  x.rightCols(ps) = structures_;
  return x;
}

double ProfileProblem::rss(double theta) const {
  const auto ls = detail::solve_least_squares(build(theta), weighted_mean_);
  return ls.rss + pure_error_;
}

double ProfileProblem::loglik(double theta) const {
  const double r = rss(theta);
  return detail::gaussian_loglik(r, n_, detail::is_perfect_fit(r, tss_));
}

FitResult ProfileProblem::fit(double theta, bool theta_estimated) const {
  const Eigen::MatrixXd x = build(theta);
  if (static_cast<std::size_t>(x.cols()) > n_)
    throw Error(ErrorCode::DimensionMismatch, "more columns (" + std::to_string(x.cols()) + ") than observations (" +
                                                  std::to_string(n_) + ")");
  const auto ls = detail::solve_least_squares(x, weighted_mean_);
  std::vector<std::string> names = fixed_names_;
  if (layout_) names.insert(names.end(), layout_->names().begin(), layout_->names().end());
  names.insert(names.end(), structure_names_.begin(), structure_names_.end());

  FitResult fit;
  fit.n = n_;
  fit.p = ls.rank;
  fit.rss = ls.rss + pure_error_;
  fit.theta_used = has_theta(spec_.family) ? theta : 1.0;
  fit.theta_was_estimated = theta_estimated && has_theta(spec_.family);
  for (std::size_t j = 0; j < names.size(); ++j) {
    fit.coefficients.push_back(Coefficient{names[j], ls.coefficients(static_cast<Eigen::Index>(j))});
    if (!ls.kept[j]) fit.dropped.push_back(names[j]);
  }
  fit.perfect_fit = detail::is_perfect_fit(fit.rss, tss_);
  fit.sigma2_mle = fit.rss / static_cast<double>(n_);
  fit.loglik = detail::gaussian_loglik(fit.rss, n_, fit.perfect_fit);
  return fit;
}

double profile_loglik(const Design& design, std::span<const double> response, const InteractionSpec& spec,
                      double theta) {
  return ols(design_matrix(design, spec, theta), response).loglik;
}

namespace {

struct Extremum {
  double x;
  double f;
};

// Golden-section maximization on [a, b]; ties move toward the smaller θ.
// Returns early on +inf.
Extremum golden_maximize(const std::function<double(double)>& f, double a, double b, double tol, int& evaluations) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  evaluations += 2;
  Extremum best = fc >= fd ? Extremum{c, fc} : Extremum{d, fd};
  if (std::isinf(best.f) && best.f > 0) return best;
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
      ++evaluations;
      if (fc > best.f || (fc == best.f && c < best.x)) best = {c, fc};
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
      ++evaluations;
      if (fd > best.f) best = {d, fd};
    }
    if (std::isinf(best.f) && best.f > 0) return best;
  }
  const double mid = 0.5 * (a + b);
  const double fm = f(mid);
  ++evaluations;
  if (fm > best.f) best = {mid, fm};
  return best;
}

}  // namespace

LrTest lr_test_from_logliks(double loglik_hat, double loglik_one, double alpha) {
  LrTest t;
  if (std::isinf(loglik_hat) && std::isinf(loglik_one)) {
    t.statistic = 0.0;
  } else {
    t.statistic = std::max(0.0, 2.0 * (loglik_hat - loglik_one));
  }
  t.p_value = std::isinf(t.statistic) ? 0.0 : chi_squared_sf(t.statistic, 1.0);
  t.significant = t.p_value < alpha;
  return t;
}

LrTest lr_test_theta(const ProfileProblem& problem, double theta_hat, double alpha) {
  if (theta_hat == 1.0) return LrTest{0.0, 1.0, false};
  return lr_test_from_logliks(problem.loglik(theta_hat), problem.loglik(1.0), alpha);
}

ConfidenceInterval profile_interval(const std::function<double(double)>& loglik, double theta_hat,
                                    double loglik_max, const ProfileOptions& options) {
  const double q = chi_squared_quantile(1.0 - options.alpha, 1.0);
  const double target = loglik_max - 0.5 * q;
  auto g = [&](double t) { return loglik(t) - target; };

  auto side = [&](double direction) -> CiBound {
    const double bound = direction < 0 ? options.lower : options.upper;
    double inner = theta_hat;
    double step = std::max(0.01 * std::abs(theta_hat), 1e-4);
    double outer = theta_hat;
    while (true) {
      outer = theta_hat + direction * step;
      const bool clamped = direction < 0 ? outer <= bound : outer >= bound;
      if (clamped) outer = bound;
      if (g(outer) <= 0.0) break;
      if (clamped) return std::nullopt;
      inner = outer;
      step *= 2.0;
    }
    while (std::abs(outer - inner) > options.ci_tol) {
      const double mid = 0.5 * (inner + outer);
      if (g(mid) > 0.0) {
        inner = mid;
      } else {
        outer = mid;
      }
    }
    return 0.5 * (inner + outer);
  };

  ConfidenceInterval ci;
  ci.lower = side(-1.0);
  ci.upper = side(+1.0);
  return ci;
}

ConfidenceInterval theta_ci(const ProfileProblem& problem, double theta_hat, const ProfileOptions& options) {
  const double lmax = problem.loglik(theta_hat);
  if (std::isinf(lmax) && lmax > 0) return ConfidenceInterval{theta_hat, theta_hat};
  return profile_interval([&](double t) { return problem.loglik(t); }, theta_hat, lmax, options);
}

ThetaEstimate estimate_theta(const ProfileProblem& problem, const ProfileOptions& options) {
  if (!has_theta(problem.spec().family))
    throw Error(ErrorCode::NoInteractionTerms,
                std::string(family_name(problem.spec().family)) + " has no θ-dependent interaction terms");
  if (!(options.lower >= kMinTheta) || !(options.upper > options.lower))
    throw Error(ErrorCode::InvalidArgument, "θ search bounds must satisfy " + format_double(kMinTheta) +
                                                " <= lower < upper");
  if (options.grid_points < 3) throw Error(ErrorCode::InvalidArgument, "grid needs at least 3 points");

  ThetaEstimate est;
  est.alpha = options.alpha;
  const int points = options.grid_points;
  const double span = options.upper - options.lower;
  std::vector<double> grid(static_cast<std::size_t>(points));
  std::vector<double> values(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k)
    grid[static_cast<std::size_t>(k)] = k == points - 1 ? options.upper : options.lower + span * k / (points - 1);

#pragma omp parallel for schedule(static) num_threads(std::max(1, options.threads)) if (options.threads > 1)
  for (int k = 0; k < points; ++k) values[static_cast<std::size_t>(k)] = problem.loglik(grid[static_cast<std::size_t>(k)]);
  est.evaluations = points;

  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > values[best]) best = k;

  auto f = [&](double t) { return problem.loglik(t); };
  Extremum result{grid[best], values[best]};
  if (!(std::isinf(result.f) && result.f > 0)) {
    const double a = grid[best == 0 ? 0 : best - 1];
    const double b = grid[std::min(best + 1, values.size() - 1)];
    const Extremum refined = golden_maximize(f, a, b, options.tol, est.evaluations);
    if (refined.f > result.f) result = refined;

    // Noiseless data: keep shrinking toward the zero-residual point.
    if (!(std::isinf(result.f)) && problem.rss(result.x) <= kNearPerfectRatio * problem.total_sum_of_squares()) {
      const double width = std::max(options.tol, 1e-9);
      const double lo = std::max(options.lower, result.x - width);
      const double hi = std::min(options.upper, result.x + width);
      const Extremum polished =
          golden_maximize(f, lo, hi, 1e-13 * std::max(1.0, result.x), est.evaluations);
      if (polished.f >= result.f) result = polished;
    }
  }

  est.theta_hat = result.x;
  est.loglik_max = result.f;
  est.boundary_maximum =
      result.x - options.lower < options.tol || options.upper - result.x < options.tol;
  est.degenerate = std::isinf(result.f) && result.f > 0;

  if (est.degenerate) {
    est.ci = ConfidenceInterval{est.theta_hat, est.theta_hat};
  } else {
    int ci_evals = 0;
    auto counted = [&](double t) {
      ++ci_evals;
      return problem.loglik(t);
    };
    est.ci = profile_interval(counted, est.theta_hat, est.loglik_max, options);
    est.evaluations += ci_evals;
  }
  if (est.theta_hat == 1.0) {
    est.lr_vs_one = LrTest{0.0, 1.0, false};
  } else {
    est.lr_vs_one = lr_test_from_logliks(est.loglik_max, problem.loglik(1.0), options.alpha);
    ++est.evaluations;
  }
  return est;
}

ThetaEstimate estimate_theta(const Design& design, std::span<const double> response, const InteractionSpec& spec,
                             const ProfileOptions& options) {
  return estimate_theta(ProfileProblem(design, response, spec), options);
}

nlohmann::json to_json(const ThetaEstimate& e) {
  auto bound = [](const CiBound& b) -> nlohmann::json {
    if (!b) return "non_convergent";
    return *b;
  };
  return {
      {"theta_hat", e.theta_hat},
      {"loglik_max", json_number(e.loglik_max)},
      {"alpha", e.alpha},
      {"ci", {{"lower", bound(e.ci.lower)}, {"upper", bound(e.ci.upper)}}},
      {"lr_vs_one",
       {{"statistic", json_number(e.lr_vs_one.statistic)},
        {"p_value", e.lr_vs_one.p_value},
        {"significant", e.lr_vs_one.significant}}},
      {"boundary_maximum", e.boundary_maximum},
      {"degenerate", e.degenerate},
  };
}

}  // namespace gdi
