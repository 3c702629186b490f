#pragma once

// Reference computations kept independent of the library's numerics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;  // row-major, rows of equal length

/// Least squares through the normal equations XᵀX b = Xᵀy, solved by Gaussian
/// elimination with partial pivoting in long double.
inline std::vector<double> normal_equations(const Matrix& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  const std::size_t p = x.front().size();
  std::vector<std::vector<long double>> a(p, std::vector<long double>(p + 1, 0.0L));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) a[i][j] += static_cast<long double>(x[r][i]) * x[r][j];
      a[i][p] += static_cast<long double>(x[r][i]) * y[r];
    }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[pivot][c])) pivot = r;
    if (a[pivot][c] == 0.0L) throw std::runtime_error("singular normal equations");
    std::swap(a[c], a[pivot]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const long double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> b(p);
  for (std::size_t i = 0; i < p; ++i) b[i] = static_cast<double>(a[i][p] / a[i][i]);
  return b;
}

inline double residual_ss(const Matrix& x, const std::vector<double>& y, const std::vector<double>& b) {
  long double rss = 0.0L;
  for (std::size_t r = 0; r < x.size(); ++r) {
    long double fit = 0.0L;
    for (std::size_t j = 0; j < b.size(); ++j) fit += static_cast<long double>(x[r][j]) * b[j];
    rss += (y[r] - fit) * (y[r] - fit);
  }
  return static_cast<double>(rss);
}

/// Composite Simpson rule with `intervals` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals = 20000) {
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int k = 1; k < intervals; ++k) s += f(a + k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Upper tail of chi-squared(df) by integrating the density on [0, x].
inline double chi_squared_sf(double x, double df) {
  const double k = df / 2.0;
  const double log_norm = -k * std::log(2.0) - std::lgamma(k);
  // Substitute t = u² to remove the t^(k-1) singularity at 0 when df = 1.
  auto integrand = [&](double u) {
    if (u == 0.0) return df == 1.0 ? 2.0 * std::exp(log_norm) : 0.0;
    const double t = u * u;
    return 2.0 * u * std::exp(log_norm + (k - 1.0) * std::log(t) - t / 2.0);
  };
  return 1.0 - simpson(integrand, 0.0, std::sqrt(x));
}

/// Upper tail of F(d1, d2) by integrating the density on [0, f] (d1 >= 2).
inline double f_sf(double f, double d1, double d2) {
  const double log_b = std::lgamma(d1 / 2) + std::lgamma(d2 / 2) - std::lgamma((d1 + d2) / 2);
  auto density = [&](double x) {
    if (x == 0.0) return d1 == 2.0 ? 1.0 : 0.0;
    return std::exp((d1 / 2) * std::log(d1 * x) + (d2 / 2) * std::log(d2) - ((d1 + d2) / 2) * std::log(d1 * x + d2) -
                    std::log(x) - log_b);
  };
  return 1.0 - simpson(density, 0.0, f);
}

/// Index of the largest value; first one on ties.
inline std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Sample Pearson correlation, two-pass.
inline double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
