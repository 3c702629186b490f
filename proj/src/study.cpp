#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "gdi/error.hpp"
#include "study_detail.hpp"

namespace gdi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return v.empty() ? kNaN : 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Linear interpolation between order statistics (type 7).
double quantile_of(std::vector<double> v, double q) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double correlation_of(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return kNaN;
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::string format_value(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

bool has_kind(const StudyConfig& c, StudyKind k) {
  return std::find(c.studies.begin(), c.studies.end(), k) != c.studies.end();
}

ProfileOptions serial_profile(const StudyConfig& c) {
  ProfileOptions o = c.selection.profile;
  o.threads = 1;
  return o;
}

template <class Record, class Work>
std::vector<Record> parallel_map(const std::vector<detail::Cell>& cells, int threads, Work work) {
  std::vector<std::vector<Record>> slots(cells.size());
  const auto count = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, threads))
  for (std::ptrdiff_t k = 0; k < count; ++k) slots[static_cast<std::size_t>(k)] = work(cells[static_cast<std::size_t>(k)]);
  std::vector<Record> out;
  for (auto& s : slots)
    for (auto& r : s) out.push_back(std::move(r));
  return out;
}

}  // namespace

namespace detail {

void validate_study(const StudyConfig& c) {
  std::vector<std::string> problems;
  if (c.replicates < 1) problems.push_back("replicates must be >= 1");
  if (c.thetas.empty()) problems.push_back("theta grid is empty");
  if (c.sigmas.empty()) problems.push_back("sigma grid is empty");
  for (double t : c.thetas)
    if (!(t >= kMinTheta) || !std::isfinite(t)) problems.push_back("theta " + format_value(t) + " is below 0.01");
  for (double s : c.sigmas)
    if (!(s >= 0.0) || !std::isfinite(s)) problems.push_back("sigma " + format_value(s) + " must be >= 0");
  if (c.studies.empty()) problems.push_back("no studies requested");
  if (c.candidates.empty()) problems.push_back("candidate list is empty");
  if (has_kind(c, StudyKind::Selection) && c.procedures.empty()) problems.push_back("no procedures requested");
  try {
    validate_truth(TruthModel{c.truth.identity_effects, c.truth.pairwise_effects, 1.0, 0.0, {}},
                   c.design.species_count());
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  for (const auto& spec : c.candidates) {
    if (has_kind(c, StudyKind::Robustness) && !has_theta(spec.family))
      problems.push_back("robustness candidate " + spec_label(spec) + " has no θ");
    if (spec.family == Family::FunctionalGroup) {
      if (!spec.grouping)
        problems.push_back("functional_group candidate needs a grouping");
      else if (spec.grouping->species_count() != c.design.species_count())
        problems.push_back("grouping covers " + std::to_string(spec.grouping->species_count()) +
                           " species, design has " + std::to_string(c.design.species_count()));
    }
  }
  if (has_kind(c, StudyKind::Reparam) && !has_theta(c.reparam_family))
    problems.push_back("reparam family has no θ");
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorCode::ConfigInvalid, msg);
  }
}

std::vector<Cell> dataset_cells(const StudyConfig& c) {
  std::vector<Cell> cells;
  for (std::size_t t = 0; t < c.thetas.size(); ++t)
    for (std::size_t s = 0; s < c.sigmas.size(); ++s)
      for (std::size_t r = 0; r < static_cast<std::size_t>(c.replicates); ++r) cells.push_back(Cell{t, s, r});
  return cells;
}

std::vector<double> dataset_response(const StudyConfig& c, const Cell& cell) {
  TruthModel truth = c.truth;
  truth.theta_true = c.thetas[cell.theta_index];
  truth.sigma = c.sigmas[cell.sigma_index];
  Rng rng = dataset_rng(c.master_seed, cell.theta_index, cell.sigma_index, cell.replicate);
  return simulate_response(c.design, truth, rng);
}

std::vector<RobustnessRecord> robustness_work(const StudyConfig& c, const Cell& cell) {
  const auto y = dataset_response(c, cell);
  const auto options = serial_profile(c);
  std::vector<RobustnessRecord> out;
  for (std::size_t k = 0; k < c.candidates.size(); ++k) {
    RobustnessRecord r;
    r.theta_index = cell.theta_index;
    r.sigma_index = cell.sigma_index;
    r.replicate = cell.replicate;
    r.spec_index = k;
    try {
      const auto est = estimate_theta(ProfileProblem(c.design, y, c.candidates[k]), options);
      r.ok = true;
      r.theta_hat = est.theta_hat;
      r.ci_lower = est.ci.lower;
      r.ci_upper = est.ci.upper;
      r.boundary = est.boundary_maximum;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SelectionRecord> selection_work(const StudyConfig& c, const Cell& cell) {
  const auto y = dataset_response(c, cell);
  SelectionOptions options = c.selection;
  options.profile.threads = 1;
  std::vector<SelectionRecord> out;
  for (Procedure p : c.procedures) {
    SelectionRecord r;
    r.theta_index = cell.theta_index;
    r.sigma_index = cell.sigma_index;
    r.replicate = cell.replicate;
    r.procedure = p;
    try {
      const auto result = run_procedure(p, c.design, y, c.candidates, options);
      r.ok = true;
      r.chosen = spec_label(result.chosen);
      r.theta_final = result.theta_final;
      r.fell_back = result.fell_back;
      r.seconds = result.elapsed_seconds;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

ReparamRecord reparam_work(const StudyConfig& c, const Cell& cell) {
  const auto y = dataset_response(c, cell);
  const auto options = serial_profile(c);
  ReparamRecord r;
  r.theta_index = cell.theta_index;
  r.sigma_index = cell.sigma_index;
  r.replicate = cell.replicate;
  try {
    InteractionSpec spec{c.reparam_family, std::nullopt, false};
    if (c.reparam_family == Family::FunctionalGroup)
      for (const auto& cand : c.candidates)
        if (cand.family == Family::FunctionalGroup) spec.grouping = cand.grouping;
    const std::size_t delta_index = c.design.species_count();
    const ProfileProblem old_problem(c.design, y, spec);
    const auto old_est = estimate_theta(old_problem, options);
    spec.reparameterized = true;
    const ProfileProblem new_problem(c.design, y, spec);
    const auto new_est = estimate_theta(new_problem, options);
    r.theta_old = old_est.theta_hat;
    r.theta_new = new_est.theta_hat;
    r.delta_old = old_problem.fit(old_est.theta_hat, true).coefficients.at(delta_index).value;
    r.delta_new = new_problem.fit(new_est.theta_hat, true).coefficients.at(delta_index).value;
    r.ok = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

void summarize_robustness(const StudyConfig& c, StudySummary& summary) {
  const std::size_t specs = c.candidates.size();
  const std::size_t reps = static_cast<std::size_t>(c.replicates);
  for (std::size_t t = 0; t < c.thetas.size(); ++t) {
    const double truth = c.thetas[t];
    for (std::size_t s = 0; s < c.sigmas.size(); ++s) {
      const double sigma = c.sigmas[s];
      auto emit = [&](const std::string& key, const std::string& metric, double value) {
        summary.metrics.push_back(MetricRow{truth, sigma, key, metric, value});
      };
      // records[(cell * specs) + spec]; cells are θ-major then σ then replicate.
      const std::size_t base = (t * c.sigmas.size() + s) * reps * specs;
      std::vector<std::vector<double>> per_rep(reps);
      for (std::size_t k = 0; k < specs; ++k) {
        std::vector<double> hats;
        std::size_t converged = 0, covered = 0, boundary = 0, failures = 0;
        for (std::size_t r = 0; r < reps; ++r) {
          const auto& rec = summary.robustness[base + r * specs + k];
          if (!rec.ok) {
            ++failures;
            continue;
          }
          hats.push_back(rec.theta_hat);
          per_rep[r].push_back(rec.theta_hat);
          if (rec.boundary) ++boundary;
          if (rec.ci_lower && rec.ci_upper) {
            ++converged;
            if (*rec.ci_lower <= truth && truth <= *rec.ci_upper) ++covered;
          }
        }
        const std::string key = spec_label(c.candidates[k]);
        const double sd = sd_of(hats);
        const double q25 = quantile_of(hats, 0.25);
        const double q75 = quantile_of(hats, 0.75);
        const auto ok = static_cast<double>(hats.size());
        emit(key, "n_ok", ok);
        emit(key, "failures", static_cast<double>(failures));
        emit(key, "mean", mean_of(hats));
        emit(key, "sd", sd);
        emit(key, "q25", q25);
        emit(key, "q75", q75);
        emit(key, "iqr", q75 - q25);
        emit(key, "scaled_sd", q75 > q25 ? sd / (q75 - q25) : kNaN);
        emit(key, "convergence_rate", ok > 0 ? static_cast<double>(converged) / ok : kNaN);
        emit(key, "coverage", converged > 0 ? static_cast<double>(covered) / static_cast<double>(converged) : kNaN);
        emit(key, "boundary_rate", ok > 0 ? static_cast<double>(boundary) / ok : kNaN);
      }
      if (specs >= 2) {
        std::vector<double> spread;
        for (const auto& v : per_rep)
          if (v.size() == specs) {
            const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
            spread.push_back(*hi - *lo);
          }
        emit("all_specs", "max_diff_median", quantile_of(spread, 0.5));
        emit("all_specs", "max_diff_p95", quantile_of(spread, 0.95));
      }
    }
  }
}

void summarize_selection(const StudyConfig& c, StudySummary& summary) {
  const std::size_t procs = c.procedures.size();
  const std::size_t reps = static_cast<std::size_t>(c.replicates);
  for (std::size_t t = 0; t < c.thetas.size(); ++t) {
    for (std::size_t s = 0; s < c.sigmas.size(); ++s) {
      auto emit = [&](const std::string& key, const std::string& metric, double value) {
        summary.metrics.push_back(MetricRow{c.thetas[t], c.sigmas[s], key, metric, value});
      };
      const std::size_t base = (t * c.sigmas.size() + s) * reps * procs;
      auto at = [&](std::size_t r, std::size_t p) -> const SelectionRecord& {
        return summary.selection[base + r * procs + p];
      };
      for (std::size_t p = 0; p < procs; ++p) {
        const std::string key = "procedure_" + std::string(procedure_name(c.procedures[p]));
        std::size_t ok = 0, fell_back = 0;
        std::vector<std::size_t> counts(c.candidates.size(), 0);
        for (std::size_t r = 0; r < reps; ++r) {
          const auto& rec = at(r, p);
          if (!rec.ok) continue;
          ++ok;
          if (rec.fell_back) ++fell_back;
          for (std::size_t k = 0; k < c.candidates.size(); ++k)
            if (spec_label(c.candidates[k]) == rec.chosen) {
              ++counts[k];
              break;
            }
        }
        emit(key, "n_ok", static_cast<double>(ok));
        for (std::size_t k = 0; k < c.candidates.size(); ++k)
          emit(key, "proportion_" + spec_label(c.candidates[k]),
               ok > 0 ? static_cast<double>(counts[k]) / static_cast<double>(ok) : kNaN);
        emit(key, "fallback_rate", ok > 0 ? static_cast<double>(fell_back) / static_cast<double>(ok) : kNaN);
      }
      for (std::size_t p = 0; p < procs; ++p)
        for (std::size_t q = p + 1; q < procs; ++q) {
          std::size_t both = 0, agree = 0;
          for (std::size_t r = 0; r < reps; ++r) {
            if (!at(r, p).ok || !at(r, q).ok) continue;
            ++both;
            if (at(r, p).chosen == at(r, q).chosen) ++agree;
          }
          emit("procedure_" + std::string(procedure_name(c.procedures[p])) + "_vs_" +
                   std::string(procedure_name(c.procedures[q])),
               "agreement", both > 0 ? static_cast<double>(agree) / static_cast<double>(both) : kNaN);
        }
    }
  }
}

void summarize_reparam(const StudyConfig& c, StudySummary& summary) {
  const std::size_t reps = static_cast<std::size_t>(c.replicates);
  const std::string key = std::string(family_name(c.reparam_family));
  for (std::size_t t = 0; t < c.thetas.size(); ++t) {
    std::vector<double> all_to, all_tn, all_do, all_dn;
    double all_diff = 0.0;
    for (std::size_t s = 0; s < c.sigmas.size(); ++s) {
      std::vector<double> to, tn, d_old, d_new;
      double diff = 0.0;
      const std::size_t base = (t * c.sigmas.size() + s) * reps;
      for (std::size_t r = 0; r < reps; ++r) {
        const auto& rec = summary.reparam[base + r];
        if (!rec.ok) continue;
        to.push_back(rec.theta_old);
        tn.push_back(rec.theta_new);
        d_old.push_back(rec.delta_old);
        d_new.push_back(rec.delta_new);
        diff = std::max(diff, std::abs(rec.theta_old - rec.theta_new));
      }
      summary.metrics.push_back({c.thetas[t], c.sigmas[s], key, "corr_old", correlation_of(to, d_old)});
      summary.metrics.push_back({c.thetas[t], c.sigmas[s], key, "corr_new", correlation_of(tn, d_new)});
      summary.metrics.push_back({c.thetas[t], c.sigmas[s], key, "max_abs_theta_diff", diff});
      all_to.insert(all_to.end(), to.begin(), to.end());
      all_tn.insert(all_tn.end(), tn.begin(), tn.end());
      all_do.insert(all_do.end(), d_old.begin(), d_old.end());
      all_dn.insert(all_dn.end(), d_new.begin(), d_new.end());
      all_diff = std::max(all_diff, diff);
    }
    summary.metrics.push_back({c.thetas[t], kNaN, key, "n_ok", static_cast<double>(all_to.size())});
    summary.metrics.push_back({c.thetas[t], kNaN, key, "corr_old", correlation_of(all_to, all_do)});
    summary.metrics.push_back({c.thetas[t], kNaN, key, "corr_new", correlation_of(all_tn, all_dn)});
    summary.metrics.push_back({c.thetas[t], kNaN, key, "max_abs_theta_diff", all_diff});
  }
}

}  // namespace detail

double StudySummary::metric(double theta, double sigma, std::string_view key, std::string_view name) const {
  for (const auto& m : metrics) {
    const bool sigma_match = std::isnan(sigma) ? std::isnan(m.sigma) : m.sigma == sigma;
    if (m.theta_true == theta && sigma_match && m.key == key && m.metric == name) return m.value;
  }
  throw Error(ErrorCode::InvalidArgument, "no metric " + std::string(key) + "/" + std::string(name) + " at theta " +
                                              format_value(theta) + ", sigma " + format_value(sigma));
}

StudySummary run_robustness_study(const StudyConfig& config) {
  detail::validate_study(config);
  StudySummary summary;
  summary.robustness = parallel_map<RobustnessRecord>(
      detail::dataset_cells(config), config.threads,
      [&](const detail::Cell& cell) { return detail::robustness_work(config, cell); });
  detail::summarize_robustness(config, summary);
  return summary;
}

StudySummary run_selection_study(const StudyConfig& config) {
  detail::validate_study(config);
  StudySummary summary;
  summary.selection = parallel_map<SelectionRecord>(
      detail::dataset_cells(config), config.threads,
      [&](const detail::Cell& cell) { return detail::selection_work(config, cell); });
  detail::summarize_selection(config, summary);
  return summary;
}

StudySummary run_reparam_study(const StudyConfig& config) {
  detail::validate_study(config);
  StudySummary summary;
  summary.reparam = parallel_map<ReparamRecord>(
      detail::dataset_cells(config), config.threads,
      [&](const detail::Cell& cell) { return std::vector<ReparamRecord>{detail::reparam_work(config, cell)}; });
  detail::summarize_reparam(config, summary);
  return summary;
}

StudySummary run_study(const StudyConfig& config) {
  detail::validate_study(config);
  StudySummary summary;
  for (StudyKind kind : config.studies) {
    StudySummary part;
    switch (kind) {
      case StudyKind::Robustness: part = run_robustness_study(config); break;
      case StudyKind::Selection: part = run_selection_study(config); break;
      case StudyKind::Reparam: part = run_reparam_study(config); break;
    }
    summary.metrics.insert(summary.metrics.end(), part.metrics.begin(), part.metrics.end());
    if (!part.robustness.empty()) summary.robustness = std::move(part.robustness);
    if (!part.selection.empty()) summary.selection = std::move(part.selection);
    if (!part.reparam.empty()) summary.reparam = std::move(part.reparam);
  }
  return summary;
}

namespace {

nlohmann::json metadata(const StudyConfig& config) {
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a(config_fingerprint(config).dump());
  nlohmann::json studies = nlohmann::json::array();
  for (auto k : config.studies) studies.push_back(study_kind_name(k));
  return {
      {"tool", "gdi"},
      {"version", kToolVersion},
      {"config_hash", hash.str()},
      {"seed", config.master_seed},
      {"replicates", config.replicates},
      {"rng", Rng::algorithm},
      {"studies", studies},
  };
}

}  // namespace

std::string format_summary_csv(const StudyConfig& config, const StudySummary& summary) {
  std::ostringstream out;
  out << "# " << metadata(config).dump() << '\n';
  out << "theta_true,sigma,spec_or_procedure,metric,value\n";
  for (const auto& m : summary.metrics)
    out << format_value(m.theta_true) << ',' << (std::isnan(m.sigma) ? std::string("pooled") : format_value(m.sigma))
        << ',' << m.key << ',' << m.metric << ',' << format_value(m.value) << '\n';
  return out.str();
}

std::string format_timings_csv(const StudyConfig& config, const StudySummary& summary) {
  std::ostringstream out;
  out << "# " << metadata(config).dump() << '\n';
  out << "theta_true,sigma,replicate,procedure,seconds\n";
  for (const auto& r : summary.selection)
    if (r.ok)
      out << format_value(config.thetas[r.theta_index]) << ',' << format_value(config.sigmas[r.sigma_index]) << ','
          << r.replicate << ',' << procedure_name(r.procedure) << ',' << format_value(r.seconds) << '\n';
  return out.str();
}

}  // namespace gdi
