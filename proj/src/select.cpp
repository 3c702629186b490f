#include "gdi/select.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "gdi/error.hpp"

namespace gdi {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

CandidateResult make_candidate(const InteractionSpec& spec, FitResult fit,
                               std::optional<ThetaEstimate> estimate = std::nullopt) {
  CandidateResult c;
  c.spec = spec;
  c.aic = criterion_value(fit, Criterion::AIC);
  c.bic = criterion_value(fit, Criterion::BIC);
  c.fit = std::move(fit);
  c.estimate = std::move(estimate);
  return c;
}

void require_candidates(std::span<const InteractionSpec> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "candidate list is empty");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

SelectionResult finish(SelectionResult r, Procedure procedure, const SelectionOptions& options) {
  r.procedure = procedure;
  r.criterion = options.criterion;
  r.chosen_index = pick_minimum(r.per_candidate, options.criterion);
  r.chosen = r.per_candidate[r.chosen_index].spec;
  return r;
}

}  // namespace

std::string_view criterion_name(Criterion c) { return c == Criterion::AIC ? "aic" : "bic"; }

Criterion parse_criterion(std::string_view text) {
  if (text == "aic" || text == "AIC") return Criterion::AIC;
  if (text == "bic" || text == "BIC") return Criterion::BIC;
  throw Error(ErrorCode::InvalidArgument, "unknown criterion '" + std::string(text) + "' (expected aic or bic)");
}

std::string_view procedure_name(Procedure p) {
  switch (p) {
    case Procedure::A: return "a";
    case Procedure::B: return "b";
    case Procedure::C: return "c";
  }
  return "?";
}

Procedure parse_procedure(std::string_view text) {
  if (text == "a") return Procedure::A;
  if (text == "b") return Procedure::B;
  if (text == "c") return Procedure::C;
  throw Error(ErrorCode::InvalidArgument, "unknown procedure '" + std::string(text) + "' (expected a, b or c)");
}

std::string spec_label(const InteractionSpec& spec) {
  std::string label(family_name(spec.family));
  if (spec.reparameterized && has_theta(spec.family)) label += "_reparam";
  return label;
}

std::vector<InteractionSpec> default_candidates(const Grouping& grouping, bool reparameterized) {
  return {
      InteractionSpec{Family::AveragePairwise, std::nullopt, reparameterized},
      InteractionSpec{Family::FunctionalGroup, grouping, reparameterized},
      InteractionSpec{Family::AdditiveSpecies, std::nullopt, reparameterized},
      InteractionSpec{Family::FullPairwise, std::nullopt, reparameterized},
  };
}

double criterion_value(const FitResult& fit, Criterion criterion) {
  if (fit.perfect_fit) return kNegInf;
  return criterion == Criterion::AIC ? aic(fit) : bic(fit);
}

std::size_t pick_minimum(std::span<const CandidateResult> candidates, Criterion criterion) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "no candidates to choose from");
  auto value = [&](const CandidateResult& c) { return criterion == Criterion::AIC ? c.aic : c.bic; };
  std::size_t best = 0;
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    const double v = value(candidates[k]);
    const double b = value(candidates[best]);
    if (v < b || (v == b && candidates[k].fit.p < candidates[best].fit.p)) best = k;
  }
  return best;
}

SelectionResult procedure_a(const Design& design, std::span<const double> response,
                            std::span<const InteractionSpec> candidates, const SelectionOptions& options) {
  require_candidates(candidates);
  const auto start = std::chrono::steady_clock::now();
  SelectionResult r;
  std::vector<ProfileProblem> problems;
  problems.reserve(candidates.size());
  for (const auto& spec : candidates) {
    problems.emplace_back(design, response, spec);
    r.per_candidate.push_back(make_candidate(spec, problems.back().fit(1.0, false)));
  }
  r = finish(std::move(r), Procedure::A, options);

  const ProfileProblem& winner = problems[r.chosen_index];
  if (has_theta(r.chosen.family)) {
    auto est = estimate_theta(winner, options.profile);
    r.theta_test = est.lr_vs_one;
    r.theta_final = est.lr_vs_one.significant ? est.theta_hat : 1.0;
    if (est.lr_vs_one.significant) {
      auto& c = r.per_candidate[r.chosen_index];
      c = make_candidate(c.spec, winner.fit(est.theta_hat, true), est);
    } else {
      r.per_candidate[r.chosen_index].estimate = est;
    }
    r.theta_estimate = std::move(est);
  }
  r.elapsed_seconds = seconds_since(start);
  return r;
}

SelectionResult procedure_b(const Design& design, std::span<const double> response,
                            std::span<const InteractionSpec> candidates, const SelectionOptions& options) {
  require_candidates(candidates);
  const auto start = std::chrono::steady_clock::now();
  ThetaEstimate reference;
  try {
    reference = estimate_theta(ProfileProblem(design, response, options.reference), options.profile);
  } catch (const Error& e) {
    SelectionResult r = procedure_a(design, response, candidates, options);
    r.fell_back = true;
    r.warning = std::string("reference θ estimation failed (") + e.what() + "); used procedure a";
    r.elapsed_seconds = seconds_since(start);
    return r;
  }

  const bool keep = reference.lr_vs_one.significant;
  const double theta = keep ? reference.theta_hat : 1.0;
  SelectionResult r;
  for (const auto& spec : candidates) {
    const ProfileProblem problem(design, response, spec);
    r.per_candidate.push_back(make_candidate(spec, problem.fit(theta, keep)));
  }
  r = finish(std::move(r), Procedure::B, options);
  r.theta_test = reference.lr_vs_one;
  r.theta_final = has_theta(r.chosen.family) ? theta : 1.0;
  r.theta_estimate = std::move(reference);
  r.elapsed_seconds = seconds_since(start);
  return r;
}

SelectionResult procedure_c(const Design& design, std::span<const double> response,
                            std::span<const InteractionSpec> candidates, const SelectionOptions& options) {
  require_candidates(candidates);
  const auto start = std::chrono::steady_clock::now();
  SelectionResult r;
  for (const auto& spec : candidates) {
    const ProfileProblem problem(design, response, spec);
    if (!has_theta(spec.family)) {
      r.per_candidate.push_back(make_candidate(spec, problem.fit(1.0, false)));
      continue;
    }
    auto est = estimate_theta(problem, options.profile);
    const bool keep = est.lr_vs_one.significant;
    r.per_candidate.push_back(make_candidate(spec, problem.fit(keep ? est.theta_hat : 1.0, keep), est));
  }
  r = finish(std::move(r), Procedure::C, options);
  const auto& winner = r.per_candidate[r.chosen_index];
  r.theta_final = winner.fit.theta_used;
  if (winner.estimate) {
    r.theta_test = winner.estimate->lr_vs_one;
    r.theta_estimate = winner.estimate;
  }
  r.elapsed_seconds = seconds_since(start);
  return r;
}

SelectionResult run_procedure(Procedure procedure, const Design& design, std::span<const double> response,
                              std::span<const InteractionSpec> candidates, const SelectionOptions& options) {
  switch (procedure) {
    case Procedure::A: return procedure_a(design, response, candidates, options);
    case Procedure::B: return procedure_b(design, response, candidates, options);
    case Procedure::C: return procedure_c(design, response, candidates, options);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown procedure");
}

FTestResult lack_of_fit(const Design& design, std::span<const double> response, const InteractionSpec& spec,
                        double theta) {
  if (design.distinct_community_count() >= design.row_count())
    throw Error(ErrorCode::NoReplication, "every community appears once; no pure-error degrees of freedom");
  const ProfileProblem reduced(design, response, spec);
  const ProfileProblem full(design, response, InteractionSpec{Family::CommunityFactor, std::nullopt, false});
  return f_test(reduced.fit(theta, false), full.fit(1.0, false));
}

nlohmann::json to_json(const SelectionResult& r) {
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& c : r.per_candidate) {
    nlohmann::json j{
        {"spec", spec_label(c.spec)},
        {"aic", json_number(c.aic)},
        {"bic", json_number(c.bic)},
        {"loglik", json_number(c.fit.loglik)},
        {"theta_used", c.fit.theta_used},
        {"theta_estimated", c.fit.theta_was_estimated},
        {"coefficients", to_json(c.fit)["coefficients"]},
    };
    j["theta_hat"] = c.estimate ? nlohmann::json(c.estimate->theta_hat) : nlohmann::json(nullptr);
    candidates.push_back(std::move(j));
  }
  nlohmann::json j{
      {"procedure", procedure_name(r.procedure)},
      {"criterion", criterion_name(r.criterion)},
      {"chosen", spec_label(r.chosen)},
      {"theta_final", r.theta_final},
      {"theta_test",
       {{"statistic", json_number(r.theta_test.statistic)},
        {"p_value", r.theta_test.p_value},
        {"significant", r.theta_test.significant}}},
      {"per_candidate", candidates},
      {"elapsed_seconds", r.elapsed_seconds},
      {"fell_back", r.fell_back},
  };
  if (r.theta_estimate) j["theta_estimate"] = to_json(*r.theta_estimate);
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

std::string selection_csv_header() { return "procedure,criterion,chosen,theta_final,candidate_values"; }

std::string selection_csv_row(const SelectionResult& r) {
  std::ostringstream out;
  out << procedure_name(r.procedure) << ',' << criterion_name(r.criterion) << ',' << spec_label(r.chosen) << ','
      << format_double(r.theta_final) << ',';
  for (std::size_t k = 0; k < r.per_candidate.size(); ++k) {
    const auto& c = r.per_candidate[k];
    const double v = r.criterion == Criterion::AIC ? c.aic : c.bic;
    if (k > 0) out << ';';
    out << spec_label(c.spec) << '=' << (std::isinf(v) ? std::string(v > 0 ? "inf" : "-inf") : format_double(v));
  }
  return out.str();
}

}  // namespace gdi
