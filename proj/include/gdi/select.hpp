#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gdi/fit.hpp"
#include "gdi/model.hpp"
#include "gdi/profile.hpp"

namespace gdi {

enum class Criterion { AIC, BIC };
enum class Procedure { A, B, C };

std::string_view criterion_name(Criterion c);
Criterion parse_criterion(std::string_view text);
std::string_view procedure_name(Procedure p);
Procedure parse_procedure(std::string_view text);

/// Family name, with a "_reparam" suffix for the scaled form.
std::string spec_label(const InteractionSpec& spec);

/// AveragePairwise, FunctionalGroup, AdditiveSpecies, FullPairwise.
std::vector<InteractionSpec> default_candidates(const Grouping& grouping, bool reparameterized = false);

struct CandidateResult {
  InteractionSpec spec;
  FitResult fit;
  double aic = 0.0;  // -inf for a perfect fit
  double bic = 0.0;
  /// Set when θ was estimated for this candidate.
  std::optional<ThetaEstimate> estimate;
};

struct SelectionOptions {
  Criterion criterion = Criterion::AIC;
  /// Procedure b only.
  InteractionSpec reference{Family::AveragePairwise, std::nullopt, false};
  ProfileOptions profile;
};

struct SelectionResult {
  Procedure procedure = Procedure::B;
  Criterion criterion = Criterion::AIC;
  InteractionSpec chosen;
  std::size_t chosen_index = 0;
  /// 1 when θ was not retained.
  double theta_final = 1.0;
  std::vector<CandidateResult> per_candidate;
  LrTest theta_test;
  /// The estimate behind theta_test: winner's for a and c, reference's for b.
  std::optional<ThetaEstimate> theta_estimate;
  double elapsed_seconds = 0.0;
  /// Procedure b could not estimate θ on the reference and ran procedure a.
  bool fell_back = false;
  std::string warning;
};

/// Criterion value of a fit; -inf for a perfect fit.
double criterion_value(const FitResult& fit, Criterion criterion);

/// Index of the minimum criterion value; ties go to fewer coefficients, then list order.
std::size_t pick_minimum(std::span<const CandidateResult> candidates, Criterion criterion);

SelectionResult procedure_a(const Design& design, std::span<const double> response,
                            std::span<const InteractionSpec> candidates, const SelectionOptions& options = {});
SelectionResult procedure_b(const Design& design, std::span<const double> response,
                            std::span<const InteractionSpec> candidates, const SelectionOptions& options = {});
SelectionResult procedure_c(const Design& design, std::span<const double> response,
                            std::span<const InteractionSpec> candidates, const SelectionOptions& options = {});
SelectionResult run_procedure(Procedure procedure, const Design& design, std::span<const double> response,
                              std::span<const InteractionSpec> candidates, const SelectionOptions& options = {});

/// F test of `spec` at `theta` against the community-factor model.
/// Throws NoReplication when every community appears once.
FTestResult lack_of_fit(const Design& design, std::span<const double> response, const InteractionSpec& spec,
                        double theta);

nlohmann::json to_json(const SelectionResult& result);
std::string selection_csv_header();
std::string selection_csv_row(const SelectionResult& result);

}  // namespace gdi
