#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gdi/design.hpp"
#include "gdi/model.hpp"
#include "gdi/profile.hpp"
#include "gdi/rng.hpp"
#include "gdi/select.hpp"

namespace gdi {

/// Full pairwise truth: y = Σβ_i P_i + Σ_{i<j} δ_ij (P_i P_j)^θ + structures + N(0, σ²).
struct TruthModel {
  std::vector<double> identity_effects;
  /// s × s; only the strict upper triangle is read.
  std::vector<std::vector<double>> pairwise_effects;
  double theta_true = 1.0;
  double sigma = 1.0;
  /// "name" for a numeric covariate (slope), "name=level" for a categorical level.
  std::map<std::string, double> structure_effects;
};

TruthModel four_species_truth();
TruthModel nine_species_truth();

/// Checks dimensions against `species`; throws DimensionMismatch.
void validate_truth(const TruthModel& truth, std::size_t species);

/// Noise-free mean response of one community.
double expected_response(const Community& community, const TruthModel& truth);

/// One draw per replicated row, in Design::rows() order.
std::vector<double> simulate_response(const Design& design, const TruthModel& truth, Rng& rng);

/// Generator for dataset (θ index, σ index, replicate) of a study.
Rng dataset_rng(std::uint64_t master_seed, std::size_t theta_index, std::size_t sigma_index, std::size_t replicate);

enum class StudyKind { Robustness, Selection, Reparam };
std::string_view study_kind_name(StudyKind kind);
StudyKind parse_study_kind(std::string_view text);

struct StudyConfig {
  std::string design_label = "four";
  Design design = four_species_design();
  TruthModel truth = four_species_truth();
  std::vector<double> thetas{0.05, 0.19, 0.35, 0.48, 0.63, 0.77, 0.91, 1.0, 1.17, 1.33};
  std::vector<double> sigmas{1.0};
  int replicates = 200;
  std::uint64_t master_seed = 20261016;
  std::vector<StudyKind> studies{StudyKind::Robustness};
  std::vector<InteractionSpec> candidates = default_candidates(parse_grouping("1,1,2,2"));
  std::vector<Procedure> procedures{Procedure::B};
  SelectionOptions selection;
  /// Fitted under both parameterizations in the reparameterization study.
  Family reparam_family = Family::AveragePairwise;
  int threads = 1;
};

/// Canonical JSON of everything that affects results (threads excluded).
nlohmann::json config_fingerprint(const StudyConfig& config);

struct RobustnessRecord {
  std::size_t theta_index = 0;
  std::size_t sigma_index = 0;
  std::size_t replicate = 0;
  std::size_t spec_index = 0;
  bool ok = false;
  std::string error;
  double theta_hat = 0.0;
  CiBound ci_lower;
  CiBound ci_upper;
  bool boundary = false;
};

struct SelectionRecord {
  std::size_t theta_index = 0;
  std::size_t sigma_index = 0;
  std::size_t replicate = 0;
  Procedure procedure = Procedure::B;
  bool ok = false;
  std::string error;
  std::string chosen;
  double theta_final = 1.0;
  bool fell_back = false;
  double seconds = 0.0;
};

struct ReparamRecord {
  std::size_t theta_index = 0;
  std::size_t sigma_index = 0;
  std::size_t replicate = 0;
  bool ok = false;
  std::string error;
  double theta_old = 0.0;
  double theta_new = 0.0;
  double delta_old = 0.0;
  double delta_new = 0.0;
};

struct MetricRow {
  double theta_true = 0.0;
  /// NaN for rows pooled over σ.
  double sigma = 0.0;
  std::string key;
  std::string metric;
  double value = 0.0;
};

struct StudySummary {
  std::vector<MetricRow> metrics;
  std::vector<RobustnessRecord> robustness;
  std::vector<SelectionRecord> selection;
  std::vector<ReparamRecord> reparam;

  /// First metric row matching; throws InvalidArgument when absent. NaN sigma matches pooled rows.
  double metric(double theta, double sigma, std::string_view key, std::string_view metric) const;
};

/// Each runs only its own study kind; run_study runs every kind in the config.
StudySummary run_robustness_study(const StudyConfig& config);
StudySummary run_selection_study(const StudyConfig& config);
StudySummary run_reparam_study(const StudyConfig& config);
StudySummary run_study(const StudyConfig& config);

/// Single-threaded reference of run_study, plain loops with no OpenMP.
StudySummary run_study_serial(const StudyConfig& config);

/// Long-format CSV preceded by one "# {json}" metadata line.
std::string format_summary_csv(const StudyConfig& config, const StudySummary& summary);
/// Per-dataset wall-clock seconds of the selection study; varies run to run.
std::string format_timings_csv(const StudyConfig& config, const StudySummary& summary);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace gdi
