#include "gdi/simulate.hpp"

#include <cmath>
#include <limits>

#include "gdi/error.hpp"

namespace gdi {

namespace {

TruthModel from_upper(std::vector<double> identity, const std::vector<std::vector<double>>& upper) {
  const std::size_t s = identity.size();
  TruthModel t;
  t.identity_effects = std::move(identity);
  t.pairwise_effects.assign(s, std::vector<double>(s, 0.0));
  for (std::size_t i = 0; i + 1 < s; ++i)
    for (std::size_t k = 0; k < upper[i].size(); ++k) t.pairwise_effects[i][i + 1 + k] = upper[i][k];
  return t;
}

}  // namespace

TruthModel four_species_truth() {
  return from_upper({5, 7, 6, 3}, {{4.68, 13.74, 8.52}, {3.89, 16.22}, {10.32}});
}

TruthModel nine_species_truth() {
  return from_upper({7, 8, 6, 9, 5, 6, 6, 6, 7}, {
                                                     {11.99, 7.64, 8.42, -2.6, 7.89, 8.32, 10.25, 4.06},
                                                     {4.18, -1.03, 10.08, 5.22, 13.04, 8.19, 13.42},
                                                     {5.13, 18.75, 12.41, 8.86, 19.61, 1.64},
                                                     {5.98, 9.67, 11.22, 18.76, 4.6},
                                                     {9, 9.85, 7.37, 12.59},
                                                     {14.59, 14.98, 9.58},
                                                     {-1.57, 8.21},
                                                     {8.8},
                                                 });
}

void validate_truth(const TruthModel& truth, std::size_t species) {
  if (truth.identity_effects.size() != species)
    throw Error(ErrorCode::DimensionMismatch, "truth has " + std::to_string(truth.identity_effects.size()) +
                                                  " identity effects, design has " + std::to_string(species) +
                                                  " species");
  if (truth.pairwise_effects.size() != species)
    throw Error(ErrorCode::DimensionMismatch, "truth pairwise matrix has " +
                                                  std::to_string(truth.pairwise_effects.size()) + " rows, expected " +
                                                  std::to_string(species));
  for (const auto& row : truth.pairwise_effects)
    if (row.size() != species)
      throw Error(ErrorCode::DimensionMismatch, "truth pairwise matrix is not " + std::to_string(species) + " x " +
                                                    std::to_string(species));
  if (!(truth.sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  check_theta(truth.theta_true);
}

double expected_response(const Community& community, const TruthModel& truth) {
  const auto& p = community.proportions();
  const std::size_t s = p.size();
  double y = 0.0;
  for (std::size_t i = 0; i < s; ++i) y += truth.identity_effects[i] * p[i];
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i + 1; j < s; ++j) {
      const double d = truth.pairwise_effects[i][j];
      if (d != 0.0) y += d * pair_term(p[i], p[j], truth.theta_true);
    }
  for (const auto& [key, effect] : truth.structure_effects) {
    const auto eq = key.find('=');
    const std::string name = key.substr(0, eq);
    const auto it = community.structures().find(name);
    if (it == community.structures().end())
      throw Error(ErrorCode::DimensionMismatch, "truth structure '" + name + "' is not a design column");
    if (eq == std::string::npos) {
      if (!std::holds_alternative<double>(it->second))
        throw Error(ErrorCode::DimensionMismatch, "structure '" + name + "' is categorical; give an effect per level");
      y += effect * std::get<double>(it->second);
    } else {
      const auto* level = std::get_if<std::string>(&it->second);
      if (level && *level == key.substr(eq + 1)) y += effect;
    }
  }
  return y;
}

std::vector<double> simulate_response(const Design& design, const TruthModel& truth, Rng& rng) {
  validate_truth(truth, design.species_count());
  std::vector<double> y;
  y.reserve(design.row_count());
  for (const auto& entry : design.entries()) {
    const double mean = expected_response(entry.community, truth);
    for (int k = 0; k < entry.multiplicity; ++k)
      y.push_back(truth.sigma > 0.0 ? mean + truth.sigma * normal_draw(rng) : mean);
  }
  return y;
}

Rng dataset_rng(std::uint64_t master_seed, std::size_t theta_index, std::size_t sigma_index, std::size_t replicate) {
  return Rng::substream(master_seed, {theta_index, sigma_index, replicate});
}

std::string_view study_kind_name(StudyKind kind) {
  switch (kind) {
    case StudyKind::Robustness: return "robustness";
    case StudyKind::Selection: return "selection";
    case StudyKind::Reparam: return "reparam";
  }
  return "?";
}

StudyKind parse_study_kind(std::string_view text) {
  if (text == "robustness") return StudyKind::Robustness;
  if (text == "selection") return StudyKind::Selection;
  if (text == "reparam") return StudyKind::Reparam;
  throw Error(ErrorCode::InvalidArgument,
              "unknown study '" + std::string(text) + "' (expected robustness, selection or reparam)");
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json config_fingerprint(const StudyConfig& c) {
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& spec : c.candidates) {
    nlohmann::json j{{"family", family_name(spec.family)}, {"reparameterized", spec.reparameterized}};
    if (spec.grouping) j["grouping"] = spec.grouping->species_labels();
    candidates.push_back(std::move(j));
  }
  nlohmann::json studies = nlohmann::json::array();
  for (auto k : c.studies) studies.push_back(study_kind_name(k));
  nlohmann::json procedures = nlohmann::json::array();
  for (auto p : c.procedures) procedures.push_back(procedure_name(p));
  nlohmann::json structure_effects = nlohmann::json::object();
  for (const auto& [k, v] : c.truth.structure_effects) structure_effects[k] = v;
  const auto& po = c.selection.profile;
  return {
      {"design", c.design_label},
      {"design_hash", fnv1a(format_design_csv(c.design))},
      {"truth",
       {{"identity", c.truth.identity_effects},
        {"pairwise", c.truth.pairwise_effects},
        {"structure_effects", structure_effects}}},
      {"thetas", c.thetas},
      {"sigmas", c.sigmas},
      {"replicates", c.replicates},
      {"seed", c.master_seed},
      {"studies", studies},
      {"candidates", candidates},
      {"procedures", procedures},
      {"criterion", criterion_name(c.selection.criterion)},
      {"reference", spec_label(c.selection.reference)},
      {"reparam_family", family_name(c.reparam_family)},
      {"profile",
       {{"lower", po.lower},
        {"upper", po.upper},
        {"tol", po.tol},
        {"grid_points", po.grid_points},
        {"alpha", po.alpha},
        {"ci_tol", po.ci_tol}}},
  };
}

}  // namespace gdi
