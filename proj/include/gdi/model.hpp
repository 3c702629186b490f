#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gdi/design.hpp"

namespace gdi {

enum class Family {
  Null,
  Identity,
  AveragePairwise,
  FunctionalGroup,
  AdditiveSpecies,
  FullPairwise,
  CommunityFactor,
};

std::string_view family_name(Family family);
/// Accepts the snake_case names (`full_pairwise`) and short aliases (`avg`, `full`, `fg`, `add`).
Family parse_family(std::string_view name);

/// Partition of species into functional groups, kept as one label per species.
/// Groups are numbered by first appearance of their label.
class Grouping {
 public:
  Grouping() = default;
  explicit Grouping(std::vector<std::string> labels);

  std::size_t species_count() const noexcept { return group_of_.size(); }
  std::size_t group_count() const noexcept { return group_labels_.size(); }
  std::size_t group_of(std::size_t species) const { return group_of_.at(species); }
  const std::vector<std::string>& group_labels() const noexcept { return group_labels_; }
  const std::vector<std::string>& species_labels() const noexcept { return species_labels_; }

  friend bool operator==(const Grouping&, const Grouping&) = default;

 private:
  std::vector<std::string> species_labels_;
  std::vector<std::string> group_labels_;
  std::vector<std::size_t> group_of_;
};

/// Parses "1,1,2,2" into a grouping.
Grouping parse_grouping(std::string_view text);

struct InteractionSpec {
  Family family = Family::AveragePairwise;
  std::optional<Grouping> grouping;
  bool reparameterized = false;

  friend bool operator==(const InteractionSpec&, const InteractionSpec&) = default;
};

/// True when the family has θ-dependent interaction columns.
bool has_theta(Family family);

/// Smallest θ accepted anywhere in the library.
inline constexpr double kMinTheta = 0.01;

/// (p_i p_j)^θ, zero when either proportion is zero.
double pair_term(double p_i, double p_j, double theta);

/// 2 s^{2θ} / (s (s - 1)): multiplier applied to every interaction column
/// under the reparameterized form.
double scaling_factor(int species, double theta);

struct NamedValue {
  std::string name;
  double value = 0.0;
};

/// Interaction columns for one community. CommunityFactor needs the whole
/// design and is only available through design_matrix.
std::vector<NamedValue> interaction_columns(const Community& community, const InteractionSpec& spec, double theta);

/// Column names of the interaction block for `species` species.
std::vector<std::string> interaction_column_names(std::size_t species, const InteractionSpec& spec);

/// Maps each unordered species pair onto the interaction columns it feeds.
/// AdditiveSpecies pairs feed two columns; every other family feeds one.
class PairLayout {
 public:
  PairLayout(std::size_t species, const InteractionSpec& spec);

  std::size_t column_count() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  /// Columns fed by pair (i, j), i < j, in pair order i*(s) + j.
  const std::vector<std::size_t>& targets(std::size_t i, std::size_t j) const { return targets_[i * species_ + j]; }

 private:
  std::size_t species_;
  std::vector<std::string> names_;
  std::vector<std::vector<std::size_t>> targets_;
};

struct ModelMatrix {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;
  double theta_used = 1.0;
  /// Set when a column lies exactly in the span of earlier columns.
  bool rank_warning = false;
  std::vector<std::string> collinear_columns;
};

/// Expanded structure covariate columns: numeric -> one column, categorical ->
/// one indicator per non-reference level (levels sorted, first is reference).
struct StructureColumns {
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // rows in design order after replication
};
StructureColumns structure_columns(const Design& design);

/// Row-level design matrix: identities (or intercept for Null, or community
/// indicators for CommunityFactor), interaction block, then structures.
ModelMatrix design_matrix(const Design& design, const InteractionSpec& spec, double theta);

/// Indices of columns that lie in the span of earlier columns (unpivoted QR test).
std::vector<std::size_t> collinear_column_indices(const Eigen::MatrixXd& values);

/// Nesting of model families: true when every model of `inner` is also a
/// model of `outer`.
bool nested(const InteractionSpec& inner, const InteractionSpec& outer);

/// Validates θ, throwing NonPositiveTheta below kMinTheta or when not finite.
void check_theta(double theta);

}  // namespace gdi
