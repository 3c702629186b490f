#include "gdi/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gdi/error.hpp"

namespace gdi {

std::string_view family_name(Family family) {
  switch (family) {
    case Family::Null: return "null";
    case Family::Identity: return "identity";
    case Family::AveragePairwise: return "average_pairwise";
    case Family::FunctionalGroup: return "functional_group";
    case Family::AdditiveSpecies: return "additive_species";
    case Family::FullPairwise: return "full_pairwise";
    case Family::CommunityFactor: return "community_factor";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  static const std::map<std::string, Family, std::less<>> table = {
      {"null", Family::Null},
      {"identity", Family::Identity},
      {"average_pairwise", Family::AveragePairwise},
      {"avg", Family::AveragePairwise},
      {"functional_group", Family::FunctionalGroup},
      {"fg", Family::FunctionalGroup},
      {"additive_species", Family::AdditiveSpecies},
      {"add", Family::AdditiveSpecies},
      {"full_pairwise", Family::FullPairwise},
      {"full", Family::FullPairwise},
      {"community_factor", Family::CommunityFactor},
  };
  const auto it = table.find(name);
  if (it == table.end()) throw Error(ErrorCode::InvalidArgument, "unknown model family '" + std::string(name) + "'");
  return it->second;
}

Grouping::Grouping(std::vector<std::string> labels) : species_labels_(std::move(labels)) {
  if (species_labels_.empty()) throw Error(ErrorCode::InvalidGrouping, "grouping is empty");
  for (const auto& label : species_labels_) {
    if (label.empty()) throw Error(ErrorCode::InvalidGrouping, "empty group label");
    auto it = std::find(group_labels_.begin(), group_labels_.end(), label);
    if (it == group_labels_.end()) {
      group_of_.push_back(group_labels_.size());
      group_labels_.push_back(label);
    } else {
      group_of_.push_back(static_cast<std::size_t>(it - group_labels_.begin()));
    }
  }
}

Grouping parse_grouping(std::string_view text) {
  std::vector<std::string> labels;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    std::string label;
    for (char c : piece)
      if (!std::isspace(static_cast<unsigned char>(c))) label.push_back(c);
    labels.push_back(label);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return Grouping(std::move(labels));
}

bool has_theta(Family family) {
  switch (family) {
    case Family::AveragePairwise:
    case Family::FunctionalGroup:
    case Family::AdditiveSpecies:
    case Family::FullPairwise:
      return true;
    default:
      return false;
  }
}

void check_theta(double theta) {
  if (!std::isfinite(theta) || theta < kMinTheta)
    throw Error(ErrorCode::NonPositiveTheta, "theta must be >= " + format_double(kMinTheta) + ", got " +
                                                 format_double(theta));
}

double pair_term(double p_i, double p_j, double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw Error(ErrorCode::NonPositiveTheta, "theta must be positive, got " + format_double(theta));
  if (p_i <= 0.0 || p_j <= 0.0) return 0.0;
  return std::pow(p_i * p_j, theta);
}

double scaling_factor(int species, double theta) {
  if (species < 2) throw Error(ErrorCode::SpeciesCountTooSmall, "scaling factor needs at least 2 species");
  if (!(theta > 0.0)) throw Error(ErrorCode::NonPositiveTheta, "theta must be positive");
  const double s = species;
  return 2.0 * std::pow(s, 2.0 * theta) / (s * (s - 1.0));
}

namespace {

void require_grouping(std::size_t species, const InteractionSpec& spec) {
  if (spec.family != Family::FunctionalGroup) return;
  if (!spec.grouping) throw Error(ErrorCode::MissingGrouping, "functional_group model needs a species grouping");
  if (spec.grouping->species_count() != species)
    throw Error(ErrorCode::InvalidGrouping, "grouping covers " + std::to_string(spec.grouping->species_count()) +
                                                " species, design has " + std::to_string(species));
}

}  // namespace

PairLayout::PairLayout(std::size_t species, const InteractionSpec& spec)
    : species_(species), targets_(species * species) {
  require_grouping(species, spec);
  const std::size_t s = species;
  switch (spec.family) {
    case Family::AveragePairwise:
      names_.push_back("delta_AV");
      for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = i + 1; j < s; ++j) targets_[i * s + j] = {0};
      break;
    case Family::FunctionalGroup: {
      const Grouping& g = *spec.grouping;
      const std::size_t t = g.group_count();
      const auto& labels = g.group_labels();
      // Within-group columns first, then between-group columns for q < r.
      std::vector<std::vector<std::size_t>> index(t, std::vector<std::size_t>(t));
      for (std::size_t q = 0; q < t; ++q) {
        index[q][q] = names_.size();
        names_.push_back("omega_" + labels[q] + "_" + labels[q]);
      }
      for (std::size_t q = 0; q < t; ++q)
        for (std::size_t r = q + 1; r < t; ++r) {
          index[q][r] = index[r][q] = names_.size();
          names_.push_back("omega_" + labels[q] + "_" + labels[r]);
        }
      for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = i + 1; j < s; ++j) targets_[i * s + j] = {index[g.group_of(i)][g.group_of(j)]};
      break;
    }
    case Family::AdditiveSpecies:
      for (std::size_t i = 0; i < s; ++i) names_.push_back("lambda_" + std::to_string(i + 1));
      for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = i + 1; j < s; ++j) targets_[i * s + j] = {i, j};
      break;
    case Family::FullPairwise:
      for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = i + 1; j < s; ++j) {
          targets_[i * s + j] = {names_.size()};
          names_.push_back("delta_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
        }
      break;
    default:
      break;
  }
}

std::vector<std::string> interaction_column_names(std::size_t species, const InteractionSpec& spec) {
  return PairLayout(species, spec).names();
}

std::vector<NamedValue> interaction_columns(const Community& community, const InteractionSpec& spec, double theta) {
  if (spec.family == Family::CommunityFactor)
    throw Error(ErrorCode::InvalidArgument, "community_factor columns depend on the whole design; use design_matrix");
  if (!has_theta(spec.family)) return {};
  check_theta(theta);
  const std::size_t s = community.species_count();
  const PairLayout layout(s, spec);
  std::vector<NamedValue> out;
  for (const auto& name : layout.names()) out.push_back(NamedValue{name, 0.0});
  const auto& p = community.proportions();
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = i + 1; j < s; ++j) {
      const double term = pair_term(p[i], p[j], theta);
      if (term == 0.0) continue;
      for (std::size_t c : layout.targets(i, j)) out[c].value += term;
    }
  if (spec.reparameterized && s >= 2) {
    const double factor = scaling_factor(static_cast<int>(s), theta);
    for (auto& v : out) v.value *= factor;
  }
  return out;
}

StructureColumns structure_columns(const Design& design) {
  StructureColumns out;
  const auto rows = design.rows();
  const auto& first = design.entries().front().community.structures();
  struct Plan {
    std::string name;
    bool numeric;
    std::vector<std::string> levels;  // non-reference levels
  };
  std::vector<Plan> plans;
  for (const auto& [name, value] : first) {
    Plan plan{name, std::holds_alternative<double>(value), {}};
    if (!plan.numeric) {
      std::set<std::string> levels;
      for (const auto& row : rows) {
        const auto& v = row.structures().at(name);
        if (!std::holds_alternative<std::string>(v))
          throw Error(ErrorCode::InvalidDesign, "structure '" + name + "' mixes numeric and categorical values");
        levels.insert(std::get<std::string>(v));
      }
      plan.levels.assign(std::next(levels.begin()), levels.end());
    }
    plans.push_back(std::move(plan));
  }
  for (const auto& plan : plans) {
    if (plan.numeric) {
      out.names.push_back("struct_" + plan.name);
    } else {
      for (const auto& level : plan.levels) out.names.push_back("struct_" + plan.name + "_" + level);
    }
  }
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::Index c = 0;
    for (const auto& plan : plans) {
      const auto& v = rows[r].structures().at(plan.name);
      if (plan.numeric) {
        if (!std::holds_alternative<double>(v))
          throw Error(ErrorCode::InvalidDesign, "structure '" + plan.name + "' mixes numeric and categorical values");
        out.values(static_cast<Eigen::Index>(r), c++) = std::get<double>(v);
      } else {
        const auto& level = std::get<std::string>(v);
        for (const auto& l : plan.levels) out.values(static_cast<Eigen::Index>(r), c++) = (l == level) ? 1.0 : 0.0;
      }
    }
  }
  return out;
}

std::vector<std::size_t> collinear_column_indices(const Eigen::MatrixXd& values) {
  std::vector<std::size_t> dependent;
  if (values.cols() == 0) return dependent;
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(values);
  const Eigen::MatrixXd& packed = qr.matrixQR();
  const Eigen::Index diag = std::min(values.rows(), values.cols());
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const double norm = values.col(j).norm();
    if (j >= diag || norm == 0.0 || std::abs(packed(j, j)) <= 1e-9 * norm) dependent.push_back(static_cast<std::size_t>(j));
  }
  return dependent;
}

ModelMatrix design_matrix(const Design& design, const InteractionSpec& spec, double theta) {
  const std::size_t s = design.species_count();
  const auto rows = design.rows();
  const auto n = static_cast<Eigen::Index>(rows.size());
  ModelMatrix m;
  m.theta_used = theta;
  std::vector<Eigen::VectorXd> cols;

  if (spec.family == Family::Null) {
    m.columns.push_back("intercept");
    cols.push_back(Eigen::VectorXd::Ones(n));
  } else if (spec.family == Family::CommunityFactor) {
    std::map<CommunityKey, std::size_t> index;
    std::vector<std::size_t> level_of(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto [it, inserted] = index.emplace(community_key(rows[r]), index.size());
      level_of[r] = it->second;
    }
    for (std::size_t k = 0; k < index.size(); ++k) {
      m.columns.push_back("community_" + std::to_string(k + 1));
      cols.push_back(Eigen::VectorXd::Zero(n));
    }
    for (std::size_t r = 0; r < rows.size(); ++r) cols[level_of[r]](static_cast<Eigen::Index>(r)) = 1.0;
  } else {
    for (std::size_t i = 0; i < s; ++i) {
      m.columns.push_back("beta_" + std::to_string(i + 1));
      Eigen::VectorXd c(n);
      for (Eigen::Index r = 0; r < n; ++r) c(r) = rows[static_cast<std::size_t>(r)].proportions()[i];
      cols.push_back(std::move(c));
    }
    if (has_theta(spec.family)) {
      check_theta(theta);
      const PairLayout layout(s, spec);
      const std::size_t first = cols.size();
      for (const auto& name : layout.names()) {
        m.columns.push_back(name);
        cols.push_back(Eigen::VectorXd::Zero(n));
      }
      const double factor = (spec.reparameterized && s >= 2) ? scaling_factor(static_cast<int>(s), theta) : 1.0;
      for (Eigen::Index r = 0; r < n; ++r) {
        const auto& p = rows[static_cast<std::size_t>(r)].proportions();
        for (std::size_t i = 0; i < s; ++i)
          for (std::size_t j = i + 1; j < s; ++j) {
            const double term = pair_term(p[i], p[j], theta);
            if (term == 0.0) continue;
            for (std::size_t c : layout.targets(i, j)) cols[first + c](r) += factor * term;
          }
      }
    }
  }

  const auto structures = structure_columns(design);
  for (std::size_t k = 0; k < structures.names.size(); ++k) {
    m.columns.push_back(structures.names[k]);
    cols.push_back(structures.values.col(static_cast<Eigen::Index>(k)));
  }

  m.values.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) m.values.col(static_cast<Eigen::Index>(c)) = cols[c];

  for (std::size_t idx : collinear_column_indices(m.values)) m.collinear_columns.push_back(m.columns[idx]);
  m.rank_warning = !m.collinear_columns.empty();
  return m;
}

namespace {

// Position in the two chains Null < Identity < AveragePairwise < {FunctionalGroup | AdditiveSpecies} < FullPairwise.
int depth(Family f) {
  switch (f) {
    case Family::Null: return 0;
    case Family::Identity: return 1;
    case Family::AveragePairwise: return 2;
    case Family::FunctionalGroup:
    case Family::AdditiveSpecies: return 3;
    case Family::FullPairwise: return 4;
    case Family::CommunityFactor: return 5;
  }
  return -1;
}

}  // namespace

bool nested(const InteractionSpec& inner, const InteractionSpec& outer) {
  if (inner.family == outer.family) {
    if (inner.family == Family::FunctionalGroup) return inner.grouping == outer.grouping;
    return true;
  }
  if (outer.family == Family::CommunityFactor) return true;
  if (inner.family == Family::CommunityFactor) return false;
  const bool side_branch = (inner.family == Family::FunctionalGroup && outer.family == Family::AdditiveSpecies) ||
                           (inner.family == Family::AdditiveSpecies && outer.family == Family::FunctionalGroup);
  if (side_branch) return false;
  return depth(inner.family) < depth(outer.family);
}

}  // namespace gdi
