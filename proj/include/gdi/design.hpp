#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gdi {

/// A structure covariate value: numeric, or a categorical level.
using StructureValue = std::variant<double, std::string>;
using Structures = std::map<std::string, StructureValue>;

/// A point on the s-species simplex plus opaque structure covariates.
class Community {
 public:
  Community() = default;

  const std::vector<double>& proportions() const noexcept { return proportions_; }
  const Structures& structures() const noexcept { return structures_; }
  std::size_t species_count() const noexcept { return proportions_.size(); }
  /// Number of strictly positive proportions.
  std::size_t richness() const noexcept;

  friend Community make_community(std::vector<double> proportions, Structures structures);

  friend bool operator==(const Community&, const Community&) = default;

 private:
  std::vector<double> proportions_;
  Structures structures_;
};

/// Validates and builds a community. Throws SumNotOne when |sum - 1| > 1e-9,
/// NegativeProportion for entries below zero, EmptyProportions for an empty vector.
Community make_community(std::vector<double> proportions, Structures structures = {});

/// Proportions rounded to 6 decimals, used as community identity.
using CommunityKey = std::vector<std::int64_t>;
CommunityKey community_key(const Community& community);

struct DesignEntry {
  Community community;
  int multiplicity = 1;

  friend bool operator==(const DesignEntry&, const DesignEntry&) = default;
};

/// Ordered communities, each replicated `multiplicity` times consecutively.
class Design {
 public:
  explicit Design(std::vector<DesignEntry> entries);

  std::size_t species_count() const noexcept { return species_count_; }
  const std::vector<DesignEntry>& entries() const noexcept { return entries_; }
  std::size_t community_count() const noexcept { return entries_.size(); }
  /// Total rows after replication.
  std::size_t row_count() const noexcept;
  /// One community per row, in design order after replication.
  std::vector<Community> rows() const;
  /// Number of distinct 6-decimal proportion keys.
  std::size_t distinct_community_count() const;

  friend bool operator==(const Design&, const Design&) = default;

 private:
  std::vector<DesignEntry> entries_;
  std::size_t species_count_ = 0;
};

/// The 37-community four-species design, each community replicated 3 times.
Design four_species_design();

/// The 100 equi-proportional nine-species communities, each replicated 3 times.
Design nine_species_design();

struct EquiproportionalRequest {
  int species = 0;
  std::vector<int> richness_levels;
  std::vector<std::int64_t> communities_per_level;
  /// One value for every level, or a single value applied to all levels.
  std::vector<int> reps{1};
  std::uint64_t seed = 0;
};

/// Equal-proportion communities on distinct species subsets. Levels whose
/// count equals C(s, r) are enumerated exhaustively (seed independent);
/// otherwise subsets are sampled without replacement from the seeded stream.
Design equiproportional_design(const EquiproportionalRequest& request);

/// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(int n, int k);

/// Design CSV: header p1..ps[,struct:<name>...]; one row per replicate.
/// A column named `y` is ignored by the design loader.
Design load_design_csv(const std::filesystem::path& path);
Design parse_design_csv(const std::string& text);
void save_design_csv(const Design& design, const std::filesystem::path& path);
std::string format_design_csv(const Design& design);

/// A design plus one response per replicated row.
struct Dataset {
  Design design;
  std::vector<double> response;
};

/// Same layout as the design CSV with a required `y` column.
Dataset load_dataset_csv(const std::filesystem::path& path);
Dataset parse_dataset_csv(const std::string& text);
std::string format_dataset_csv(const Design& design, std::span<const double> response);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

}  // namespace gdi
