#include "gdi/design.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "gdi/error.hpp"
#include "gdi/rng.hpp"

namespace gdi {

namespace {

constexpr double kSumTolerance = 1e-9;

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  if (*first == '+') ++first;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

struct ParsedTable {
  Design design;
  std::vector<double> response;
  bool has_response = false;
};

ParsedTable parse_table(const std::string& text, bool require_response) {
  std::vector<std::string> lines;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      lines.push_back(line);
    }
  }
  if (lines.empty()) throw Error(ErrorCode::ParseError, "empty file: missing header");

  const auto header = split_csv_line(lines.front());
  std::vector<std::size_t> p_columns;
  std::vector<std::pair<std::string, std::size_t>> struct_columns;
  std::size_t y_column = std::numeric_limits<std::size_t>::max();
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name.size() > 1 && name[0] == 'p' &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      const auto index = static_cast<std::size_t>(std::stoul(name.substr(1)));
      if (index != p_columns.size() + 1)
        throw Error(ErrorCode::ParseError, "header column " + std::to_string(c + 1) + " '" + name +
                                               "': expected p" + std::to_string(p_columns.size() + 1));
      p_columns.push_back(c);
    } else if (name.rfind("struct:", 0) == 0 && name.size() > 7) {
      struct_columns.emplace_back(name.substr(7), c);
    } else if (name == "y") {
      y_column = c;
    } else {
      throw Error(ErrorCode::ParseError, "header column " + std::to_string(c + 1) + ": unknown column '" + name + "'");
    }
  }
  if (p_columns.empty()) throw Error(ErrorCode::ParseError, "header has no p1..ps columns");
  const bool has_y = y_column != std::numeric_limits<std::size_t>::max();
  if (require_response && !has_y) throw Error(ErrorCode::ParseError, "header has no 'y' column");
  if (lines.size() == 1) throw Error(ErrorCode::ParseError, "no data rows");

  const std::size_t row_count = lines.size() - 1;
  std::vector<std::vector<std::string>> cells;
  cells.reserve(row_count);
  for (std::size_t r = 0; r < row_count; ++r) {
    auto fields = split_csv_line(lines[r + 1]);
    if (fields.size() != header.size())
      throw Error(ErrorCode::ParseError, "row " + std::to_string(r + 1) + ": expected " + std::to_string(header.size()) +
                                             " fields, found " + std::to_string(fields.size()));
    cells.push_back(std::move(fields));
  }

  // A structure column is numeric when every value parses as a number.
  std::vector<bool> numeric(struct_columns.size(), true);
  for (std::size_t k = 0; k < struct_columns.size(); ++k) {
    double tmp = 0.0;
    for (const auto& row : cells) {
      if (!parse_double(row[struct_columns[k].second], tmp)) {
        numeric[k] = false;
        break;
      }
    }
  }

  ParsedTable table{Design({DesignEntry{make_community({1.0}), 1}}), {}, has_y};
  std::vector<DesignEntry> entries;
  for (std::size_t r = 0; r < row_count; ++r) {
    const auto& row = cells[r];
    std::vector<double> p(p_columns.size());
    for (std::size_t i = 0; i < p_columns.size(); ++i) {
      const std::string& cell = row[p_columns[i]];
      if (cell.empty()) {
        p[i] = 0.0;
      } else if (!parse_double(cell, p[i])) {
        throw Error(ErrorCode::ParseError, "row " + std::to_string(r + 1) + ", column '" + header[p_columns[i]] +
                                               "': not a number: '" + cell + "'");
      }
    }
    Structures structures;
    for (std::size_t k = 0; k < struct_columns.size(); ++k) {
      const std::string& cell = row[struct_columns[k].second];
      if (numeric[k]) {
        double v = 0.0;
        parse_double(cell, v);
        structures.emplace(struct_columns[k].first, v);
      } else {
        if (cell.empty())
          throw Error(ErrorCode::ParseError, "row " + std::to_string(r + 1) + ", column 'struct:" +
                                                 struct_columns[k].first + "': empty level");
        structures.emplace(struct_columns[k].first, cell);
      }
    }
    Community community;
    try {
      community = make_community(std::move(p), std::move(structures));
    } catch (const Error& e) {
      throw Error(e.code(), "row " + std::to_string(r + 1) + ": " + e.what());
    }
    if (has_y) {
      double y = 0.0;
      if (!parse_double(row[y_column], y))
        throw Error(ErrorCode::ParseError, "row " + std::to_string(r + 1) + ", column 'y': not a finite number: '" +
                                               row[y_column] + "'");
      table.response.push_back(y);
    }
    if (!entries.empty() && entries.back().community == community) {
      ++entries.back().multiplicity;
    } else {
      entries.push_back(DesignEntry{std::move(community), 1});
    }
  }
  table.design = Design(std::move(entries));
  return table;
}

std::string format_structure(const StructureValue& value) {
  if (const auto* d = std::get_if<double>(&value)) return format_double(*d);
  return std::get<std::string>(value);
}

std::string format_table(const Design& design, std::span<const double> response, bool with_response) {
  std::ostringstream out;
  const std::size_t s = design.species_count();
  for (std::size_t i = 0; i < s; ++i) out << (i ? "," : "") << 'p' << (i + 1);
  const auto& first = design.entries().front().community.structures();
  for (const auto& [name, value] : first) out << ",struct:" << name;
  if (with_response) out << ",y";
  out << '\n';
  std::size_t row = 0;
  for (const auto& entry : design.entries()) {
    for (int m = 0; m < entry.multiplicity; ++m) {
      const auto& p = entry.community.proportions();
      for (std::size_t i = 0; i < s; ++i) out << (i ? "," : "") << format_double(p[i]);
      for (const auto& [name, value] : entry.community.structures()) out << ',' << format_structure(value);
      if (with_response) out << ',' << format_double(response[row]);
      out << '\n';
      ++row;
    }
  }
  return out.str();
}

Design replicate(std::vector<std::vector<double>> rows, int multiplicity) {
  std::vector<DesignEntry> entries;
  entries.reserve(rows.size());
  for (auto& p : rows) entries.push_back(DesignEntry{make_community(std::move(p)), multiplicity});
  return Design(std::move(entries));
}

std::vector<double> equal_on(int species, std::span<const int> members) {
  std::vector<double> p(static_cast<std::size_t>(species), 0.0);
  const double share = 1.0 / static_cast<double>(members.size());
  for (int m : members) p[static_cast<std::size_t>(m)] = share;
  return p;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

std::size_t Community::richness() const noexcept {
  return static_cast<std::size_t>(std::count_if(proportions_.begin(), proportions_.end(), [](double p) { return p > 0.0; }));
}

Community make_community(std::vector<double> proportions, Structures structures) {
  if (proportions.empty()) throw Error(ErrorCode::EmptyProportions, "proportion vector is empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < proportions.size(); ++i) {
    const double p = proportions[i];
    if (!std::isfinite(p)) throw Error(ErrorCode::ParseError, "proportion " + std::to_string(i + 1) + " is not finite");
    if (p < 0.0)
      throw Error(ErrorCode::NegativeProportion, "proportion " + std::to_string(i + 1) + " = " + format_double(p));
    if (p > 1.0) throw Error(ErrorCode::SumNotOne, "proportion " + std::to_string(i + 1) + " exceeds 1");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance)
    throw Error(ErrorCode::SumNotOne, "proportions sum to " + format_double(sum));
  Community c;
  c.proportions_ = std::move(proportions);
  c.structures_ = std::move(structures);
  return c;
}

CommunityKey community_key(const Community& community) {
  CommunityKey key;
  key.reserve(community.species_count());
  for (double p : community.proportions()) key.push_back(std::llround(p * 1e6));
  return key;
}

Design::Design(std::vector<DesignEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw Error(ErrorCode::InvalidDesign, "design has no communities");
  species_count_ = entries_.front().community.species_count();
  std::set<std::string> names;
  for (const auto& [name, value] : entries_.front().community.structures()) names.insert(name);
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto& e = entries_[k];
    if (e.community.species_count() != species_count_)
      throw Error(ErrorCode::InvalidDesign, "community " + std::to_string(k + 1) + " has " +
                                                std::to_string(e.community.species_count()) + " species, expected " +
                                                std::to_string(species_count_));
    if (e.multiplicity < 1)
      throw Error(ErrorCode::InvalidDesign, "community " + std::to_string(k + 1) + " has multiplicity < 1");
    std::set<std::string> these;
    for (const auto& [name, value] : e.community.structures()) these.insert(name);
    if (these != names)
      throw Error(ErrorCode::InvalidDesign, "community " + std::to_string(k + 1) + " has different structure covariates");
  }
}

std::size_t Design::row_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.multiplicity);
  return n;
}

std::vector<Community> Design::rows() const {
  std::vector<Community> out;
  out.reserve(row_count());
  for (const auto& e : entries_)
    for (int m = 0; m < e.multiplicity; ++m) out.push_back(e.community);
  return out;
}

std::size_t Design::distinct_community_count() const {
  std::set<CommunityKey> keys;
  for (const auto& e : entries_) keys.insert(community_key(e.community));
  return keys.size();
}

Design four_species_design() {
  constexpr double third = 1.0 / 3.0;
  constexpr double thirtieth = 1.0 / 30.0;
  std::vector<std::vector<double>> rows = {
      {1, 0, 0, 0},
      {0, 1, 0, 0},
      {0, 0, 1, 0},
      {0, 0, 0, 1},
      {0.5, 0.5, 0, 0},
      {0.5, 0, 0.5, 0},
      {0.5, 0, 0, 0.5},
      {0, 0.5, 0.5, 0},
      {0, 0.5, 0, 0.5},
      {0, 0, 0.5, 0.5},
      {third, third, third, 0},
      {third, third, 0, third},
      {third, 0, third, third},
      {0, third, third, third},
      {0.7, 0.1, 0.1, 0.1},
      {0.4, 0.4, 0.1, 0.1},
      {0.4, 0.2, 0.2, 0.2},
      {0.4, 0.1, 0.4, 0.1},
      {0.4, 0.1, 0.1, 0.4},
      {0.3, 0.3, 0.3, 0.1},
      {0.3, 0.3, 0.1, 0.3},
      {0.3, 0.1, 0.3, 0.3},
      {0.25, 0.25, 0.25, 0.25},
      {0.2, 0.4, 0.2, 0.2},
      {0.2, 0.2, 0.4, 0.2},
      {0.2, 0.2, 0.2, 0.4},
      {0.1, 0.7, 0.1, 0.1},
      {0.1, 0.4, 0.4, 0.1},
      {0.1, 0.4, 0.1, 0.4},
      {0.1, 0.3, 0.3, 0.3},
      {0.1, 0.1, 0.7, 0.1},
      {0.1, 0.1, 0.4, 0.4},
      {0.1, 0.1, 0.1, 0.7},
      {0.9, thirtieth, thirtieth, thirtieth},
      {thirtieth, 0.9, thirtieth, thirtieth},
      {thirtieth, thirtieth, 0.9, thirtieth},
      {thirtieth, thirtieth, thirtieth, 0.9},
  };
  return replicate(std::move(rows), 3);
}

Design nine_species_design() {
  constexpr int s = 9;
  // Species subsets (1-based) for richness 3, 4 and 6. Each level is
  // species-balanced: every species appears in 8 subsets.
  static const std::vector<std::vector<int>> three = {
      {4, 8, 9}, {2, 8, 9}, {6, 7, 9}, {4, 7, 9}, {1, 6, 9}, {3, 5, 9}, {2, 5, 9}, {1, 3, 9},
      {6, 7, 8}, {3, 7, 8}, {2, 6, 8}, {4, 5, 8}, {1, 5, 8}, {1, 3, 8}, {4, 5, 7}, {1, 5, 7},
      {2, 3, 7}, {1, 2, 7}, {3, 5, 6}, {2, 5, 6}, {3, 4, 6}, {1, 4, 6}, {2, 3, 4}, {1, 2, 4},
  };
  static const std::vector<std::vector<int>> four = {
      {2, 7, 8, 9}, {1, 5, 8, 9}, {2, 3, 8, 9}, {5, 6, 7, 9}, {1, 3, 7, 9}, {3, 4, 6, 9},
      {2, 4, 6, 9}, {1, 4, 5, 9}, {5, 6, 7, 8}, {3, 4, 7, 8}, {1, 4, 6, 8}, {1, 2, 6, 8},
      {3, 4, 5, 8}, {1, 3, 6, 7}, {2, 3, 5, 6}, {1, 2, 3, 5}, {1, 2, 4, 7}, {2, 4, 5, 7},
  };
  static const std::vector<std::vector<int>> six = {
      {3, 5, 6, 7, 8, 9}, {1, 2, 5, 7, 8, 9}, {1, 3, 4, 7, 8, 9}, {1, 4, 5, 6, 8, 9},
      {2, 3, 4, 6, 8, 9}, {2, 4, 5, 6, 7, 9}, {1, 2, 3, 6, 7, 9}, {1, 2, 3, 4, 5, 9},
      {1, 2, 4, 6, 7, 8}, {2, 3, 4, 5, 7, 8}, {1, 2, 3, 5, 6, 8}, {1, 3, 4, 5, 6, 7},
  };

  std::vector<std::vector<double>> rows;
  auto add = [&](const std::vector<int>& one_based) {
    std::vector<int> members;
    for (int m : one_based) members.push_back(m - 1);
    rows.push_back(equal_on(s, members));
  };
  for (int i = 1; i <= s; ++i) add({i});
  for (int i = 1; i <= s; ++i)
    for (int j = i + 1; j <= s; ++j) add({i, j});
  for (const auto& t : three) add(t);
  for (const auto& t : four) add(t);
  for (const auto& t : six) add(t);
  add({1, 2, 3, 4, 5, 6, 7, 8, 9});
  return replicate(std::move(rows), 3);
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (result > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(result);
}

namespace {

// Lexicographic rank -> subset (combinatorial number system over sorted subsets).
std::vector<int> unrank_subset(int n, int k, std::uint64_t rank) {
  std::vector<int> subset;
  subset.reserve(static_cast<std::size_t>(k));
  int next = 0;
  for (int slot = 0; slot < k; ++slot) {
    for (int candidate = next; candidate < n; ++candidate) {
      const std::uint64_t with = binomial(n - candidate - 1, k - slot - 1);
      if (rank < with) {
        subset.push_back(candidate);
        next = candidate + 1;
        break;
      }
      rank -= with;
    }
  }
  return subset;
}

}  // namespace

Design equiproportional_design(const EquiproportionalRequest& request) {
  const int s = request.species;
  if (s < 1) throw Error(ErrorCode::InvalidArgument, "species count must be positive");
  if (request.richness_levels.empty() || request.richness_levels.size() != request.communities_per_level.size())
    throw Error(ErrorCode::InvalidArgument, "richness_levels and communities_per_level must be non-empty and equal length");
  if (request.reps.size() != 1 && request.reps.size() != request.richness_levels.size())
    throw Error(ErrorCode::InvalidArgument, "reps must have one entry or one per richness level");

  Rng rng = Rng::substream(request.seed, {0x64657369676eULL});  // "design"
  std::vector<DesignEntry> entries;
  for (std::size_t level = 0; level < request.richness_levels.size(); ++level) {
    const int r = request.richness_levels[level];
    const std::int64_t count = request.communities_per_level[level];
    const int reps = request.reps.size() == 1 ? request.reps[0] : request.reps[level];
    if (r < 1 || r > s)
      throw Error(ErrorCode::RichnessExceedsSpecies,
                  "richness " + std::to_string(r) + " not in [1, " + std::to_string(s) + "]");
    if (reps < 1) throw Error(ErrorCode::InvalidArgument, "reps must be positive");
    if (count < 0) throw Error(ErrorCode::InvalidArgument, "community count must be non-negative");
    const std::uint64_t total = binomial(s, r);
    if (static_cast<std::uint64_t>(count) > total)
      throw Error(ErrorCode::CountExceedsSubsets, "requested " + std::to_string(count) + " communities of richness " +
                                                      std::to_string(r) + " but only " + std::to_string(total) +
                                                      " subsets exist");
    std::vector<std::uint64_t> ranks;
    if (static_cast<std::uint64_t>(count) == total) {
      for (std::uint64_t k = 0; k < total; ++k) ranks.push_back(k);
    } else {
      std::set<std::uint64_t> chosen;
      while (chosen.size() < static_cast<std::size_t>(count)) chosen.insert(rng.below(total));
      ranks.assign(chosen.begin(), chosen.end());
    }
    for (std::uint64_t rank : ranks) {
      const auto members = unrank_subset(s, r, rank);
      entries.push_back(DesignEntry{make_community(equal_on(s, members)), reps});
    }
  }
  return Design(std::move(entries));
}

Design load_design_csv(const std::filesystem::path& path) { return parse_design_csv(read_file(path)); }

Design parse_design_csv(const std::string& text) { return parse_table(text, false).design; }

void save_design_csv(const Design& design, const std::filesystem::path& path) {
  write_file(path, format_design_csv(design));
}

std::string format_design_csv(const Design& design) { return format_table(design, {}, false); }

Dataset load_dataset_csv(const std::filesystem::path& path) { return parse_dataset_csv(read_file(path)); }

Dataset parse_dataset_csv(const std::string& text) {
  auto table = parse_table(text, true);
  return Dataset{std::move(table.design), std::move(table.response)};
}

std::string format_dataset_csv(const Design& design, std::span<const double> response) {
  if (response.size() != design.row_count())
    throw Error(ErrorCode::DimensionMismatch, "response has " + std::to_string(response.size()) + " values for " +
                                                  std::to_string(design.row_count()) + " rows");
  return format_table(design, response, true);
}

}  // namespace gdi
