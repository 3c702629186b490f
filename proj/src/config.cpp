#include "gdi/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "gdi/error.hpp"

namespace gdi {

namespace {

using nlohmann::json;

class TomlReader {
 public:
  explicit TomlReader(std::string_view text) : text_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_blank_lines();
      if (at_end()) break;
      if (peek() == '[') {
        ++pos_;
        if (!at_end() && peek() == '[') fail("arrays of tables are not supported");
        skip_spaces();
        const auto path = parse_key_path();
        skip_spaces();
        expect(']');
        end_of_line();
        table = &root;
        for (const auto& part : path) {
          json& next = (*table)[part];
          if (next.is_null()) next = json::object();
          if (!next.is_object()) fail("'" + part + "' is not a table");
          table = &next;
        }
        if (!defined_tables_.insert(join(path)).second) fail("table [" + join(path) + "] defined twice");
        continue;
      }
      assign(*table);
      end_of_line();
    }
    return root;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::set<std::string> defined_tables_;

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  std::size_t line() const {
    std::size_t n = 1;
    for (std::size_t k = 0; k < pos_ && k < text_.size(); ++k)
      if (text_[k] == '\n') ++n;
    return n;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line()) + ": " + msg);
  }

  static std::string join(const std::vector<std::string>& path) {
    std::string out;
    for (const auto& p : path) out += (out.empty() ? "" : ".") + p;
    return out;
  }

  void skip_spaces() {
    while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_comment() {
    if (!at_end() && peek() == '#')
      while (!at_end() && peek() != '\n') ++pos_;
  }

  void skip_blank_lines() {
    while (!at_end()) {
      skip_spaces();
      skip_comment();
      if (!at_end() && (peek() == '\n' || peek() == '\r')) {
        ++pos_;
        continue;
      }
      break;
    }
  }

  // Whitespace, comments and newlines, as allowed inside arrays.
  void skip_all() {
    while (!at_end()) {
      skip_spaces();
      skip_comment();
      if (!at_end() && (peek() == '\n' || peek() == '\r')) {
        ++pos_;
        continue;
      }
      break;
    }
  }

  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (at_end()) return;
    if (peek() == '\r') ++pos_;
    if (at_end() || peek() == '\n') {
      if (!at_end()) ++pos_;
      return;
    }
    fail(std::string("unexpected '") + peek() + "' after value");
  }

  void expect(char c) {
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string parse_key() {
    if (at_end()) fail("expected a key");
    if (peek() == '"' || peek() == '\'') return parse_string();
    std::string key;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
      key += text_[pos_++];
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::vector<std::string> parse_key_path() {
    std::vector<std::string> path{parse_key()};
    skip_spaces();
    while (!at_end() && peek() == '.') {
      ++pos_;
      skip_spaces();
      path.push_back(parse_key());
      skip_spaces();
    }
    return path;
  }

  void assign(json& table) {
    const auto path = parse_key_path();
    skip_spaces();
    expect('=');
    skip_spaces();
    json* target = &table;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      json& next = (*target)[path[k]];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) fail("'" + path[k] + "' is not a table");
      target = &next;
    }
    if (target->contains(path.back())) fail("key '" + join(path) + "' defined twice");
    (*target)[path.back()] = parse_value();
  }

  std::string parse_string() {
    const char quote = peek();
    ++pos_;
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = text_[pos_++];
      if (c == quote) break;
      if (c == '\\' && quote == '"') {
        if (at_end()) fail("unterminated string");
        const char e = text_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape '\\") + e + "'");
        }
        continue;
      }
      out += c;
    }
    return out;
  }

  json parse_value() {
    if (at_end()) fail("expected a value");
    const char c = peek();
    if (c == '"' || c == '\'') return parse_string();
    if (c == '[') return parse_array();
    if (c == '{') return parse_inline_table();
    std::string word;
    while (!at_end() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != ',' && peek() != ']' &&
           peek() != '}' && peek() != '#')
      word += text_[pos_++];
    if (word == "true") return true;
    if (word == "false") return false;
    return parse_number(word);
  }

  json parse_number(std::string word) {
    std::erase(word, '_');
    if (word == "inf" || word == "+inf") return std::numeric_limits<double>::infinity();
    if (word == "-inf") return -std::numeric_limits<double>::infinity();
    if (word.empty()) fail("expected a value");
    const bool integral = word.find_first_of(".eE") == std::string::npos;
    std::size_t used = 0;
    try {
      if (integral) {
        const long long v = std::stoll(word, &used);
        if (used == word.size()) return v;
      } else {
        const double v = std::stod(word, &used);
        if (used == word.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("cannot read value '" + word + "'");
  }

  json parse_array() {
    expect('[');
    json arr = json::array();
    skip_all();
    while (true) {
      if (at_end()) fail("unterminated array");
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      arr.push_back(parse_value());
      skip_all();
      if (!at_end() && peek() == ',') {
        ++pos_;
        skip_all();
      } else if (at_end() || peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  json parse_inline_table() {
    expect('{');
    json obj = json::object();
    skip_spaces();
    if (!at_end() && peek() == '}') {
      ++pos_;
      return obj;
    }
    while (true) {
      assign(obj);
      skip_spaces();
      if (at_end()) fail("unterminated inline table");
      if (peek() == '}') {
        ++pos_;
        return obj;
      }
      expect(',');
      skip_spaces();
    }
  }
};

// Collects every problem before throwing.
class Validator {
 public:
  void add(std::string msg) { problems_.push_back(std::move(msg)); }
  bool ok() const { return problems_.empty(); }
  void raise() const {
    if (problems_.empty()) return;
    std::string msg;
    for (const auto& p : problems_) msg += "\n  - " + p;
    throw Error(ErrorCode::ConfigInvalid, std::to_string(problems_.size()) + " problem(s):" + msg);
  }

  void allow(const json& table, const std::string& where, std::initializer_list<std::string_view> keys) {
    if (!table.is_object()) {
      add(where + " must be a table");
      return;
    }
    for (const auto& [k, v] : table.items()) {
      bool known = false;
      for (auto key : keys) known = known || key == k;
      if (!known) add("unknown key '" + k + "' in " + where);
    }
  }

  std::optional<double> number(const json& t, const std::string& key, const std::string& where) {
    if (!t.contains(key)) return std::nullopt;
    if (!t[key].is_number()) {
      add(where + "." + key + " must be a number");
      return std::nullopt;
    }
    return t[key].get<double>();
  }

  std::optional<std::string> string(const json& t, const std::string& key, const std::string& where) {
    if (!t.contains(key)) return std::nullopt;
    if (!t[key].is_string()) {
      add(where + "." + key + " must be a string");
      return std::nullopt;
    }
    return t[key].get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const json& t, const std::string& key, const std::string& where) {
    if (!t.contains(key)) return std::nullopt;
    const json& v = t[key];
    if (v.is_number()) return std::vector<double>{v.get<double>()};
    if (!v.is_array()) {
      add(where + "." + key + " must be an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) {
        add(where + "." + key + " must be an array of numbers");
        return std::nullopt;
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::optional<std::vector<std::string>> strings(const json& t, const std::string& key, const std::string& where) {
    if (!t.contains(key)) return std::nullopt;
    const json& v = t[key];
    if (v.is_string()) return std::vector<std::string>{v.get<std::string>()};
    if (!v.is_array()) {
      add(where + "." + key + " must be an array of strings");
      return std::nullopt;
    }
    std::vector<std::string> out;
    for (const auto& x : v) {
      if (!x.is_string()) {
        add(where + "." + key + " must be an array of strings");
        return std::nullopt;
      }
      out.push_back(x.get<std::string>());
    }
    return out;
  }

  template <class F>
  void guard(F&& f) {
    try {
      f();
    } catch (const Error& e) {
      add(e.what());
    }
  }

 private:
  std::vector<std::string> problems_;
};

const json& section(const json& doc, const char* name) {
  static const json empty = json::object();
  return doc.contains(name) ? doc[name] : empty;
}

std::vector<int> to_ints(const std::vector<double>& v, Validator& check, const std::string& where) {
  std::vector<int> out;
  for (double x : v) {
    if (x != std::floor(x) || x < 0 || x > 1e9) {
      check.add(where + " must hold non-negative integers");
      return {};
    }
    out.push_back(static_cast<int>(x));
  }
  return out;
}

}  // namespace

nlohmann::json parse_toml(std::string_view text) { return TomlReader(text).parse(); }

Grouping builtin_grouping(std::string_view builtin) {
  if (builtin == "four") return parse_grouping("1,1,2,2");
  if (builtin == "nine") return parse_grouping("1,1,1,1,1,2,2,3,3");
  throw Error(ErrorCode::InvalidArgument, "unknown builtin design '" + std::string(builtin) + "'");
}

StudyConfig study_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  Validator check;
  StudyConfig c;
  if (!doc.is_object()) {
    check.add("config must be a table");
    check.raise();
  }
  check.allow(doc, "config", {"studies", "replicates", "seed", "design", "truth", "grid", "procedures", "profile"});

  if (auto v = check.strings(doc, "studies", "config")) {
    c.studies.clear();
    for (const auto& s : *v) check.guard([&] { c.studies.push_back(parse_study_kind(s)); });
  }
  if (auto v = check.number(doc, "replicates", "config")) {
    if (*v < 1 || *v != std::floor(*v))
      check.add("replicates must be a positive integer");
    else
      c.replicates = static_cast<int>(*v);
  }
  if (doc.contains("seed")) {
    if (doc["seed"].is_number_unsigned() || (doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0))
      c.master_seed = doc["seed"].get<std::uint64_t>();
    else
      check.add("seed must be a non-negative integer");
  }

  // [design]
  const json& design = section(doc, "design");
  check.allow(design, "[design]", {"builtin", "csv", "equiproportional", "grouping"});
  std::optional<Grouping> grouping;
  bool default_truth = false;
  {
    const int sources = static_cast<int>(design.contains("builtin")) + static_cast<int>(design.contains("csv")) +
                        static_cast<int>(design.contains("equiproportional"));
    if (sources > 1) check.add("[design] takes exactly one of builtin, csv, equiproportional");
    if (auto b = check.string(design, "builtin", "[design]")) {
      if (*b == "four" || *b == "nine") {
        c.design_label = *b;
        c.design = *b == "four" ? four_species_design() : nine_species_design();
        c.truth = *b == "four" ? four_species_truth() : nine_species_truth();
        grouping = builtin_grouping(*b);
        default_truth = true;
      } else {
        check.add("[design].builtin must be \"four\" or \"nine\", got \"" + *b + "\"");
      }
    } else if (auto path = check.string(design, "csv", "[design]")) {
      std::filesystem::path p(*path);
      if (p.is_relative()) p = base_dir / p;
      c.design_label = "csv:" + *path;
      check.guard([&] { c.design = load_design_csv(p); });
    } else if (design.contains("equiproportional")) {
      const json& eq = design["equiproportional"];
      const std::string where = "[design.equiproportional]";
      check.allow(eq, where, {"species", "levels", "counts", "reps", "seed"});
      EquiproportionalRequest req;
      auto species = check.number(eq, "species", where);
      auto levels = check.numbers(eq, "levels", where);
      auto counts = check.numbers(eq, "counts", where);
      if (!species || !levels || !counts) check.add(where + " needs species, levels and counts");
      if (auto r = check.numbers(eq, "reps", where)) req.reps = to_ints(*r, check, where + ".reps");
      if (auto sd = check.number(eq, "seed", where)) req.seed = static_cast<std::uint64_t>(*sd);
      if (species && levels && counts) {
        req.species = static_cast<int>(*species);
        req.richness_levels = to_ints(*levels, check, where + ".levels");
        for (int n : to_ints(*counts, check, where + ".counts")) req.communities_per_level.push_back(n);
        c.design_label = "equiproportional";
        check.guard([&] { c.design = equiproportional_design(req); });
      }
    }
    if (auto g = check.string(design, "grouping", "[design]")) check.guard([&] { grouping = parse_grouping(*g); });
  }
  const std::size_t species = c.design.species_count();
  if (grouping && grouping->species_count() != species)
    check.add("[design].grouping covers " + std::to_string(grouping->species_count()) + " species, design has " +
              std::to_string(species));

  // [truth]
  const json& truth = section(doc, "truth");
  check.allow(truth, "[truth]", {"identity", "pairwise", "structure_effects"});
  if (auto id = check.numbers(truth, "identity", "[truth]")) {
    c.truth.identity_effects = *id;
  } else if (!default_truth) {
    check.add("[truth].identity is required for non-builtin designs");
  }
  if (truth.contains("pairwise")) {
    const json& pw = truth["pairwise"];
    bool good = pw.is_array();
    std::vector<std::vector<double>> m;
    if (good)
      for (const auto& row : pw) {
        if (!row.is_array()) {
          good = false;
          break;
        }
        std::vector<double> r;
        for (const auto& x : row) {
          if (!x.is_number()) good = false;
          else r.push_back(x.get<double>());
        }
        m.push_back(std::move(r));
      }
    if (!good)
      check.add("[truth].pairwise must be an array of numeric rows");
    else
      c.truth.pairwise_effects = std::move(m);
  } else if (!default_truth) {
    check.add("[truth].pairwise is required for non-builtin designs");
  }
  if (truth.contains("structure_effects")) {
    const json& se = truth["structure_effects"];
    if (!se.is_object()) check.add("[truth].structure_effects must be a table");
    else
      for (const auto& [k, v] : se.items()) {
        if (!v.is_number()) check.add("[truth].structure_effects." + k + " must be a number");
        else c.truth.structure_effects[k] = v.get<double>();
      }
  }
  if (c.truth.identity_effects.size() != species)
    check.add("truth has " + std::to_string(c.truth.identity_effects.size()) + " identity effects, design has " +
              std::to_string(species) + " species");
  else if (c.truth.pairwise_effects.size() != species)
    check.add("[truth].pairwise must be " + std::to_string(species) + " x " + std::to_string(species));
  else
    for (const auto& row : c.truth.pairwise_effects)
      if (row.size() != species) {
        check.add("[truth].pairwise must be " + std::to_string(species) + " x " + std::to_string(species));
        break;
      }

  // [grid]
  const json& grid = section(doc, "grid");
  check.allow(grid, "[grid]", {"theta", "sigma"});
  if (auto v = check.numbers(grid, "theta", "[grid]")) c.thetas = *v;
  if (auto v = check.numbers(grid, "sigma", "[grid]")) c.sigmas = *v;

  // [procedures]
  const json& proc = section(doc, "procedures");
  check.allow(proc, "[procedures]",
              {"run", "candidates", "reference", "criterion", "alpha", "reparam_family", "reparameterized"});
  if (auto v = check.strings(proc, "run", "[procedures]")) {
    c.procedures.clear();
    for (const auto& s : *v) check.guard([&] { c.procedures.push_back(parse_procedure(s)); });
  }
  bool reparam_candidates = false;
  if (proc.contains("reparameterized")) {
    if (proc["reparameterized"].is_boolean()) reparam_candidates = proc["reparameterized"].get<bool>();
    else check.add("[procedures].reparameterized must be true or false");
  }
  auto make_spec = [&](const std::string& name) -> std::optional<InteractionSpec> {
    std::optional<InteractionSpec> spec;
    check.guard([&] {
      const Family f = parse_family(name);
      if (f == Family::CommunityFactor) throw Error(ErrorCode::ConfigInvalid, "community_factor cannot be a candidate");
      InteractionSpec s{f, std::nullopt, reparam_candidates && has_theta(f)};
      if (f == Family::FunctionalGroup) {
        if (!grouping) throw Error(ErrorCode::MissingGrouping, "functional_group needs [design].grouping");
        s.grouping = grouping;
      }
      spec = s;
    });
    return spec;
  };
  if (auto v = check.strings(proc, "candidates", "[procedures]")) {
    c.candidates.clear();
    for (const auto& s : *v)
      if (auto spec = make_spec(s)) c.candidates.push_back(*spec);
  } else if (grouping) {
    c.candidates = default_candidates(*grouping, reparam_candidates);
  } else {
    c.candidates = {InteractionSpec{Family::AveragePairwise, std::nullopt, reparam_candidates},
                    InteractionSpec{Family::AdditiveSpecies, std::nullopt, reparam_candidates},
                    InteractionSpec{Family::FullPairwise, std::nullopt, reparam_candidates}};
  }
  if (auto r = check.string(proc, "reference", "[procedures]"))
    if (auto spec = make_spec(*r)) c.selection.reference = *spec;
  if (auto r = check.string(proc, "criterion", "[procedures]"))
    check.guard([&] { c.selection.criterion = parse_criterion(*r); });
  if (auto a = check.number(proc, "alpha", "[procedures]")) {
    if (!(*a > 0.0 && *a < 1.0)) check.add("[procedures].alpha must be in (0, 1)");
    else c.selection.profile.alpha = *a;
  }
  if (auto r = check.string(proc, "reparam_family", "[procedures]"))
    check.guard([&] { c.reparam_family = parse_family(*r); });

  // [profile]
  const json& prof = section(doc, "profile");
  check.allow(prof, "[profile]", {"lower", "upper", "tol", "grid_points", "ci_tol"});
  auto& po = c.selection.profile;
  if (auto v = check.number(prof, "lower", "[profile]")) po.lower = *v;
  if (auto v = check.number(prof, "upper", "[profile]")) po.upper = *v;
  if (auto v = check.number(prof, "tol", "[profile]")) po.tol = *v;
  if (auto v = check.number(prof, "ci_tol", "[profile]")) po.ci_tol = *v;
  if (auto v = check.number(prof, "grid_points", "[profile]")) po.grid_points = static_cast<int>(*v);
  if (!(po.lower >= kMinTheta && po.upper > po.lower)) check.add("[profile] needs 0.01 <= lower < upper");
  if (!(po.tol > 0.0) || !(po.ci_tol > 0.0)) check.add("[profile] tolerances must be positive");
  if (po.grid_points < 3) check.add("[profile].grid_points must be >= 3");

  for (double t : c.thetas)
    if (!(t >= kMinTheta)) check.add("[grid].theta value " + format_double(t) + " is below 0.01");
  for (double s : c.sigmas)
    if (!(s >= 0.0)) check.add("[grid].sigma value " + format_double(s) + " is negative");
  if (c.thetas.empty()) check.add("[grid].theta is empty");
  if (c.sigmas.empty()) check.add("[grid].sigma is empty");
  check.raise();
  return c;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  json doc;
  if (path.extension() == ".json") {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, std::string("config JSON: ") + e.what());
    }
  } else {
    doc = parse_toml(text);
  }
  return study_config_from_json(doc, path.parent_path());
}

}  // namespace gdi
