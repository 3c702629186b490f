#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "../../tools/cli.hpp"
#include "gdi/config.hpp"
#include "gdi/error.hpp"

using namespace gdi;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gdi");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("gdi_unit_" + std::to_string(::getpid()) + "_" + std::to_string(next_++))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path file(const std::string& name, const std::string& text = {}) const {
    const fs::path p = path_ / name;
    if (!text.empty()) std::ofstream(p) << text;
    return p;
  }

 private:
  fs::path path_;
  static inline int next_ = 0;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error(const std::string& toml) {
  try {
    study_config_from_json(parse_toml(toml));
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
    return e.what();
  }
  ADD_FAILURE() << "config accepted";
  return {};
}

}  // namespace

TEST(Toml, Subset) {
  const auto doc = parse_toml(R"(
# comment
studies = ["robustness", "selection"]
seed = 12
[design]
builtin = "four"
[grid]
theta = [0.35,
         0.77]  # trailing
sigma = [1.0]
[truth]
structure_effects = { "trt=a" = 5, "trt=b" = 8.5 }
[profile]
upper = 2.0
flag.nested = true
)");
  EXPECT_EQ(doc["studies"][1], "selection");
  EXPECT_EQ(doc["seed"], 12);
  EXPECT_EQ(doc["design"]["builtin"], "four");
  EXPECT_EQ(doc["grid"]["theta"].size(), 2u);
  EXPECT_EQ(doc["truth"]["structure_effects"]["trt=b"], 8.5);
  EXPECT_EQ(doc["profile"]["flag"]["nested"], true);
}

TEST(Toml, ErrorNamesLine) {
  try {
    parse_toml("a = 1\nb = [1, 2\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
  try {
    parse_toml("a = 1\nb = @\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(StudyConfig, BuiltinDefaults) {
  const StudyConfig c = study_config_from_json(parse_toml("[design]\nbuiltin = \"nine\"\n"));
  EXPECT_EQ(c.design.species_count(), 9u);
  EXPECT_EQ(c.truth.identity_effects.size(), 9u);
  EXPECT_EQ(c.candidates.size(), 4u);
  EXPECT_EQ(c.replicates, 200);
}

TEST(StudyConfig, ListsEveryProblem) {
  const std::string msg = config_error(R"(
replicates = 0
studies = ["robustness", "bogus"]
[design]
builtin = "five"
[grid]
theta = "x"
)");
  EXPECT_NE(msg.find("replicates"), std::string::npos) << msg;
  EXPECT_NE(msg.find("bogus"), std::string::npos) << msg;
  EXPECT_NE(msg.find("five"), std::string::npos) << msg;
  EXPECT_NE(msg.find("theta"), std::string::npos) << msg;
}

TEST(StudyConfig, UnknownKeyRejected) {
  EXPECT_NE(config_error("[grid]\nthetas = [1.0]\n").find("thetas"), std::string::npos);
}

TEST(StudyConfig, EquiproportionalNeedsTruth) {
  const std::string msg = config_error("[design.equiproportional]\nspecies = 3\nlevels = [1, 3]\ncounts = [3, 1]\n");
  EXPECT_NE(msg.find("identity"), std::string::npos) << msg;
}

TEST(StudyConfig, ShippedConfigsLoad) {
  for (const char* name : {"four_species.toml", "nine_species.toml", "six_species_treatment.toml"}) {
    const fs::path p = fs::path(GDI_SOURCE_DIR) / "configs" / name;
    EXPECT_NO_THROW(load_study_config(p)) << p;
  }
  const StudyConfig six = load_study_config(fs::path(GDI_SOURCE_DIR) / "configs" / "six_species_treatment.toml");
  EXPECT_EQ(six.design.species_count(), 6u);
  EXPECT_EQ(six.truth.structure_effects.at("trt=b"), 8.0);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"design"}).code, 2);
  EXPECT_EQ(run_cli({"design", "--builtin", "four", "--equiproportional", "s=3"}).code, 2);
  EXPECT_EQ(run_cli({"fit"}).code, 2);
  EXPECT_EQ(run_cli({"bogus"}).code, 2);
}

TEST(Cli, DesignBuiltins) {
  const CliRun four = run_cli({"design", "--builtin", "four"});
  ASSERT_EQ(four.code, 0) << four.err;
  EXPECT_EQ(parse_design_csv(four.out).distinct_community_count(), 37u);
  const CliRun nine = run_cli({"design", "--builtin", "nine"});
  ASSERT_EQ(nine.code, 0) << nine.err;
  EXPECT_EQ(parse_design_csv(nine.out).distinct_community_count(), 100u);
  const CliRun eq = run_cli({"design", "--equiproportional", "s=3", "levels=1,3", "counts=3,1", "seed=1"});
  ASSERT_EQ(eq.code, 0) << eq.err;
  EXPECT_EQ(parse_design_csv(eq.out).community_count(), 4u);
}

TEST(Cli, FitAndSelect) {
  TempDir dir;
  TruthModel t = four_species_truth();
  t.theta_true = 0.6;
  Rng rng(4);
  const Design d = four_species_design();
  const fs::path data = dir.file("data.csv", format_dataset_csv(d, simulate_response(d, t, rng)));

  const CliRun missing = run_cli({"fit", "--data", data.string(), "--family", "functional_group"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("MissingGrouping"), std::string::npos);

  const fs::path report = dir.file("fit.json");
  const CliRun est = run_cli({"fit", "--data", data.string(), "--family", "full_pairwise", "--theta", "estimate", "--out",
                           report.string()});
  ASSERT_EQ(est.code, 0) << est.err;
  const auto j = nlohmann::json::parse(slurp(report));
  const double theta_hat = j.at("theta_estimate").at("theta_hat");
  Rng again(4);
  const auto y = simulate_response(d, t, again);
  EXPECT_NEAR(theta_hat, estimate_theta(d, y, {Family::FullPairwise, std::nullopt, false}).theta_hat, 1e-12);
  EXPECT_TRUE(j.at("fit").at("theta_was_estimated").get<bool>());
  EXPECT_EQ(j.at("version"), kToolVersion);

  const CliRun fixed = run_cli({"fit", "--data", data.string(), "--family", "avg", "--theta", "1", "--out", report.string()});
  ASSERT_EQ(fixed.code, 0) << fixed.err;
  EXPECT_NE(fixed.out.find("(fixed)"), std::string::npos);
  EXPECT_FALSE(nlohmann::json::parse(slurp(report)).at("fit").at("theta_was_estimated").get<bool>());

  const fs::path sel = dir.file("sel.json");
  const CliRun s = run_cli({"select", "--data", data.string(), "--grouping", "1,1,2,2", "--out", sel.string()});
  ASSERT_EQ(s.code, 0) << s.err;
  const auto sj = nlohmann::json::parse(slurp(sel));
  EXPECT_EQ(sj.at("selection").at("procedure"), "b");
  EXPECT_TRUE(sj.contains("lack_of_fit"));
  EXPECT_NE(s.out.find("lack of fit"), std::string::npos);
}

TEST(Cli, StudySmokeAndDeterminism) {
  TempDir dir;
  const fs::path cfg = dir.file("study.toml", "[design]\nbuiltin = \"four\"\n[grid]\ntheta = [0.35, 1.0]\n");
  const CliRun a = run_cli({"study", "--config", cfg.string(), "--replicates", "1", "--sigma", "0"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find(",average_pairwise,mean,0.35"), std::string::npos) << a.out;
  const CliRun b = run_cli({"study", "--config", cfg.string(), "--replicates", "1", "--sigma", "0", "--threads", "3"});
  EXPECT_EQ(a.out, b.out);
  const CliRun bad = run_cli({"study", "--config", dir.file("missing.toml").string()});
  EXPECT_EQ(bad.code, 1);
}
