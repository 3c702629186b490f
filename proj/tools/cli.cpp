#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"

#include "gdi/config.hpp"
#include "gdi/error.hpp"
#include "gdi/fit.hpp"
#include "gdi/profile.hpp"
#include "gdi/select.hpp"
#include "gdi/simulate.hpp"

namespace gdi::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

nlohmann::json provenance(const std::string& input_text) {
  return {{"tool", "gdi"}, {"version", kToolVersion}, {"input_hash", hex64(fnv1a(input_text))}};
}

std::string fixed(double v, int digits = 4) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "NA";
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void print_coefficients(std::ostream& out, const FitResult& fit) {
  for (const auto& c : fit.coefficients)
    out << "  " << std::left << std::setw(22) << c.name << std::right << std::setw(14) << fixed(c.value, 6) << '\n';
}

InteractionSpec make_spec(const std::string& family, const std::string& grouping, bool reparam) {
  InteractionSpec spec{parse_family(family), std::nullopt, reparam};
  if (!grouping.empty()) spec.grouping = parse_grouping(grouping);
  if (spec.family == Family::FunctionalGroup && !spec.grouping)
    throw Error(ErrorCode::MissingGrouping, "functional_group needs --grouping (e.g. 1,1,2,2)");
  return spec;
}

int env_threads() {
  if (const char* v = std::getenv("GDI_THREADS")) {
    try {
      const int n = std::stoi(v);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

// key=value tokens for --equiproportional.
EquiproportionalRequest parse_equiproportional(const std::vector<std::string>& tokens) {
  EquiproportionalRequest req;
  bool have_s = false, have_levels = false, have_counts = false;
  auto ints = [](const std::string& text) {
    std::vector<long long> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(part, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != part.size()) throw UsageError("'" + text + "' is not a list of integers");
      out.push_back(v);
    }
    return out;
  };
  for (const auto& token : tokens) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw UsageError("expected key=value, got '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    const auto v = ints(value);
    if (key == "s" || key == "species") {
      req.species = static_cast<int>(v.at(0));
      have_s = true;
    } else if (key == "levels") {
      req.richness_levels.assign(v.begin(), v.end());
      have_levels = true;
    } else if (key == "counts") {
      req.communities_per_level.assign(v.begin(), v.end());
      have_counts = true;
    } else if (key == "reps") {
      req.reps.assign(v.begin(), v.end());
    } else if (key == "seed") {
      req.seed = static_cast<std::uint64_t>(v.at(0));
    } else {
      throw UsageError("unknown --equiproportional key '" + key + "'");
    }
  }
  if (!have_s || !have_levels || !have_counts) throw UsageError("--equiproportional needs s=, levels= and counts=");
  return req;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized Diversity-Interactions models: designs, fits, selection and simulation studies", "gdi"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  // design
  auto* design_cmd = app.add_subcommand("design", "Write a design CSV");
  std::string builtin;
  std::vector<std::string> equi;
  std::string design_out;
  auto* builtin_opt = design_cmd->add_option("--builtin", builtin, "Built-in design: four or nine")
                          ->check(CLI::IsMember({"four", "nine"}));
  auto* equi_opt = design_cmd->add_option("--equiproportional", equi,
                                          "Generated design: s=6 levels=1,2,3 counts=6,15,20 [reps=1] [seed=0]");
  builtin_opt->excludes(equi_opt);
  design_cmd->add_option("--out", design_out, "Output file (default stdout)");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit one model to a dataset CSV");
  std::string fit_data, fit_family, fit_grouping, fit_theta = "estimate", fit_out;
  bool fit_reparam = false;
  fit_cmd->add_option("--data", fit_data, "Dataset CSV (p1..ps[,struct:*],y)")->required();
  fit_cmd->add_option("--family", fit_family, "Model family")->required();
  fit_cmd->add_option("--grouping", fit_grouping, "Functional groups, one label per species");
  fit_cmd->add_option("--theta", fit_theta, "estimate, fixed (θ = 1), or a value");
  fit_cmd->add_flag("--reparam", fit_reparam, "Scale interaction terms by 2s^(2θ)/(s(s-1))");
  fit_cmd->add_option("--out", fit_out, "Write the JSON report here");

  // select
  auto* select_cmd = app.add_subcommand("select", "Choose an interaction structure");
  std::string sel_data, sel_procedure = "b", sel_criterion = "aic", sel_reference = "avg", sel_grouping, sel_out,
                        sel_csv;
  std::vector<std::string> sel_candidates;
  bool sel_reparam = false;
  double sel_alpha = 0.05;
  select_cmd->add_option("--data", sel_data, "Dataset CSV")->required();
  select_cmd->add_option("--procedure", sel_procedure, "a, b or c")->check(CLI::IsMember({"a", "b", "c"}));
  select_cmd->add_option("--criterion", sel_criterion, "aic or bic")->check(CLI::IsMember({"aic", "bic"}));
  select_cmd->add_option("--reference", sel_reference, "Reference structure for procedure b: avg or full")
      ->check(CLI::IsMember({"avg", "full", "average_pairwise", "full_pairwise"}));
  select_cmd->add_option("--grouping", sel_grouping, "Functional groups, one label per species");
  select_cmd->add_option("--candidates", sel_candidates, "Candidate families (default avg,fg,add,full)")
      ->delimiter(',');
  select_cmd->add_option("--alpha", sel_alpha, "Level of the θ = 1 test")->check(CLI::Range(1e-12, 0.999999));
  select_cmd->add_flag("--reparam", sel_reparam, "Use the scaled parameterization");
  select_cmd->add_option("--out", sel_out, "Write the JSON report here");
  select_cmd->add_option("--csv", sel_csv, "Write the one-row CSV summary here");

  // study
  auto* study_cmd = app.add_subcommand("study", "Run a simulation study");
  std::string study_config, study_out, study_timings;
  std::optional<int> study_reps, study_threads;
  std::optional<std::uint64_t> study_seed;
  std::optional<double> study_sigma;
  study_cmd->add_option("--config", study_config, "Study config (TOML or .json)")->required();
  study_cmd->add_option("--replicates", study_reps, "Override replicates per setting")->check(CLI::PositiveNumber);
  study_cmd->add_option("--seed", study_seed, "Override the master seed");
  study_cmd->add_option("--threads", study_threads, "Worker threads (default $GDI_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  study_cmd->add_option("--sigma", study_sigma, "Replace the σ grid with one value")->check(CLI::NonNegativeNumber);
  study_cmd->add_option("--out", study_out, "Summary CSV (default stdout)");
  study_cmd->add_option("--timings", study_timings, "Per-dataset timing CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (e.get_name() == "CallForVersion" ? std::string(kToolVersion) + "\n" : app.help());
      return 0;
    }
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  try {
    if (*design_cmd) {
      if (builtin.empty() && equi.empty()) throw UsageError("design needs --builtin or --equiproportional");
      const Design d = !builtin.empty() ? (builtin == "four" ? four_species_design() : nine_species_design())
                                        : equiproportional_design(parse_equiproportional(equi));
      const std::string csv = format_design_csv(d);
      if (design_out.empty()) {
        out << csv;
      } else {
        write_file(design_out, csv);
      }
      err << "design: " << d.community_count() << " communities, " << d.row_count() << " rows\n";
      return 0;
    }

    if (*fit_cmd) {
      const std::string text = read_file(fit_data);
      const Dataset data = parse_dataset_csv(text);
      const InteractionSpec spec = make_spec(fit_family, fit_grouping, fit_reparam);
      const ProfileProblem problem(data.design, data.response, spec);
      nlohmann::json report = provenance(text);
      report["family"] = spec_label(spec);
      FitResult fit;
      std::optional<ThetaEstimate> est;
      if (!has_theta(spec.family) || fit_theta == "fixed") {
        fit = problem.fit(1.0, false);
      } else if (fit_theta == "estimate") {
        est = estimate_theta(problem);
        fit = problem.fit(est->theta_hat, true);
      } else {
        double theta = 0.0;
        try {
          std::size_t used = 0;
          theta = std::stod(fit_theta, &used);
          if (used != fit_theta.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw UsageError("--theta must be estimate, fixed or a number, got '" + fit_theta + "'");
        }
        fit = problem.fit(theta, false);
      }
      report["fit"] = to_json(fit);
      if (est) report["theta_estimate"] = to_json(*est);

      out << "family   " << spec_label(spec) << '\n';
      out << "theta    " << fixed(fit.theta_used, 6) << (fit.theta_was_estimated ? " (estimated)" : " (fixed)") << '\n';
      if (est) {
        out << "CI       [" << (est->ci.lower ? fixed(*est->ci.lower, 6) : std::string("non-convergent")) << ", "
            << (est->ci.upper ? fixed(*est->ci.upper, 6) : std::string("non-convergent")) << "]\n";
        out << "LR θ=1   stat " << fixed(est->lr_vs_one.statistic) << ", p " << fixed(est->lr_vs_one.p_value, 6)
            << '\n';
      }
      out << "n        " << fit.n << "\np        " << fit.p << "\nRSS      " << fixed(fit.rss, 6) << "\nloglik   "
          << fixed(fit.loglik) << '\n';
      if (!fit.perfect_fit) out << "AIC      " << fixed(aic(fit)) << "\nBIC      " << fixed(bic(fit)) << '\n';
      out << "coefficients\n";
      print_coefficients(out, fit);
      for (const auto& d : fit.dropped) err << "warning: column " << d << " is collinear and was dropped\n";
      if (!fit_out.empty()) write_file(fit_out, report.dump(2) + "\n");
      return 0;
    }

    if (*select_cmd) {
      const std::string text = read_file(sel_data);
      const Dataset data = parse_dataset_csv(text);
      std::vector<InteractionSpec> candidates;
      if (sel_candidates.empty()) {
        if (sel_grouping.empty()) {
          err << "note: no --grouping given; functional_group left out of the candidates\n";
          for (const char* f : {"avg", "add", "full"}) candidates.push_back(make_spec(f, "", sel_reparam));
        } else {
          candidates = default_candidates(parse_grouping(sel_grouping), sel_reparam);
        }
      } else {
        for (const auto& f : sel_candidates) {
          const Family fam = parse_family(f);
          candidates.push_back(make_spec(f, fam == Family::FunctionalGroup ? sel_grouping : "", sel_reparam));
        }
      }
      SelectionOptions options;
      options.criterion = parse_criterion(sel_criterion);
      options.reference = make_spec(sel_reference, "", sel_reparam);
      options.profile.alpha = sel_alpha;
      const SelectionResult result =
          run_procedure(parse_procedure(sel_procedure), data.design, data.response, candidates, options);
      nlohmann::json report = provenance(text);
      report["selection"] = to_json(result);

      std::optional<FTestResult> lof;
      if (data.design.distinct_community_count() < data.design.row_count()) {
        try {
          lof = lack_of_fit(data.design, data.response, result.chosen, result.theta_final);
          report["lack_of_fit"] = to_json(*lof);
        } catch (const Error& e) {
          err << "warning: lack-of-fit test skipped: " << e.what() << '\n';
        }
      }

      out << "procedure " << procedure_name(result.procedure) << ", criterion " << criterion_name(result.criterion)
          << '\n';
      out << std::left << std::setw(26) << "candidate" << std::right << std::setw(14) << "AIC" << std::setw(14)
          << "BIC" << std::setw(14) << "loglik" << std::setw(12) << "theta" << std::setw(12) << "theta_hat" << '\n';
      for (std::size_t k = 0; k < result.per_candidate.size(); ++k) {
        const auto& c = result.per_candidate[k];
        out << std::left << std::setw(26) << (spec_label(c.spec) + (k == result.chosen_index ? " *" : ""))
            << std::right << std::setw(14) << fixed(c.aic, 3) << std::setw(14) << fixed(c.bic, 3) << std::setw(14)
            << fixed(c.fit.loglik, 3) << std::setw(12) << fixed(c.fit.theta_used) << std::setw(12)
            << (c.estimate ? fixed(c.estimate->theta_hat) : std::string("-")) << '\n';
      }
      out << "chosen    " << spec_label(result.chosen) << ", theta " << fixed(result.theta_final, 6) << '\n';
      out << "θ = 1 test: stat " << fixed(result.theta_test.statistic) << ", p "
          << fixed(result.theta_test.p_value, 6) << (result.theta_test.significant ? " (θ kept)" : " (θ = 1)")
          << '\n';
      if (lof)
        out << "lack of fit vs community factor: F " << fixed(lof->f) << " on (" << lof->df1 << ", " << lof->df2
            << "), p " << fixed(lof->p_value, 6) << '\n';
      out << "coefficients of " << spec_label(result.chosen) << '\n';
      print_coefficients(out, result.per_candidate[result.chosen_index].fit);
      if (result.fell_back) err << "warning: " << result.warning << '\n';
      if (!sel_out.empty()) write_file(sel_out, report.dump(2) + "\n");
      if (!sel_csv.empty()) write_file(sel_csv, selection_csv_header() + "\n" + selection_csv_row(result) + "\n");
      return 0;
    }

    if (*study_cmd) {
      StudyConfig config = load_study_config(study_config);
      if (study_reps) config.replicates = *study_reps;
      if (study_seed) config.master_seed = *study_seed;
      if (study_sigma) config.sigmas = {*study_sigma};
      config.threads = study_threads ? *study_threads : env_threads();
      const StudySummary summary = run_study(config);
      const std::string csv = format_summary_csv(config, summary);
      if (study_out.empty()) {
        out << csv;
      } else {
        write_file(study_out, csv);
      }
      if (!summary.selection.empty()) {
        std::string path = study_timings;
        if (path.empty() && !study_out.empty()) {
          std::filesystem::path p(study_out);
          path = (p.parent_path() / (p.stem().string() + "_timings.csv")).string();
        }
        if (!path.empty()) write_file(path, format_timings_csv(config, summary));
      }
      std::size_t failures = 0;
      for (const auto& r : summary.robustness) failures += r.ok ? 0 : 1;
      for (const auto& r : summary.selection) failures += r.ok ? 0 : 1;
      for (const auto& r : summary.reparam) failures += r.ok ? 0 : 1;
      if (failures > 0) err << "warning: " << failures << " per-dataset fits failed and were excluded\n";
      return 0;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n";
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace gdi::cli
