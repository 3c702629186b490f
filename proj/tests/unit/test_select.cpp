#include <gtest/gtest.h>

#include <cmath>

#include "gdi/error.hpp"
#include "gdi/select.hpp"
#include "gdi/simulate.hpp"

using namespace gdi;

namespace {

const InteractionSpec kAv{Family::AveragePairwise, std::nullopt, false};
const InteractionSpec kFull{Family::FullPairwise, std::nullopt, false};

std::vector<double> four_species_response(double theta, double sigma, std::uint64_t seed) {
  TruthModel t = four_species_truth();
  t.theta_true = theta;
  t.sigma = sigma;
  Rng rng(seed);
  return simulate_response(four_species_design(), t, rng);
}

CandidateResult candidate(Family f, double aic_value, std::size_t p) {
  CandidateResult c;
  c.spec = {f, std::nullopt, false};
  c.fit.p = p;
  c.aic = c.bic = aic_value;
  return c;
}

}  // namespace

TEST(PickMinimum, TiesGoToFewerCoefficientsThenOrder) {
  const std::vector<CandidateResult> a{candidate(Family::FullPairwise, 10, 10), candidate(Family::AveragePairwise, 10, 5),
                                       candidate(Family::AdditiveSpecies, 11, 8)};
  EXPECT_EQ(pick_minimum(a, Criterion::AIC), 1u);
  const std::vector<CandidateResult> b{candidate(Family::AveragePairwise, 3, 5), candidate(Family::AveragePairwise, 3, 5)};
  EXPECT_EQ(pick_minimum(b, Criterion::BIC), 0u);
  const std::vector<CandidateResult> c{candidate(Family::AveragePairwise, 3, 5),
                                       candidate(Family::FullPairwise, -INFINITY, 10)};
  EXPECT_EQ(pick_minimum(c, Criterion::AIC), 1u);
}

TEST(Procedures, SingleCandidate) {
  const auto y = four_species_response(0.6, 1.0, 1);
  const std::vector<InteractionSpec> only{kAv};
  for (Procedure p : {Procedure::A, Procedure::B, Procedure::C}) {
    const SelectionResult r = run_procedure(p, four_species_design(), y, only);
    EXPECT_EQ(r.chosen, kAv);
    EXPECT_EQ(r.chosen_index, 0u);
    ASSERT_TRUE(r.theta_estimate.has_value());
  }
}

TEST(Procedures, IdenticalCandidatesFirstWins) {
  const auto y = four_species_response(0.6, 1.0, 2);
  const std::vector<InteractionSpec> same{kFull, kFull, kFull};
  for (Procedure p : {Procedure::A, Procedure::B, Procedure::C})
    EXPECT_EQ(run_procedure(p, four_species_design(), y, same).chosen_index, 0u);
}

TEST(Procedures, NoiselessDataAllAgree) {
  const auto candidates = default_candidates(parse_grouping("1,1,2,2"));
  for (double theta : {0.77, 1.0}) {
    const auto y = four_species_response(theta, 0.0, 0);
    for (Procedure p : {Procedure::A, Procedure::B, Procedure::C}) {
      const SelectionResult r = run_procedure(p, four_species_design(), y, candidates);
      EXPECT_EQ(r.chosen.family, Family::FullPairwise) << procedure_name(p) << " theta " << theta;
    }
  }
}

TEST(Procedures, ProcedureCEstimatesEveryCandidate) {
  const auto y = four_species_response(0.5, 1.0, 3);
  const auto candidates = default_candidates(parse_grouping("1,1,2,2"));
  const SelectionResult c = procedure_c(four_species_design(), y, candidates);
  ASSERT_EQ(c.per_candidate.size(), 4u);
  for (const auto& pc : c.per_candidate) EXPECT_TRUE(pc.estimate.has_value());
  const SelectionResult b = procedure_b(four_species_design(), y, candidates);
  for (const auto& pc : b.per_candidate) EXPECT_FALSE(pc.estimate.has_value());
}

TEST(Procedures, ProcedureBMarksThetaEstimatedWhenRetained) {
  const auto y = four_species_response(0.35, 1.0, 4);
  const SelectionResult b = procedure_b(four_species_design(), y, default_candidates(parse_grouping("1,1,2,2")));
  ASSERT_TRUE(b.theta_test.significant);
  EXPECT_NE(b.theta_final, 1.0);
  for (const auto& pc : b.per_candidate) {
    EXPECT_TRUE(pc.fit.theta_was_estimated);
    EXPECT_EQ(pc.fit.theta_used, b.theta_final);
  }
}

TEST(Procedures, BicOnlyChangesCriterion) {
  const auto y = four_species_response(0.9, 1.0, 5);
  SelectionOptions opt;
  opt.criterion = Criterion::BIC;
  const SelectionResult r = procedure_b(four_species_design(), y, default_candidates(parse_grouping("1,1,2,2")), opt);
  EXPECT_EQ(r.criterion, Criterion::BIC);
  for (const auto& pc : r.per_candidate) EXPECT_GT(pc.bic, pc.aic);
}

TEST(Procedures, EmptyCandidatesRejected) {
  const auto y = four_species_response(0.9, 1.0, 6);
  EXPECT_THROW(procedure_a(four_species_design(), y, {}), Error);
}

TEST(LackOfFit, NoReplication) {
  const Design d = parse_design_csv("p1,p2\n1,0\n0,1\n0.5,0.5\n0.25,0.75\n");
  try {
    lack_of_fit(d, std::vector<double>{1, 2, 3, 4}, kAv, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoReplication);
  }
}

TEST(LackOfFit, CommunityMeansResponseIsRejected) {
  // Every community gets an arbitrary mean with no species structure.
  const Design d = four_species_design();
  Rng rng(9);
  std::vector<double> y;
  for (const auto& e : d.entries()) {
    const double mean = 10 * rng.uniform();
    for (int k = 0; k < e.multiplicity; ++k) y.push_back(mean + 0.3 * normal_draw(rng));
  }
  const FTestResult t = lack_of_fit(d, y, kFull, 1.0);
  EXPECT_EQ(t.df1, 37u - 10u);
  EXPECT_EQ(t.df2, 111u - 37u);
  EXPECT_LT(t.p_value, 1e-6);
}

TEST(LackOfFit, WellSpecifiedSizeIsNominal) {
  int rejected = 0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    const auto y = four_species_response(1.0, 1.0, 500 + r);
    rejected += lack_of_fit(four_species_design(), y, kFull, 1.0).p_value < 0.05;
  }
  EXPECT_LE(rejected, 13);
}

TEST(Names, RoundTrip) {
  EXPECT_EQ(parse_procedure("b"), Procedure::B);
  EXPECT_EQ(parse_criterion("bic"), Criterion::BIC);
  EXPECT_EQ(spec_label({Family::AveragePairwise, std::nullopt, true}), "average_pairwise_reparam");
  EXPECT_THROW(parse_procedure("d"), Error);
}

TEST(SelectionCsv, OneRowPerResult) {
  const auto y = four_species_response(0.8, 1.0, 7);
  const SelectionResult r = procedure_b(four_species_design(), y, default_candidates(parse_grouping("1,1,2,2")));
  const std::string header = selection_csv_header();
  const std::string row = selection_csv_row(r);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_EQ(to_json(r).at("procedure"), "b");
}
