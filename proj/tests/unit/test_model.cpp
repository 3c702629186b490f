#include <gtest/gtest.h>

#include <cmath>

#include "gdi/design.hpp"
#include "gdi/error.hpp"
#include "gdi/model.hpp"

using namespace gdi;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no gdi::Error thrown";
  return ErrorCode::InvalidArgument;
}

const Community kCentroid = make_community({0.25, 0.25, 0.25, 0.25});
const InteractionSpec kAv{Family::AveragePairwise, std::nullopt, false};
const InteractionSpec kFull{Family::FullPairwise, std::nullopt, false};
const InteractionSpec kAdd{Family::AdditiveSpecies, std::nullopt, false};
const InteractionSpec kFg{Family::FunctionalGroup, parse_grouping("1,1,2,2"), false};

}  // namespace

TEST(PairTerm, Values) {
  EXPECT_DOUBLE_EQ(pair_term(0.5, 0.5, 1), 0.25);
  EXPECT_DOUBLE_EQ(pair_term(0.5, 0.5, 0.5), 0.5);
  for (double t : {0.3, 1.0, 1.7}) EXPECT_NEAR(pair_term(0.75, 0.25, t), std::pow(0.1875, t), 1e-15);
  EXPECT_EQ(pair_term(0.0, 0.7, 0.05), 0.0);
  EXPECT_EQ(code_of([] { pair_term(0.5, 0.5, 0.0); }), ErrorCode::NonPositiveTheta);
}

TEST(ScalingFactor, Values) {
  EXPECT_NEAR(scaling_factor(4, 1), 8.0 / 3.0, 1e-15);
  EXPECT_NEAR(scaling_factor(9, 1), 2.25, 1e-15);
  EXPECT_NEAR(scaling_factor(4, 0.5), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(code_of([] { scaling_factor(1, 1); }), ErrorCode::SpeciesCountTooSmall);
}

TEST(ScalingFactor, CentroidTermIndependentOfTheta) {
  for (int s : {2, 4, 9})
    for (double t : {0.05, 0.77, 1.33}) {
      const double p = 1.0 / s;
      EXPECT_NEAR(scaling_factor(s, t) * pair_term(p, p, t), 2.0 / (s * (s - 1.0)), 1e-14);
    }
}

TEST(InteractionColumns, CentroidAverage) {
  const auto cols = interaction_columns(kCentroid, kAv, 1);
  ASSERT_EQ(cols.size(), 1u);
  EXPECT_EQ(cols[0].name, "delta_AV");
  EXPECT_NEAR(cols[0].value, 0.375, 1e-15);
}

TEST(InteractionColumns, MonocultureIsZero) {
  const Community mono = make_community({0, 1, 0, 0});
  for (double t : {0.05, 1.0, 2.0})
    for (const auto& c : interaction_columns(mono, kFull, t)) EXPECT_EQ(c.value, 0.0);
}

TEST(InteractionColumns, CentroidFunctionalGroups) {
  const auto cols = interaction_columns(kCentroid, kFg, 1);
  ASSERT_EQ(cols.size(), 3u);
  // Within-group columns come first. Pairs (1,2) and (3,4) are within groups, the other four cross.
  EXPECT_EQ(cols[0].name, "omega_1_1");
  EXPECT_NEAR(cols[0].value, 1.0 / 16, 1e-15);
  EXPECT_EQ(cols[1].name, "omega_2_2");
  EXPECT_NEAR(cols[1].value, 1.0 / 16, 1e-15);
  EXPECT_EQ(cols[2].name, "omega_1_2");
  EXPECT_NEAR(cols[2].value, 4.0 / 16, 1e-15);
}

TEST(InteractionColumns, FunctionalGroupNeedsGrouping) {
  const InteractionSpec bad{Family::FunctionalGroup, std::nullopt, false};
  EXPECT_EQ(code_of([&] { interaction_columns(kCentroid, bad, 1); }), ErrorCode::MissingGrouping);
  EXPECT_EQ(code_of([&] { design_matrix(four_species_design(), bad, 1); }), ErrorCode::MissingGrouping);
}

TEST(InteractionColumns, ThetaOneIsPlainProducts) {
  const Community c = make_community({0.4, 0.3, 0.2, 0.1});
  const auto full = interaction_columns(c, kFull, 1);
  const auto& p = c.proportions();
  std::size_t k = 0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) EXPECT_EQ(full[k++].value, p[i] * p[j]);
}

TEST(InteractionColumns, AggregatesAreSumsOfPairs) {
  const Community c = make_community({0.4, 0.3, 0.2, 0.1});
  for (double t : {0.2, 0.9, 1.6}) {
    const auto full = interaction_columns(c, kFull, t);
    double all = 0;
    std::vector<double> per_species(4, 0.0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j) {
        all += full[k].value;
        per_species[i] += full[k].value;
        per_species[j] += full[k].value;
        ++k;
      }
    EXPECT_NEAR(interaction_columns(c, kAv, t)[0].value, all, 1e-15);
    const auto add = interaction_columns(c, kAdd, t);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(add[i].value, per_species[i], 1e-15);
    const auto fg = interaction_columns(c, kFg, t);
    EXPECT_NEAR(fg[0].value, full[0].value, 1e-15);
    EXPECT_NEAR(fg[1].value, full[5].value, 1e-15);
    EXPECT_NEAR(fg[2].value, full[1].value + full[2].value + full[3].value + full[4].value, 1e-15);
  }
}

TEST(InteractionColumns, ReparameterizedIsScaled) {
  const Community c = make_community({0.5, 0.2, 0.2, 0.1});
  InteractionSpec r = kFull;
  r.reparameterized = true;
  const auto plain = interaction_columns(c, kFull, 0.6);
  const auto scaled = interaction_columns(c, r, 0.6);
  for (std::size_t k = 0; k < plain.size(); ++k)
    EXPECT_NEAR(scaled[k].value, plain[k].value * scaling_factor(4, 0.6), 1e-15);
}

TEST(InteractionColumns, DecreasingInTheta) {
  const Community c = make_community({0.4, 0.3, 0.2, 0.1});
  double prev = interaction_columns(c, kAv, 0.1)[0].value;
  for (double t = 0.2; t < 2.5; t += 0.1) {
    const double v = interaction_columns(c, kAv, t)[0].value;
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(DesignMatrix, FourSpeciesFullPairwise) {
  const ModelMatrix m = design_matrix(four_species_design(), kFull, 1);
  EXPECT_EQ(m.values.rows(), 111);
  EXPECT_EQ(m.values.cols(), 10);
  EXPECT_EQ(m.columns.front(), "beta_1");
  EXPECT_EQ(m.columns[4], "delta_1_2");
  EXPECT_EQ(m.columns.back(), "delta_3_4");
  EXPECT_FALSE(m.rank_warning);
}

TEST(DesignMatrix, NineSpeciesAdditive) {
  const ModelMatrix m = design_matrix(nine_species_design(), kAdd, 0.77);
  EXPECT_EQ(m.values.rows(), 300);
  EXPECT_EQ(m.values.cols(), 18);
  EXPECT_EQ(m.columns[9], "lambda_1");
}

TEST(DesignMatrix, IdentityIsProportions) {
  const Design d = four_species_design();
  const ModelMatrix m = design_matrix(d, {Family::Identity, std::nullopt, false}, 1);
  const auto rows = d.rows();
  ASSERT_EQ(m.values.cols(), 4);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(m.values(r, i), rows[r].proportions()[i]);
}

TEST(DesignMatrix, NullIsIntercept) {
  const ModelMatrix m = design_matrix(four_species_design(), {Family::Null, std::nullopt, false}, 1);
  ASSERT_EQ(m.values.cols(), 1);
  EXPECT_EQ(m.columns[0], "intercept");
  EXPECT_EQ(m.values.minCoeff(), 1.0);
}

TEST(DesignMatrix, CommunityFactorIndicators) {
  const ModelMatrix m = design_matrix(four_species_design(), {Family::CommunityFactor, std::nullopt, false}, 1);
  EXPECT_EQ(m.values.cols(), 37);
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) EXPECT_EQ(m.values.row(r).sum(), 1.0);
}

TEST(DesignMatrix, CategoricalStructureUsesReferenceLevel) {
  const Design d = parse_design_csv("p1,p2,struct:trt\n1,0,a\n0,1,b\n0.5,0.5,c\n0.5,0.5,a\n");
  const ModelMatrix m = design_matrix(d, {Family::Identity, std::nullopt, false}, 1);
  ASSERT_EQ(m.columns.size(), 4u);
  EXPECT_EQ(m.columns[2], "struct_trt_b");
  EXPECT_EQ(m.columns[3], "struct_trt_c");
  EXPECT_EQ(m.values(0, 2) + m.values(0, 3), 0.0);
  EXPECT_EQ(m.values(1, 2), 1.0);
}

TEST(DesignMatrix, RankWarningOnCollinearColumns) {
  // Two-species design: the single pair column equals the average column.
  const Design d = parse_design_csv("p1,p2\n1,0\n0,1\n0.5,0.5\n");
  const ModelMatrix m = design_matrix(d, {Family::AdditiveSpecies, std::nullopt, false}, 1);
  EXPECT_TRUE(m.rank_warning);
}

TEST(Nested, Hierarchy) {
  const InteractionSpec id{Family::Identity, std::nullopt, false};
  const InteractionSpec null{Family::Null, std::nullopt, false};
  const InteractionSpec cf{Family::CommunityFactor, std::nullopt, false};
  EXPECT_TRUE(nested(id, kFull));
  EXPECT_TRUE(nested(null, id));
  EXPECT_TRUE(nested(kAv, kFg));
  EXPECT_TRUE(nested(kAv, kAdd));
  EXPECT_TRUE(nested(kAdd, kFull));
  EXPECT_TRUE(nested(kFg, kFull));
  EXPECT_TRUE(nested(kFull, cf));
  EXPECT_FALSE(nested(kFg, kAdd));
  EXPECT_FALSE(nested(kAdd, kFg));
  EXPECT_FALSE(nested(kFull, kAv));
  for (const auto& s : {id, kAv, kFg, kAdd, kFull}) EXPECT_TRUE(nested(s, s));
}

TEST(Nested, FunctionalGroupAndAdditiveSpanDifferentSpaces) {
  // Neither column space contains the other: stacking both raises the rank above each.
  const Design d = four_species_design();
  const ModelMatrix fg = design_matrix(d, kFg, 1);
  const ModelMatrix add = design_matrix(d, kAdd, 1);
  Eigen::MatrixXd both(fg.values.rows(), fg.values.cols() + add.values.cols());
  both << fg.values, add.values;
  auto rank = [](const Eigen::MatrixXd& x) { return Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(x).rank(); };
  EXPECT_GT(rank(both), rank(fg.values));
  EXPECT_GT(rank(both), rank(add.values));
}

TEST(Grouping, ParseAndErrors) {
  const Grouping g = parse_grouping("a,a,b,c");
  EXPECT_EQ(g.group_count(), 3u);
  EXPECT_EQ(g.group_of(3), 2u);
  EXPECT_EQ(code_of([] { parse_grouping(""); }), ErrorCode::InvalidGrouping);
  const InteractionSpec wrong{Family::FunctionalGroup, parse_grouping("1,2"), false};
  EXPECT_EQ(code_of([&] { interaction_columns(kCentroid, wrong, 1); }), ErrorCode::InvalidGrouping);
}

TEST(Family, NamesRoundTrip) {
  for (Family f : {Family::Null, Family::Identity, Family::AveragePairwise, Family::FunctionalGroup,
                   Family::AdditiveSpecies, Family::FullPairwise, Family::CommunityFactor})
    EXPECT_EQ(parse_family(family_name(f)), f);
  EXPECT_EQ(parse_family("avg"), Family::AveragePairwise);
  EXPECT_EQ(parse_family("full"), Family::FullPairwise);
}
