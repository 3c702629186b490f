#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "gdi/design.hpp"
#include "gdi/error.hpp"

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

std::size_t count_richness(const Design& d, std::size_t r) {
  return static_cast<std::size_t>(std::count_if(d.entries().begin(), d.entries().end(),
                                                [&](const DesignEntry& e) { return e.community.richness() == r; }));
}

}  // namespace

TEST(Community, MonocultureAndCentroid) {
  EXPECT_EQ(make_community({1, 0, 0, 0}).richness(), 1u);
  EXPECT_EQ(make_community({0.25, 0.25, 0.25, 0.25}).richness(), 4u);
}

TEST(Community, Errors) {
  EXPECT_EQ(code_of([] { make_community({0.5, 0.6, 0, 0}); }), ErrorCode::SumNotOne);
  EXPECT_EQ(code_of([] { make_community({-0.5, 1.5}); }), ErrorCode::NegativeProportion);
  EXPECT_EQ(code_of([] { make_community({}); }), ErrorCode::EmptyProportions);
}

TEST(FourSpeciesDesign, Shape) {
  const Design d = four_species_design();
  EXPECT_EQ(d.species_count(), 4u);
  EXPECT_EQ(d.community_count(), 37u);
  EXPECT_EQ(d.distinct_community_count(), 37u);
  EXPECT_EQ(d.row_count(), 111u);
  EXPECT_EQ(count_richness(d, 1), 4u);
  for (const auto& e : d.entries()) EXPECT_EQ(e.multiplicity, 3);
}

TEST(FourSpeciesDesign, ContainsDominantCommunity) {
  const Design d = four_species_design();
  const CommunityKey want{900000, 33333, 33333, 33333};
  const bool found = std::any_of(d.entries().begin(), d.entries().end(),
                                 [&](const DesignEntry& e) { return community_key(e.community) == want; });
  EXPECT_TRUE(found);
}

TEST(FourSpeciesDesign, Deterministic) { EXPECT_EQ(four_species_design(), four_species_design()); }

TEST(NineSpeciesDesign, Shape) {
  const Design d = nine_species_design();
  EXPECT_EQ(d.community_count(), 100u);
  EXPECT_EQ(d.distinct_community_count(), 100u);
  EXPECT_EQ(d.row_count(), 300u);
  const std::size_t expected[] = {0, 9, 36, 24, 18, 0, 12, 0, 0, 1};
  for (std::size_t r = 1; r <= 9; ++r) EXPECT_EQ(count_richness(d, r), expected[r]) << "richness " << r;
}

TEST(NineSpeciesDesign, EquiProportional) {
  const Design d = nine_species_design();
  for (const auto& e : d.entries()) {
    const double share = 1.0 / static_cast<double>(e.community.richness());
    for (double p : e.community.proportions())
      if (p > 0) EXPECT_DOUBLE_EQ(p, share);
  }
}

TEST(Equiproportional, ThreeSpeciesExhaustive) {
  const Design d = equiproportional_design({3, {1, 3}, {3, 1}, {1}, 7});
  EXPECT_EQ(d.community_count(), 4u);
  EXPECT_EQ(count_richness(d, 1), 3u);
  EXPECT_EQ(count_richness(d, 3), 1u);
}

TEST(Equiproportional, AllPairsOfFour) {
  const Design d = equiproportional_design({4, {2}, {6}, {1}, 1});
  EXPECT_EQ(d.distinct_community_count(), 6u);
  for (const auto& e : d.entries()) EXPECT_EQ(e.community.richness(), 2u);
  // Exhaustive levels ignore the seed.
  EXPECT_EQ(d, equiproportional_design({4, {2}, {6}, {1}, 999}));
}

TEST(Equiproportional, SixteenSpecies) {
  const Design d = equiproportional_design({16, {1, 2, 4, 8, 16}, {16, 120, 20, 9, 1}, {1}, 11});
  EXPECT_EQ(d.distinct_community_count(), 166u);
  EXPECT_EQ(d, equiproportional_design({16, {1, 2, 4, 8, 16}, {16, 120, 20, 9, 1}, {1}, 11}));
}

TEST(Equiproportional, Errors) {
  EXPECT_EQ(code_of([] { equiproportional_design({3, {4}, {1}, {1}, 0}); }), ErrorCode::RichnessExceedsSpecies);
  EXPECT_EQ(code_of([] { equiproportional_design({4, {2}, {7}, {1}, 0}); }), ErrorCode::CountExceedsSubsets);
}

TEST(Binomial, SmallValues) {
  EXPECT_EQ(binomial(4, 2), 6u);
  EXPECT_EQ(binomial(9, 3), 84u);
  EXPECT_EQ(binomial(16, 8), 12870u);
  EXPECT_EQ(binomial(3, 5), 0u);
}

TEST(DesignCsv, RoundTripIsExact) {
  for (const Design& d : {four_species_design(), nine_species_design()}) {
    const Design back = parse_design_csv(format_design_csv(d));
    ASSERT_EQ(back.row_count(), d.row_count());
    const auto a = d.rows();
    const auto b = back.rows();
    for (std::size_t r = 0; r < a.size(); ++r) EXPECT_EQ(a[r].proportions(), b[r].proportions());
  }
}

TEST(DesignCsv, ReplicatedRowsCollapse) {
  const Design d = parse_design_csv("p1,p2\n1,0\n1,0\n0.5,0.5\n");
  EXPECT_EQ(d.row_count(), 3u);
  EXPECT_EQ(d.distinct_community_count(), 2u);
}

TEST(DesignCsv, StructuresSurvive) {
  const Design d = parse_design_csv("p1,p2,struct:block\n1,0,a\n0,1,b\n");
  ASSERT_EQ(d.rows().size(), 2u);
  EXPECT_EQ(std::get<std::string>(d.rows()[1].structures().at("block")), "b");
}

TEST(DesignCsv, Errors) {
  EXPECT_EQ(code_of([] { parse_design_csv(""); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_design_csv("p1,p2\n1,x\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_design_csv("p1,p2\n0.7,0.7\n"); }), ErrorCode::SumNotOne);
  EXPECT_EQ(code_of([] { parse_dataset_csv("p1,p2\n1,0\n"); }), ErrorCode::ParseError);
}

TEST(DatasetCsv, RoundTrip) {
  const Design d = parse_design_csv("p1,p2\n1,0\n0.5,0.5\n");
  const std::vector<double> y{1.25, -3.0000000001};
  const Dataset back = parse_dataset_csv(format_dataset_csv(d, y));
  EXPECT_EQ(back.response, y);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1.0 / 30.0, 1e-300, 123456789.125}) EXPECT_EQ(std::stod(format_double(v)), v);
}

namespace {

// The 37 four-species communities at 6 decimals.
const std::vector<std::vector<double>> kFourTable{
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
    {0.333333, 0.333333, 0.333333, 0},
    {0.333333, 0.333333, 0, 0.333333},
    {0.333333, 0, 0.333333, 0.333333},
    {0, 0.333333, 0.333333, 0.333333},
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
    {0.9, 0.033333, 0.033333, 0.033333},
    {0.033333, 0.9, 0.033333, 0.033333},
    {0.033333, 0.033333, 0.9, 0.033333},
    {0.033333, 0.033333, 0.033333, 0.9}};

// Known nine-species subsets at richness 3, 4 and 6 (not the full list).
const std::vector<std::string> kNineSubsets{
    "489", "289", "679", "479", "169", "359", "259", "139", "678", "378", "268", "458", "158", "138", "457",
    "157", "237", "127", "356", "256", "346", "146", "234", "124", "2789", "1589", "2389", "5679", "1379",
    "3469", "2469", "1459", "3478", "1468", "1268", "3458", "1367", "2356", "1235", "356789", "125789",
    "134789", "145689", "234689", "245679", "123679", "123459", "124678", "234578", "123568"};

CommunityKey table_key(const std::vector<double>& p) {
  CommunityKey k;
  for (double v : p) k.push_back(std::llround(v * 1e6));
  return k;
}

}  // namespace

TEST(FourSpeciesDesign, MatchesTable) {
  std::set<CommunityKey> expected, built;
  for (const auto& p : kFourTable) expected.insert(table_key(p));
  const Design d = four_species_design();
  for (const auto& e : d.entries()) built.insert(community_key(e.community));
  EXPECT_EQ(expected.size(), 37u);
  EXPECT_EQ(built, expected);
}

TEST(NineSpeciesDesign, ContainsKnownSubsets) {
  std::set<std::string> built;
  const Design d = nine_species_design();
  for (const auto& e : d.entries()) {
    std::string s;
    const auto& p = e.community.proportions();
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] > 0) s += static_cast<char>('1' + i);
    built.insert(s);
  }
  for (const auto& row : kNineSubsets) EXPECT_TRUE(built.count(row)) << row;
}
