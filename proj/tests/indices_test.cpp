#include "specgp/indices.hpp"

#include <gtest/gtest.h>

#include <vector>

#include "specgp/formula.hpp"
#include "testutil.hpp"

using namespace specgp;

TEST(Schemas, LandsatHasSixBands) {
  auto s = landsat_schema();
  EXPECT_EQ(s.arity(), 6u);
  EXPECT_EQ(s.bands[0].name, "Blue");
  EXPECT_EQ(s.bands[0].code, "B1");
  EXPECT_EQ(s.bands[5].name, "SWIR2");
  EXPECT_EQ(s.bands[5].code, "B7");
  EXPECT_FALSE(s.find("NIR2").has_value());
  EXPECT_NO_THROW(s.validate());
}

TEST(Schemas, ModisHasSevenBands) {
  auto s = modis_schema();
  EXPECT_EQ(s.arity(), 7u);
  ASSERT_TRUE(s.find("NIR2").has_value());
  EXPECT_EQ(*s.find("NIR2"), 4u);
  auto red = s.bands[*s.find("Red")];
  EXPECT_DOUBLE_EQ(red.wavelength_lo, 0.62);
  EXPECT_DOUBLE_EQ(red.wavelength_hi, 0.67);
  EXPECT_EQ(red.code, "B1");
}

TEST(Schemas, DuplicateBandNameRejected) {
  BandSchema s{"bad", {{"X", 0, 1, ""}, {"X", 1, 2, ""}}};
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Schemas, LookupByName) {
  EXPECT_TRUE(find_schema("landsat").has_value());
  EXPECT_TRUE(find_schema("modis").has_value());
  EXPECT_FALSE(find_schema("sentinel").has_value());
  EXPECT_THROW(require_schema("sentinel"), std::invalid_argument);
}

TEST(Ndvi, KnownValues) {
  auto schema = landsat_schema();
  auto tree = ndvi(schema);
  auto pixel = [&](double nir, double red) {
    std::vector<double> p(6, 0.1);
    p[3] = nir;
    p[2] = red;
    return p;
  };
  EXPECT_NEAR(evaluate(tree, pixel(0.8, 0.2)), 0.6, 1e-15);
  EXPECT_NEAR(evaluate(tree, pixel(0.4, 0.4)), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(evaluate(tree, pixel(0.0, 0.0)), 1.0);  // pdiv at 0/0
}

TEST(Evi, KnownValues) {
  auto schema = landsat_schema();
  auto tree = evi(schema);
  std::vector<double> p(6, 0.0);
  p[3] = 0.5;  // NIR
  p[2] = 0.3;  // Red
  p[0] = 0.1;  // Blue
  EXPECT_NEAR(evaluate(tree, p), 0.5 / 2.55, 1e-12);
  p[3] = p[2] = 0.4;
  EXPECT_NEAR(evaluate(tree, p), 0.0, 1e-15);
}

TEST(Evi, ProtectedAtSingularDenominator) {
  auto schema = landsat_schema();
  auto tree = evi(schema);
  // NIR + 6 Red - 7.5 Blue + 1 == 0 with NIR=0.5, Red=0.25: Blue = 0.4
  std::vector<double> p(6, 0.0);
  p[3] = 0.5;
  p[2] = 0.25;
  p[0] = 3.0 / 7.5;
  EXPECT_DOUBLE_EQ(evaluate(tree, p), 1.0);
}

TEST(Evi2, KnownValues) {
  auto schema = landsat_schema();
  auto tree = evi2(schema);
  std::vector<double> p(6, 0.0);
  p[3] = 0.5;
  p[2] = 0.3;
  EXPECT_NEAR(evaluate(tree, p), 0.5 / 2.22, 1e-12);
  p[3] = p[2] = 0.0;
  EXPECT_NEAR(evaluate(tree, p), 0.0, 1e-15);
  p[3] = 1.0;
  p[2] = 0.0;
  EXPECT_NEAR(evaluate(tree, p), 1.25, 1e-15);
}

TEST(Baselines, MatchClosedFormsAwayFromSingularities) {
  auto schema = modis_schema();
  auto t_ndvi = ndvi(schema);
  auto t_evi = evi(schema);
  auto t_evi2 = evi2(schema);
  std::size_t nir = *schema.find("NIR");
  std::size_t red = *schema.find("Red");
  std::size_t blue = *schema.find("Blue");
  Rng rng(31);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> p(7);
    for (auto& v : p) v = rand_range(rng, 0.01, 1.0);
    double n = p[nir], r = p[red], b = p[blue];
    EXPECT_NEAR(evaluate(t_ndvi, p), (n - r) / (n + r), 1e-12);
    double evi_den = n + 6.0 * r - 7.5 * b + 1.0;
    if (std::fabs(evi_den) > 1e-6) {
      EXPECT_NEAR(evaluate(t_evi, p), 2.5 * (n - r) / evi_den, 1e-12);
    }
    EXPECT_NEAR(evaluate(t_evi2, p), 2.5 * (n - r) / (n + 2.4 * r + 1.0), 1e-12);
  }
}

TEST(Baselines, RoundTripThroughFormulaText) {
  for (const auto& schema : {landsat_schema(), modis_schema()}) {
    for (const char* name : {"ndvi", "evi", "evi2"}) {
      auto tree = baseline_index(name, schema);
      auto parsed = parse_formula(to_formula(tree, schema), schema);
      EXPECT_TRUE(structurally_equal(parsed, tree)) << name;
    }
  }
}

TEST(Baselines, MissingBandIsSchemaError) {
  BandSchema rgb{"rgb", {{"Red", 0.63, 0.69, ""}, {"Green", 0.52, 0.6, ""}}};
  EXPECT_THROW(ndvi(rgb), std::invalid_argument);
  EXPECT_THROW(evi(rgb), std::invalid_argument);
  EXPECT_THROW(baseline_index("bad", landsat_schema()), std::invalid_argument);
}
