#include "specgp/analysis.hpp"

#include <gtest/gtest.h>

#include <map>
#include <vector>

#include "specgp/indices.hpp"
#include "testutil.hpp"

using namespace specgp;

namespace {

std::size_t count_of(const std::vector<std::pair<std::string, std::size_t>>& v,
                     const std::string& key) {
  for (const auto& [k, c] : v) {
    if (k == key) return c;
  }
  return 0;
}

}  // namespace

TEST(TopK, WholePopulationSortedByFitness) {
  std::vector<Individual> pop = {
      {band_node(0), 0.3}, {band_node(1), 0.9}, {band_node(2), 0.5}};
  auto top = top_k_individuals(pop, 3);
  EXPECT_DOUBLE_EQ(*top[0].fitness, 0.9);
  EXPECT_DOUBLE_EQ(*top[1].fitness, 0.5);
  EXPECT_DOUBLE_EQ(*top[2].fitness, 0.3);
}

TEST(TopK, TieBrokenBySmallerTree) {
  auto small = band_node(0);                                        // 1 node
  auto big = binary_node(BinaryOp::add, band_node(0), band_node(1));  // 3 nodes
  std::vector<Individual> pop = {{big, 0.5}, {small, 0.5}};
  auto top = top_k_individuals(pop, 2);
  EXPECT_EQ(node_count(top[0].tree), 1u);
  EXPECT_EQ(node_count(top[1].tree), 3u);
}

TEST(TopK, FullTieKeepsInsertionOrder) {
  auto a = band_node(0);
  auto b = band_node(1);
  std::vector<Individual> pop = {{a, 0.5}, {b, 0.5}};
  auto top = top_k_individuals(pop, 2);
  EXPECT_TRUE(structurally_equal(top[0].tree, a));
  EXPECT_TRUE(structurally_equal(top[1].tree, b));
}

TEST(TopK, KLargerThanPopulationThrows) {
  std::vector<Individual> pop = {{band_node(0), 0.1}};
  EXPECT_THROW(top_k_individuals(pop, 2), std::invalid_argument);
  EXPECT_THROW(top_k_individuals({}, 1), std::invalid_argument);
}

TEST(BandHistogram, NdviCountsBothBandsTwice) {
  auto schema = landsat_schema();
  auto hist = band_histogram({ndvi(schema)}, schema);
  EXPECT_EQ(hist.size(), 2u);
  EXPECT_EQ(hist["NIR"], 2u);
  EXPECT_EQ(hist["Red"], 2u);
}

TEST(BandHistogram, ConstantOnlyTreeIsEmpty) {
  auto schema = landsat_schema();
  auto tree = binary_node(BinaryOp::mul, const_node(2.0), const_node(3.0));
  EXPECT_TRUE(band_histogram({tree}, schema).empty());
}

TEST(BandHistogram, TotalMatchesIndependentLeafWalk) {
  auto schema = modis_schema();
  Rng rng(3);
  std::vector<ExprTree> trees;
  for (int i = 0; i < 40; ++i) {
    trees.push_back(random_tree(rng, schema, 5, GenMethod::grow));
  }
  auto hist = band_histogram(trees, schema);
  std::size_t total = 0;
  for (const auto& [name, count] : hist) {
    EXPECT_TRUE(schema.find(name).has_value());
    total += count;
  }
  std::size_t expected = 0;
  auto walk = [&](auto&& self, const ExprTree& t) -> void {
    if (t->kind == ExprNode::Kind::band) {
      ++expected;
    } else if (t->kind == ExprNode::Kind::unary) {
      self(self, t->child);
    } else if (t->kind == ExprNode::Kind::binary) {
      self(self, t->left);
      self(self, t->right);
    }
  };
  for (const auto& t : trees) walk(walk, t);
  EXPECT_EQ(total, expected);
}

TEST(ElementFrequency, NdviElements) {
  auto schema = landsat_schema();
  auto ranked = element_frequency({ndvi(schema)}, schema, 100);
  EXPECT_EQ(count_of(ranked, "NIR"), 2u);
  EXPECT_EQ(count_of(ranked, "Red"), 2u);
  EXPECT_EQ(count_of(ranked, "%"), 1u);
  EXPECT_EQ(count_of(ranked, "-"), 1u);
  EXPECT_EQ(count_of(ranked, "+"), 1u);
  EXPECT_EQ(count_of(ranked, "(NIR - Red)"), 1u);
  EXPECT_EQ(count_of(ranked, "(NIR + Red)"), 1u);
  EXPECT_EQ(count_of(ranked, "((NIR - Red) % (NIR + Red))"), 1u);
  EXPECT_EQ(ranked.size(), 8u);
}

TEST(ElementFrequency, TwoIdenticalTreesDoubleEveryCount) {
  auto schema = landsat_schema();
  auto one = element_frequency({ndvi(schema)}, schema, 100);
  auto two = element_frequency({ndvi(schema), ndvi(schema)}, schema, 100);
  for (const auto& [key, count] : one) {
    EXPECT_EQ(count_of(two, key), 2 * count) << key;
  }
}

TEST(ElementFrequency, SubexpressionCountEqualsInternalNodes) {
  auto schema = landsat_schema();
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    auto t = random_tree(rng, schema, 5, GenMethod::grow);
    auto ranked = element_frequency({t}, schema, 100000);
    // Subexpression strings are exactly those entries that are neither plain
    // band names nor operator symbols.
    std::size_t sub_count = 0;
    for (const auto& [key, count] : ranked) {
      if (schema.find(key)) continue;
      if (key == "+" || key == "-" || key == "*" || key == "%" ||
          key == "srt" || key == "rlog") {
        continue;
      }
      sub_count += count;
    }
    EXPECT_EQ(sub_count, subtrees(t).size());
  }
}

TEST(ElementFrequency, RankedByCountThenLexicographic) {
  auto schema = landsat_schema();
  // Blue * Blue gives Blue:2, *:1; tie between "*" and "(Blue * Blue)" broken
  // lexicographically ("(" < "*" in ASCII).
  auto tree = binary_node(BinaryOp::mul, band_node(0), band_node(0));
  auto ranked = element_frequency({tree}, schema, 10);
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].first, "Blue");
  EXPECT_EQ(ranked[1].first, "(Blue * Blue)");
  EXPECT_EQ(ranked[2].first, "*");
}

TEST(ElementFrequency, TopNTruncates) {
  auto schema = landsat_schema();
  auto ranked = element_frequency({ndvi(schema)}, schema, 3);
  EXPECT_EQ(ranked.size(), 3u);
}

TEST(ElementFrequency, NearEqualConstantsMergeAtSixDigits) {
  auto schema = landsat_schema();
  auto a = binary_node(BinaryOp::mul, const_node(2.0), band_node(0));
  auto b = binary_node(BinaryOp::mul, const_node(2.0 + 1e-9), band_node(0));
  auto ranked = element_frequency({a, b}, schema, 100);
  EXPECT_EQ(count_of(ranked, "(2 * Blue)"), 2u);
}

TEST(ElementFrequency, AdditivityOverConcatenation) {
  auto schema = modis_schema();
  Rng rng(7);
  std::vector<ExprTree> first, second, both;
  for (int i = 0; i < 10; ++i) {
    first.push_back(random_tree(rng, schema, 4, GenMethod::grow));
    second.push_back(random_tree(rng, schema, 4, GenMethod::grow));
  }
  both = first;
  both.insert(both.end(), second.begin(), second.end());
  auto fa = element_frequency(first, schema, 1000000);
  auto fb = element_frequency(second, schema, 1000000);
  auto fboth = element_frequency(both, schema, 1000000);
  std::map<std::string, std::size_t> expected;
  for (const auto& [k, c] : fa) expected[k] += c;
  for (const auto& [k, c] : fb) expected[k] += c;
  ASSERT_EQ(fboth.size(), expected.size());
  for (const auto& [k, c] : fboth) {
    EXPECT_EQ(expected[k], c) << k;
  }
}

TEST(ElementFrequency, EmptyInputThrows) {
  auto schema = landsat_schema();
  EXPECT_THROW(element_frequency({}, schema), std::invalid_argument);
}
