#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "specgp/engine.hpp"
#include "specgp/expr.hpp"
#include "specgp/formula.hpp"
#include "specgp/schema.hpp"

namespace specgp {

/// The k fittest individuals, ties broken by smaller tree then insertion
/// order. Requires an evaluated population.
inline std::vector<Individual> top_k_individuals(
    const std::vector<Individual>& population, std::size_t k = 10) {
  if (k > population.size()) {
    throw std::invalid_argument("top_k_individuals: k (" + std::to_string(k) +
                                ") exceeds population size (" +
                                std::to_string(population.size()) + ")");
  }
  struct Entry {
    std::size_t index;
    double fitness;
    std::size_t size;
  };
  std::vector<Entry> entries;
  entries.reserve(population.size());
  for (std::size_t i = 0; i < population.size(); ++i) {
    if (!population[i].fitness) {
      throw std::invalid_argument("top_k_individuals: unevaluated individual");
    }
    entries.push_back({i, *population[i].fitness, node_count(population[i].tree)});
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) {
                     if (a.fitness != b.fitness) return a.fitness > b.fitness;
                     return a.size < b.size;
                   });
  std::vector<Individual> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(population[entries[i].index]);
  return out;
}

inline std::vector<ExprTree> trees_of(const std::vector<Individual>& individuals) {
  std::vector<ExprTree> out;
  out.reserve(individuals.size());
  for (const auto& ind : individuals) out.push_back(ind.tree);
  return out;
}

/// Occurrences of each band terminal across all trees; duplicates within one
/// tree each count. Only bands that actually occur appear as keys.
inline std::map<std::string, std::size_t> band_histogram(
    const std::vector<ExprTree>& trees, const BandSchema& schema) {
  std::map<std::string, std::size_t> hist;
  auto walk = [&](auto&& self, const ExprTree& t) -> void {
    switch (t->kind) {
      case ExprNode::Kind::band: {
        if (static_cast<std::size_t>(t->band) >= schema.arity()) {
          throw std::out_of_range("band index " + std::to_string(t->band) +
                                  " not in schema '" + schema.sensor_name + "'");
        }
        hist[schema.bands[static_cast<std::size_t>(t->band)].name] += 1;
        return;
      }
      case ExprNode::Kind::constant:
        return;
      case ExprNode::Kind::unary:
        self(self, t->child);
        return;
      case ExprNode::Kind::binary:
        self(self, t->left);
        self(self, t->right);
        return;
    }
  };
  for (const auto& t : trees) {
    if (!t) throw std::invalid_argument("band_histogram: empty tree");
    walk(walk, t);
  }
  return hist;
}

/// Ranked "formula element" counts in the union sense: band names, operator
/// symbols (+ - * % srt rlog) and canonical subexpression strings (one per
/// internal node). Ties are broken lexicographically.
inline std::vector<std::pair<std::string, std::size_t>> element_frequency(
    const std::vector<ExprTree>& trees, const BandSchema& schema,
    std::size_t top_n = 10) {
  if (trees.empty()) {
    throw std::invalid_argument("element_frequency: no trees given");
  }
  std::unordered_map<std::string, std::size_t> counts;
  auto walk = [&](auto&& self, const ExprTree& t) -> void {
    switch (t->kind) {
      case ExprNode::Kind::band:
        counts[schema.bands[static_cast<std::size_t>(t->band)].name] += 1;
        return;
      case ExprNode::Kind::constant:
        return;
      case ExprNode::Kind::unary:
        counts[unary_name(t->unary_op)] += 1;
        self(self, t->child);
        return;
      case ExprNode::Kind::binary:
        counts[binary_symbol(t->binary_op)] += 1;
        self(self, t->left);
        self(self, t->right);
        return;
    }
  };
  for (const auto& t : trees) {
    walk(walk, t);
    for (const auto& sub : subtrees(t)) {
      counts[element_string(sub, schema)] += 1;
    }
  }

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > top_n) ranked.resize(top_n);
  return ranked;
}

}  // namespace specgp
