#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "specgp/expr.hpp"
#include "specgp/random.hpp"
#include "specgp/schema.hpp"

namespace specgp {

struct PixelSample {
  std::vector<double> bands;
  int label = 0;  // binary: 0 or 1
};

struct PixelDataset {
  BandSchema schema;
  std::vector<PixelSample> samples;

  bool has_both_classes() const {
    bool seen[2] = {false, false};
    for (const auto& s : samples) {
      if (s.label == 0 || s.label == 1) seen[s.label] = true;
    }
    return seen[0] && seen[1];
  }

  void require_both_classes() const {
    if (!has_both_classes()) {
      throw std::invalid_argument(
          "dataset must contain at least one sample of each class");
    }
  }
};

struct Individual {
  ExprTree tree;
  std::optional<double> fitness;
};

struct GPConfig {
  std::size_t population_size = 100;
  std::size_t generations = 200;
  int max_initial_depth = 6;
  int max_tree_depth = 17;
  std::size_t tournament_k = 3;
  double p_crossover = 0.9;
  double p_mutation = 0.1;     // applied to every freshly produced child
  double p_replication = 0.0;  // explicit replication share of offspring slots
  int mutation_subtree_max_depth = 4;
  std::uint64_t seed = 0;

  void validate() const {
    if (population_size < 1) throw std::invalid_argument("population_size must be >= 1");
    if (max_initial_depth < 1) throw std::invalid_argument("max_initial_depth must be >= 1");
    if (max_tree_depth < 1) throw std::invalid_argument("max_tree_depth must be >= 1");
    if (tournament_k < 1) throw std::invalid_argument("tournament_k must be >= 1");
    if (mutation_subtree_max_depth < 1) {
      throw std::invalid_argument("mutation_subtree_max_depth must be >= 1");
    }
    auto probability = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
      }
    };
    probability(p_crossover, "p_crossover");
    probability(p_mutation, "p_mutation");
    probability(p_replication, "p_replication");
    if (p_crossover + p_replication > 1.0 + 1e-12) {
      throw std::invalid_argument("p_crossover + p_replication must be <= 1");
    }
  }
};

// ---------------------------------------------------------------------------
// Fitness: separability of the two projected class distributions,
// S = |mu_a - mu_b| / max(sigma_a, sigma_b) with population sigmas.
// ---------------------------------------------------------------------------

inline constexpr double kFitnessCap = 1e12;
inline constexpr double kDegenerateTolerance = 1e-12;

/// Separability score over raw per-class projections. Degenerate spreads:
/// if both sigmas are ~0 the score is the cap when the means differ and 0
/// when they coincide; any non-finite projection forces 0.
inline double separability_score(std::span<const double> class_a,
                                 std::span<const double> class_b) {
  if (class_a.empty() || class_b.empty()) {
    throw std::invalid_argument("separability_score needs both classes");
  }
  for (double v : class_a) {
    if (!std::isfinite(v)) return 0.0;
  }
  for (double v : class_b) {
    if (!std::isfinite(v)) return 0.0;
  }
  auto moments = [](std::span<const double> xs) {
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double v : xs) var += (v - mean) * (v - mean);
    var /= static_cast<double>(xs.size());
    return std::pair<double, double>(mean, std::sqrt(var));
  };
  auto [mean_a, sd_a] = moments(class_a);
  auto [mean_b, sd_b] = moments(class_b);
  double gap = std::fabs(mean_a - mean_b);
  double spread = std::max(sd_a, sd_b);
  if (spread <= kDegenerateTolerance) {
    return gap > kDegenerateTolerance ? kFitnessCap : 0.0;
  }
  double s = gap / spread;
  if (!std::isfinite(s)) return 0.0;
  return std::min(s, kFitnessCap);
}

// ---------------------------------------------------------------------------
// Flattened tree programs: postorder instruction lists evaluated over a value
// stack. Same semantics as evaluate(); cheaper when one tree is applied to
// thousands of samples.
// ---------------------------------------------------------------------------

namespace detail {

struct FlatInstr {
  enum class Op : std::uint8_t {
    push_band,
    push_const,
    u_srt,
    u_rlog,
    b_add,
    b_sub,
    b_mul,
    b_pdiv,
  };
  Op op;
  int band = 0;
  double value = 0.0;
};

struct FlatProgram {
  std::vector<FlatInstr> code;
  int max_band = -1;

  double run(std::span<const double> pixel, std::vector<double>& stack) const {
    stack.clear();
    for (const auto& in : code) {
      switch (in.op) {
        case FlatInstr::Op::push_band:
          stack.push_back(pixel[static_cast<std::size_t>(in.band)]);
          break;
        case FlatInstr::Op::push_const:
          stack.push_back(in.value);
          break;
        case FlatInstr::Op::u_srt:
          stack.back() = srt(stack.back());
          break;
        case FlatInstr::Op::u_rlog:
          stack.back() = rlog(stack.back());
          break;
        default: {
          double rhs = stack.back();
          stack.pop_back();
          double lhs = stack.back();
          switch (in.op) {
            case FlatInstr::Op::b_add: stack.back() = lhs + rhs; break;
            case FlatInstr::Op::b_sub: stack.back() = lhs - rhs; break;
            case FlatInstr::Op::b_mul: stack.back() = lhs * rhs; break;
            default: stack.back() = pdiv(lhs, rhs); break;
          }
          break;
        }
      }
    }
    return stack.back();
  }
};

inline void compile_into(const ExprTree& t, FlatProgram& prog) {
  switch (t->kind) {
    case ExprNode::Kind::band:
      prog.code.push_back({FlatInstr::Op::push_band, t->band, 0.0});
      prog.max_band = std::max(prog.max_band, t->band);
      return;
    case ExprNode::Kind::constant:
      prog.code.push_back({FlatInstr::Op::push_const, 0, t->value});
      return;
    case ExprNode::Kind::unary:
      compile_into(t->child, prog);
      prog.code.push_back({t->unary_op == UnaryOp::srt ? FlatInstr::Op::u_srt
                                                       : FlatInstr::Op::u_rlog,
                           0, 0.0});
      return;
    case ExprNode::Kind::binary:
      compile_into(t->left, prog);
      compile_into(t->right, prog);
      FlatInstr::Op op;
      switch (t->binary_op) {
        case BinaryOp::add: op = FlatInstr::Op::b_add; break;
        case BinaryOp::sub: op = FlatInstr::Op::b_sub; break;
        case BinaryOp::mul: op = FlatInstr::Op::b_mul; break;
        default: op = FlatInstr::Op::b_pdiv; break;
      }
      prog.code.push_back({op, 0, 0.0});
      return;
  }
}

inline FlatProgram compile(const ExprTree& tree) {
  FlatProgram prog;
  prog.code.reserve(node_count(tree));
  compile_into(tree, prog);
  return prog;
}

/// Reusable projection + scoring buffers for repeated fitness evaluation.
class FitnessEvaluator {
 public:
  explicit FitnessEvaluator(const PixelDataset& data) : data_(&data) {
    data.require_both_classes();
    arity_ = data.samples.empty() ? 0 : data.samples.front().bands.size();
    for (const auto& s : data.samples) {
      if (s.bands.size() != arity_) {
        throw std::invalid_argument("dataset samples have inconsistent arity");
      }
    }
  }

  double operator()(const ExprTree& tree) {
    FlatProgram prog = compile(tree);
    if (prog.max_band >= 0 &&
        static_cast<std::size_t>(prog.max_band) >= arity_) {
      throw std::out_of_range("tree references band " +
                              std::to_string(prog.max_band) +
                              " beyond dataset arity " +
                              std::to_string(arity_));
    }
    proj_a_.clear();
    proj_b_.clear();
    for (const auto& s : data_->samples) {
      double v = prog.run(s.bands, stack_);
      (s.label == 0 ? proj_a_ : proj_b_).push_back(v);
    }
    return separability_score(proj_a_, proj_b_);
  }

 private:
  const PixelDataset* data_;
  std::size_t arity_ = 0;
  std::vector<double> stack_;
  std::vector<double> proj_a_;
  std::vector<double> proj_b_;
};

}  // namespace detail

/// Fitness of one candidate index on a two-class pixel dataset.
inline double fitness(const ExprTree& tree, const PixelDataset& data) {
  detail::FitnessEvaluator eval(data);
  return eval(tree);
}

// ---------------------------------------------------------------------------
// Selection and variation
// ---------------------------------------------------------------------------

/// Index of the tournament winner: k draws with replacement, best fitness
/// wins, first-drawn wins ties.
inline std::size_t tournament_select_index(Rng& rng,
                                           const std::vector<Individual>& pop,
                                           std::size_t k) {
  if (pop.empty()) throw std::invalid_argument("tournament over empty population");
  if (k < 1) throw std::invalid_argument("tournament k must be >= 1");
  auto fitness_of = [&](std::size_t i) {
    if (!pop[i].fitness) {
      throw std::logic_error("tournament over unevaluated individual");
    }
    return *pop[i].fitness;
  };
  std::size_t best = rand_index(rng, pop.size());
  double best_fit = fitness_of(best);
  for (std::size_t i = 1; i < k; ++i) {
    std::size_t c = rand_index(rng, pop.size());
    double f = fitness_of(c);
    if (f > best_fit) {
      best = c;
      best_fit = f;
    }
  }
  return best;
}

inline const Individual& tournament_select(Rng& rng,
                                           const std::vector<Individual>& pop,
                                           std::size_t k) {
  return pop[tournament_select_index(rng, pop, k)];
}

/// Subtree crossover with the usual 90/10 internal/leaf point bias. A child
/// deeper than max_tree_depth is replaced by a copy of its own parent.
inline std::pair<ExprTree, ExprTree> crossover(Rng& rng, const ExprTree& p1,
                                               const ExprTree& p2,
                                               int max_tree_depth = 17) {
  std::size_t i1 = select_node(rng, p1);
  std::size_t i2 = select_node(rng, p2);
  ExprTree s1 = subtree_at(p1, i1);
  ExprTree s2 = subtree_at(p2, i2);
  ExprTree c1 = replace_subtree(p1, i1, s2);
  ExprTree c2 = replace_subtree(p2, i2, s1);
  if (depth(c1) > max_tree_depth) c1 = p1;
  if (depth(c2) > max_tree_depth) c2 = p2;
  return {std::move(c1), std::move(c2)};
}

/// Replaces one node (90/10 bias) by a fresh grow subtree. The replacement is
/// redrawn until the result respects max_tree_depth, up to 10 attempts;
/// otherwise the input is returned unchanged.
inline ExprTree mutate(Rng& rng, const ExprTree& tree, const BandSchema& schema,
                       int subtree_max_depth = 4, int max_tree_depth = 17) {
  std::size_t point = select_node(rng, tree);
  for (int attempt = 0; attempt < 10; ++attempt) {
    ExprTree repl = random_tree(rng, schema, subtree_max_depth, GenMethod::grow);
    ExprTree candidate = replace_subtree(tree, point, repl);
    if (depth(candidate) <= max_tree_depth) return candidate;
  }
  return tree;
}

// ---------------------------------------------------------------------------
// The evolutionary loop
// ---------------------------------------------------------------------------

struct GenerationRecord {
  std::size_t generation = 0;     // 1-based
  double best_fitness = 0.0;      // best-so-far, monotone non-decreasing
  double mean_fitness = 0.0;      // mean over the generation's population
};

using ProgressSink = std::function<void(const GenerationRecord&)>;

struct EvolveResult {
  Individual best;
  std::vector<GenerationRecord> history;
  std::vector<Individual> final_population;  // kept for structure analysis
};

namespace detail {

inline std::vector<Individual> ramped_half_and_half(Rng& rng,
                                                    const BandSchema& schema,
                                                    std::size_t n,
                                                    int max_initial_depth) {
  int min_depth = std::min(2, max_initial_depth);
  int span = max_initial_depth - min_depth + 1;
  std::vector<Individual> pop;
  pop.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    int d = min_depth + static_cast<int>(i % static_cast<std::size_t>(span));
    auto method = (i / static_cast<std::size_t>(span)) % 2 == 0
                      ? GenMethod::grow
                      : GenMethod::full;
    pop.push_back({random_tree(rng, schema, d, method), std::nullopt});
  }
  return pop;
}

inline void evaluate_population(detail::FitnessEvaluator& eval,
                                std::vector<Individual>& pop) {
  for (auto& ind : pop) {
    if (!ind.fitness) ind.fitness = eval(ind.tree);
  }
}

}  // namespace detail

/// Runs the generational loop: ramped half-and-half initialization, tournament
/// selection, crossover-or-replication offspring (each new child additionally
/// mutated with p_mutation) and best-so-far tracking. Fully deterministic for
/// a given (config, data, seed).
inline EvolveResult evolve(const GPConfig& config, const PixelDataset& data,
                           const ProgressSink& sink = {}) {
  config.validate();
  data.require_both_classes();

  Rng rng(config.seed);
  detail::FitnessEvaluator eval(data);
  const std::size_t n = config.population_size;

  std::vector<Individual> pop = detail::ramped_half_and_half(
      rng, data.schema, n, config.max_initial_depth);
  detail::evaluate_population(eval, pop);

  Individual best = pop[0];
  for (const auto& ind : pop) {
    if (*ind.fitness > *best.fitness) best = ind;
  }

  EvolveResult result;
  result.history.reserve(config.generations);

  std::vector<Individual> children;
  children.reserve(n);
  for (std::size_t g = 1; g <= config.generations; ++g) {
    children.clear();
    auto add_child = [&](Individual child) {
      if (rand_unit(rng) < config.p_mutation) {
        child.tree = mutate(rng, child.tree, data.schema,
                            config.mutation_subtree_max_depth,
                            config.max_tree_depth);
        child.fitness.reset();
      }
      children.push_back(std::move(child));
    };
    while (children.size() < n) {
      double u = rand_unit(rng);
      if (u < config.p_crossover) {
        const Individual& pa = tournament_select(rng, pop, config.tournament_k);
        const Individual& pb = tournament_select(rng, pop, config.tournament_k);
        auto [t1, t2] = crossover(rng, pa.tree, pb.tree, config.max_tree_depth);
        add_child({std::move(t1), std::nullopt});
        if (children.size() < n) add_child({std::move(t2), std::nullopt});
      } else {
        // Explicit p_replication and the leftover probability mass both
        // replicate a tournament winner unchanged.
        add_child(tournament_select(rng, pop, config.tournament_k));
      }
    }
    detail::evaluate_population(eval, children);

    double sum = 0.0;
    for (const auto& ind : children) {
      sum += *ind.fitness;
      if (*ind.fitness > *best.fitness) best = ind;
    }
    GenerationRecord rec{g, *best.fitness,
                         sum / static_cast<double>(children.size())};
    result.history.push_back(rec);
    if (sink) sink(rec);
    pop.swap(children);
  }

  result.best = std::move(best);
  result.final_population = std::move(pop);
  return result;
}

}  // namespace specgp
