#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "specgp/random.hpp"
#include "specgp/schema.hpp"

namespace specgp {

enum class UnaryOp { srt, rlog };
enum class BinaryOp { add, sub, mul, pdiv };

struct ExprNode;

/// Expression trees are immutable once built and share structure freely;
/// "editing" operations return new trees that reuse untouched branches.
using ExprTree = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum class Kind { band, constant, unary, binary };

  Kind kind;
  int band = -1;        // Kind::band: 0-based index into the schema
  double value = 0.0;   // Kind::constant
  UnaryOp unary_op = UnaryOp::srt;
  BinaryOp binary_op = BinaryOp::add;
  ExprTree child;       // Kind::unary
  ExprTree left;        // Kind::binary
  ExprTree right;       // Kind::binary

  bool is_terminal() const {
    return kind == Kind::band || kind == Kind::constant;
  }
};

inline ExprTree band_node(int index) {
  if (index < 0) throw std::invalid_argument("band index must be >= 0");
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::band;
  n->band = index;
  return n;
}

inline ExprTree const_node(double value) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("constant terminal must be finite");
  }
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::constant;
  n->value = value;
  return n;
}

inline ExprTree unary_node(UnaryOp op, ExprTree child) {
  if (!child) throw std::invalid_argument("unary node needs a child");
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::unary;
  n->unary_op = op;
  n->child = std::move(child);
  return n;
}

inline ExprTree binary_node(BinaryOp op, ExprTree left, ExprTree right) {
  if (!left || !right) throw std::invalid_argument("binary node needs two children");
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::binary;
  n->binary_op = op;
  n->left = std::move(left);
  n->right = std::move(right);
  return n;
}

// ---------------------------------------------------------------------------
// Protected arithmetic. Total on finite inputs; this is what makes tree
// evaluation closed over the reals.
// ---------------------------------------------------------------------------

inline constexpr double kZeroTolerance = 1e-12;

/// Protected division: x/y, or 1.0 when the divisor is (near) zero.
inline double pdiv(double x, double y) {
  return std::fabs(y) > kZeroTolerance ? x / y : 1.0;
}

/// Protected square root: sqrt of the absolute value.
inline double srt(double x) { return std::sqrt(std::fabs(x)); }

/// Protected natural log: 0 at (near) zero, ln|x| otherwise.
inline double rlog(double x) {
  return std::fabs(x) > kZeroTolerance ? std::log(std::fabs(x)) : 0.0;
}

inline double apply_unary(UnaryOp op, double x) {
  return op == UnaryOp::srt ? srt(x) : rlog(x);
}

inline double apply_binary(BinaryOp op, double x, double y) {
  switch (op) {
    case BinaryOp::add: return x + y;
    case BinaryOp::sub: return x - y;
    case BinaryOp::mul: return x * y;
    case BinaryOp::pdiv: return pdiv(x, y);
  }
  throw std::logic_error("unreachable binary op");
}

/// Evaluates the tree on one pixel (vector of band reflectances).
/// A band index beyond the pixel arity is a structural error, never clamped.
inline double evaluate(const ExprTree& tree, std::span<const double> pixel) {
  if (!tree) throw std::invalid_argument("evaluate: empty tree");
  switch (tree->kind) {
    case ExprNode::Kind::band:
      if (static_cast<std::size_t>(tree->band) >= pixel.size()) {
        throw std::out_of_range("band index " + std::to_string(tree->band) +
                                " out of range for pixel of arity " +
                                std::to_string(pixel.size()));
      }
      return pixel[static_cast<std::size_t>(tree->band)];
    case ExprNode::Kind::constant:
      return tree->value;
    case ExprNode::Kind::unary:
      return apply_unary(tree->unary_op, evaluate(tree->child, pixel));
    case ExprNode::Kind::binary:
      return apply_binary(tree->binary_op, evaluate(tree->left, pixel),
                          evaluate(tree->right, pixel));
  }
  throw std::logic_error("unreachable node kind");
}

// ---------------------------------------------------------------------------
// Structural queries
// ---------------------------------------------------------------------------

inline std::size_t node_count(const ExprTree& tree) {
  if (!tree) return 0;
  switch (tree->kind) {
    case ExprNode::Kind::band:
    case ExprNode::Kind::constant: return 1;
    case ExprNode::Kind::unary: return 1 + node_count(tree->child);
    case ExprNode::Kind::binary:
      return 1 + node_count(tree->left) + node_count(tree->right);
  }
  return 0;
}

/// Depth of a bare terminal is 1.
inline int depth(const ExprTree& tree) {
  if (!tree) return 0;
  switch (tree->kind) {
    case ExprNode::Kind::band:
    case ExprNode::Kind::constant: return 1;
    case ExprNode::Kind::unary: return 1 + depth(tree->child);
    case ExprNode::Kind::binary:
      return 1 + std::max(depth(tree->left), depth(tree->right));
  }
  return 0;
}

inline bool structurally_equal(const ExprTree& a, const ExprTree& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprNode::Kind::band: return a->band == b->band;
    case ExprNode::Kind::constant: return a->value == b->value;
    case ExprNode::Kind::unary:
      return a->unary_op == b->unary_op &&
             structurally_equal(a->child, b->child);
    case ExprNode::Kind::binary:
      return a->binary_op == b->binary_op &&
             structurally_equal(a->left, b->left) &&
             structurally_equal(a->right, b->right);
  }
  return false;
}

/// One subtree per internal (non-terminal) node, in preorder. A bare
/// terminal yields an empty list.
inline std::vector<ExprTree> subtrees(const ExprTree& tree) {
  std::vector<ExprTree> out;
  auto walk = [&](auto&& self, const ExprTree& t) -> void {
    if (!t || t->is_terminal()) return;
    out.push_back(t);
    if (t->kind == ExprNode::Kind::unary) {
      self(self, t->child);
    } else {
      self(self, t->left);
      self(self, t->right);
    }
  };
  walk(walk, tree);
  return out;
}

/// Subtree rooted at the node with the given preorder index (root = 0).
inline ExprTree subtree_at(const ExprTree& tree, std::size_t index) {
  if (!tree) throw std::invalid_argument("subtree_at: empty tree");
  if (index == 0) return tree;
  index -= 1;
  switch (tree->kind) {
    case ExprNode::Kind::unary:
      return subtree_at(tree->child, index);
    case ExprNode::Kind::binary: {
      std::size_t left_size = node_count(tree->left);
      if (index < left_size) return subtree_at(tree->left, index);
      return subtree_at(tree->right, index - left_size);
    }
    default:
      throw std::out_of_range("subtree_at: preorder index out of range");
  }
}

/// New tree with the node at the given preorder index replaced by
/// `replacement`; untouched branches are shared with the input.
inline ExprTree replace_subtree(const ExprTree& tree, std::size_t index,
                                const ExprTree& replacement) {
  if (!tree) throw std::invalid_argument("replace_subtree: empty tree");
  if (index == 0) return replacement;
  index -= 1;
  switch (tree->kind) {
    case ExprNode::Kind::unary:
      return unary_node(tree->unary_op,
                        replace_subtree(tree->child, index, replacement));
    case ExprNode::Kind::binary: {
      std::size_t left_size = node_count(tree->left);
      if (index < left_size) {
        return binary_node(tree->binary_op,
                           replace_subtree(tree->left, index, replacement),
                           tree->right);
      }
      return binary_node(tree->binary_op, tree->left,
                         replace_subtree(tree->right, index - left_size,
                                         replacement));
    }
    default:
      throw std::out_of_range("replace_subtree: preorder index out of range");
  }
}

// ---------------------------------------------------------------------------
// Random generation
// ---------------------------------------------------------------------------

enum class GenMethod { grow, full };

inline constexpr double kConstantMin = 0.0;
inline constexpr double kConstantMax = 1000.0;
inline constexpr std::size_t kFunctionSetSize = 6;  // add sub mul pdiv srt rlog

namespace detail {

inline ExprTree random_terminal(Rng& rng, const BandSchema& schema) {
  // The ephemeral constant counts as one extra terminal kind next to the
  // bands; its value is frozen at creation.
  std::size_t pick = rand_index(rng, schema.arity() + 1);
  if (pick < schema.arity()) return band_node(static_cast<int>(pick));
  return const_node(rand_range(rng, kConstantMin, kConstantMax));
}

inline ExprTree random_tree_impl(Rng& rng, const BandSchema& schema,
                                 int depth_left, GenMethod method) {
  bool make_leaf;
  if (depth_left <= 1) {
    make_leaf = true;
  } else if (method == GenMethod::full) {
    make_leaf = false;
  } else {
    // Grow: terminal with probability |terminals| / (|terminals| + |functions|).
    double n_term = static_cast<double>(schema.arity() + 1);
    double n_fun = static_cast<double>(kFunctionSetSize);
    make_leaf = rand_unit(rng) < n_term / (n_term + n_fun);
  }
  if (make_leaf) return random_terminal(rng, schema);

  std::size_t f = rand_index(rng, kFunctionSetSize);
  switch (f) {
    case 0: case 1: case 2: case 3: {
      auto op = static_cast<BinaryOp>(f);
      auto left = random_tree_impl(rng, schema, depth_left - 1, method);
      auto right = random_tree_impl(rng, schema, depth_left - 1, method);
      return binary_node(op, std::move(left), std::move(right));
    }
    case 4:
    case 5: {
      auto op = f == 4 ? UnaryOp::srt : UnaryOp::rlog;
      return unary_node(op, random_tree_impl(rng, schema, depth_left - 1, method));
    }
  }
  throw std::logic_error("unreachable function pick");
}

}  // namespace detail

/// Random tree of depth <= max_depth. With GenMethod::full every leaf sits
/// exactly at max_depth; with grow, leaves may appear at any depth >= 1.
inline ExprTree random_tree(Rng& rng, const BandSchema& schema, int max_depth,
                            GenMethod method) {
  if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  if (schema.arity() == 0) throw std::invalid_argument("schema has no bands");
  return detail::random_tree_impl(rng, schema, max_depth, method);
}

/// Picks a crossover/mutation point: an internal node with probability
/// 1 - leaf_bias, a leaf with probability leaf_bias, uniformly within the
/// chosen stratum. A single-leaf tree always yields the root.
inline std::size_t select_node(Rng& rng, const ExprTree& tree,
                               double leaf_bias = 0.1) {
  if (!tree) throw std::invalid_argument("select_node: empty tree");
  if (tree->is_terminal()) return 0;

  std::vector<std::size_t> internal;
  std::vector<std::size_t> leaves;
  std::size_t next = 0;
  auto walk = [&](auto&& self, const ExprTree& t) -> void {
    std::size_t idx = next++;
    if (t->is_terminal()) {
      leaves.push_back(idx);
      return;
    }
    internal.push_back(idx);
    if (t->kind == ExprNode::Kind::unary) {
      self(self, t->child);
    } else {
      self(self, t->left);
      self(self, t->right);
    }
  };
  walk(walk, tree);

  if (rand_unit(rng) < leaf_bias) {
    return leaves[rand_index(rng, leaves.size())];
  }
  return internal[rand_index(rng, internal.size())];
}

}  // namespace specgp
