#pragma once

#include <cctype>
#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>

#include "specgp/expr.hpp"
#include "specgp/schema.hpp"

namespace specgp {

inline const char* binary_symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
    case BinaryOp::pdiv: return "%";
  }
  return "?";
}

inline const char* unary_name(UnaryOp op) {
  return op == UnaryOp::srt ? "srt" : "rlog";
}

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

/// Rounded rendering used when merging float noise matters more than
/// round-tripping (element counting, display).
inline std::string format_significant(double value, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
  return std::string(buf);
}

namespace detail {

// const_digits == 0 renders constants exactly; wrap controls whether a
// binary expression gets its own parentheses.
inline void render_formula(const ExprTree& t, const BandSchema& schema,
                           int const_digits, bool wrap, std::string& out) {
  switch (t->kind) {
    case ExprNode::Kind::band:
      if (static_cast<std::size_t>(t->band) >= schema.arity()) {
        throw std::out_of_range("band index " + std::to_string(t->band) +
                                " not in schema '" + schema.sensor_name + "'");
      }
      out += schema.bands[static_cast<std::size_t>(t->band)].name;
      return;
    case ExprNode::Kind::constant:
      out += const_digits > 0 ? format_significant(t->value, const_digits)
                              : format_double(t->value);
      return;
    case ExprNode::Kind::unary:
      out += unary_name(t->unary_op);
      out += '(';
      render_formula(t->child, schema, const_digits, false, out);
      out += ')';
      return;
    case ExprNode::Kind::binary: {
      if (wrap) out += '(';
      render_formula(t->left, schema, const_digits, true, out);
      out += ' ';
      out += binary_symbol(t->binary_op);
      out += ' ';
      render_formula(t->right, schema, const_digits, true, out);
      if (wrap) out += ')';
      return;
    }
  }
}

}  // namespace detail

/// Infix rendering with `%` for protected division and srt()/rlog() function
/// syntax, e.g. "(NIR - Red) % (NIR + Red)". Round-trips through
/// parse_formula to a structurally equal tree.
inline std::string to_formula(const ExprTree& tree, const BandSchema& schema) {
  if (!tree) throw std::invalid_argument("to_formula: empty tree");
  std::string out;
  detail::render_formula(tree, schema, 0, false, out);
  return out;
}

/// Canonical string identity of a subexpression: binary roots keep their
/// parentheses and constants are rounded to 6 significant digits so numeric
/// noise does not fragment counts.
inline std::string element_string(const ExprTree& tree,
                                  const BandSchema& schema) {
  if (!tree) throw std::invalid_argument("element_string: empty tree");
  std::string out;
  detail::render_formula(tree, schema, 6,
                         tree->kind == ExprNode::Kind::binary, out);
  return out;
}

class FormulaParseError : public std::runtime_error {
 public:
  FormulaParseError(std::size_t offset, const std::string& what)
      : std::runtime_error("formula parse error at offset " +
                           std::to_string(offset) + ": " + what),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

namespace detail {

class FormulaParser {
 public:
  FormulaParser(std::string_view text, const BandSchema& schema)
      : text_(text), schema_(schema) {}

  ExprTree parse() {
    ExprTree e = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) {
      throw FormulaParseError(pos_, "unexpected trailing input");
    }
    return e;
  }

 private:
  // sum    := product (('+' | '-') product)*
  // product:= primary (('*' | '%') primary)*
  // primary:= number | '-' number | band | func '(' sum ')' | '(' sum ')'
  ExprTree parse_sum() {
    ExprTree left = parse_product();
    while (true) {
      skip_ws();
      if (peek() == '+' || peek() == '-') {
        char op = text_[pos_++];
        ExprTree right = parse_product();
        left = binary_node(op == '+' ? BinaryOp::add : BinaryOp::sub,
                           std::move(left), std::move(right));
      } else {
        return left;
      }
    }
  }

  ExprTree parse_product() {
    ExprTree left = parse_primary();
    while (true) {
      skip_ws();
      if (peek() == '*' || peek() == '%') {
        char op = text_[pos_++];
        ExprTree right = parse_primary();
        left = binary_node(op == '*' ? BinaryOp::mul : BinaryOp::pdiv,
                           std::move(left), std::move(right));
      } else {
        return left;
      }
    }
  }

  ExprTree parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) {
      throw FormulaParseError(pos_, "expected operand, found end of input");
    }
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      ExprTree inner = parse_sum();
      skip_ws();
      if (peek() != ')') {
        throw FormulaParseError(pos_, "expected ')'");
      }
      ++pos_;
      return inner;
    }
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return parse_number();
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      return parse_identifier();
    }
    throw FormulaParseError(pos_, std::string("unexpected character '") + c +
                                      "'");
  }

  ExprTree parse_number() {
    std::size_t start = pos_;
    if (peek() == '-') ++pos_;
    if (pos_ >= text_.size() ||
        !(std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
          text_[pos_] == '.')) {
      throw FormulaParseError(start, "expected a numeric literal");
    }
    double value = 0.0;
    auto [end, ec] = std::from_chars(text_.data() + start,
                                     text_.data() + text_.size(), value);
    if (ec != std::errc()) {
      throw FormulaParseError(start, "malformed numeric literal");
    }
    pos_ = static_cast<std::size_t>(end - text_.data());
    if (!std::isfinite(value)) {
      throw FormulaParseError(start, "numeric literal is not finite");
    }
    return const_node(value);
  }

  ExprTree parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_')) {
      ++pos_;
    }
    std::string_view name = text_.substr(start, pos_ - start);
    skip_ws();
    if (peek() == '(') {
      UnaryOp op;
      if (name == "srt") {
        op = UnaryOp::srt;
      } else if (name == "rlog") {
        op = UnaryOp::rlog;
      } else {
        throw FormulaParseError(start, "unknown function '" +
                                           std::string(name) + "'");
      }
      ++pos_;  // '('
      ExprTree inner = parse_sum();
      skip_ws();
      if (peek() != ')') {
        throw FormulaParseError(pos_, "expected ')'");
      }
      ++pos_;
      return unary_node(op, std::move(inner));
    }
    if (auto idx = schema_.find(name)) {
      return band_node(static_cast<int>(*idx));
    }
    throw FormulaParseError(start, "unknown band name '" + std::string(name) +
                                       "' for schema '" + schema_.sensor_name +
                                       "'");
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  std::string_view text_;
  const BandSchema& schema_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses the infix formula format produced by to_formula. Band names are
/// resolved against the given schema; errors carry a byte offset.
inline ExprTree parse_formula(std::string_view text, const BandSchema& schema) {
  return detail::FormulaParser(text, schema).parse();
}

}  // namespace specgp
