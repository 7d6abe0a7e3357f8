// Copyright 2026 The mwpx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cctype>
#include <string>
#include <vector>

#include "mwpx/error.h"
#include "mwpx/expr.h"
#include "mwpx/numbers.h"

namespace mwpx {
namespace {

struct Token {
  enum class Kind { kNumber, kOp, kOpen, kClose, kEnd };
  Kind kind;
  std::string text;
  std::size_t offset;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = i;
      while (i < s.size() &&
             (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.'))
        ++i;
      if (i < s.size() && s[i] == '%') ++i;
      out.push_back({Token::Kind::kNumber, std::string(s.substr(start, i - start)),
                     start});
    } else if (c == '(' || c == '[') {
      out.push_back({Token::Kind::kOpen, std::string(1, c), i++});
    } else if (c == ')' || c == ']') {
      out.push_back({Token::Kind::kClose, std::string(1, c), i++});
    } else if (c == '*' && i + 1 < s.size() && s[i + 1] == '*') {
      out.push_back({Token::Kind::kOp, "^", i});
      i += 2;
    } else if (operator_from_symbol(std::string_view(&s[i], 1))) {
      out.push_back({Token::Kind::kOp, std::string(1, c), i++});
    } else {
      throw Error(Errc::kSyntaxError, "unexpected character '" +
                                          std::string(1, c) + "' at " +
                                          std::to_string(i));
    }
  }
  out.push_back({Token::Kind::kEnd, "", s.size()});
  return out;
}

class InfixParser {
 public:
  InfixParser(std::vector<Token> tokens, std::span<const double> quantities,
              const ConstantTable& constants)
      : tokens_(std::move(tokens)),
        quantities_(quantities),
        constants_(constants),
        used_(quantities.size(), false) {}

  ExprTree parse() {
    ExprTree tree = parse_sum();
    if (peek().kind != Token::Kind::kEnd) fail("trailing input");
    return tree;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::kSyntaxError,
                what + " at offset " + std::to_string(peek().offset));
  }

  bool at_op(char c) const {
    return peek().kind == Token::Kind::kOp && peek().text[0] == c;
  }

  ExprTree parse_sum() {
    ExprTree lhs = parse_product();
    while (at_op('+') || at_op('-')) {
      Operator op = *operator_from_symbol(next().text);
      lhs = ExprTree::apply(op, lhs, parse_product());
    }
    return lhs;
  }

  ExprTree parse_product() {
    ExprTree lhs = parse_power();
    while (at_op('*') || at_op('/')) {
      Operator op = *operator_from_symbol(next().text);
      lhs = ExprTree::apply(op, lhs, parse_power());
    }
    return lhs;
  }

  // Right associative: a^b^c == a^(b^c).
  ExprTree parse_power() {
    ExprTree base = parse_primary();
    if (at_op('^')) {
      next();
      return ExprTree::apply(Operator::kPow, base, parse_power());
    }
    return base;
  }

  ExprTree parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Token::Kind::kNumber:
        next();
        return bind_literal(t.text);
      case Token::Kind::kOpen: {
        char open = t.text[0];
        next();
        ExprTree inner = parse_sum();
        if (peek().kind != Token::Kind::kClose ||
            (open == '(') != (peek().text[0] == ')'))
          fail("unbalanced bracket");
        next();
        return inner;
      }
      default:
        fail(t.kind == Token::Kind::kEnd ? "unexpected end of equation"
                                         : "unexpected '" + t.text + "'");
    }
  }

  std::optional<int> bind_quantity(double value) {
    for (std::size_t i = 0; i < quantities_.size(); ++i) {
      if (!used_[i] && quantities_[i] == value) {
        used_[i] = true;
        return static_cast<int>(i);
      }
    }
    for (std::size_t i = 0; i < quantities_.size(); ++i) {
      if (quantities_[i] == value) return static_cast<int>(i);
    }
    return std::nullopt;
  }

  ExprTree percent_of(ExprTree base) {
    auto hundred = constants_.find_by_value(100.0);
    if (!hundred) {
      throw Error(Errc::kUnboundLiteral, "no constant 100 for percent literal");
    }
    return ExprTree::apply(Operator::kDiv, base,
                           ExprTree::constant(*hundred, 100.0));
  }

  ExprTree bind_literal(const std::string& text) {
    auto value = parse_number(text);
    if (!value) throw Error(Errc::kSyntaxError, "bad number '" + text + "'");
    if (auto q = bind_quantity(*value)) return ExprTree::quantity(*q);
    bool percent = text.back() == '%';
    std::optional<double> raw;
    if (percent) raw = parse_number(text.substr(0, text.size() - 1));
    if (raw) {
      if (auto q = bind_quantity(*raw)) return percent_of(ExprTree::quantity(*q));
    }
    if (auto id = constants_.find_by_value(*value)) {
      return ExprTree::constant(*id, *value);
    }
    if (raw) {
      if (auto id = constants_.find_by_value(*raw)) {
        return percent_of(ExprTree::constant(*id, *raw));
      }
    }
    throw Error(Errc::kUnboundLiteral,
                "literal " + text + " matches no quantity or constant");
  }

  std::vector<Token> tokens_;
  std::span<const double> quantities_;
  const ConstantTable& constants_;
  std::vector<bool> used_;
  std::size_t pos_ = 0;
};

}  // namespace

ExprTree parse_infix(std::string_view equation,
                     std::span<const double> quantities,
                     const ConstantTable& constants) {
  std::size_t first = equation.find_first_not_of(" \t");
  if (first != std::string_view::npos) equation.remove_prefix(first);
  if (!equation.empty() && (equation[0] == 'x' || equation[0] == 'X')) {
    std::size_t eq = equation.find_first_not_of(" \t", 1);
    if (eq != std::string_view::npos && equation[eq] == '=') {
      equation.remove_prefix(eq + 1);
    }
  }
  return InfixParser(tokenize(equation), quantities, constants).parse();
}

}  // namespace mwpx
