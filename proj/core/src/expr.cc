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

#include "mwpx/expr.h"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mwpx/error.h"
#include "mwpx/numbers.h"

namespace mwpx {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kMalformedPrefix: return "MalformedPrefix";
    case Errc::kUnknownToken: return "UnknownToken";
    case Errc::kQuantityOutOfRange: return "QuantityOutOfRange";
    case Errc::kSyntaxError: return "SyntaxError";
    case Errc::kUnboundLiteral: return "UnboundLiteral";
    case Errc::kDivisionByZero: return "DivisionByZero";
    case Errc::kNonFiniteResult: return "NonFiniteResult";
    case Errc::kFormulaSyntaxError: return "FormulaSyntaxError";
    case Errc::kDanglingBackRef: return "DanglingBackRef";
    case Errc::kFilteredOperator: return "FilteredOperator";
    case Errc::kUnknownOperator: return "UnknownOperator";
    case Errc::kFileFormatError: return "FileFormatError";
    case Errc::kMissingTranslation: return "MissingTranslation";
    case Errc::kSizeTooLarge: return "SizeTooLarge";
    case Errc::kVerificationFailed: return "VerificationFailed";
    case Errc::kConfigError: return "ConfigError";
    case Errc::kMissingGoldTree: return "MissingGoldTree";
    case Errc::kNoCrossLingualCandidate: return "NoCrossLingualCandidate";
    case Errc::kEmptyGroup: return "EmptyGroup";
    case Errc::kBadTemperature: return "BadTemperature";
    case Errc::kNotNormalized: return "NotNormalized";
    case Errc::kCheckpointError: return "CheckpointError";
  }
  return "Unknown";
}

std::string_view operator_symbol(Operator op) {
  switch (op) {
    case Operator::kAdd: return "+";
    case Operator::kSub: return "-";
    case Operator::kMult: return "*";
    case Operator::kDiv: return "/";
    case Operator::kPow: return "^";
  }
  return "?";
}

std::optional<Operator> operator_from_symbol(std::string_view symbol) {
  for (Operator op : kAllOperators) {
    if (operator_symbol(op) == symbol) return op;
  }
  return std::nullopt;
}

// ConstantTable ---------------------------------------------------------------

ConstantTable ConstantTable::standard(bool pi_approx) {
  ConstantTable table;
  table.add("const_0", 0.0);
  table.add("const_1", 1.0);
  table.add("const_2", 2.0);
  table.add("const_3", 3.0);
  table.add("const_4", 4.0);
  table.add("const_0.5", 0.5);
  table.add("const_100", 100.0);
  table.add("const_pi", pi_approx ? 3.14 : std::numbers::pi);
  return table;
}

void ConstantTable::add(std::string id, double value) {
  if (auto it = index_.find(id); it != index_.end()) {
    if (entries_[it->second].value != value) {
      throw Error(Errc::kConfigError,
                  "constant " + id + " already registered with another value");
    }
    return;
  }
  if (id.empty() || id.find(' ') != std::string::npos) {
    throw Error(Errc::kConfigError, "bad constant id '" + id + "'");
  }
  index_.emplace(id, entries_.size());
  entries_.push_back({std::move(id), value});
}

bool ConstantTable::contains(std::string_view id) const {
  return index_.count(std::string(id)) != 0;
}

std::optional<double> ConstantTable::value(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].value;
}

std::optional<std::size_t> ConstantTable::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> ConstantTable::find_by_value(double v) const {
  for (const auto& e : entries_) {
    if (e.value == v) return e.id;
  }
  return std::nullopt;
}

bool ConstantTable::operator==(const ConstantTable& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].id != other.entries_[i].id ||
        entries_[i].value != other.entries_[i].value)
      return false;
  }
  return true;
}

// ExprTree ---------------------------------------------------------------------

bool ExprNode::operator==(const ExprNode& other) const {
  if (kind != other.kind) return false;
  switch (kind) {
    case Kind::kOperator: return op == other.op;
    case Kind::kQuantity: return index == other.index;
    case Kind::kConstant: return constant_id == other.constant_id;
  }
  return false;
}

namespace {

// One past the end of the subtree rooted at nodes[pos].
std::size_t subtree_end(const std::vector<ExprNode>& nodes, std::size_t pos) {
  int pending = 1;
  while (pending > 0) {
    pending += nodes[pos].kind == ExprNode::Kind::kOperator ? 1 : -1;
    ++pos;
  }
  return pos;
}

}  // namespace

ExprTree ExprTree::quantity(int index) {
  ExprTree t;
  ExprNode n;
  n.kind = ExprNode::Kind::kQuantity;
  n.index = index;
  t.nodes_.push_back(std::move(n));
  return t;
}

ExprTree ExprTree::constant(std::string id, double value) {
  ExprTree t;
  ExprNode n;
  n.kind = ExprNode::Kind::kConstant;
  n.constant_id = std::move(id);
  n.constant_value = value;
  t.nodes_.push_back(std::move(n));
  return t;
}

ExprTree ExprTree::apply(Operator op, const ExprTree& lhs,
                         const ExprTree& rhs) {
  ExprTree t;
  t.nodes_.reserve(1 + lhs.size() + rhs.size());
  ExprNode n;
  n.kind = ExprNode::Kind::kOperator;
  n.op = op;
  t.nodes_.push_back(std::move(n));
  t.nodes_.insert(t.nodes_.end(), lhs.nodes_.begin(), lhs.nodes_.end());
  t.nodes_.insert(t.nodes_.end(), rhs.nodes_.begin(), rhs.nodes_.end());
  return t;
}

ExprTree ExprTree::left() const {
  ExprTree t;
  std::size_t end = subtree_end(nodes_, 1);
  t.nodes_.assign(nodes_.begin() + 1, nodes_.begin() + end);
  return t;
}

ExprTree ExprTree::right() const {
  ExprTree t;
  std::size_t begin = subtree_end(nodes_, 1);
  t.nodes_.assign(nodes_.begin() + begin, nodes_.end());
  return t;
}

int ExprTree::depth() const {
  // Depth of each node follows from a stack of remaining child slots.
  std::vector<int> slots;
  int max_depth = 0;
  for (const auto& n : nodes_) {
    int d = static_cast<int>(slots.size()) + 1;
    max_depth = std::max(max_depth, d);
    if (n.kind == ExprNode::Kind::kOperator) {
      slots.push_back(2);
    } else {
      while (!slots.empty() && --slots.back() == 0) slots.pop_back();
    }
  }
  return max_depth;
}

int ExprTree::max_quantity_index() const {
  int best = -1;
  for (const auto& n : nodes_) {
    if (n.kind == ExprNode::Kind::kQuantity) best = std::max(best, n.index);
  }
  return best;
}

bool ExprTree::uses(Operator op) const {
  for (const auto& n : nodes_) {
    if (n.kind == ExprNode::Kind::kOperator && n.op == op) return true;
  }
  return false;
}

// Linear form ------------------------------------------------------------------

std::string quantity_token(int index) { return "N" + std::to_string(index); }

std::optional<int> parse_quantity_token(std::string_view token) {
  if (token.size() < 2 || token[0] != 'N') return std::nullopt;
  int value = 0;
  auto [ptr, ec] =
      std::from_chars(token.data() + 1, token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  if (token.size() > 2 && token[1] == '0') return std::nullopt;
  return value;
}

bool is_complete_prefix(std::span<const std::string> tokens,
                        const ConstantTable&) {
  int counter = 1;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (counter <= 0) return false;
    counter += operator_from_symbol(tokens[i]) ? 1 : -1;
  }
  return !tokens.empty() && counter == 0;
}

LinearTree serialize_prefix(const ExprTree& tree) {
  LinearTree out;
  out.reserve(tree.size());
  for (const auto& n : tree.nodes()) {
    switch (n.kind) {
      case ExprNode::Kind::kOperator:
        out.emplace_back(operator_symbol(n.op));
        break;
      case ExprNode::Kind::kQuantity:
        out.push_back(quantity_token(n.index));
        break;
      case ExprNode::Kind::kConstant:
        out.push_back(n.constant_id);
        break;
    }
  }
  return out;
}

ExprTree parse_prefix(std::span<const std::string> tokens, int num_quantities,
                      const ConstantTable& constants) {
  if (tokens.empty()) throw Error(Errc::kMalformedPrefix, "empty sequence");
  ExprTree tree;
  tree.nodes_.reserve(tokens.size());
  int counter = 1;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (counter <= 0) {
      throw Error(Errc::kMalformedPrefix,
                  "trailing tokens after complete tree at position " +
                      std::to_string(i));
    }
    const std::string& tok = tokens[i];
    ExprNode n;
    if (auto op = operator_from_symbol(tok)) {
      n.kind = ExprNode::Kind::kOperator;
      n.op = *op;
      counter += arity(*op) - 1;
    } else if (auto q = parse_quantity_token(tok)) {
      if (*q >= num_quantities) {
        throw Error(Errc::kQuantityOutOfRange,
                    tok + " with " + std::to_string(num_quantities) +
                        " quantities");
      }
      n.kind = ExprNode::Kind::kQuantity;
      n.index = *q;
      counter -= 1;
    } else if (auto v = constants.value(tok)) {
      n.kind = ExprNode::Kind::kConstant;
      n.constant_id = tok;
      n.constant_value = *v;
      counter -= 1;
    } else {
      throw Error(Errc::kUnknownToken, "'" + tok + "'");
    }
    tree.nodes_.push_back(std::move(n));
  }
  if (counter != 0) {
    throw Error(Errc::kMalformedPrefix,
                "incomplete tree, " + std::to_string(counter) +
                    " operand(s) missing");
  }
  return tree;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

LinearTree split_tokens(std::string_view text) {
  LinearTree out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

// Evaluation -------------------------------------------------------------------

namespace {

class Evaluator {
 public:
  Evaluator(const std::vector<ExprNode>& nodes, std::span<const double> values,
            const ConstantTable& constants)
      : nodes_(nodes), values_(values), constants_(constants) {}

  double run() { return eval(); }

 private:
  double eval() {
    const ExprNode& n = nodes_[pos_++];
    switch (n.kind) {
      case ExprNode::Kind::kQuantity:
        if (n.index < 0 || static_cast<std::size_t>(n.index) >= values_.size()) {
          throw Error(Errc::kQuantityOutOfRange,
                      quantity_token(n.index) + " with " +
                          std::to_string(values_.size()) + " bound values");
        }
        return values_[n.index];
      case ExprNode::Kind::kConstant: {
        auto v = constants_.value(n.constant_id);
        if (!v) throw Error(Errc::kUnknownToken, "constant " + n.constant_id);
        return *v;
      }
      case ExprNode::Kind::kOperator:
        break;
    }
    double a = eval();
    double b = eval();
    double r = 0.0;
    switch (n.op) {
      case Operator::kAdd: r = a + b; break;
      case Operator::kSub: r = a - b; break;
      case Operator::kMult: r = a * b; break;
      case Operator::kDiv:
        if (b == 0.0) throw Error(Errc::kDivisionByZero, "divisor is zero");
        r = a / b;
        break;
      case Operator::kPow: r = std::pow(a, b); break;
    }
    if (!std::isfinite(r)) {
      throw Error(Errc::kNonFiniteResult,
                  format_number(a) + " " + std::string(operator_symbol(n.op)) +
                      " " + format_number(b));
    }
    return r;
  }

  const std::vector<ExprNode>& nodes_;
  std::span<const double> values_;
  const ConstantTable& constants_;
  std::size_t pos_ = 0;
};

}  // namespace

double evaluate(const ExprTree& tree, std::span<const double> quantity_values,
                const ConstantTable& constants) {
  return Evaluator(tree.nodes(), quantity_values, constants).run();
}

bool check_answer(double predicted, double gold, double threshold) {
  double err = gold != 0.0 ? std::abs(predicted - gold) / std::abs(gold)
                           : std::abs(predicted);
  return err <= threshold;
}

}  // namespace mwpx
