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

#ifndef MWPX_EXPR_H_
#define MWPX_EXPR_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mwpx {

// Permitted operator set. Every operator is binary.
enum class Operator : std::uint8_t { kAdd, kSub, kMult, kDiv, kPow };

inline constexpr std::array<Operator, 5> kAllOperators = {
    Operator::kAdd, Operator::kSub, Operator::kMult, Operator::kDiv,
    Operator::kPow};

constexpr int arity(Operator) { return 2; }

// "+", "-", "*", "/", "^".
std::string_view operator_symbol(Operator op);
std::optional<Operator> operator_from_symbol(std::string_view symbol);

// Ordered id -> value map. The order is significant: it fixes the decoder's
// vocabulary indices, so entries are only ever appended.
class ConstantTable {
 public:
  struct Entry {
    std::string id;
    double value;
  };

  ConstantTable() = default;

  // const_0, const_1, const_2, const_3, const_4, const_0.5, const_100,
  // const_pi. With pi_approx the legacy value 3.14 is stored for const_pi.
  static ConstantTable standard(bool pi_approx = false);

  // Appends a new entry. Re-adding an existing id with the same value is a
  // no-op; a different value throws ConfigError.
  void add(std::string id, double value);

  bool contains(std::string_view id) const;
  std::optional<double> value(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;
  // First entry (in table order) whose value equals v exactly.
  std::optional<std::string> find_by_value(double v) const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  bool operator==(const ConstantTable& other) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ExprNode {
  enum class Kind : std::uint8_t { kOperator, kQuantity, kConstant };

  Kind kind = Kind::kQuantity;
  Operator op = Operator::kAdd;  // kOperator only
  int index = 0;                 // kQuantity only
  std::string constant_id;       // kConstant only
  double constant_value = 0.0;   // kConstant only

  bool operator==(const ExprNode& other) const;
};

// Binary arithmetic tree over quantity and constant leaves.
//
// Nodes are stored flat in pre-order, so a tree is a plain value type: copy,
// compare and hash it like a vector. Subtrees are contiguous ranges.
class ExprTree {
 public:
  static ExprTree quantity(int index);
  static ExprTree constant(std::string id, double value);
  static ExprTree apply(Operator op, const ExprTree& lhs, const ExprTree& rhs);

  const std::vector<ExprNode>& nodes() const { return nodes_; }
  const ExprNode& root() const { return nodes_.front(); }
  bool is_leaf() const { return root().kind != ExprNode::Kind::kOperator; }

  // Children of an operator root, copied out as standalone trees.
  ExprTree left() const;
  ExprTree right() const;

  std::size_t size() const { return nodes_.size(); }
  int depth() const;
  // -1 when the tree has no quantity leaves.
  int max_quantity_index() const;
  bool uses(Operator op) const;

  bool operator==(const ExprTree& other) const = default;

 private:
  ExprTree() = default;
  friend ExprTree parse_prefix(std::span<const std::string>, int,
                               const ConstantTable&);

  std::vector<ExprNode> nodes_;
};

namespace ops {
inline ExprTree Q(int i) { return ExprTree::quantity(i); }
inline ExprTree add(const ExprTree& a, const ExprTree& b) {
  return ExprTree::apply(Operator::kAdd, a, b);
}
inline ExprTree sub(const ExprTree& a, const ExprTree& b) {
  return ExprTree::apply(Operator::kSub, a, b);
}
inline ExprTree mult(const ExprTree& a, const ExprTree& b) {
  return ExprTree::apply(Operator::kMult, a, b);
}
inline ExprTree div(const ExprTree& a, const ExprTree& b) {
  return ExprTree::apply(Operator::kDiv, a, b);
}
inline ExprTree pow(const ExprTree& a, const ExprTree& b) {
  return ExprTree::apply(Operator::kPow, a, b);
}
}  // namespace ops

// Prefix token sequence, e.g. {"/", "-", "N0", "N1", "const_2"}.
using LinearTree = std::vector<std::string>;

// "N3" for index 3.
std::string quantity_token(int index);
// Index of a quantity token, or nullopt for anything else.
std::optional<int> parse_quantity_token(std::string_view token);

// True when the arity counter starts at 1, stays positive until the last
// token and hits 0 exactly there. Leaf/operator classification only; token
// validity is checked by parse_prefix.
bool is_complete_prefix(std::span<const std::string> tokens,
                        const ConstantTable& constants);

LinearTree serialize_prefix(const ExprTree& tree);

// Throws MalformedPrefix, UnknownToken or QuantityOutOfRange.
ExprTree parse_prefix(std::span<const std::string> tokens, int num_quantities,
                      const ConstantTable& constants);

// Space-separated text form of a linear tree.
std::string join_tokens(std::span<const std::string> tokens);
LinearTree split_tokens(std::string_view text);

// Parses an infix equation such as "x=(20+21)*50%". Numeric literals bind to
// quantities (earliest unused equal value first, then any equal value), then
// to constants by value. Throws SyntaxError or UnboundLiteral.
ExprTree parse_infix(std::string_view equation,
                     std::span<const double> quantities,
                     const ConstantTable& constants);

// Throws DivisionByZero, NonFiniteResult, QuantityOutOfRange, UnknownToken.
double evaluate(const ExprTree& tree, std::span<const double> quantity_values,
                const ConstantTable& constants);

inline constexpr double kDefaultAnswerThreshold = 1e-4;

// err = |predicted - gold| / |gold| for gold != 0, |predicted| otherwise;
// accepted iff err <= threshold.
bool check_answer(double predicted, double gold,
                  double threshold = kDefaultAnswerThreshold);

}  // namespace mwpx

#endif  // MWPX_EXPR_H_
