#ifndef MWPX_TESTS_ORACLES_H_
#define MWPX_TESTS_ORACLES_H_

// Reference implementations used only by tests. They share no code with the
// library beyond building ExprTree values for comparison.

#include <cctype>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mwpx/expr.h"

namespace mwpx::testing {

struct OracleNode {
  char op = 0;  // '+', '-', '*', '/', '^' or 0 for a leaf
  int quantity = -1;
  std::string constant;
  double constant_value = 0.0;
  std::unique_ptr<OracleNode> left, right;
};

inline std::unique_ptr<OracleNode> random_oracle_tree(std::mt19937_64& rng,
                                                      int depth_left,
                                                      int num_quantities,
                                                      const ConstantTable& table) {
  auto node = std::make_unique<OracleNode>();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (depth_left == 0 || u(rng) < 0.3) {
    if (num_quantities > 0 && u(rng) < 0.8) {
      node->quantity = std::uniform_int_distribution<int>(0, num_quantities - 1)(rng);
    } else {
      const auto& e = table.entries()[std::uniform_int_distribution<std::size_t>(
          0, table.size() - 1)(rng)];
      node->constant = e.id;
      node->constant_value = e.value;
    }
    return node;
  }
  static const char kOps[] = {'+', '+', '-', '-', '*', '*', '/', '/', '^'};
  node->op = kOps[std::uniform_int_distribution<int>(0, 8)(rng)];
  node->left = random_oracle_tree(rng, depth_left - 1, num_quantities, table);
  node->right = random_oracle_tree(rng, depth_left - 1, num_quantities, table);
  return node;
}

inline int oracle_depth(const OracleNode& n) {
  if (!n.op) return 0;
  return 1 + std::max(oracle_depth(*n.left), oracle_depth(*n.right));
}

// Naive recursive evaluation; nullopt for a zero divisor or a non-finite value.
inline std::optional<double> oracle_eval(const OracleNode& n,
                                         const std::vector<double>& q) {
  if (!n.op) {
    if (n.quantity >= 0) return q.at(static_cast<std::size_t>(n.quantity));
    return n.constant_value;
  }
  auto a = oracle_eval(*n.left, q);
  if (!a) return std::nullopt;
  auto b = oracle_eval(*n.right, q);
  if (!b) return std::nullopt;
  double r = 0.0;
  switch (n.op) {
    case '+': r = *a + *b; break;
    case '-': r = *a - *b; break;
    case '*': r = *a * *b; break;
    case '/':
      if (*b == 0.0) return std::nullopt;
      r = *a / *b;
      break;
    case '^': r = std::pow(*a, *b); break;
  }
  if (!std::isfinite(r)) return std::nullopt;
  return r;
}

inline ExprTree to_expr(const OracleNode& n) {
  if (!n.op) {
    if (n.quantity >= 0) return ExprTree::quantity(n.quantity);
    return ExprTree::constant(n.constant, n.constant_value);
  }
  Operator op = Operator::kAdd;
  switch (n.op) {
    case '+': op = Operator::kAdd; break;
    case '-': op = Operator::kSub; break;
    case '*': op = Operator::kMult; break;
    case '/': op = Operator::kDiv; break;
    case '^': op = Operator::kPow; break;
  }
  return ExprTree::apply(op, to_expr(*n.left), to_expr(*n.right));
}

// Shunting-yard evaluation of an infix string over numeric literals with
// optional '%' suffix, parentheses and + - * / ^ (^ right-associative).
inline std::optional<double> shunting_yard_eval(const std::string& s) {
  std::vector<double> values;
  std::vector<char> ops;
  auto prec = [](char op) {
    switch (op) {
      case '+': case '-': return 1;
      case '*': case '/': return 2;
      case '^': return 3;
    }
    return 0;
  };
  auto apply = [&]() -> bool {
    if (values.size() < 2 || ops.empty()) return false;
    double b = values.back(); values.pop_back();
    double a = values.back(); values.pop_back();
    char op = ops.back(); ops.pop_back();
    switch (op) {
      case '+': values.push_back(a + b); break;
      case '-': values.push_back(a - b); break;
      case '*': values.push_back(a * b); break;
      case '/':
        if (b == 0.0) return false;
        values.push_back(a / b);
        break;
      case '^': values.push_back(std::pow(a, b)); break;
      default: return false;
    }
    return true;
  };
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
      double v = std::stod(s.substr(i, j - i));
      if (j < s.size() && s[j] == '%') { v /= 100.0; ++j; }
      values.push_back(v);
      i = j;
    } else if (c == '(') {
      ops.push_back(c); ++i;
    } else if (c == ')') {
      while (!ops.empty() && ops.back() != '(') if (!apply()) return std::nullopt;
      if (ops.empty()) return std::nullopt;
      ops.pop_back(); ++i;
    } else {
      const int p = prec(c);
      if (p == 0) return std::nullopt;
      while (!ops.empty() && ops.back() != '(' &&
             (prec(ops.back()) > p || (prec(ops.back()) == p && c != '^'))) {
        if (!apply()) return std::nullopt;
      }
      ops.push_back(c); ++i;
    }
  }
  while (!ops.empty()) if (!apply()) return std::nullopt;
  if (values.size() != 1 || !std::isfinite(values[0])) return std::nullopt;
  return values[0];
}

// Random well-formed infix string whose literals are drawn from `pool`.
inline std::string random_infix(std::mt19937_64& rng, int depth_left,
                                const std::vector<std::string>& pool) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (depth_left == 0 || u(rng) < 0.3) {
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
  }
  static const char kOps[] = {'+', '-', '*', '/', '+', '-', '*', '/', '^'};
  char op = kOps[std::uniform_int_distribution<int>(0, 8)(rng)];
  std::string lhs = random_infix(rng, depth_left - 1, pool);
  std::string rhs = op == '^' ? pool[0] : random_infix(rng, depth_left - 1, pool);
  std::string out = lhs + std::string(1, op) + rhs;
  if (u(rng) < 0.5) out = "(" + out + ")";
  return out;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace mwpx::testing

#endif  // MWPX_TESTS_ORACLES_H_
