#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mwpx/error.h"
#include "mwpx/expr.h"
#include "oracles.h"
#include "test_util.h"

namespace mwpx {
namespace {

using namespace ops;

using testing::error_of;

LinearTree toks(std::initializer_list<const char*> list) {
  return LinearTree(list.begin(), list.end());
}

const ConstantTable& table() {
  static const ConstantTable t = ConstantTable::standard();
  return t;
}

TEST(Operator, FiveBinaryKinds) {
  ASSERT_EQ(std::size(kAllOperators), 5u);
  for (Operator op : kAllOperators) {
    EXPECT_EQ(arity(op), 2);
    EXPECT_EQ(operator_from_symbol(operator_symbol(op)), op);
  }
  EXPECT_FALSE(operator_from_symbol("%"));
}

TEST(ConstantTable, StandardEntriesInOrder) {
  const auto& e = table().entries();
  std::vector<std::pair<std::string, double>> want = {
      {"const_0", 0},   {"const_1", 1},     {"const_2", 2},
      {"const_3", 3},   {"const_4", 4},     {"const_0.5", 0.5},
      {"const_100", 100}, {"const_pi", std::numbers::pi}};
  ASSERT_EQ(e.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(e[i].id, want[i].first);
    EXPECT_EQ(e[i].value, want[i].second);
  }
  EXPECT_EQ(ConstantTable::standard(true).value("const_pi"), 3.14);
}

TEST(ConstantTable, AppendOnly) {
  ConstantTable t = ConstantTable::standard();
  t.add("const_12", 12);
  t.add("const_12", 12);
  EXPECT_EQ(t.size(), 9u);
  EXPECT_EQ(t.index_of("const_12"), 8u);
  EXPECT_EQ(error_of([&] { t.add("const_12", 13); }), Errc::kConfigError);
  EXPECT_EQ(t.find_by_value(100), "const_100");
}

TEST(ParsePrefix, SmallestTree) {
  EXPECT_EQ(parse_prefix(toks({"+", "N0", "N1"}), 2, table()), add(Q(0), Q(1)));
}

TEST(ParsePrefix, NestedTree) {
  auto t = parse_prefix(toks({"/", "-", "N0", "*", "N1", "N2", "+", "N1", "N1"}), 3,
                        table());
  EXPECT_EQ(t, div(sub(Q(0), mult(Q(1), Q(2))), add(Q(1), Q(1))));
}

TEST(ParsePrefix, Errors) {
  EXPECT_EQ(error_of([] { parse_prefix(toks({"+", "N0"}), 2, table()); }),
            Errc::kMalformedPrefix);
  EXPECT_EQ(error_of([] { parse_prefix(toks({"N0", "N1"}), 2, table()); }),
            Errc::kMalformedPrefix);
  EXPECT_EQ(error_of([] { parse_prefix(LinearTree{}, 2, table()); }),
            Errc::kMalformedPrefix);
  EXPECT_EQ(error_of([] { parse_prefix(toks({"+", "N0", "x"}), 2, table()); }),
            Errc::kUnknownToken);
  EXPECT_EQ(error_of([] { parse_prefix(toks({"+", "N0", "const_7"}), 2, table()); }),
            Errc::kUnknownToken);
  EXPECT_EQ(error_of([] { parse_prefix(toks({"+", "N0", "N2"}), 2, table()); }),
            Errc::kQuantityOutOfRange);
}

TEST(ParsePrefix, CounterCheck) {
  EXPECT_TRUE(is_complete_prefix(toks({"*", "N0", "const_2"}), table()));
  EXPECT_FALSE(is_complete_prefix(toks({"*", "N0"}), table()));
  EXPECT_FALSE(is_complete_prefix(toks({"N0", "+"}), table()));
}

TEST(SerializePrefix, Examples) {
  EXPECT_EQ(serialize_prefix(add(Q(0), Q(1))), toks({"+", "N0", "N1"}));
  EXPECT_EQ(serialize_prefix(ExprTree::constant("const_pi", std::numbers::pi)),
            toks({"const_pi"}));
  EXPECT_EQ(serialize_prefix(pow(Q(0), ExprTree::constant("const_0.5", 0.5))),
            toks({"^", "N0", "const_0.5"}));
  EXPECT_EQ(join_tokens(toks({"+", "N0", "N1"})), "+ N0 N1");
  EXPECT_EQ(split_tokens("  + N0   N1 "), toks({"+", "N0", "N1"}));
}

TEST(SerializePrefix, RoundTripRandomTrees) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    auto oracle = testing::random_oracle_tree(rng, 8, 5, table());
    ExprTree t = testing::to_expr(*oracle);
    // Leaves count as one level.
    ASSERT_EQ(t.depth(), testing::oracle_depth(*oracle) + 1);
    ExprTree back = parse_prefix(serialize_prefix(t), 5, table());
    ASSERT_EQ(back, t) << join_tokens(serialize_prefix(t));
  }
}

TEST(Evaluate, Examples) {
  std::vector<double> v = {20, 21};
  EXPECT_EQ(evaluate(add(Q(0), Q(1)), v, table()), 41.0);
  std::vector<double> w = {100, 10, 2};
  EXPECT_DOUBLE_EQ(
      evaluate(div(sub(Q(0), mult(Q(1), Q(2))), add(Q(1), Q(1))), w, table()), 4.0);
  auto zero = ExprTree::constant("const_0", 0.0);
  EXPECT_EQ(error_of([&] { evaluate(div(Q(0), zero), v, table()); }),
            Errc::kDivisionByZero);
}

TEST(Evaluate, Errors) {
  std::vector<double> v = {-8, 0.5};
  EXPECT_EQ(error_of([&] { evaluate(pow(Q(0), Q(1)), v, table()); }),
            Errc::kNonFiniteResult);
  EXPECT_EQ(error_of([&] { evaluate(add(Q(0), Q(2)), v, table()); }),
            Errc::kQuantityOutOfRange);
  std::vector<double> big = {1e300};
  EXPECT_EQ(error_of([&] { evaluate(mult(Q(0), Q(0)), big, table()); }),
            Errc::kNonFiniteResult);
  // Negative base with an integral exponent stays real.
  std::vector<double> neg = {-2, 3};
  EXPECT_EQ(evaluate(pow(Q(0), Q(1)), neg, table()), -8.0);
}

TEST(Evaluate, ConstantValueComesFromTable) {
  ConstantTable approx = ConstantTable::standard(true);
  auto circle = mult(ExprTree::constant("const_pi", std::numbers::pi), Q(0));
  std::vector<double> one = {1};
  EXPECT_EQ(evaluate(circle, one, approx), 3.14);
  EXPECT_EQ(evaluate(circle, one, table()), std::numbers::pi);
}

TEST(Evaluate, MatchesNaiveOracle) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> val(-20.0, 20.0);
  int compared = 0;
  for (int i = 0; i < 10000; ++i) {
    const int k = 1 + static_cast<int>(rng() % 5);
    std::vector<double> q(k);
    for (double& x : q) x = rng() % 7 == 0 ? 0.0 : std::round(val(rng) * 4) / 4;
    auto oracle = testing::random_oracle_tree(rng, 8, k, table());
    ExprTree tree = testing::to_expr(*oracle);
    auto want = testing::oracle_eval(*oracle, q);
    if (!want) {
      EXPECT_THROW(evaluate(tree, q, table()), Error);
      continue;
    }
    double got = evaluate(tree, q, table());
    ASSERT_LE(testing::rel_diff(got, *want), 1e-12);
    ++compared;
  }
  EXPECT_GT(compared, 5000);
}

TEST(ParseInfix, Examples) {
  std::vector<double> q = {20, 21};
  EXPECT_EQ(parse_infix("x=20+21", q, table()), add(Q(0), Q(1)));
  std::vector<double> r = {3, 4, 2};
  EXPECT_EQ(parse_infix("x=3+4*2", r, table()), add(Q(0), mult(Q(1), Q(2))));
  EXPECT_EQ(error_of([&] { parse_infix("x=(3)*", r, table()); }), Errc::kSyntaxError);
}

TEST(ParseInfix, Associativity) {
  std::vector<double> q = {8, 4, 2};
  EXPECT_EQ(parse_infix("8-4-2", q, table()), sub(sub(Q(0), Q(1)), Q(2)));
  EXPECT_EQ(parse_infix("8/4/2", q, table()), div(div(Q(0), Q(1)), Q(2)));
  EXPECT_EQ(parse_infix("8^4^2", q, table()), pow(Q(0), pow(Q(1), Q(2))));
  EXPECT_EQ(parse_infix("x = (8-4)*2", q, table()), mult(sub(Q(0), Q(1)), Q(2)));
}

TEST(ParseInfix, LiteralBinding) {
  // Duplicate values bind to the earliest unused occurrence, then reuse.
  std::vector<double> q = {5, 5, 3};
  EXPECT_EQ(parse_infix("5+5", q, table()), add(Q(0), Q(1)));
  EXPECT_EQ(parse_infix("5+5+5", q, table()), add(add(Q(0), Q(1)), Q(0)));
  // Literals outside the quantity list fall back to constants by value.
  auto two = ExprTree::constant("const_2", 2);
  EXPECT_EQ(parse_infix("3*2", q, table()), mult(Q(2), two));
  EXPECT_EQ(error_of([&] { parse_infix("3*17", q, table()); }), Errc::kUnboundLiteral);
}

TEST(ParseInfix, Percent) {
  std::vector<double> q = {200, 25};
  ExprTree t = parse_infix("x=200*25%", q, table());
  EXPECT_DOUBLE_EQ(evaluate(t, q, table()), 50.0);
  EXPECT_EQ(t, mult(Q(0), div(Q(1), ExprTree::constant("const_100", 100))));
}

TEST(ParseInfix, MatchesShuntingYardOracle) {
  std::mt19937_64 rng(9);
  const std::vector<std::string> pool = {"2", "3", "4.5", "12", "7", "40%", "0.25"};
  const std::vector<double> quantities = {2, 3, 4.5, 12, 7, 40, 0.25};
  int compared = 0;
  for (int i = 0; i < 1500; ++i) {
    std::string s = testing::random_infix(rng, 5, pool);
    auto want = testing::shunting_yard_eval(s);
    if (!want) continue;
    ExprTree t = parse_infix(s, quantities, table());
    double got = 0;
    try {
      got = evaluate(t, quantities, table());
    } catch (const Error& e) {
      FAIL() << s << ": " << e.what();
    }
    ASSERT_LE(testing::rel_diff(got, *want), 1e-12) << s;
    ++compared;
  }
  EXPECT_GE(compared, 1000);
}

TEST(CheckAnswer, Examples) {
  EXPECT_TRUE(check_answer(4.0, 4.0, 1e-4));
  EXPECT_TRUE(check_answer(4.00039, 4.0, 1e-4));
  EXPECT_FALSE(check_answer(4.001, 4.0, 1e-4));
  EXPECT_TRUE(check_answer(4.00039, 4.0));
}

TEST(CheckAnswer, ZeroGoldUsesAbsoluteError) {
  EXPECT_TRUE(check_answer(5e-5, 0.0));
  EXPECT_FALSE(check_answer(2e-4, 0.0));
  EXPECT_TRUE(check_answer(-1e-4, 0.0));
}

TEST(CheckAnswer, BoundaryIsInclusive) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> g(-1000, 1000), d(0, 1e-3);
  for (int i = 0; i < 1000; ++i) {
    const double gold = g(rng), pred = gold + d(rng) * gold;
    if (gold == 0.0) continue;
    const double err = std::abs(pred - gold) / std::abs(gold);
    EXPECT_TRUE(check_answer(pred, gold, err));
    if (err > 0) {
      EXPECT_FALSE(check_answer(pred, gold, std::nextafter(err, 0.0)));
    }
  }
}

TEST(CheckAnswer, SymmetricInSignOfError) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20000; ++i) {
    // Dyadic values keep g +/- delta exact.
    const double gold = static_cast<double>(static_cast<int>(rng() % 2001) - 1000);
    if (gold == 0.0) continue;
    const double delta = static_cast<double>(rng() % 4096) / 16384.0;
    ASSERT_EQ(check_answer(gold + delta, gold), check_answer(gold - delta, gold))
        << gold << " " << delta;
  }
}

}  // namespace
}  // namespace mwpx
