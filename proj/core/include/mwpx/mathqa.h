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

#ifndef MWPX_MATHQA_H_
#define MWPX_MATHQA_H_

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mwpx/corpus.h"
#include "mwpx/expr.h"

namespace mwpx::mathqa {

// Arguments of one call in MathQA's operation language.
struct QuantityRef {  // n0, n1, ...
  int index;
  bool operator==(const QuantityRef&) const = default;
};
struct ConstRef {  // const_100, const_pi, const_0_5, ...
  std::string name;
  bool operator==(const ConstRef&) const = default;
};
struct BackRef {  // #0, #1, ... (result of an earlier call)
  int call;
  bool operator==(const BackRef&) const = default;
};
struct Literal {
  double value;
  bool operator==(const Literal&) const = default;
};
using Arg = std::variant<QuantityRef, ConstRef, BackRef, Literal>;

struct OpCall {
  std::string name;
  std::vector<Arg> args;
  bool operator==(const OpCall&) const = default;
};

// Ordered calls; the program's value is the value of the last call.
struct FormulaProgram {
  std::vector<OpCall> calls;
};

// "multiply(n0,n1)|divide(#0,const_2)|". Throws FormulaSyntaxError or
// DanglingBackRef.
FormulaProgram parse_formula(std::string_view text);

// Value of a MathQA constant name: const_pi, const_deg_to_rad, and numeric
// names where the first '_' is the decimal point (const_0_25 -> 0.25).
std::optional<double> mathqa_constant_value(std::string_view name);

// Rewrites one domain operator into basic operators. Builders may register
// the constants they use in the table they are handed.
struct ExpansionRule {
  std::string name;
  int arity;
  std::function<ExprTree(std::span<const ExprTree> args, ConstantTable&)> build;
};

class RuleTable {
 public:
  // The 35 adapted operators and the 17 filtered ones.
  static RuleTable standard();

  const ExpansionRule* find(std::string_view name) const;
  bool is_filtered(std::string_view name) const;

  std::vector<std::string> adapted_names() const;
  const std::vector<std::string>& filtered_names() const { return filtered_; }

 private:
  std::map<std::string, ExpansionRule, std::less<>> rules_;
  std::vector<std::string> filtered_;
};

// Inlines back-references and expands every call into one tree. MathQA
// constants are mapped into the table by value (new values are appended).
// Throws FilteredOperator, UnknownOperator, FormulaSyntaxError (arity or
// constant name).
ExprTree expand_program(const FormulaProgram& program, const RuleTable& rules,
                        ConstantTable& constants);

// Evaluation errors count as a failed verification, never as exceptions.
bool verify_sample(const ExprTree& tree, std::span<const double> values,
                   double gold, const ConstantTable& constants,
                   double threshold = kDefaultAnswerThreshold);

// One MathQA-style input record.
struct RawRecord {
  std::string id;
  std::string problem;
  std::string formula;
  std::optional<double> answer;  // numeric gold, when already known
  std::string options;           // "a ) 38 , b ) 27.6 , ..."
  std::string correct;           // option letter
  std::string category;
  std::string split = "train";
};

// Numeric value of the correct multiple-choice option, if it has one.
std::optional<double> gold_from_options(std::string_view options,
                                        std::string_view correct);

struct AdaptConfig {
  bool exclude_pow = true;
  double threshold = kDefaultAnswerThreshold;
};

struct SplitCounts {
  int input = 0;
  int kept = 0;
  int rejected_filtered_op = 0;
  int rejected_verification = 0;
  int rejected_parse = 0;
  int rejected_pow = 0;
};

struct AdaptationReport {
  int input = 0;
  int kept = 0;
  int rejected_filtered_op = 0;
  int rejected_verification = 0;
  int rejected_parse = 0;
  int rejected_pow = 0;
  std::map<std::string, SplitCounts> per_split;
  std::map<std::string, int> reasons;         // error kind -> count
  std::map<std::string, int> filtered_usage;  // filtered op -> count
  std::vector<std::string> added_constants;

  int rejected() const {
    return rejected_filtered_op + rejected_verification + rejected_parse +
           rejected_pow;
  }
  std::string to_json() const;
};

struct AdaptResult {
  std::vector<ProblemRecord> records;
  AdaptationReport report;
};

// Never throws on a bad record; every input lands in exactly one report
// bucket. The constant table is extended with constants the kept and
// rejected programs reference.
AdaptResult adapt_dataset(std::span<const RawRecord> records,
                          const AdaptConfig& config, const RuleTable& rules,
                          ConstantTable& constants);

// Reads a MathQA release file (JSON array or JSON lines). split_override
// wins over any per-record "split" field.
std::vector<RawRecord> load_raw(const std::string& path,
                                std::optional<std::string> split_override = {},
                                std::optional<std::size_t> limit = {});

}  // namespace mwpx::mathqa

#endif  // MWPX_MATHQA_H_
