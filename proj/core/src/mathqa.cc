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

#include "mwpx/mathqa.h"

#include <cctype>
#include <cmath>
#include <numbers>
#include <regex>

#include "json_util.h"
#include "mwpx/error.h"
#include "mwpx/numbers.h"

namespace mwpx::mathqa {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

Arg parse_arg(std::string_view text, int call_index) {
  text = trim(text);
  if (text.empty()) throw Error(Errc::kFormulaSyntaxError, "empty argument");
  auto index_after = [&](std::size_t skip) -> int {
    std::string_view digits = text.substr(skip);
    if (digits.empty()) throw Error(Errc::kFormulaSyntaxError, std::string(text));
    int v = 0;
    for (char c : digits) {
      if (!std::isdigit(static_cast<unsigned char>(c)))
        throw Error(Errc::kFormulaSyntaxError, "bad reference " + std::string(text));
      v = v * 10 + (c - '0');
    }
    return v;
  };
  if (text[0] == '#') {
    int j = index_after(1);
    if (j >= call_index) {
      throw Error(Errc::kDanglingBackRef,
                  "#" + std::to_string(j) + " used in call " +
                      std::to_string(call_index));
    }
    return BackRef{j};
  }
  if (text[0] == 'n' && text.size() > 1 &&
      std::isdigit(static_cast<unsigned char>(text[1]))) {
    return QuantityRef{index_after(1)};
  }
  if (text.starts_with("const_")) {
    if (!is_identifier(text)) {
      throw Error(Errc::kFormulaSyntaxError, "bad constant " + std::string(text));
    }
    return ConstRef{std::string(text)};
  }
  if (auto v = parse_number(text)) return Literal{*v};
  throw Error(Errc::kFormulaSyntaxError, "bad argument '" + std::string(text) + "'");
}

}  // namespace

FormulaProgram parse_formula(std::string_view text) {
  FormulaProgram program;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t bar = text.find('|', pos);
    std::string_view call = trim(text.substr(
        pos, bar == std::string_view::npos ? std::string_view::npos : bar - pos));
    pos = bar == std::string_view::npos ? text.size() + 1 : bar + 1;
    if (call.empty()) continue;  // trailing '|'
    std::size_t open = call.find('(');
    if (open == std::string_view::npos || call.back() != ')') {
      throw Error(Errc::kFormulaSyntaxError, "malformed call '" + std::string(call) + "'");
    }
    std::string_view name = trim(call.substr(0, open));
    if (!is_identifier(name)) {
      throw Error(Errc::kFormulaSyntaxError, "bad operator name '" + std::string(name) + "'");
    }
    OpCall op{std::string(name), {}};
    std::string_view args = call.substr(open + 1, call.size() - open - 2);
    if (args.find_first_of("()") != std::string_view::npos) {
      throw Error(Errc::kFormulaSyntaxError, "nested call in '" + std::string(call) + "'");
    }
    int index = static_cast<int>(program.calls.size());
    if (!trim(args).empty()) {
      std::size_t start = 0;
      while (true) {
        std::size_t comma = args.find(',', start);
        op.args.push_back(parse_arg(
            args.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                               : comma - start),
            index));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
    }
    program.calls.push_back(std::move(op));
  }
  if (program.calls.empty()) {
    throw Error(Errc::kFormulaSyntaxError, "empty formula");
  }
  return program;
}

std::optional<double> mathqa_constant_value(std::string_view name) {
  if (!name.starts_with("const_")) return std::nullopt;
  std::string_view body = name.substr(6);
  if (body == "pi") return std::numbers::pi;
  if (body == "deg_to_rad") return std::numbers::pi / 180.0;
  if (body == "1/3") return 1.0 / 3.0;
  std::string decimal(body);
  if (auto us = decimal.find('_'); us != std::string::npos) decimal[us] = '.';
  if (decimal.find('_') != std::string::npos) return std::nullopt;
  for (char c : decimal) {
    if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.') return std::nullopt;
  }
  return parse_number(decimal);
}

// Rules ------------------------------------------------------------------------

namespace {

using ops::add;
using ops::div;
using ops::mult;
using ops::pow;
using ops::sub;

// Table id for a value: an existing entry with that exact value, or a new
// "const_<value>" entry.
ExprTree constant_for(double value, ConstantTable& table) {
  if (auto id = table.find_by_value(value)) return ExprTree::constant(*id, value);
  std::string id = "const_" + format_number(value);
  table.add(id, value);
  return ExprTree::constant(id, value);
}

ExprTree named_constant(const std::string& id, double value, ConstantTable& table) {
  table.add(id, value);
  return ExprTree::constant(id, value);
}

using Args = std::span<const ExprTree>;

ExpansionRule rule(std::string name, int arity,
                   std::function<ExprTree(Args, ConstantTable&)> build) {
  return {std::move(name), arity, std::move(build)};
}

}  // namespace

RuleTable RuleTable::standard() {
  auto k = [](double v) {
    return [v](ConstantTable& t) { return constant_for(v, t); };
  };
  auto pi = [](ConstantTable& t) { return constant_for(std::numbers::pi, t); };
  auto c0 = k(0), c1 = k(1), c2 = k(2), c3 = k(3), c4 = k(4), c6 = k(6),
       half = k(0.5), c100 = k(100);
  auto third = [](ConstantTable& t) {
    return named_constant("const_1/3", 1.0 / 3.0, t);
  };

  std::vector<ExpansionRule> rules = {
      rule("add", 2, [](Args a, ConstantTable&) { return add(a[0], a[1]); }),
      rule("subtract", 2, [](Args a, ConstantTable&) { return sub(a[0], a[1]); }),
      rule("multiply", 2, [](Args a, ConstantTable&) { return mult(a[0], a[1]); }),
      rule("divide", 2, [](Args a, ConstantTable&) { return div(a[0], a[1]); }),
      rule("power", 2, [](Args a, ConstantTable&) { return pow(a[0], a[1]); }),
      rule("negate", 1, [=](Args a, ConstantTable& t) { return sub(c0(t), a[0]); }),
      rule("inverse", 1, [=](Args a, ConstantTable& t) { return div(c1(t), a[0]); }),
      rule("sqrt", 1, [=](Args a, ConstantTable& t) { return pow(a[0], half(t)); }),
      rule("speed", 2, [](Args a, ConstantTable&) { return div(a[0], a[1]); }),
      rule("square_area", 1,
           [=](Args a, ConstantTable& t) { return pow(a[0], c2(t)); }),
      rule("square_perimeter", 1,
           [=](Args a, ConstantTable& t) { return mult(c4(t), a[0]); }),
      rule("square_edge_by_area", 1,
           [=](Args a, ConstantTable& t) { return pow(a[0], half(t)); }),
      rule("square_edge_by_perimeter", 1,
           [=](Args a, ConstantTable& t) { return div(a[0], c4(t)); }),
      rule("rectangle_area", 2,
           [](Args a, ConstantTable&) { return mult(a[0], a[1]); }),
      rule("rectangle_perimeter", 2,
           [=](Args a, ConstantTable& t) { return mult(c2(t), add(a[0], a[1])); }),
      rule("cube_edge_by_volume", 1,
           [=](Args a, ConstantTable& t) { return pow(a[0], third(t)); }),
      rule("volume_cube", 1,
           [=](Args a, ConstantTable& t) { return pow(a[0], c3(t)); }),
      rule("surface_cube", 1,
           [=](Args a, ConstantTable& t) {
             return mult(c6(t), pow(a[0], c2(t)));
           }),
      rule("volume_rectangular_prism", 3,
           [](Args a, ConstantTable&) { return mult(mult(a[0], a[1]), a[2]); }),
      rule("triangle_area", 2,
           [=](Args a, ConstantTable& t) { return div(mult(a[0], a[1]), c2(t)); }),
      rule("triangle_perimeter", 3,
           [](Args a, ConstantTable&) { return add(add(a[0], a[1]), a[2]); }),
      rule("quadrilateral_area", 3,
           [=](Args a, ConstantTable& t) {
             return div(mult(a[0], add(a[1], a[2])), c2(t));
           }),
      rule("rhombus_area", 2,
           [=](Args a, ConstantTable& t) { return div(mult(a[0], a[1]), c2(t)); }),
      rule("circle_area", 1,
           [=](Args a, ConstantTable& t) { return mult(pi(t), pow(a[0], c2(t))); }),
      rule("circumface", 1,
           [=](Args a, ConstantTable& t) {
             return mult(mult(c2(t), pi(t)), a[0]);
           }),
      rule("volume_cylinder", 2,
           [=](Args a, ConstantTable& t) {
             return mult(mult(pi(t), pow(a[0], c2(t))), a[1]);
           }),
      rule("volume_cone", 2,
           [=](Args a, ConstantTable& t) {
             return div(mult(mult(pi(t), pow(a[0], c2(t))), a[1]), c3(t));
           }),
      // (4/3) * (pi * r^3)
      rule("volume_sphere", 1,
           [=](Args a, ConstantTable& t) {
             return mult(div(c4(t), c3(t)), mult(pi(t), pow(a[0], c3(t))));
           }),
      rule("surface_sphere", 1,
           [=](Args a, ConstantTable& t) {
             return mult(mult(c4(t), pi(t)), pow(a[0], c2(t)));
           }),
      rule("diagonal", 2,
           [=](Args a, ConstantTable& t) {
             return pow(add(pow(a[0], c2(t)), pow(a[1], c2(t))), half(t));
           }),
      rule("stream_speed", 2,
           [=](Args a, ConstantTable& t) { return div(add(a[0], a[1]), c2(t)); }),
      // Percent first, price second.
      rule("original_price_before_loss", 2,
           [=](Args a, ConstantTable& t) {
             return div(mult(c100(t), a[1]), sub(c100(t), a[0]));
           }),
      rule("original_price_before_gain", 2,
           [=](Args a, ConstantTable& t) {
             return div(mult(c100(t), a[1]), add(c100(t), a[0]));
           }),
      rule("p_after_gain", 2,
           [=](Args a, ConstantTable& t) {
             return mult(a[1], add(c1(t), div(a[0], c100(t))));
           }),
      rule("negate_prob", 1,
           [=](Args a, ConstantTable& t) { return sub(c1(t), a[0]); }),
  };

  RuleTable table;
  for (auto& r : rules) {
    std::string name = r.name;
    table.rules_.emplace(std::move(name), std::move(r));
  }
  table.filtered_ = {"floor",
                     "choose",
                     "min",
                     "tangent",
                     "sine",
                     "reminder",
                     "lcm",
                     "factorial",
                     "gcd",
                     "max",
                     "permutation",
                     "triangle_area_three_edges",
                     "surface_cylinder",
                     "rhombus_perimeter",
                     "surface_rectangular_prism",
                     "speed_in_still_water",
                     "log"};
  return table;
}

const ExpansionRule* RuleTable::find(std::string_view name) const {
  auto it = rules_.find(name);
  return it == rules_.end() ? nullptr : &it->second;
}

bool RuleTable::is_filtered(std::string_view name) const {
  for (const auto& f : filtered_) {
    if (f == name) return true;
  }
  return false;
}

std::vector<std::string> RuleTable::adapted_names() const {
  std::vector<std::string> out;
  for (const auto& [name, r] : rules_) out.push_back(name);
  return out;
}

ExprTree expand_program(const FormulaProgram& program, const RuleTable& rules,
                        ConstantTable& constants) {
  if (program.calls.empty()) {
    throw Error(Errc::kFormulaSyntaxError, "empty program");
  }
  // Filtered operators anywhere in the program reject it, even when an
  // unknown name appears earlier.
  for (const auto& call : program.calls) {
    if (rules.is_filtered(call.name)) {
      throw Error(Errc::kFilteredOperator, call.name);
    }
  }
  std::vector<ExprTree> results;
  results.reserve(program.calls.size());
  for (std::size_t ci = 0; ci < program.calls.size(); ++ci) {
    const OpCall& call = program.calls[ci];
    const ExpansionRule* r = rules.find(call.name);
    if (!r) throw Error(Errc::kUnknownOperator, call.name);
    if (static_cast<int>(call.args.size()) != r->arity) {
      throw Error(Errc::kFormulaSyntaxError,
                  call.name + " takes " + std::to_string(r->arity) +
                      " argument(s), got " + std::to_string(call.args.size()));
    }
    std::vector<ExprTree> args;
    args.reserve(call.args.size());
    for (const Arg& arg : call.args) {
      if (auto* q = std::get_if<QuantityRef>(&arg)) {
        args.push_back(ExprTree::quantity(q->index));
      } else if (auto* c = std::get_if<ConstRef>(&arg)) {
        auto v = mathqa_constant_value(c->name);
        if (!v) throw Error(Errc::kFormulaSyntaxError, "unknown constant " + c->name);
        args.push_back(constant_for(*v, constants));
      } else if (auto* b = std::get_if<BackRef>(&arg)) {
        if (b->call < 0 || static_cast<std::size_t>(b->call) >= ci) {
          throw Error(Errc::kDanglingBackRef, "#" + std::to_string(b->call));
        }
        args.push_back(results[b->call]);
      } else {
        args.push_back(constant_for(std::get<Literal>(arg).value, constants));
      }
    }
    results.push_back(r->build(args, constants));
  }
  return results.back();
}

bool verify_sample(const ExprTree& tree, std::span<const double> values,
                   double gold, const ConstantTable& constants, double threshold) {
  try {
    return check_answer(evaluate(tree, values, constants), gold, threshold);
  } catch (const Error&) {
    return false;
  }
}

std::optional<double> gold_from_options(std::string_view options,
                                        std::string_view correct) {
  correct = trim(correct);
  if (correct.size() != 1) return std::nullopt;
  const char letter =
      static_cast<char>(std::tolower(static_cast<unsigned char>(correct[0])));

  // Labels look like "a )" and are not preceded by a word character.
  static const std::regex kLabel(R"((^|[^A-Za-z0-9])([a-eA-E])\s*\))");
  std::string text(options);
  struct Label {
    char letter;
    std::size_t begin;
    std::size_t content;
  };
  std::vector<Label> labels;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kLabel);
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    labels.push_back({static_cast<char>(std::tolower(
                          static_cast<unsigned char>(m.str(2)[0]))),
                      static_cast<std::size_t>(m.position(2)),
                      static_cast<std::size_t>(m.position(0) + m.length(0))});
  }
  for (std::size_t li = 0; li < labels.size(); ++li) {
    if (labels[li].letter != letter) continue;
    std::size_t end = li + 1 < labels.size() ? labels[li + 1].begin : text.size();
    std::string body = text.substr(labels[li].content, end - labels[li].content);

    // "1 / 2" -> "1/2", "27 . 5" -> "27.5", "- 5" -> "-5".
    static const std::regex kSpacedSlash(R"(\s*/\s*)");
    static const std::regex kSpacedPoint(R"((\d)\s+\.\s+(\d))");
    static const std::regex kSpacedMinus(R"(-\s+(\d))");
    body = std::regex_replace(body, kSpacedSlash, "/");
    body = std::regex_replace(body, kSpacedPoint, "$1.$2");
    body = std::regex_replace(body, kSpacedMinus, "-$1");

    static const std::regex kNumber(
        R"(-?\d[\d,]*(\.\d+)?(/\d+(\.\d+)?)?|-?\.\d+)");
    for (auto it = std::sregex_iterator(body.begin(), body.end(), kNumber);
         it != std::sregex_iterator(); ++it) {
      std::string tok = it->str(0);
      while (!tok.empty() && tok.back() == ',') tok.pop_back();
      if (auto v = parse_number(tok)) return v;
    }
    return std::nullopt;
  }
  return std::nullopt;
}

// Dataset adaptation -----------------------------------------------------------

std::string AdaptationReport::to_json() const {
  nlohmann::json j;
  j["input"] = input;
  j["kept"] = kept;
  j["rejected_filtered_op"] = rejected_filtered_op;
  j["rejected_verification"] = rejected_verification;
  j["rejected_parse"] = rejected_parse;
  j["rejected_pow"] = rejected_pow;
  nlohmann::json splits = nlohmann::json::object();
  for (const auto& [name, c] : per_split) {
    splits[name] = {{"input", c.input},
                    {"kept", c.kept},
                    {"rejected_filtered_op", c.rejected_filtered_op},
                    {"rejected_verification", c.rejected_verification},
                    {"rejected_parse", c.rejected_parse},
                    {"rejected_pow", c.rejected_pow}};
  }
  j["per_split"] = std::move(splits);
  j["reasons"] = reasons;
  j["filtered_usage"] = filtered_usage;
  j["added_constants"] = added_constants;
  return j.dump(2);
}

AdaptResult adapt_dataset(std::span<const RawRecord> records,
                          const AdaptConfig& config, const RuleTable& rules,
                          ConstantTable& constants) {
  AdaptResult result;
  AdaptationReport& report = result.report;
  const std::size_t constants_before = constants.size();

  for (std::size_t i = 0; i < records.size(); ++i) {
    const RawRecord& raw = records[i];
    SplitCounts& split = report.per_split[raw.split];
    ++report.input;
    ++split.input;
    auto reject = [&](int SplitCounts::*split_field, int AdaptationReport::*field,
                      const std::string& reason) {
      ++(report.*field);
      ++(split.*split_field);
      ++report.reasons[reason];
    };

    Extraction ex = extract_quantities(tokenize(raw.problem, "en"));
    std::optional<double> gold = raw.answer;
    if (!gold) gold = gold_from_options(raw.options, raw.correct);
    if (!gold) {
      reject(&SplitCounts::rejected_parse, &AdaptationReport::rejected_parse,
             "UnparsableAnswer");
      continue;
    }
    ExprTree tree = ExprTree::quantity(0);
    try {
      tree = expand_program(parse_formula(raw.formula), rules, constants);
    } catch (const Error& e) {
      if (e.code() == Errc::kFilteredOperator) {
        // The message is the operator name.
        std::string what = e.what();
        ++report.filtered_usage[what.substr(what.find(": ") + 2)];
        reject(&SplitCounts::rejected_filtered_op,
               &AdaptationReport::rejected_filtered_op, "FilteredOperator");
      } else {
        reject(&SplitCounts::rejected_parse, &AdaptationReport::rejected_parse,
               std::string(errc_name(e.code())));
      }
      continue;
    }
    if (config.exclude_pow && tree.uses(Operator::kPow)) {
      reject(&SplitCounts::rejected_pow, &AdaptationReport::rejected_pow, "Pow");
      continue;
    }
    ProblemRecord rec;
    rec.id = raw.id.empty() ? "mathqa-" + raw.split + "-" + std::to_string(i)
                            : raw.id;
    rec.lang = "en";
    rec.dataset = "mathqa";
    rec.split = split_from_name(raw.split).value_or(Split::kTrain);
    rec.category = raw.category;
    rec.tokens = std::move(ex.tokens);
    rec.quantities = std::move(ex.quantities);
    rec.gold_answer = *gold;
    if (!verify_sample(tree, rec.quantity_values(), *gold, constants,
                       config.threshold)) {
      reject(&SplitCounts::rejected_verification,
             &AdaptationReport::rejected_verification, "VerificationFailed");
      continue;
    }
    rec.gold_tree = std::move(tree);
    ++report.kept;
    ++split.kept;
    result.records.push_back(std::move(rec));
  }
  for (std::size_t i = constants_before; i < constants.size(); ++i) {
    report.added_constants.push_back(constants.entries()[i].id);
  }
  return result;
}

std::vector<RawRecord> load_raw(const std::string& path,
                                std::optional<std::string> split_override,
                                std::optional<std::size_t> limit) {
  std::vector<RawRecord> out;
  for (const auto& obj : internal::read_json_objects(path)) {
    if (limit && out.size() >= *limit) break;
    if (!obj.is_object()) {
      throw Error(Errc::kFileFormatError, path + ": record is not an object");
    }
    RawRecord r;
    r.id = internal::json_string_field(obj, "id");
    r.problem = internal::json_string_field(obj, "Problem");
    if (r.problem.empty()) r.problem = internal::json_string_field(obj, "problem");
    r.formula = internal::json_string_field(obj, "linear_formula");
    if (r.formula.empty()) r.formula = internal::json_string_field(obj, "formula");
    r.options = internal::json_string_field(obj, "options");
    r.correct = internal::json_string_field(obj, "correct");
    r.category = internal::json_string_field(obj, "category");
    if (auto it = obj.find("answer"); it != obj.end()) {
      if (it->is_number()) {
        r.answer = it->get<double>();
      } else if (it->is_string()) {
        r.answer = parse_number(it->get<std::string>());
      }
    }
    std::string split = internal::json_string_field(obj, "split");
    r.split = split_override ? *split_override : (split.empty() ? "train" : split);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mwpx::mathqa
