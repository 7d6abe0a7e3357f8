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

#include <algorithm>
#include <random>

#include "json_util.h"
#include "mwpx/corpus.h"
#include "mwpx/numbers.h"

namespace mwpx {
namespace {

struct Piece {
  enum class Kind { kText, kPlaceholder, kSlot };
  Kind kind;
  std::string text;  // literal text or slot name
  int placeholder = -1;
};

std::vector<Piece> parse_pattern(const std::string& pattern) {
  std::vector<Piece> out;
  std::size_t i = 0;
  while (i < pattern.size()) {
    std::size_t open = pattern.find('{', i);
    if (open == std::string::npos) {
      out.push_back({Piece::Kind::kText, pattern.substr(i)});
      break;
    }
    if (open > i) out.push_back({Piece::Kind::kText, pattern.substr(i, open - i)});
    std::size_t close = pattern.find('}', open);
    if (close == std::string::npos) {
      throw Error(Errc::kConfigError, "unclosed '{' in pattern: " + pattern);
    }
    std::string name = pattern.substr(open + 1, close - open - 1);
    if (auto q = parse_quantity_token(name)) {
      out.push_back({Piece::Kind::kPlaceholder, name, *q});
    } else {
      out.push_back({Piece::Kind::kSlot, name});
    }
    i = close + 1;
  }
  return out;
}

struct CompiledPattern {
  std::vector<Piece> pieces;
  std::vector<int> placeholder_order;  // placeholders in surface order
};

struct CompiledTemplate {
  const SynthTemplate* source;
  ExprTree tree;
  int placeholders;
  std::map<std::string, std::vector<CompiledPattern>> patterns;
};

std::vector<CompiledTemplate> compile(const SynthConfig& config,
                                      const ConstantTable& constants) {
  if (config.templates.empty()) {
    throw Error(Errc::kConfigError, "no templates");
  }
  std::vector<CompiledTemplate> out;
  for (const auto& t : config.templates) {
    int placeholders = static_cast<int>(t.value_ranges.size());
    CompiledTemplate ct{&t,
                        parse_prefix(split_tokens(t.tree), placeholders, constants),
                        placeholders,
                        {}};
    if (ct.tree.max_quantity_index() + 1 != placeholders) {
      throw Error(Errc::kConfigError,
                  "template " + t.name + ": value_ranges must cover N0..N" +
                      std::to_string(ct.tree.max_quantity_index()));
    }
    for (const auto& [lo, hi] : t.value_ranges) {
      if (lo > hi) throw Error(Errc::kConfigError, "empty range in " + t.name);
    }
    if (t.patterns.empty()) {
      throw Error(Errc::kConfigError, "template " + t.name + " has no patterns");
    }
    for (const auto& [lang, texts] : t.patterns) {
      if (texts.empty()) {
        throw Error(Errc::kConfigError,
                    "template " + t.name + ": no patterns for " + lang);
      }
      auto lex = config.lexicons.find(lang);
      for (const auto& text : texts) {
        CompiledPattern cp{parse_pattern(text), {}};
        std::vector<int> seen(placeholders, 0);
        for (const auto& p : cp.pieces) {
          if (p.kind == Piece::Kind::kPlaceholder) {
            if (p.placeholder >= placeholders) {
              throw Error(Errc::kConfigError, "unknown placeholder in: " + text);
            }
            ++seen[p.placeholder];
            cp.placeholder_order.push_back(p.placeholder);
          } else if (p.kind == Piece::Kind::kSlot) {
            if (lex == config.lexicons.end() || !lex->second.count(p.text) ||
                lex->second.at(p.text).empty()) {
              throw Error(Errc::kConfigError,
                          "slot {" + p.text + "} has no words for " + lang);
            }
          }
        }
        for (int k = 0; k < placeholders; ++k) {
          if (seen[k] != 1) {
            throw Error(Errc::kConfigError,
                        "pattern must mention {N" + std::to_string(k) +
                            "} exactly once: " + text);
          }
        }
        ct.patterns[lang].push_back(std::move(cp));
      }
    }
    out.push_back(std::move(ct));
  }
  return out;
}

// Relabels placeholder leaves by the quantity index they get in the text.
ExprTree relabel(const ExprTree& tree, const std::vector<int>& order) {
  if (tree.is_leaf()) {
    if (tree.root().kind != ExprNode::Kind::kQuantity) return tree;
    auto it = std::find(order.begin(), order.end(), tree.root().index);
    return ExprTree::quantity(static_cast<int>(it - order.begin()));
  }
  return ExprTree::apply(tree.root().op, relabel(tree.left(), order),
                         relabel(tree.right(), order));
}

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
  return items[d(rng)];
}

}  // namespace

std::vector<ProblemRecord> generate_synthetic_bilingual(
    const SynthConfig& config, const ConstantTable& constants) {
  auto templates = compile(config, constants);
  if (config.num_problems < 0 || config.dev_problems < 0 ||
      config.test_problems < 0 ||
      config.dev_problems + config.test_problems > config.num_problems) {
    throw Error(Errc::kConfigError, "bad problem counts");
  }
  constexpr int kMaxAttempts = 1000;
  std::mt19937_64 rng(config.seed);
  std::vector<ProblemRecord> out;
  const int train_end =
      config.num_problems - config.dev_problems - config.test_problems;
  for (int i = 0; i < config.num_problems; ++i) {
    const CompiledTemplate& t = pick(templates, rng);
    std::vector<double> values(t.placeholders);
    double answer = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
      for (int k = 0; k < t.placeholders; ++k) {
        auto [lo, hi] = t.source->value_ranges[k];
        std::uniform_int_distribution<int> d(lo, hi);
        values[k] = d(rng);
      }
      try {
        answer = evaluate(t.tree, values, constants);
        ok = true;
      } catch (const Error&) {
      }
    }
    if (!ok) {
      throw Error(Errc::kConfigError, "template " + t.source->name +
                                          " never evaluates within its ranges");
    }
    Split split = i < train_end ? Split::kTrain
                  : i < train_end + config.dev_problems ? Split::kDev
                                                        : Split::kTest;
    for (const auto& [lang, patterns] : t.patterns) {
      const CompiledPattern& pattern = pick(patterns, rng);
      std::map<std::string, std::string> fills;
      std::string text;
      for (const auto& p : pattern.pieces) {
        switch (p.kind) {
          case Piece::Kind::kText:
            text += p.text;
            break;
          case Piece::Kind::kPlaceholder:
            text += format_number(values[p.placeholder]);
            break;
          case Piece::Kind::kSlot: {
            auto it = fills.find(p.text);
            if (it == fills.end()) {
              const auto& words = config.lexicons.at(lang).at(p.text);
              it = fills.emplace(p.text, pick(words, rng)).first;
            }
            text += it->second;
            break;
          }
        }
      }
      ProblemRecord rec;
      rec.id = config.dataset + "-" + std::to_string(i) + "/" + lang;
      rec.lang = lang;
      rec.dataset = config.dataset;
      rec.split = split;
      rec.category = t.source->name;
      Extraction ex = extract_quantities(tokenize(text, lang));
      if (ex.quantities.size() != static_cast<std::size_t>(t.placeholders)) {
        throw Error(Errc::kConfigError,
                    "pattern text yields " + std::to_string(ex.quantities.size()) +
                        " numbers, expected " + std::to_string(t.placeholders) +
                        ": " + text);
      }
      rec.tokens = std::move(ex.tokens);
      rec.quantities = std::move(ex.quantities);
      rec.gold_tree = relabel(t.tree, pattern.placeholder_order);
      rec.gold_answer = answer;
      if (!gold_consistent(rec, constants)) {
        throw Error(Errc::kConfigError, "generated record " + rec.id +
                                            " is not gold-consistent");
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

// Built-in corpora -------------------------------------------------------------

namespace {

using Patterns = std::map<std::string, std::vector<std::string>>;

std::map<std::string, std::map<std::string, std::vector<std::string>>>
toy_lexicons() {
  return {
      {"synthA",
       {{"name", {"tom", "ann", "bob", "eve", "max", "liz", "sam", "kim"}},
        {"name2", {"joe", "amy", "ray", "mia", "ned", "zoe"}},
        {"obj",
         {"apples", "books", "pens", "coins", "cards", "shells", "cups",
          "keys"}}}},
      {"synthB",
       {{"name", {"kolu", "mira", "tesh", "valo", "dren", "suna", "pavi", "roke"}},
        {"name2", {"gako", "lewi", "sinta", "moru", "faba", "tiso"}},
        {"obj",
         {"frela", "tomsi", "karu", "blenti", "woska", "pirra", "gendo",
          "lusi"}}}},
  };
}

// Twelve templates; in synthB several put the quantities in a different
// surface order, so the same template maps to differently indexed trees.
std::vector<SynthTemplate> toy_templates() {
  return {
      {"add", "+ N0 N1",
       Patterns{{"synthA",
                 {"{name} has {N0} {obj} and finds {N1} more {obj} . how many "
                  "{obj} does {name} have now ?"}},
                {"synthB",
                 {"{name} sa {N0} {obj} ve tuka {N1} {obj} lon . kesi {obj} "
                  "{name} sa nore ?"}}},
       {{2, 99}, {2, 99}}},
      {"sub", "- N0 N1",
       Patterns{{"synthA",
                 {"{name} had {N0} {obj} and lost {N1} of them . how many "
                  "{obj} are left ?"}},
                {"synthB",
                 {"{name} pirte {N1} {obj} ovan {N0} {obj} ru . kesi {obj} "
                  "mela ?"}}},
       {{50, 99}, {1, 49}}},
      {"mult", "* N0 N1",
       Patterns{{"synthA",
                 {"there are {N0} boxes and each box holds {N1} {obj} . how "
                  "many {obj} are there in all ?"}},
                {"synthB",
                 {"zo {N0} dabu , dabu vi {N1} {obj} kenti . kesi {obj} zo "
                  "tala ?"}}},
       {{2, 20}, {2, 20}}},
      {"div", "/ N0 N1",
       Patterns{{"synthA",
                 {"{name} shares {N0} {obj} equally among {N1} friends . how "
                  "many {obj} does each friend get ?"}},
                {"synthB",
                 {"{N1} bari {name} li , {name} dema {N0} {obj} sekto . kesi "
                  "{obj} bari ven ?"}}},
       {{10, 99}, {2, 9}}},
      {"add3", "+ + N0 N1 N2",
       Patterns{{"synthA",
                 {"{name} picked {N0} {obj} on monday , {N1} on tuesday and "
                  "{N2} on wednesday . how many {obj} did {name} pick ?"}},
                {"synthB",
                 {"{name} hopa {N0} {obj} lunadi , {N1} maradi ve {N2} jovadi "
                  ". kesi {obj} {name} hopa ?"}}},
       {{2, 60}, {2, 60}, {2, 60}}},
      {"sub3", "- - N0 N1 N2",
       Patterns{{"synthA",
                 {"{name} had {N0} {obj} , sold {N1} in the morning and {N2} "
                  "in the evening . how many {obj} remain ?"}},
                {"synthB",
                 {"{name} pirte {N0} {obj} . {N1} vendo sabe ve {N2} vendo "
                  "noke . kesi {obj} mela ?"}}},
       {{60, 99}, {1, 29}, {1, 29}}},
      {"sum_times", "* + N0 N1 N2",
       Patterns{{"synthA",
                 {"a shelf has {N0} red {obj} and {N1} blue {obj} . how many "
                  "{obj} are on {N2} such shelves ?"}},
                {"synthB",
                 {"{N2} tabo ri , tabo vi {N0} roso {obj} ve {N1} azu {obj} . "
                  "kesi {obj} tala ?"}}},
       {{2, 30}, {2, 30}, {2, 9}}},
      {"spend", "- N0 * N1 N2",
       Patterns{{"synthA",
                 {"{name} has {N0} dollars and buys {N1} {obj} that cost {N2} "
                  "dollars each . how many dollars are left ?"}},
                {"synthB",
                 {"{name} sa {N0} doru . {name} kupa {N1} {obj} , {obj} vi "
                  "{N2} doru . kesi doru mela ?"}}},
       {{100, 200}, {2, 9}, {2, 9}}},
      {"pack", "/ - N0 N1 N2",
       Patterns{{"synthA",
                 {"{name} has {N0} {obj} , keeps {N1} and packs the rest into "
                  "{N2} bags . how many {obj} go in each bag ?"}},
                {"synthB",
                 {"{name} sa {N0} {obj} , taska {N1} ve paki resto {N2} sako "
                  "ri . kesi {obj} sako ven ?"}}},
       {{50, 99}, {1, 20}, {2, 9}}},
      {"restock", "+ N0 * N1 N2",
       Patterns{{"synthA",
                 {"{name} has {N0} {obj} and buys {N1} packs with {N2} {obj} "
                  "in each pack . how many {obj} does {name} have ?"}},
                {"synthB",
                 {"{N1} paku vi {N2} {obj} ; {name} kupa paku ve sa {N0} {obj} "
                  "ra . kesi {obj} {name} sa ?"}}},
       {{2, 50}, {2, 9}, {2, 12}}},
      {"percent", "* N0 / N1 const_100",
       Patterns{{"synthA",
                 {"a class has {N0} students and {N1} percent of them like "
                  "{obj} . how many students like {obj} ?"}},
                {"synthB",
                 {"{N1} persa nemo {obj} amo , klasa vi {N0} nemo . kesi nemo "
                  "{obj} amo ?"}}},
       {{20, 60}, {5, 95}}},
      {"twice_less", "- * N0 const_2 N1",
       Patterns{{"synthA",
                 {"{name} has {N0} {obj} . {name2} has {N1} fewer than twice "
                  "that . how many {obj} does {name2} have ?"}},
                {"synthB",
                 {"{name} sa {N0} {obj} . {name2} sa duvo tanto menu {N1} . "
                  "kesi {obj} {name2} sa ?"}}},
       {{10, 50}, {1, 9}}},
  };
}

}  // namespace

SynthConfig desk_synth_config(int train_problems, int dev_problems,
                              int test_problems, std::uint64_t seed) {
  SynthConfig c;
  c.templates = toy_templates();
  c.lexicons = toy_lexicons();
  c.num_problems = train_problems + dev_problems + test_problems;
  c.dev_problems = dev_problems;
  c.test_problems = test_problems;
  c.seed = seed;
  c.dataset = "synth";
  return c;
}

SynthConfig half_paired_synth_config(int train_problems, int dev_problems,
                                     int test_problems, std::uint64_t seed) {
  SynthConfig c = desk_synth_config(train_problems, dev_problems, test_problems,
                                    seed);
  c.dataset = "synth_half";
  const std::size_t n = c.templates.size();
  for (std::size_t i = n / 2; i < n; ++i) {
    // Second half: alternate between A-only and B-only.
    const char* drop = (i - n / 2) % 2 == 0 ? "synthB" : "synthA";
    c.templates[i].patterns.erase(drop);
  }
  return c;
}

SynthConfig english_synth_config(int problems, std::uint64_t seed) {
  SynthConfig c;
  c.lexicons = {
      {"en",
       {{"name", {"Keith", "Lisa", "Jason", "Sara", "Mike", "Joan", "Fred", "Nancy"}},
        {"name2", {"Jason", "Tim", "Mary", "Dan", "Alyssa", "Sam"}},
        {"obj", {"books", "apples", "marbles", "cookies", "cards", "stickers"}}}}};
  c.templates = {
      {"AddSub", "+ N0 N1",
       Patterns{{"en",
                 {"{name} has {N0} {obj} . {name2} has {N1} {obj} . How many "
                  "{obj} do they have together ?",
                  "{name} found {N0} {obj} and {name2} found {N1} {obj} . How "
                  "many {obj} did they find in all ?"}}},
       {{1, 99}, {1, 99}}},
      {"AddSub", "- N0 N1",
       Patterns{{"en",
                 {"{name} had {N0} {obj} . {name} gave {N1} {obj} to {name2} "
                  ". How many {obj} does {name} have now ?"}}},
       {{50, 99}, {1, 49}}},
      {"SingleOp", "/ N0 N1",
       Patterns{{"en",
                 {"{name} flew {N0} miles at {N1} miles per hour . How long "
                  "did {name} fly ?"}}},
       {{100, 900}, {2, 60}}},
      {"SingleOp", "* N0 N1",
       Patterns{{"en",
                 {"{name} bought {N0} packs of {obj} . Each pack has {N1} "
                  "{obj} . How many {obj} did {name} buy ?"}}},
       {{2, 20}, {2, 20}}},
      {"MultiArith", "* - N0 N1 N2",
       Patterns{{"en",
                 {"A chef needs to cook {N0} potatoes . He has already cooked "
                  "{N1} . If each potato takes {N2} minutes to cook , how long "
                  "will it take him to cook the rest ?"}}},
       {{10, 20}, {1, 9}, {2, 9}}},
  };
  c.num_problems = problems;
  c.seed = seed;
  c.dataset = "synth_en";
  return c;
}

// JSON -------------------------------------------------------------------------

SynthConfig synth_config_from_json(std::string_view text) {
  SynthConfig c;
  try {
    auto j = nlohmann::json::parse(text);
    c.num_problems = j.value("num_problems", 0);
    c.dev_problems = j.value("dev_problems", 0);
    c.test_problems = j.value("test_problems", 0);
    c.seed = j.value("seed", std::uint64_t{0});
    c.dataset = j.value("dataset", std::string("synth"));
    if (j.contains("lexicons")) {
      c.lexicons = j.at("lexicons")
                       .get<std::map<std::string,
                                     std::map<std::string, std::vector<std::string>>>>();
    }
    for (const auto& t : j.at("templates")) {
      SynthTemplate st;
      st.name = t.value("name", std::string{});
      st.tree = t.at("tree").get<std::string>();
      st.patterns =
          t.at("patterns").get<std::map<std::string, std::vector<std::string>>>();
      for (const auto& r : t.at("value_ranges")) {
        st.value_ranges.emplace_back(r.at(0).get<int>(), r.at(1).get<int>());
      }
      c.templates.push_back(std::move(st));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kConfigError, std::string("synth config: ") + e.what());
  }
  return c;
}

std::string synth_config_to_json(const SynthConfig& config) {
  nlohmann::json j;
  j["num_problems"] = config.num_problems;
  j["dev_problems"] = config.dev_problems;
  j["test_problems"] = config.test_problems;
  j["seed"] = config.seed;
  j["dataset"] = config.dataset;
  j["lexicons"] = config.lexicons;
  nlohmann::json ts = nlohmann::json::array();
  for (const auto& t : config.templates) {
    nlohmann::json ranges = nlohmann::json::array();
    for (const auto& [lo, hi] : t.value_ranges) ranges.push_back({lo, hi});
    ts.push_back({{"name", t.name},
                  {"tree", t.tree},
                  {"patterns", t.patterns},
                  {"value_ranges", ranges}});
  }
  j["templates"] = std::move(ts);
  return j.dump(2);
}

}  // namespace mwpx
