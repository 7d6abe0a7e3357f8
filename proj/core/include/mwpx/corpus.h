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

#ifndef MWPX_CORPUS_H_
#define MWPX_CORPUS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mwpx/error.h"
#include "mwpx/expr.h"

namespace mwpx {

enum class Split { kTrain, kDev, kTest };

std::string_view split_name(Split split);
std::optional<Split> split_from_name(std::string_view name);

struct Quantity {
  double value = 0.0;
  int source_position = 0;  // index into the masked token sequence
  std::string surface;

  bool operator==(const Quantity&) const = default;
};

// One math word problem. Tokens carry "N0".."Nk" where quantities stood.
struct ProblemRecord {
  std::string id;
  std::string lang;
  std::vector<std::string> tokens;
  std::vector<Quantity> quantities;
  std::optional<ExprTree> gold_tree;
  double gold_answer = 0.0;
  std::string dataset;
  Split split = Split::kTrain;
  std::string category;  // problem type, optional

  std::vector<double> quantity_values() const;
  int num_quantities() const { return static_cast<int>(quantities.size()); }
};

// Gold tree evaluates (against the given table) to the gold answer within
// the threshold. Records without a tree are trivially consistent.
bool gold_consistent(const ProblemRecord& record, const ConstantTable& constants,
                     double threshold = kDefaultAnswerThreshold);

// Whitespace splitting. For "en" leading/trailing punctuation is detached
// (decimal points, percent signs and fraction slashes inside numbers stay).
// For other languages, whitespace-free runs are further split into number
// runs and single characters so unsegmented text still exposes numbers.
std::vector<std::string> tokenize(std::string_view text, std::string_view lang);

struct Extraction {
  std::vector<std::string> tokens;
  std::vector<Quantity> quantities;
};

// Replaces each numeric token, left to right, with N0, N1, ...
Extraction extract_quantities(std::span<const std::string> tokens);

struct Reject {
  std::string id;
  Errc code;
  std::string reason;
};

struct LoadResult {
  std::vector<ProblemRecord> records;
  std::vector<Reject> rejects;
};

// Math23K-style file: JSON array, JSON lines, or concatenated objects with
// fields id, segmented_text (or text / original_text), equation, ans.
// Records that fail to parse or verify go to rejects with a reason.
LoadResult load_math23k(const std::string& path, const ConstantTable& constants,
                        std::optional<std::size_t> limit = {},
                        std::string dataset = "math23k");

// Paired bilingual file; each object carries en, zh, equation, answer and
// optionally id, dataset, category. Two records per pair, ids "<id>/en" and
// "<id>/zh". Throws FileFormatError or MissingTranslation.
std::vector<ProblemRecord> load_bilingual_eval(
    const std::string& path, const ConstantTable& constants,
    std::optional<std::size_t> limit = {});

// Seeded uniform sample without replacement. Both outputs keep input order.
// Throws SizeTooLarge.
std::pair<std::vector<ProblemRecord>, std::vector<ProblemRecord>> sample_dev(
    std::vector<ProblemRecord> records, std::size_t size, std::uint64_t seed);

// Canonical line format: one JSON object per line, trees as prefix strings.
std::string record_to_json(const ProblemRecord& record);
// Throws FileFormatError.
ProblemRecord record_from_json(std::string_view line,
                               const ConstantTable& constants);
void write_records(const std::string& path,
                   std::span<const ProblemRecord> records);
std::vector<ProblemRecord> read_records(const std::string& path,
                                        const ConstantTable& constants,
                                        std::optional<std::size_t> limit = {});

// Synthetic bilingual corpora -------------------------------------------------

// Text patterns use {N0}..{Nk} for quantity placeholders and {slot} for
// words drawn from the language's lexicon. A slot name repeated within a
// pattern gets the same word each time.
struct SynthTemplate {
  std::string name;
  std::string tree;  // prefix over placeholders N0..Nk and constant ids
  std::map<std::string, std::vector<std::string>> patterns;  // lang -> texts
  std::vector<std::pair<int, int>> value_ranges;  // inclusive, per placeholder
};

struct SynthConfig {
  std::vector<SynthTemplate> templates;
  std::map<std::string, std::map<std::string, std::vector<std::string>>>
      lexicons;  // lang -> slot -> words
  int num_problems = 0;
  int dev_problems = 0;   // taken after the training problems
  int test_problems = 0;  // taken last
  std::uint64_t seed = 0;
  std::string dataset = "synth";
};

// For each problem: pick a template, draw values (redrawing until the tree
// evaluates to a finite value), and emit one record per language that has
// patterns for it. Records of one problem share the id stem "<dataset>-<i>".
// Throws ConfigError.
std::vector<ProblemRecord> generate_synthetic_bilingual(
    const SynthConfig& config, const ConstantTable& constants);

// Two disjoint toy languages, synthA and synthB, with twelve templates.
// problems = train + dev + test counts per language.
SynthConfig desk_synth_config(int train_problems, int dev_problems,
                              int test_problems, std::uint64_t seed);

// Same languages, but only the first half of the templates exist in both;
// the rest are split between synthA-only and synthB-only.
SynthConfig half_paired_synth_config(int train_problems, int dev_problems,
                                     int test_problems, std::uint64_t seed);

// English-like AddSub/SingleOp/MultiArith-style problems for the "en"
// tokenizer; used by the CLI smoke paths.
SynthConfig english_synth_config(int problems, std::uint64_t seed);

// Reads/writes a SynthConfig as JSON.
SynthConfig synth_config_from_json(std::string_view text);
std::string synth_config_to_json(const SynthConfig& config);

}  // namespace mwpx

#endif  // MWPX_CORPUS_H_
