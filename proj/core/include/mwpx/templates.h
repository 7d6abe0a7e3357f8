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

#ifndef MWPX_TEMPLATES_H_
#define MWPX_TEMPLATES_H_

#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mwpx/corpus.h"
#include "mwpx/expr.h"

namespace mwpx {

inline constexpr std::string_view kQuantityPlaceholder = "⟨N⟩";
inline constexpr std::string_view kConstantPlaceholder = "⟨C⟩";

// Expression tree with quantity leaves masked.
struct Template {
  LinearTree masked;          // prefix tokens with placeholders
  std::string canonical_key;  // masked tokens joined by spaces

  bool operator==(const Template&) const = default;
};

// Constants are kept unless mask_constants is set.
Template template_of(const ExprTree& tree, bool mask_constants = false);

// key -> lang -> record ids (input order).
class TemplateGroups {
 public:
  using LangBuckets = std::map<std::string, std::vector<std::string>>;

  const std::map<std::string, LangBuckets>& groups() const { return groups_; }
  // Throws ConfigError for an unknown id.
  const std::string& key_of(std::string_view id) const;
  bool contains(std::string_view id) const;
  std::size_t num_languages(std::string_view key) const;
  bool empty() const { return groups_.empty(); }

 private:
  friend TemplateGroups group_by_template(std::span<const ProblemRecord>, bool);

  std::map<std::string, LangBuckets> groups_;
  std::unordered_map<std::string, std::string> key_by_id_;
};

// Throws MissingGoldTree, or ConfigError on duplicate ids.
TemplateGroups group_by_template(std::span<const ProblemRecord> records,
                                 bool mask_constants = false);

enum class ContrastMode { kCL, kCLTC };

// Id of a uniformly drawn record that shares the template but not the
// language. Under kCL a record with no such partner is its own positive;
// under kCLTC that case throws NoCrossLingualCandidate.
const std::string& sample_positive(const ProblemRecord& record,
                                   const TemplateGroups& groups,
                                   ContrastMode mode, std::mt19937_64& rng);

// Records whose template key is present in at least two languages.
std::vector<ProblemRecord> filter_tc(std::span<const ProblemRecord> records,
                                     const TemplateGroups& groups);

// Positive sampling over an owned record list, resolving ids to indices.
class PairSampler {
 public:
  PairSampler(std::span<const ProblemRecord> records, ContrastMode mode,
              bool mask_constants = false);

  // Index of the positive for records[anchor].
  std::size_t sample(std::size_t anchor, std::mt19937_64& rng) const;
  const TemplateGroups& groups() const { return groups_; }
  ContrastMode mode() const { return mode_; }

 private:
  std::span<const ProblemRecord> records_;
  TemplateGroups groups_;
  ContrastMode mode_;
  std::unordered_map<std::string, std::size_t> index_by_id_;
};

// Histogram rows for diagnostics: key, per-language counts.
std::string template_histogram(const TemplateGroups& groups);

}  // namespace mwpx

#endif  // MWPX_TEMPLATES_H_
