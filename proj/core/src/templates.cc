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

#include "mwpx/templates.h"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "mwpx/error.h"

namespace mwpx {

Template template_of(const ExprTree& tree, bool mask_constants) {
  Template t;
  t.masked = serialize_prefix(tree);
  for (std::size_t i = 0; i < t.masked.size(); ++i) {
    const ExprNode& node = tree.nodes()[i];
    if (node.kind == ExprNode::Kind::kQuantity) {
      t.masked[i] = std::string(kQuantityPlaceholder);
    } else if (mask_constants && node.kind == ExprNode::Kind::kConstant) {
      t.masked[i] = std::string(kConstantPlaceholder);
    }
  }
  t.canonical_key = join_tokens(t.masked);
  return t;
}

const std::string& TemplateGroups::key_of(std::string_view id) const {
  auto it = key_by_id_.find(std::string(id));
  if (it == key_by_id_.end()) {
    throw Error(Errc::kConfigError, "record " + std::string(id) + " is not grouped");
  }
  return it->second;
}

bool TemplateGroups::contains(std::string_view id) const {
  return key_by_id_.count(std::string(id)) != 0;
}

std::size_t TemplateGroups::num_languages(std::string_view key) const {
  auto it = groups_.find(std::string(key));
  return it == groups_.end() ? 0 : it->second.size();
}

TemplateGroups group_by_template(std::span<const ProblemRecord> records,
                                 bool mask_constants) {
  TemplateGroups g;
  for (const auto& r : records) {
    if (!r.gold_tree) throw Error(Errc::kMissingGoldTree, r.id);
    std::string key = template_of(*r.gold_tree, mask_constants).canonical_key;
    if (!g.key_by_id_.emplace(r.id, key).second) {
      throw Error(Errc::kConfigError, "duplicate record id " + r.id);
    }
    g.groups_[key][r.lang].push_back(r.id);
  }
  return g;
}

const std::string& sample_positive(const ProblemRecord& record,
                                   const TemplateGroups& groups,
                                   ContrastMode mode, std::mt19937_64& rng) {
  const std::string& key = groups.key_of(record.id);
  const auto& buckets = groups.groups().at(key);
  std::size_t candidates = 0;
  for (const auto& [lang, ids] : buckets) {
    if (lang != record.lang) candidates += ids.size();
  }
  if (candidates == 0) {
    if (mode == ContrastMode::kCLTC) {
      throw Error(Errc::kNoCrossLingualCandidate, record.id);
    }
    // Contrast with itself.
    const auto& own = buckets.at(record.lang);
    return *std::find(own.begin(), own.end(), record.id);
  }
  std::uniform_int_distribution<std::size_t> d(0, candidates - 1);
  std::size_t pick = d(rng);
  for (const auto& [lang, ids] : buckets) {
    if (lang == record.lang) continue;
    if (pick < ids.size()) return ids[pick];
    pick -= ids.size();
  }
  throw Error(Errc::kNoCrossLingualCandidate, record.id);  // unreachable
}

std::vector<ProblemRecord> filter_tc(std::span<const ProblemRecord> records,
                                     const TemplateGroups& groups) {
  std::vector<ProblemRecord> out;
  for (const auto& r : records) {
    if (groups.num_languages(groups.key_of(r.id)) >= 2) out.push_back(r);
  }
  return out;
}

PairSampler::PairSampler(std::span<const ProblemRecord> records,
                         ContrastMode mode, bool mask_constants)
    : records_(records),
      groups_(group_by_template(records, mask_constants)),
      mode_(mode) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    index_by_id_.emplace(records[i].id, i);
  }
}

std::size_t PairSampler::sample(std::size_t anchor, std::mt19937_64& rng) const {
  const std::string& id = sample_positive(records_[anchor], groups_, mode_, rng);
  return index_by_id_.at(id);
}

std::string template_histogram(const TemplateGroups& groups) {
  std::set<std::string> langs;
  for (const auto& [key, buckets] : groups.groups()) {
    for (const auto& [lang, ids] : buckets) langs.insert(lang);
  }
  std::size_t width = 8;
  for (const auto& [key, buckets] : groups.groups()) {
    width = std::max(width, key.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width) + 2) << "template";
  for (const auto& lang : langs) out << std::right << std::setw(10) << lang;
  out << '\n';
  for (const auto& [key, buckets] : groups.groups()) {
    // setw counts bytes; the placeholder is 5 bytes wide but prints as 3.
    std::size_t visible = key.size();
    for (std::size_t p = key.find(kQuantityPlaceholder); p != std::string::npos;
         p = key.find(kQuantityPlaceholder, p + 1))
      visible -= 2;
    out << key << std::string(width + 2 - visible, ' ');
    for (const auto& lang : langs) {
      auto it = buckets.find(lang);
      out << std::right << std::setw(10) << (it == buckets.end() ? 0 : it->second.size());
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace mwpx
