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

#include <fstream>

#include "json_util.h"
#include "mwpx/corpus.h"

namespace mwpx {

using nlohmann::json;

std::string record_to_json(const ProblemRecord& record) {
  json j;
  j["id"] = record.id;
  j["lang"] = record.lang;
  j["tokens"] = record.tokens;
  json qs = json::array();
  for (const auto& q : record.quantities) {
    qs.push_back({{"value", q.value},
                  {"source_position", q.source_position},
                  {"surface", q.surface}});
  }
  j["quantities"] = std::move(qs);
  if (record.gold_tree) {
    j["gold_tree"] = join_tokens(serialize_prefix(*record.gold_tree));
  } else {
    j["gold_tree"] = nullptr;
  }
  j["gold_answer"] = record.gold_answer;
  j["dataset"] = record.dataset;
  j["split"] = std::string(split_name(record.split));
  if (!record.category.empty()) j["category"] = record.category;
  return j.dump();
}

ProblemRecord record_from_json(std::string_view line,
                               const ConstantTable& constants) {
  ProblemRecord rec;
  try {
    json j = json::parse(line);
    rec.id = j.at("id").get<std::string>();
    rec.lang = j.at("lang").get<std::string>();
    rec.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const auto& q : j.at("quantities")) {
      rec.quantities.push_back({q.at("value").get<double>(),
                                q.at("source_position").get<int>(),
                                q.value("surface", std::string{})});
    }
    rec.gold_answer = j.at("gold_answer").get<double>();
    rec.dataset = j.value("dataset", std::string{});
    auto split = split_from_name(j.value("split", std::string("train")));
    if (!split) throw Error(Errc::kFileFormatError, "bad split");
    rec.split = *split;
    rec.category = j.value("category", std::string{});
    if (auto it = j.find("gold_tree"); it != j.end() && !it->is_null()) {
      auto tokens = split_tokens(it->get<std::string>());
      rec.gold_tree = parse_prefix(tokens, rec.num_quantities(), constants);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::kFileFormatError, e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::kFileFormatError) throw;
    throw Error(Errc::kFileFormatError, std::string("record ") + rec.id + ": " +
                                            e.what());
  }
  for (std::size_t i = 0; i < rec.quantities.size(); ++i) {
    int pos = rec.quantities[i].source_position;
    if (pos < 0 || static_cast<std::size_t>(pos) >= rec.tokens.size()) {
      throw Error(Errc::kFileFormatError,
                  "record " + rec.id + ": quantity position out of range");
    }
  }
  return rec;
}

void write_records(const std::string& path,
                   std::span<const ProblemRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kFileFormatError, "cannot write " + path);
  for (const auto& r : records) out << record_to_json(r) << '\n';
}

std::vector<ProblemRecord> read_records(const std::string& path,
                                        const ConstantTable& constants,
                                        std::optional<std::size_t> limit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kFileFormatError, "cannot open " + path);
  std::vector<ProblemRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (limit && out.size() >= *limit) break;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(record_from_json(line, constants));
  }
  return out;
}

}  // namespace mwpx
