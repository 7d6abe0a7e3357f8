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

#include "mwpx/corpus.h"

#include <algorithm>
#include <cctype>
#include <random>

#include "json_util.h"
#include "mwpx/numbers.h"

namespace mwpx {

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> split_from_name(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev" || name == "valid" || name == "validation") return Split::kDev;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

std::vector<double> ProblemRecord::quantity_values() const {
  std::vector<double> out;
  out.reserve(quantities.size());
  for (const auto& q : quantities) out.push_back(q.value);
  return out;
}

bool gold_consistent(const ProblemRecord& record, const ConstantTable& constants,
                     double threshold) {
  if (!record.gold_tree) return true;
  try {
    double v = evaluate(*record.gold_tree, record.quantity_values(), constants);
    return check_answer(v, record.gold_answer, threshold);
  } catch (const Error&) {
    return false;
  }
}

// Tokenization -----------------------------------------------------------------

namespace {

bool is_ascii_alpha(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0;
}
bool is_ascii_digit(char c) {
  return std::isdigit(static_cast<unsigned char>(c)) != 0;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

void tokenize_en_word(const std::string& word, std::vector<std::string>& out) {
  constexpr std::string_view kLeading = "\"'([{$";
  constexpr std::string_view kTrailing = ".,?!;:\"')]}";
  std::size_t begin = 0;
  std::size_t end = word.size();
  std::vector<std::string> tail;
  while (begin < end && kLeading.find(word[begin]) != std::string_view::npos) {
    out.emplace_back(1, word[begin]);
    ++begin;
  }
  while (end > begin && kTrailing.find(word[end - 1]) != std::string_view::npos) {
    tail.emplace_back(1, word[end - 1]);
    --end;
  }
  if (end > begin) out.push_back(word.substr(begin, end - begin));
  out.insert(out.end(), tail.rbegin(), tail.rend());
}

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

// Identifier-like runs and number runs stay whole; every other character
// (CJK, punctuation) becomes its own token.
void tokenize_segmented(const std::string& chunk, std::vector<std::string>& out) {
  std::size_t i = 0;
  while (i < chunk.size()) {
    char c = chunk[i];
    std::size_t start = i;
    if (is_ascii_alpha(c) || c == '_') {
      while (i < chunk.size() &&
             (is_ascii_alpha(chunk[i]) || is_ascii_digit(chunk[i]) ||
              chunk[i] == '_'))
        ++i;
    } else if (is_ascii_digit(c) ||
               (c == '(' && i + 1 < chunk.size() && is_ascii_digit(chunk[i + 1]))) {
      // Numbers, optionally with '.', '/', '%' and a bracketed fraction.
      int depth = 0;
      while (i < chunk.size()) {
        char d = chunk[i];
        if (is_ascii_digit(d) || d == '.' || d == '/' || d == '%') {
          ++i;
        } else if (d == '(' && i + 1 < chunk.size() &&
                   is_ascii_digit(chunk[i + 1])) {
          ++depth;
          ++i;
        } else if (d == ')' && depth > 0) {
          --depth;
          ++i;
        } else {
          break;
        }
      }
      // Keep a trailing '.' (sentence end) out of the number.
      while (i - start > 1 && chunk[i - 1] == '.') --i;
      if (depth != 0 || !parse_number(std::string_view(chunk).substr(start, i - start))) {
        // Fall back to a plain digit run.
        i = start;
        if (chunk[i] == '(') {
          ++i;
        } else {
          while (i < chunk.size() && is_ascii_digit(chunk[i])) ++i;
        }
      }
    } else {
      i += std::min(utf8_length(static_cast<unsigned char>(c)),
                    chunk.size() - i);
    }
    out.push_back(chunk.substr(start, i - start));
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, std::string_view lang) {
  std::vector<std::string> out;
  for (const auto& word : split_whitespace(text)) {
    if (lang == "en") {
      tokenize_en_word(word, out);
    } else if (parse_number(word) || parse_quantity_token(word)) {
      out.push_back(word);
    } else {
      tokenize_segmented(word, out);
    }
  }
  return out;
}

Extraction extract_quantities(std::span<const std::string> tokens) {
  Extraction ex;
  ex.tokens.reserve(tokens.size());
  for (const auto& tok : tokens) {
    std::optional<double> value;
    if (!parse_quantity_token(tok)) value = parse_number(tok);
    if (value) {
      int index = static_cast<int>(ex.quantities.size());
      ex.quantities.push_back(
          {*value, static_cast<int>(ex.tokens.size()), tok});
      ex.tokens.push_back(quantity_token(index));
    } else {
      ex.tokens.push_back(tok);
    }
  }
  return ex;
}

// Loaders ----------------------------------------------------------------------

namespace {

std::string record_id(const nlohmann::json& obj, std::size_t ordinal) {
  std::string id = internal::json_string_field(obj, "id");
  if (id.empty()) id = std::to_string(ordinal);
  return id;
}

}  // namespace

LoadResult load_math23k(const std::string& path, const ConstantTable& constants,
                        std::optional<std::size_t> limit, std::string dataset) {
  LoadResult result;
  auto objects = internal::read_json_objects(path);
  std::size_t ordinal = 0;
  for (const auto& obj : objects) {
    if (limit && ordinal >= *limit) break;
    if (!obj.is_object()) {
      throw Error(Errc::kFileFormatError, path + ": record is not an object");
    }
    std::string id = record_id(obj, ordinal++);
    std::string text = internal::json_string_field(obj, "segmented_text");
    if (text.empty()) text = internal::json_string_field(obj, "text");
    if (text.empty()) text = internal::json_string_field(obj, "original_text");
    std::string equation = internal::json_string_field(obj, "equation");
    std::string ans = internal::json_string_field(obj, "ans");
    if (ans.empty()) ans = internal::json_string_field(obj, "answer");

    ProblemRecord rec;
    rec.id = id;
    rec.lang = "zh";
    rec.dataset = dataset;
    if (auto s = split_from_name(internal::json_string_field(obj, "split")))
      rec.split = *s;
    rec.category = internal::json_string_field(obj, "category");
    Extraction ex = extract_quantities(tokenize(text, "zh"));
    rec.tokens = std::move(ex.tokens);
    rec.quantities = std::move(ex.quantities);

    auto answer = parse_number(ans);
    if (!answer) {
      result.rejects.push_back(
          {id, Errc::kFileFormatError, "unrecognized answer '" + ans + "'"});
      continue;
    }
    rec.gold_answer = *answer;
    try {
      rec.gold_tree = parse_infix(equation, rec.quantity_values(), constants);
    } catch (const Error& e) {
      result.rejects.push_back({id, e.code(), e.what()});
      continue;
    }
    if (!gold_consistent(rec, constants)) {
      result.rejects.push_back({id, Errc::kVerificationFailed,
                                "equation does not reproduce answer " + ans});
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

std::vector<ProblemRecord> load_bilingual_eval(const std::string& path,
                                               const ConstantTable& constants,
                                               std::optional<std::size_t> limit) {
  std::vector<ProblemRecord> out;
  auto objects = internal::read_json_objects(path);
  std::size_t ordinal = 0;
  for (const auto& obj : objects) {
    if (limit && ordinal >= *limit) break;
    if (!obj.is_object()) {
      throw Error(Errc::kFileFormatError, path + ": record is not an object");
    }
    std::string id = record_id(obj, ordinal++);
    std::string dataset = internal::json_string_field(obj, "dataset");
    if (dataset.empty()) dataset = "bilingual";
    std::string equation = internal::json_string_field(obj, "equation");
    std::string ans = internal::json_string_field(obj, "answer");
    if (ans.empty()) ans = internal::json_string_field(obj, "ans");
    auto answer = parse_number(ans);
    if (!answer) {
      throw Error(Errc::kFileFormatError,
                  "record " + id + ": unrecognized answer '" + ans + "'");
    }
    for (const char* lang : {"en", "zh"}) {
      std::string text = internal::json_string_field(obj, lang);
      if (text.empty()) {
        throw Error(Errc::kMissingTranslation,
                    "record " + id + " has no '" + lang + "' text");
      }
    }
    for (const char* lang : {"en", "zh"}) {
      ProblemRecord rec;
      rec.id = id + "/" + lang;
      rec.lang = lang;
      rec.dataset = dataset;
      rec.split = Split::kTest;
      rec.category = internal::json_string_field(obj, "category");
      Extraction ex =
          extract_quantities(tokenize(internal::json_string_field(obj, lang), lang));
      rec.tokens = std::move(ex.tokens);
      rec.quantities = std::move(ex.quantities);
      rec.gold_answer = *answer;
      try {
        rec.gold_tree = parse_infix(equation, rec.quantity_values(), constants);
      } catch (const Error& e) {
        throw Error(Errc::kFileFormatError,
                    "record " + rec.id + ": " + e.what());
      }
      if (!gold_consistent(rec, constants)) {
        throw Error(Errc::kFileFormatError,
                    "record " + rec.id + ": equation does not give " + ans);
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::pair<std::vector<ProblemRecord>, std::vector<ProblemRecord>> sample_dev(
    std::vector<ProblemRecord> records, std::size_t size, std::uint64_t seed) {
  if (size > records.size()) {
    throw Error(Errc::kSizeTooLarge, "dev size " + std::to_string(size) +
                                         " exceeds " +
                                         std::to_string(records.size()) +
                                         " records");
  }
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first size slots are the sample.
  for (std::size_t i = 0; i < size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<bool> chosen(records.size(), false);
  for (std::size_t i = 0; i < size; ++i) chosen[order[i]] = true;

  std::vector<ProblemRecord> train, dev;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (chosen[i] ? dev : train).push_back(std::move(records[i]));
  }
  return {std::move(train), std::move(dev)};
}

}  // namespace mwpx
