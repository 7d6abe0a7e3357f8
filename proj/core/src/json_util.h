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

#ifndef MWPX_SRC_JSON_UTIL_H_
#define MWPX_SRC_JSON_UTIL_H_

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mwpx/error.h"

namespace mwpx::internal {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kFileFormatError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A JSON array, JSON lines, or back-to-back objects all yield the list of
// top-level objects.
inline std::vector<nlohmann::json> read_json_objects(const std::string& path) {
  std::string text = read_file(path);
  std::vector<nlohmann::json> out;
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return out;
  try {
    if (text[first] == '[') {
      nlohmann::json arr = nlohmann::json::parse(text);
      for (auto& item : arr) out.push_back(std::move(item));
      return out;
    }
    std::istringstream in(text);
    while (true) {
      in >> std::ws;
      if (in.peek() == std::char_traits<char>::eof()) break;
      nlohmann::json value;
      in >> value;
      out.push_back(std::move(value));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kFileFormatError, path + ": " + e.what());
  }
  return out;
}

inline std::string json_string_field(const nlohmann::json& obj,
                                     const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

}  // namespace mwpx::internal

#endif  // MWPX_SRC_JSON_UTIL_H_
