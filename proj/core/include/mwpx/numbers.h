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

#ifndef MWPX_NUMBERS_H_
#define MWPX_NUMBERS_H_

#include <optional>
#include <string>
#include <string_view>

namespace mwpx {

// Recognized surface forms: optional sign, integers, decimals, thousands
// groups ("1,200"), a percent suffix ("32%" -> 0.32), simple fractions
// ("3/4") and mixed numbers ("2(1/2)" -> 2.5). Anything else is nullopt.
std::optional<double> parse_number(std::string_view text);

// Shortest round-trip decimal form; integral values print without a point.
std::string format_number(double value);

}  // namespace mwpx

#endif  // MWPX_NUMBERS_H_
