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

#ifndef MWPX_ERROR_H_
#define MWPX_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace mwpx {

// Every failure the library raises carries one of these codes so callers and
// tests can branch on the kind without parsing messages.
enum class Errc {
  // expressions
  kMalformedPrefix,
  kUnknownToken,
  kQuantityOutOfRange,
  kSyntaxError,
  kUnboundLiteral,
  kDivisionByZero,
  kNonFiniteResult,
  // MathQA formulas
  kFormulaSyntaxError,
  kDanglingBackRef,
  kFilteredOperator,
  kUnknownOperator,
  // corpora
  kFileFormatError,
  kMissingTranslation,
  kSizeTooLarge,
  kVerificationFailed,
  kConfigError,
  // templates
  kMissingGoldTree,
  kNoCrossLingualCandidate,
  // solver
  kEmptyGroup,
  kBadTemperature,
  kNotNormalized,
  kCheckpointError,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mwpx

#endif  // MWPX_ERROR_H_
