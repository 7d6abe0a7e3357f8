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

#ifndef MWPX_TOOLS_CLI_H_
#define MWPX_TOOLS_CLI_H_

#include <iostream>

namespace mwpx::cli {

// Exit codes: 0 success, 1 failure while running, 2 usage error.
int cli_main(int argc, const char* const* argv, std::istream& in = std::cin,
             std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace mwpx::cli

#endif  // MWPX_TOOLS_CLI_H_
