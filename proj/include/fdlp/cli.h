// Copyright 2026 The fdlp-dereverb Authors.
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


#ifndef FDLP_CLI_H_
#define FDLP_CLI_H_

#include <ostream>

namespace fdlp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Runs one subcommand: extract, simulate, oracle-gain, train, dereverb,
// features, train-joint, evaluate or sweep.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out,
                 std::ostream& err);

}  // namespace fdlp

#endif  // FDLP_CLI_H_
