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


#ifndef FDLP_CONFIG_H_
#define FDLP_CONFIG_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace fdlp {

// Flat "key = value" text. '#' starts a comment; blank lines are ignored.
// Keys may be written with or without a leading "--".
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::string_view text);
ConfigMap read_config(const std::filesystem::path& path);

}  // namespace fdlp

#endif  // FDLP_CONFIG_H_
