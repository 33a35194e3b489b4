// Copyright 2026 The dipsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DIPSYNTH_FORMAT_H_
#define DIPSYNTH_FORMAT_H_

#include <optional>
#include <string>
#include <string_view>

namespace dipsynth {

// Shortest decimal text that parses back to exactly `v` ("inf", "-inf" and
// "nan" for non-finite values). Locale independent.
std::string FormatDouble(double v);

// Parses a full decimal field (surrounding blanks allowed). Accepts "inf"
// and "-inf"; rejects trailing garbage.
std::optional<double> ParseDouble(std::string_view text);

}  // namespace dipsynth

#endif  // DIPSYNTH_FORMAT_H_
