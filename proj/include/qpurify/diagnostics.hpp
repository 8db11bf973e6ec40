// Copyright 2026 The qpurify Authors
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

#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace qpurify {

using WarningHandler = std::function<void(std::string_view)>;

/// Replaces the sink for library warnings (stderr by default). Returns the
/// previous handler.
WarningHandler set_warning_handler(WarningHandler handler);

/// Emits `message` the first time `key` is seen in this process.
void warn_once(std::string_view key, std::string_view message);

/// Emits unconditionally.
void warn(std::string_view message);

}  // namespace qpurify
