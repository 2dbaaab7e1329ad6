// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace ricot::detail {

// Byte-for-byte copies of the files under core/data/, baked in at build time.
std::string_view embedded_templates_jsonl();
std::string_view embedded_templates_manifest();
std::string_view embedded_prompts_json();

}  // namespace ricot::detail
