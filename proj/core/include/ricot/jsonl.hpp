// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include <functional>
#include <iosfwd>
#include <string>

namespace ricot {

using json = nlohmann::json;

struct JsonlError {
  std::size_t line_no = 0;  // 1-based
  std::string message;
};

/// Stream line-delimited JSON. Blank lines are skipped. Parse failures go to
/// `on_error` (when given) instead of aborting the scan.
void for_each_jsonl(
    std::istream& in,
    const std::function<void(json record, std::size_t line_no)>& on_record,
    const std::function<void(const JsonlError&)>& on_error = {});

/// One record per line, compact separators, '\n' terminated. Object keys are
/// emitted in sorted order, which keeps artifacts byte-stable.
void write_jsonl(std::ostream& out, const json& record);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& value);
std::string read_file(const std::string& path);

}  // namespace ricot
