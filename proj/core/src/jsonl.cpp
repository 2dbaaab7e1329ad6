// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "ricot/jsonl.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ricot/errors.hpp"
#include "ricot/text.hpp"

namespace ricot {

void for_each_jsonl(
    std::istream& in,
    const std::function<void(json record, std::size_t line_no)>& on_record,
    const std::function<void(const JsonlError&)>& on_error) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      if (on_error) {
        on_error(JsonlError{line_no, "invalid JSON"});
        continue;
      }
      throw DataError("line " + std::to_string(line_no) + ": invalid JSON");
    }
    on_record(std::move(record), line_no);
  }
}

void write_jsonl(std::ostream& out, const json& record) {
  out << record.dump() << '\n';
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json value = json::parse(in, nullptr, false);
  if (value.is_discarded()) throw DataError(path + ": invalid JSON");
  return value;
}

void write_json_file(const std::string& path, const json& value) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << value.dump(2) << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace ricot
