// Copyright 2026 The climsoup Authors
// SPDX-License-Identifier: Apache-2.0
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

#include "climsoup/csv.h"

#include "climsoup/common.h"

namespace climsoup::csv {

std::vector<Row> Parse(std::string_view text) {
  std::vector<Row> rows;
  size_t i = 0;
  size_t line = 1;
  const size_t n = text.size();
  while (i < n) {
    // Skip blank lines and comment records.
    if (text[i] == '\n' || text[i] == '\r') {
      if (text[i] == '\n') ++line;
      ++i;
      continue;
    }
    if (text[i] == '#') {
      while (i < n && text[i] != '\n') ++i;
      continue;
    }
    Row row;
    row.line = line;
    std::string field;
    bool in_quotes = false;
    bool done = false;
    while (!done) {
      if (i >= n) {
        if (in_quotes) throw DataError("unterminated quoted field at line " + std::to_string(row.line));
        row.fields.push_back(std::move(field));
        break;
      }
      char c = text[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < n && text[i + 1] == '"') {
            field.push_back('"');
            i += 2;
          } else {
            in_quotes = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        continue;
      }
      switch (c) {
        case '"':
          in_quotes = true;
          ++i;
          break;
        case ',':
          row.fields.push_back(std::move(field));
          field.clear();
          ++i;
          break;
        case '\r':
          ++i;
          break;
        case '\n':
          row.fields.push_back(std::move(field));
          ++line;
          ++i;
          done = true;
          break;
        default:
          field.push_back(c);
          ++i;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

int Table::Column(std::string_view name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

const std::string& Table::Get(const Row& row, int column) const {
  static const std::string kEmpty;
  if (column < 0 || static_cast<size_t>(column) >= row.fields.size()) return kEmpty;
  return row.fields[static_cast<size_t>(column)];
}

Table ParseTable(std::string_view text) {
  Table t;
  auto rows = Parse(text);
  if (rows.empty()) throw DataError("CSV has no header row");
  t.header = std::move(rows.front().fields);
  for (auto& h : t.header) h = Trim(h);
  t.rows.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
  return t;
}

std::string Escape(std::string_view field) {
  bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos ||
                      (!field.empty() && field.front() == '#');
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void Writer::Comment(std::string_view text) {
  out_ += "# ";
  out_ += text;
  out_ += '\n';
}

void Writer::WriteRow(const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out_.push_back(',');
    out_ += Escape(fields[i]);
  }
  out_.push_back('\n');
}

}  // namespace climsoup::csv
