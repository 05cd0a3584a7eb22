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

#ifndef CLIMSOUP_CSV_H_
#define CLIMSOUP_CSV_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace climsoup::csv {

struct Row {
  size_t line = 0;  // 1-based source line where the record starts
  std::vector<std::string> fields;
};

// RFC 4180 reader. Records whose first character is '#' are comments and
// are skipped; blank lines are skipped.
std::vector<Row> Parse(std::string_view text);

// Header-keyed view over parsed rows.
struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  // Column index or -1.
  int Column(std::string_view name) const;
  const std::string& Get(const Row& row, int column) const;
};

Table ParseTable(std::string_view text);

std::string Escape(std::string_view field);

class Writer {
 public:
  // Writes a "# key=value;..." comment line, used to stamp provenance.
  void Comment(std::string_view text);
  void WriteRow(const std::vector<std::string>& fields);
  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

}  // namespace climsoup::csv

#endif  // CLIMSOUP_CSV_H_
