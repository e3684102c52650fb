// Copyright 2026 The lmtag Authors.
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

#ifndef LMTAG_CONFIG_H_
#define LMTAG_CONFIG_H_

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lmtag {

// Line-oriented configuration text:
//
//   file    := line*
//   line    := blank | comment | section | entry
//   comment := ('#' | ';') any            (after optional whitespace)
//   section := '[' name ']'
//   entry   := key '=' value              (key and value trimmed)
//
// Entries before the first section belong to section "". A key repeated
// within one section is a DataError naming the line.
class IniDocument {
 public:
  static IniDocument parse(std::string_view text);
  static IniDocument load(const std::string& path);

  bool has(std::string_view section, std::string_view key) const;
  std::optional<std::string> get(std::string_view section, std::string_view key) const;

  // Typed getters return the fallback when the key is absent and throw
  // DataError when the value does not parse.
  std::string get_string(std::string_view section, std::string_view key,
                         std::string fallback) const;
  int get_int(std::string_view section, std::string_view key, int fallback) const;
  double get_double(std::string_view section, std::string_view key, double fallback) const;
  bool get_bool(std::string_view section, std::string_view key, bool fallback) const;

  // Required variants throw DataError when the key is absent.
  std::string require(std::string_view section, std::string_view key) const;

  void set(std::string_view section, std::string_view key, std::string value);
  void set(std::string_view section, std::string_view key, int value);
  void set(std::string_view section, std::string_view key, double value);
  void set(std::string_view section, std::string_view key, bool value);
  void set(std::string_view section, std::string_view key, const char* value) {
    set(section, key, std::string(value));
  }

  bool has_section(std::string_view section) const;
  std::vector<std::string> sections() const;
  // Merges every entry of other into this document (other wins).
  void merge(const IniDocument& other);

  std::string str() const;

 private:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };
  Section* find_section(std::string_view name);
  const Section* find_section(std::string_view name) const;

  std::vector<Section> sections_;
};

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

std::vector<std::string> split_words(std::string_view text);
std::string join_words(const std::vector<std::string>& words);

}  // namespace lmtag

#endif  // LMTAG_CONFIG_H_
