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

#include "lmtag/config.h"

#include <charconv>
#include <sstream>

#include "lmtag/errors.h"
#include "lmtag/persist.h"

namespace lmtag {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(std::string_view section, std::string_view key) {
  return "[" + std::string(section) + "] " + std::string(key);
}

}  // namespace

IniDocument IniDocument::parse(std::string_view text) {
  IniDocument doc;
  std::string current;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw DataError("config line " + std::to_string(line_no) + ": unterminated section");
      }
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (!doc.find_section(current)) doc.sections_.push_back({current, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw DataError("config line " + std::to_string(line_no) + ": empty key");
    if (doc.has(current, key)) {
      throw DataError("config line " + std::to_string(line_no) + ": duplicate key " +
                      where(current, key));
    }
    doc.set(current, key, std::string(trim(line.substr(eq + 1))));
  }
  return doc;
}

IniDocument IniDocument::load(const std::string& path) { return parse(read_file(path)); }

IniDocument::Section* IniDocument::find_section(std::string_view name) {
  for (auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const IniDocument::Section* IniDocument::find_section(std::string_view name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

bool IniDocument::has(std::string_view section, std::string_view key) const {
  return get(section, key).has_value();
}

std::optional<std::string> IniDocument::get(std::string_view section,
                                            std::string_view key) const {
  if (const Section* s = find_section(section)) {
    for (const auto& [k, v] : s->entries) {
      if (k == key) return v;
    }
  }
  return std::nullopt;
}

std::string IniDocument::get_string(std::string_view section, std::string_view key,
                                    std::string fallback) const {
  auto v = get(section, key);
  return v ? *v : std::move(fallback);
}

int IniDocument::get_int(std::string_view section, std::string_view key, int fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  int out = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || p != v->data() + v->size()) {
    throw DataError("config " + where(section, key) + ": not an integer: '" + *v + "'");
  }
  return out;
}

double IniDocument::get_double(std::string_view section, std::string_view key,
                               double fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  double out = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || p != v->data() + v->size()) {
    throw DataError("config " + where(section, key) + ": not a number: '" + *v + "'");
  }
  return out;
}

bool IniDocument::get_bool(std::string_view section, std::string_view key,
                           bool fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw DataError("config " + where(section, key) + ": not a boolean: '" + *v + "'");
}

std::string IniDocument::require(std::string_view section, std::string_view key) const {
  auto v = get(section, key);
  if (!v) throw DataError("config is missing " + where(section, key));
  return *v;
}

void IniDocument::set(std::string_view section, std::string_view key, std::string value) {
  Section* s = find_section(section);
  if (!s) {
    sections_.push_back({std::string(section), {}});
    s = &sections_.back();
  }
  for (auto& [k, v] : s->entries) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  s->entries.emplace_back(std::string(key), std::move(value));
}

void IniDocument::set(std::string_view section, std::string_view key, int value) {
  set(section, key, std::to_string(value));
}

void IniDocument::set(std::string_view section, std::string_view key, double value) {
  set(section, key, format_double(value));
}

void IniDocument::set(std::string_view section, std::string_view key, bool value) {
  set(section, key, std::string(value ? "true" : "false"));
}

bool IniDocument::has_section(std::string_view section) const {
  return find_section(section) != nullptr;
}

std::vector<std::string> IniDocument::sections() const {
  std::vector<std::string> out;
  for (const auto& s : sections_) out.push_back(s.name);
  return out;
}

void IniDocument::merge(const IniDocument& other) {
  for (const auto& s : other.sections_) {
    if (!find_section(s.name)) sections_.push_back({s.name, {}});
    for (const auto& [k, v] : s.entries) set(s.name, k, v);
  }
}

std::string IniDocument::str() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& s : sections_) {
    if (s.name.empty() && s.entries.empty()) continue;
    if (!first) out << '\n';
    first = false;
    if (!s.name.empty()) out << '[' << s.name << "]\n";
    for (const auto& [k, v] : s.entries) out << k << " = " << v << '\n';
  }
  return out.str();
}

std::string format_double(double value) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, p);
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace lmtag
