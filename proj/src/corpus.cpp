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

#include "lmtag/corpus.h"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "lmtag/errors.h"

namespace lmtag {

std::vector<char32_t> utf8_code_points(std::string_view text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? U'\uFFFD' : static_cast<char32_t>(c));
  }
  return out;
}

std::string utf8_encode(char32_t cp) {
  uint8_t buf[U8_MAX_LENGTH];
  int32_t i = 0;
  UBool error = false;
  U8_APPEND(buf, i, U8_MAX_LENGTH, static_cast<UChar32>(cp), error);
  if (error) return "\xEF\xBF\xBD";
  return std::string(reinterpret_cast<const char*>(buf), i);
}

std::string normalize(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char32_t cp : utf8_code_points(raw)) {
    const UChar32 c = static_cast<UChar32>(cp);
    if (u_charType(c) == U_DECIMAL_DIGIT_NUMBER) {
      out.push_back('0');
    } else {
      out += utf8_encode(static_cast<char32_t>(u_tolower(c)));
    }
  }
  return out;
}

Sentence make_sentence(const std::vector<std::string>& raw_tokens,
                       std::vector<std::string> tags) {
  if (!tags.empty() && tags.size() != raw_tokens.size()) {
    throw DataError("sentence has " + std::to_string(raw_tokens.size()) + " tokens but " +
                    std::to_string(tags.size()) + " tags");
  }
  Sentence s;
  s.tokens.reserve(raw_tokens.size());
  for (const auto& t : raw_tokens) s.tokens.push_back(Token{t, normalize(t)});
  s.tags = std::move(tags);
  return s;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream ss(line);
  std::string f;
  while (ss >> f) fields.push_back(f);
  return fields;
}

}  // namespace

std::vector<Sentence> parse_conll(std::istream& in, int column_count, int tag_column) {
  if (column_count < 1 || tag_column < 0 || tag_column >= column_count) {
    throw UsageError("parse_conll: tag column " + std::to_string(tag_column) +
                     " outside " + std::to_string(column_count) + " columns");
  }
  std::vector<Sentence> out;
  std::vector<std::string> words, tags;
  auto flush = [&] {
    if (!words.empty()) out.push_back(make_sentence(words, tags));
    words.clear();
    tags.clear();
  };
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty()) {
      flush();
      continue;
    }
    if (fields[0] == "-DOCSTART-") {
      flush();
      continue;
    }
    if (static_cast<int>(fields.size()) < column_count) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(column_count) + " fields, found " +
                      std::to_string(fields.size()));
    }
    words.push_back(fields[0]);
    tags.push_back(fields[tag_column]);
  }
  flush();
  return out;
}

std::vector<Sentence> parse_plain_text(std::istream& in) {
  std::vector<Sentence> out;
  std::string line;
  while (std::getline(in, line)) {
    auto fields = split_fields(line);
    if (!fields.empty()) out.push_back(make_sentence(fields));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& symbols) {
  symbols_ = {"<unk>", "<pad>", "<S>", "</S>"};
  for (int i = 0; i < kReserved; ++i) index_.emplace(symbols_[i], i);
  for (const auto& s : symbols) {
    if (index_.count(s)) throw DataError("duplicate vocabulary symbol '" + s + "'");
    index_.emplace(s, static_cast<int>(symbols_.size()));
    symbols_.push_back(s);
  }
}

int Vocabulary::id(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view symbol) const {
  return index_.count(std::string(symbol)) > 0;
}

std::vector<std::string> Vocabulary::symbols() const {
  return std::vector<std::string>(symbols_.begin() + kReserved, symbols_.end());
}

void Vocabulary::save(std::ostream& out) const {
  for (std::size_t i = kReserved; i < symbols_.size(); ++i) out << symbols_[i] << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::vector<std::string> symbols;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    symbols.push_back(line);
  }
  return Vocabulary(symbols);
}

namespace {

Vocabulary vocab_from_counts(const std::map<std::string, long>& counts, int min_count) {
  std::vector<std::pair<std::string, long>> items;
  for (const auto& [s, c] : counts) {
    if (c >= min_count) items.emplace_back(s, c);
  }
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> symbols;
  symbols.reserve(items.size());
  Vocabulary reserved;
  for (auto& [s, c] : items) {
    if (!reserved.contains(s)) symbols.push_back(s);
  }
  return Vocabulary(symbols);
}

}  // namespace

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus, int min_count) {
  std::map<std::string, long> counts;
  for (const auto& sentence : corpus) {
    for (const auto& tok : sentence) ++counts[tok];
  }
  return vocab_from_counts(counts, min_count);
}

Vocabulary build_word_vocab(const std::vector<Sentence>& sentences, int min_count) {
  std::map<std::string, long> counts;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) ++counts[t.norm];
  }
  return vocab_from_counts(counts, min_count);
}

Vocabulary build_char_vocab(const std::vector<Sentence>& sentences, int min_count) {
  std::map<std::string, long> counts;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) {
      for (char32_t c : utf8_code_points(t.raw)) ++counts[utf8_encode(c)];
      for (char32_t c : utf8_code_points(t.norm)) ++counts[utf8_encode(c)];
    }
  }
  return vocab_from_counts(counts, min_count);
}

std::vector<int> char_ids(std::string_view text, const Vocabulary& chars) {
  std::vector<int> ids;
  for (char32_t c : utf8_code_points(text)) ids.push_back(chars.id(utf8_encode(c)));
  return ids;
}

std::vector<Sentence> subsample(const std::vector<Sentence>& sentences, double fraction,
                                RngStream& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw UsageError("subsample fraction must be in (0, 1], got " + std::to_string(fraction));
  }
  const std::size_t n = sentences.size();
  const auto k = static_cast<std::size_t>(fraction * static_cast<double>(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Partial Fisher-Yates over the first k slots.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(order[i], order[j]);
  }
  order.resize(k);
  std::sort(order.begin(), order.end());
  std::vector<Sentence> out;
  out.reserve(k);
  for (std::size_t i : order) out.push_back(sentences[i]);
  return out;
}

std::uint64_t sentence_hash(const std::vector<std::string>& tokens) {
  // FNV-1a over the tokens with a 0x1f separator.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& t : tokens) {
    for (unsigned char c : t) mix(c);
    mix(0x1f);
  }
  return h;
}

}  // namespace lmtag
