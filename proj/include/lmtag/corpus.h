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

#ifndef LMTAG_CORPUS_H_
#define LMTAG_CORPUS_H_

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lmtag/rng.h"

namespace lmtag {

// Lowercases every code point (Unicode simple case mapping) and replaces each
// code point with the decimal-digit property (general category Nd) by '0'.
// Input is UTF-8; ill-formed bytes are replaced by U+FFFD.
std::string normalize(std::string_view raw);

// Splits UTF-8 text into code points. Ill-formed bytes become U+FFFD.
std::vector<char32_t> utf8_code_points(std::string_view text);
std::string utf8_encode(char32_t cp);

struct Token {
  std::string raw;
  std::string norm;
};

struct Sentence {
  std::vector<Token> tokens;
  std::vector<std::string> tags;  // empty or one per token

  std::size_t size() const { return tokens.size(); }
  bool has_tags() const { return !tags.empty(); }
};

Sentence make_sentence(const std::vector<std::string>& raw_tokens,
                       std::vector<std::string> tags = {});

// Reads CoNLL column data: whitespace-separated fields, blank lines between
// sentences, "-DOCSTART-" lines dropped. Token text comes from column 0, the
// tag from tag_column. Lines with fewer than column_count fields throw
// DataError with the 1-based line number.
std::vector<Sentence> parse_conll(std::istream& in, int column_count, int tag_column);

// One sentence per line, whitespace-tokenized; blank lines skipped.
std::vector<Sentence> parse_plain_text(std::istream& in);

// Symbol table with four reserved ids ahead of the corpus symbols.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kPad = 1;
  static constexpr int kBos = 2;  // <S>
  static constexpr int kEos = 3;  // </S>
  static constexpr int kReserved = 4;

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& symbols);

  // Index of symbol, or kUnk.
  int id(std::string_view symbol) const;
  bool contains(std::string_view symbol) const;
  const std::string& symbol(int id) const { return symbols_.at(id); }
  int size() const { return static_cast<int>(symbols_.size()); }

  // Non-reserved symbols in id order.
  std::vector<std::string> symbols() const;

  // One symbol per line; the line number (from 0) plus kReserved is the id.
  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);

  bool operator==(const Vocabulary& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

// Symbols with count >= min_count ordered by count (descending) then
// byte-lexicographically.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus, int min_count = 1);
Vocabulary build_word_vocab(const std::vector<Sentence>& sentences, int min_count = 1);
// Character vocabulary over code points of raw and normalized forms.
Vocabulary build_char_vocab(const std::vector<Sentence>& sentences, int min_count = 1);

// Character ids of a token's code points under a character vocabulary.
std::vector<int> char_ids(std::string_view text, const Vocabulary& chars);

// floor(fraction * N) sentences drawn without replacement, original order
// kept. fraction must be in (0, 1].
std::vector<Sentence> subsample(const std::vector<Sentence>& sentences, double fraction,
                                RngStream& rng);

std::uint64_t sentence_hash(const std::vector<std::string>& tokens);

}  // namespace lmtag

#endif  // LMTAG_CORPUS_H_
