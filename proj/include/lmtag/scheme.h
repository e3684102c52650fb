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

#ifndef LMTAG_SCHEME_H_
#define LMTAG_SCHEME_H_

#include <string>
#include <string_view>
#include <vector>

namespace lmtag {

enum class SchemeKind { kIob1, kBio, kBioes };

SchemeKind parse_scheme_kind(std::string_view name);
std::string scheme_name(SchemeKind kind);

struct Span {
  int start = 0;  // inclusive
  int end = 0;    // inclusive
  std::string type;

  bool operator==(const Span& other) const = default;
  auto operator<=>(const Span& other) const = default;
};

// Tag inventory for one scheme over a set of types.
//
// Tag order: "O" first, then per type (sorted) the prefixes in scheme order:
// IOB1/BIO -> B, I; BIOES -> B, I, E, S.
class LabelScheme {
 public:
  LabelScheme() = default;
  LabelScheme(SchemeKind kind, std::vector<std::string> types);

  SchemeKind kind() const { return kind_; }
  const std::vector<std::string>& types() const { return types_; }
  const std::vector<std::string>& tags() const { return tags_; }
  int size() const { return static_cast<int>(tags_.size()); }

  int index(std::string_view tag) const;  // -1 if absent
  const std::string& tag(int index) const { return tags_.at(index); }

  // Whether tag b may follow tag a. a == -1 means sentence start, b == -1
  // means sentence end.
  bool legal(int a, int b) const;

 private:
  SchemeKind kind_ = SchemeKind::kBioes;
  std::vector<std::string> types_;
  std::vector<std::string> tags_;
};

// Splits "B-PER" into ('B', "PER"); "O" yields ('O', "").
struct TagParts {
  char prefix = 'O';
  std::string type;
};
TagParts split_tag(std::string_view tag);

// Types mentioned by a tag list (sorted, unique).
std::vector<std::string> collect_types(const std::vector<std::vector<std::string>>& tag_lists);

// Decodes spans. Ill-formed sequences are repaired: a span runs over a
// maximal stretch of same-type tags, broken only where the scheme marks a
// boundary (B- or S- starts a span; E- or S- ends one; O or a type change
// closes the open span). IOB1 and BIO decode identically.
std::vector<Span> to_spans(const std::vector<std::string>& tags, SchemeKind scheme);

// Encodes non-overlapping spans. Throws DataError on overlap or out-of-range
// spans.
std::vector<std::string> from_spans(const std::vector<Span>& spans, int length,
                                    SchemeKind scheme);

// Span-preserving re-encoding. Tags with unknown prefixes throw DataError
// naming the position and tag.
std::vector<std::string> convert_scheme(const std::vector<std::string>& tags,
                                        SchemeKind from, SchemeKind to);

// from_spans(to_spans(tags)).
std::vector<std::string> canonicalize(const std::vector<std::string>& tags, SchemeKind scheme);

bool is_valid_sequence(const std::vector<std::string>& tags, SchemeKind scheme);

}  // namespace lmtag

#endif  // LMTAG_SCHEME_H_
