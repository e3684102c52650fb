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

#include "lmtag/scheme.h"

#include <algorithm>
#include <set>

#include "lmtag/errors.h"

namespace lmtag {

SchemeKind parse_scheme_kind(std::string_view name) {
  std::string n(name);
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (n == "iob1" || n == "iob") return SchemeKind::kIob1;
  if (n == "bio" || n == "iob2") return SchemeKind::kBio;
  if (n == "bioes" || n == "iobes") return SchemeKind::kBioes;
  throw UsageError("unknown tagging scheme '" + std::string(name) + "'");
}

std::string scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::kIob1: return "iob1";
    case SchemeKind::kBio: return "bio";
    case SchemeKind::kBioes: return "bioes";
  }
  return "?";
}

TagParts split_tag(std::string_view tag) {
  if (tag == "O") return {'O', ""};
  if (tag.size() < 3 || tag[1] != '-') return {'?', std::string(tag)};
  return {tag[0], std::string(tag.substr(2))};
}

namespace {

bool prefix_allowed(char prefix, SchemeKind scheme) {
  switch (prefix) {
    case 'O':
    case 'B':
    case 'I':
      return true;
    case 'E':
    case 'S':
      return scheme == SchemeKind::kBioes;
    default:
      return false;
  }
}

TagParts checked_parts(const std::vector<std::string>& tags, std::size_t i, SchemeKind scheme) {
  TagParts p = split_tag(tags[i]);
  if (!prefix_allowed(p.prefix, scheme)) {
    throw DataError("tag '" + tags[i] + "' at position " + std::to_string(i) +
                    " is not in the " + scheme_name(scheme) + " inventory");
  }
  return p;
}

// Transition legality on parsed tags. nullptr means a sentence boundary.
bool legal_parts(const TagParts* a, const TagParts* b, SchemeKind scheme) {
  if (a == nullptr && b == nullptr) return false;
  switch (scheme) {
    case SchemeKind::kBioes: {
      const bool inside = a != nullptr && (a->prefix == 'B' || a->prefix == 'I');
      if (inside) {
        return b != nullptr && (b->prefix == 'I' || b->prefix == 'E') && b->type == a->type;
      }
      return b == nullptr || b->prefix == 'O' || b->prefix == 'B' || b->prefix == 'S';
    }
    case SchemeKind::kBio:
      if (b != nullptr && b->prefix == 'I') {
        return a != nullptr && (a->prefix == 'B' || a->prefix == 'I') && a->type == b->type;
      }
      return true;
    case SchemeKind::kIob1:
      if (b != nullptr && b->prefix == 'B') {
        return a != nullptr && (a->prefix == 'B' || a->prefix == 'I') && a->type == b->type;
      }
      return true;
  }
  return false;
}

}  // namespace

LabelScheme::LabelScheme(SchemeKind kind, std::vector<std::string> types) : kind_(kind) {
  std::sort(types.begin(), types.end());
  types.erase(std::unique(types.begin(), types.end()), types.end());
  types_ = std::move(types);
  tags_.push_back("O");
  const std::string prefixes = kind == SchemeKind::kBioes ? "BIES" : "BI";
  for (const auto& t : types_) {
    for (char p : prefixes) tags_.push_back(std::string(1, p) + "-" + t);
  }
}

int LabelScheme::index(std::string_view tag) const {
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (tags_[i] == tag) return static_cast<int>(i);
  }
  return -1;
}

bool LabelScheme::legal(int a, int b) const {
  TagParts pa, pb;
  if (a >= 0) pa = split_tag(tags_.at(a));
  if (b >= 0) pb = split_tag(tags_.at(b));
  return legal_parts(a >= 0 ? &pa : nullptr, b >= 0 ? &pb : nullptr, kind_);
}

std::vector<std::string> collect_types(const std::vector<std::vector<std::string>>& tag_lists) {
  std::set<std::string> types;
  for (const auto& tags : tag_lists) {
    for (const auto& t : tags) {
      TagParts p = split_tag(t);
      if (p.prefix != 'O' && p.prefix != '?') types.insert(p.type);
    }
  }
  return {types.begin(), types.end()};
}

std::vector<Span> to_spans(const std::vector<std::string>& tags, SchemeKind scheme) {
  std::vector<Span> spans;
  bool open = false;
  Span cur;
  auto close = [&] {
    if (open) spans.push_back(cur);
    open = false;
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const TagParts p = checked_parts(tags, i, scheme);
    const int pos = static_cast<int>(i);
    switch (p.prefix) {
      case 'O':
        close();
        break;
      case 'B':
        close();
        cur = Span{pos, pos, p.type};
        open = true;
        break;
      case 'I':
        if (open && cur.type == p.type) {
          cur.end = pos;
        } else {
          close();
          cur = Span{pos, pos, p.type};
          open = true;
        }
        break;
      case 'E':
        if (open && cur.type == p.type) {
          cur.end = pos;
          close();
        } else {
          close();
          spans.push_back(Span{pos, pos, p.type});
        }
        break;
      case 'S':
        close();
        spans.push_back(Span{pos, pos, p.type});
        break;
    }
  }
  close();
  return spans;
}

std::vector<std::string> from_spans(const std::vector<Span>& spans_in, int length,
                                    SchemeKind scheme) {
  std::vector<Span> spans = spans_in;
  std::sort(spans.begin(), spans.end());
  std::vector<std::string> tags(static_cast<std::size_t>(std::max(length, 0)), "O");
  int prev_end = -1;
  std::string prev_type;
  for (const Span& s : spans) {
    if (s.start < 0 || s.end < s.start || s.end >= length || s.type.empty()) {
      throw DataError("span (" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                      ", " + s.type + ") invalid for length " + std::to_string(length));
    }
    if (s.start <= prev_end) {
      throw DataError("overlapping spans at token " + std::to_string(s.start));
    }
    for (int k = s.start; k <= s.end; ++k) {
      char prefix = 'I';
      switch (scheme) {
        case SchemeKind::kBioes:
          prefix = s.start == s.end ? 'S' : k == s.start ? 'B' : k == s.end ? 'E' : 'I';
          break;
        case SchemeKind::kBio:
          prefix = k == s.start ? 'B' : 'I';
          break;
        case SchemeKind::kIob1:
          prefix = (k == s.start && prev_end == s.start - 1 && prev_type == s.type) ? 'B' : 'I';
          break;
      }
      tags[k] = std::string(1, prefix) + "-" + s.type;
    }
    prev_end = s.end;
    prev_type = s.type;
  }
  return tags;
}

std::vector<std::string> convert_scheme(const std::vector<std::string>& tags, SchemeKind from,
                                        SchemeKind to) {
  return from_spans(to_spans(tags, from), static_cast<int>(tags.size()), to);
}

std::vector<std::string> canonicalize(const std::vector<std::string>& tags, SchemeKind scheme) {
  return convert_scheme(tags, scheme, scheme);
}

bool is_valid_sequence(const std::vector<std::string>& tags, SchemeKind scheme) {
  if (tags.empty()) return false;
  std::vector<TagParts> parts;
  parts.reserve(tags.size());
  for (const auto& t : tags) {
    TagParts p = split_tag(t);
    if (!prefix_allowed(p.prefix, scheme)) return false;
    parts.push_back(std::move(p));
  }
  if (!legal_parts(nullptr, &parts.front(), scheme)) return false;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (!legal_parts(&parts[i - 1], &parts[i], scheme)) return false;
  }
  return legal_parts(&parts.back(), nullptr, scheme);
}

}  // namespace lmtag
