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


#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "lmtag/crf.h"
#include "lmtag/errors.h"
#include "lmtag/scheme.h"

using namespace lmtag;

namespace {

const std::vector<std::string> kTypes{"X", "Y"};

// One character per tag; lowercase for type Y.
char code(const std::string& tag) {
  if (tag == "O") return 'O';
  const char p = tag[0];
  return tag.substr(2) == "X" ? p : static_cast<char>(p - 'A' + 'a');
}

// Well-formed sequences written as regular languages over the codes.
const std::regex& grammar(SchemeKind kind) {
  static const std::regex bioes("(O|S|s|BI*E|bi*e)*");
  static const std::regex bio("(O|BI*|bi*)*");
  static const std::regex iob1("(O|I+(BI*)*|i+(bi*)*)*");
  switch (kind) {
    case SchemeKind::kBioes: return bioes;
    case SchemeKind::kBio: return bio;
    default: return iob1;
  }
}

bool oracle_valid(const std::vector<std::string>& tags, SchemeKind kind) {
  std::string s;
  for (const auto& t : tags) s += code(t);
  return !tags.empty() && std::regex_match(s, grammar(kind));
}

std::vector<std::vector<std::string>> all_sequences(const std::vector<std::string>& inventory,
                                                    int n) {
  std::vector<std::vector<std::string>> out{{}};
  for (int k = 0; k < n; ++k) {
    std::vector<std::vector<std::string>> next;
    for (const auto& seq : out)
      for (const auto& t : inventory) {
        next.push_back(seq);
        next.back().push_back(t);
      }
    out = std::move(next);
  }
  return out;
}

const SchemeKind kKinds[] = {SchemeKind::kIob1, SchemeKind::kBio, SchemeKind::kBioes};

}  // namespace

TEST_SUITE("scheme") {

TEST_CASE("label inventory") {
  LabelScheme s(SchemeKind::kBioes, {"Y", "X", "X"});
  CHECK(s.types() == std::vector<std::string>{"X", "Y"});
  CHECK(s.size() == 9);
  CHECK(s.tag(0) == "O");
  CHECK(s.index("S-Y") >= 0);
  CHECK(s.index("S-Z") == -1);
  CHECK(LabelScheme(SchemeKind::kBio, {"X"}).size() == 3);
  CHECK(parse_scheme_kind("IOBES") == SchemeKind::kBioes);
  CHECK(parse_scheme_kind("iob2") == SchemeKind::kBio);
  CHECK_THROWS_AS(parse_scheme_kind("bilou"), UsageError);
}

TEST_CASE("validity matches the regular grammar exhaustively") {
  for (SchemeKind kind : kKinds) {
    CAPTURE(scheme_name(kind));
    LabelScheme scheme(kind, kTypes);
    for (int n = 1; n <= 5; ++n)
      for (const auto& seq : all_sequences(scheme.tags(), n))
        CHECK(is_valid_sequence(seq, kind) == oracle_valid(seq, kind));
  }
}

TEST_CASE("valid bioes sequences are counted by the span recurrence") {
  // f(n) = f(n-1) + types * sum_{len=1..n} f(n-len)
  std::vector<long> f{1};
  for (int n = 1; n <= 5; ++n) {
    long v = f[n - 1];
    for (int len = 1; len <= n; ++len) v += 2 * f[n - len];
    f.push_back(v);
  }
  LabelScheme scheme(SchemeKind::kBioes, kTypes);
  for (int n = 1; n <= 5; ++n) {
    long count = 0;
    for (const auto& seq : all_sequences(scheme.tags(), n))
      count += is_valid_sequence(seq, SchemeKind::kBioes);
    CHECK(count == f[n]);
  }
}

TEST_CASE("span round trips and conversions over all valid sequences") {
  LabelScheme bioes(SchemeKind::kBioes, kTypes);
  for (int n = 1; n <= 5; ++n) {
    for (const auto& seq : all_sequences(bioes.tags(), n)) {
      if (!oracle_valid(seq, SchemeKind::kBioes)) continue;
      const auto spans = to_spans(seq, SchemeKind::kBioes);
      CHECK(from_spans(spans, n, SchemeKind::kBioes) == seq);
      for (SchemeKind kind : kKinds) {
        CAPTURE(scheme_name(kind));
        const auto converted = convert_scheme(seq, SchemeKind::kBioes, kind);
        CHECK(oracle_valid(converted, kind));
        CHECK(to_spans(converted, kind) == spans);
        CHECK(convert_scheme(converted, kind, SchemeKind::kBioes) == seq);
      }
    }
  }
}

TEST_CASE("canonicalize repairs every sequence into a valid one") {
  for (SchemeKind kind : kKinds) {
    LabelScheme scheme(kind, kTypes);
    for (int n = 1; n <= 4; ++n) {
      for (const auto& seq : all_sequences(scheme.tags(), n)) {
        const auto canon = canonicalize(seq, kind);
        CHECK(oracle_valid(canon, kind));
        CHECK(canonicalize(canon, kind) == canon);
        if (oracle_valid(seq, kind)) CHECK(canon == seq);
      }
    }
  }
}

TEST_CASE("span decoding of lenient input") {
  using V = std::vector<std::string>;
  CHECK(to_spans(V{"I-X", "I-X", "O"}, SchemeKind::kBio) == std::vector<Span>{{0, 1, "X"}});
  CHECK(to_spans(V{"I-X", "B-X"}, SchemeKind::kIob1) ==
        std::vector<Span>{{0, 0, "X"}, {1, 1, "X"}});
  CHECK(to_spans(V{"B-X", "I-Y"}, SchemeKind::kBio) ==
        std::vector<Span>{{0, 0, "X"}, {1, 1, "Y"}});
  CHECK_THROWS_AS(to_spans(V{"S-X"}, SchemeKind::kBio), DataError);
  CHECK_THROWS_AS(to_spans(V{"Q-X"}, SchemeKind::kBioes), DataError);
  CHECK_THROWS_AS(from_spans({{0, 2, "X"}}, 2, SchemeKind::kBio), DataError);
  CHECK_THROWS_AS(from_spans({{0, 1, "X"}, {1, 1, "Y"}}, 3, SchemeKind::kBio), DataError);
}

TEST_CASE("constraint mask forbids exactly the illegal bigrams") {
  for (SchemeKind kind : kKinds) {
    CAPTURE(scheme_name(kind));
    LabelScheme scheme(kind, kTypes);
    const int L = scheme.size();
    // Bigrams witnessed by some valid sequence; -1 marks a boundary.
    std::set<std::pair<int, int>> seen;
    for (int n = 1; n <= 4; ++n) {
      for (const auto& seq : all_sequences(scheme.tags(), n)) {
        if (!oracle_valid(seq, kind)) continue;
        int prev = -1;
        for (const auto& t : seq) {
          seen.insert({prev, scheme.index(t)});
          prev = scheme.index(t);
        }
        seen.insert({prev, -1});
      }
    }
    const Tensor mask = build_constraint_mask(scheme);
    for (int a = 0; a < L + 2; ++a) {
      for (int b = 0; b < L + 2; ++b) {
        bool expect;
        if (a == crf_stop(L) || b == crf_start(L)) {
          expect = false;
        } else {
          expect = seen.count({a == crf_start(L) ? -1 : a, b == crf_stop(L) ? -1 : b}) > 0;
        }
        CAPTURE(a);
        CAPTURE(b);
        CHECK((mask.at(a, b) == 0.0) == expect);
        if (!expect) CHECK(std::isinf(mask.at(a, b)));
      }
    }
  }
}

TEST_CASE("collect types") {
  CHECK(collect_types({{"B-ORG", "O"}, {"S-PER", "I-ORG"}}) ==
        std::vector<std::string>{"ORG", "PER"});
}

}  // TEST_SUITE
