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


#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "lmtag/errors.h"
#include "lmtag/evaluation.h"

using namespace lmtag;

namespace {

using Tags = std::vector<std::string>;

Sentence tagged(const Tags& tags) {
  std::vector<std::string> toks(tags.size(), "w");
  return make_sentence(toks, tags);
}

// Random well-formed BIOES sequence built from random spans.
Tags random_tags(RngStream& rng, int n) {
  static const char* kTypes[] = {"PER", "LOC", "ORG"};
  std::vector<Span> spans;
  int k = 0;
  while (k < n) {
    if (rng.uniform() < 0.5) {
      ++k;
      continue;
    }
    const int len = 1 + static_cast<int>(rng.below(std::min(3, n - k)));
    spans.push_back({k, k + len - 1, kTypes[rng.below(3)]});
    k += len;
  }
  return from_spans(spans, n, SchemeKind::kBioes);
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("hand counted examples") {
  std::vector<Sentence> gold{tagged({"S-PER", "O", "B-LOC", "E-LOC"})};
  auto perfect = score(gold, {gold[0].tags}, SchemeKind::kBioes).overall_scores();
  CHECK(perfect.precision == 100.0);
  CHECK(perfect.recall == 100.0);
  CHECK(perfect.f1 == 100.0);

  auto half = score(gold, {{"S-PER", "S-ORG", "O", "O"}}, SchemeKind::kBioes);
  CHECK(half.overall.gold == 2);
  CHECK(half.overall.predicted == 2);
  CHECK(half.overall.correct == 1);
  auto s = half.overall_scores();
  CHECK(s.precision == 50.0);
  CHECK(s.recall == 50.0);
  CHECK(s.f1 == 50.0);

  auto none = score(gold, {{"O", "O", "O", "O"}}, SchemeKind::kBioes).overall_scores();
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
  CHECK(prf(SpanCounts{}).f1 == 0.0);
}

TEST_CASE("length mismatch names the sentence") {
  std::vector<Sentence> gold{tagged({"O"}), tagged({"O", "O"})};
  try {
    score(gold, {{"O"}, {"O"}}, SchemeKind::kBioes);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("sentence 1") != std::string::npos);
  }
  CHECK_THROWS_AS(score(gold, {{"O"}}, SchemeKind::kBioes), DataError);
}

TEST_CASE("counts match a set-based oracle and pool correctly") {
  RngStream rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Sentence> gold;
    std::vector<Tags> pred;
    long g = 0, p = 0, c = 0;
    for (int i = 0; i < 6; ++i) {
      const int n = 1 + static_cast<int>(rng.below(8));
      gold.push_back(tagged(random_tags(rng, n)));
      pred.push_back(random_tags(rng, n));
      auto gs = to_spans(gold.back().tags, SchemeKind::kBioes);
      auto ps = to_spans(pred.back(), SchemeKind::kBioes);
      std::set<Span> gset(gs.begin(), gs.end());
      g += gs.size();
      p += ps.size();
      for (const auto& sp : ps) c += gset.count(sp);
    }
    EvalCounts counts = score(gold, pred, SchemeKind::kBioes);
    CHECK(counts.overall.gold == g);
    CHECK(counts.overall.predicted == p);
    CHECK(counts.overall.correct == c);
    SpanCounts pooled;
    for (const auto& [type, tc] : counts.per_type) {
      CHECK(tc.correct <= std::min(tc.gold, tc.predicted));
      pooled.gold += tc.gold;
      pooled.predicted += tc.predicted;
      pooled.correct += tc.correct;
    }
    CHECK(pooled.gold == g);
    CHECK(pooled.correct == c);
    const double pr = p ? 100.0 * c / p : 0.0, rc = g ? 100.0 * c / g : 0.0;
    const double f1 = pr + rc > 0 ? 2 * pr * rc / (pr + rc) : 0.0;
    CHECK(std::abs(counts.overall_scores().f1 - f1) <= 1e-12);

    // order invariance
    std::vector<Sentence> rg(gold.rbegin(), gold.rend());
    std::vector<Tags> rp(pred.rbegin(), pred.rend());
    CHECK(score(rg, rp, SchemeKind::kBioes).overall_scores().f1 == counts.overall_scores().f1);

    // canonical round trip leaves the score unchanged
    std::vector<Tags> canon;
    for (const auto& t : pred) canon.push_back(from_spans(to_spans(t, SchemeKind::kBioes),
                                                          static_cast<int>(t.size()),
                                                          SchemeKind::kBioes));
    CHECK(score(gold, canon, SchemeKind::kBioes).overall.correct == c);
  }
}

TEST_CASE("merge and exact sentences") {
  std::vector<Sentence> gold{tagged({"S-PER", "O"}), tagged({"B-LOC", "E-LOC"})};
  EvalCounts a = score({gold[0]}, {{"S-PER", "O"}}, SchemeKind::kBioes);
  EvalCounts b = score({gold[1]}, {{"S-LOC", "O"}}, SchemeKind::kBioes);
  a.merge(b);
  EvalCounts both = score(gold, {{"S-PER", "O"}, {"S-LOC", "O"}}, SchemeKind::kBioes);
  CHECK(a.overall.correct == both.overall.correct);
  CHECK(a.overall.predicted == both.overall.predicted);
  CHECK(a.sentences == 2);
  CHECK(both.exact_sentences == 1);
  CHECK(both.tokens == 4);
  CHECK(both.type_scores("PER").f1 == 100.0);
  CHECK(both.type_scores("LOC").f1 == 0.0);
  const std::string table = format_counts(both);
  CHECK(table.find("overall") != std::string::npos);
  CHECK(table.find("PER") != std::string::npos);
}

TEST_CASE("report") {
  const std::string single = report({{"TagLM", 91.93, 0.19, 10}}, "TagLM");
  CHECK(single.find("Δ") == std::string::npos);
  CHECK(single.find("91.93 ± 0.19") != std::string::npos);

  const std::string two =
      report({{"no LM", 90.87, 0.13, 10}, {"TagLM", 91.93, 0.19, 10}}, std::string("no LM"));
  CHECK(two.find("Δ") != std::string::npos);
  CHECK(two.find("+1.06") != std::string::npos);

  const std::string empty = report({});
  std::istringstream lines(empty);
  std::string first, rest;
  std::getline(lines, first);
  CHECK(first.find("F1 ± std") != std::string::npos);
  while (std::getline(lines, rest)) CHECK(rest.find_first_not_of("- ") == std::string::npos);

  const std::string bare = report({{"one", 88.0, std::nan(""), 1}});
  CHECK(bare.find("88.00") != std::string::npos);
  CHECK(bare.find("±", bare.find("88.00")) == std::string::npos);
}

TEST_CASE("report columns align by code points") {
  const std::string t = report({{"ä", 1, 0.5, 2}, {"abc", 10, 0.25, 3}}, std::string("abc"));
  std::istringstream lines(t);
  std::string line;
  std::vector<std::size_t> widths;
  auto cps = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
  };
  while (std::getline(lines, line)) widths.push_back(cps(line));
  for (std::size_t w : widths) CHECK(w <= widths.front() + 2);
}

}  // TEST_SUITE
