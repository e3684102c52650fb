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

#include "lmtag/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "lmtag/errors.h"

namespace lmtag {

Prf prf(const SpanCounts& c) {
  Prf s;
  if (c.predicted > 0) s.precision = 100.0 * c.correct / c.predicted;
  if (c.gold > 0) s.recall = 100.0 * c.correct / c.gold;
  if (s.precision + s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

Prf EvalCounts::type_scores(const std::string& type) const {
  auto it = per_type.find(type);
  return it == per_type.end() ? Prf{} : prf(it->second);
}

void EvalCounts::add(const std::vector<Span>& gold, const std::vector<Span>& predicted) {
  std::set<Span> gold_set(gold.begin(), gold.end());
  for (const Span& s : gold) {
    ++per_type[s.type].gold;
    ++overall.gold;
  }
  for (const Span& s : predicted) {
    ++per_type[s.type].predicted;
    ++overall.predicted;
    if (gold_set.count(s)) {
      ++per_type[s.type].correct;
      ++overall.correct;
    }
  }
  ++sentences;
  if (gold == predicted) ++exact_sentences;
}

void EvalCounts::merge(const EvalCounts& other) {
  for (const auto& [type, c] : other.per_type) {
    auto& mine = per_type[type];
    mine.gold += c.gold;
    mine.predicted += c.predicted;
    mine.correct += c.correct;
  }
  overall.gold += other.overall.gold;
  overall.predicted += other.overall.predicted;
  overall.correct += other.overall.correct;
  sentences += other.sentences;
  tokens += other.tokens;
  exact_sentences += other.exact_sentences;
}

EvalCounts score(const std::vector<Sentence>& gold,
                 const std::vector<std::vector<std::string>>& predicted, SchemeKind scheme) {
  if (gold.size() != predicted.size()) {
    throw DataError("gold has " + std::to_string(gold.size()) + " sentences, predictions " +
                    std::to_string(predicted.size()));
  }
  EvalCounts counts;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].tags.size() != gold[i].size() || predicted[i].size() != gold[i].size()) {
      throw DataError("sentence " + std::to_string(i) + ": gold has " +
                      std::to_string(gold[i].tags.size()) + " tags, prediction " +
                      std::to_string(predicted[i].size()));
    }
    auto g = to_spans(gold[i].tags, scheme);
    auto p = to_spans(predicted[i], scheme);
    std::sort(g.begin(), g.end());
    std::sort(p.begin(), p.end());
    counts.add(g, p);
    counts.tokens += static_cast<long>(gold[i].size());
  }
  return counts;
}

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Display width in code points.
std::size_t width_of(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad(const std::string& s, std::size_t width, bool left = true) {
  const std::size_t w = width_of(s);
  if (w >= width) return s;
  return left ? s + std::string(width - w, ' ') : std::string(width - w, ' ') + s;
}

std::string render(const std::vector<std::vector<std::string>>& table) {
  std::vector<std::size_t> widths;
  for (const auto& row : table) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], width_of(row[c]));
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < table.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < table[r].size(); ++c) {
      if (c) line += "  ";
      line += pad(table[r][c], widths[c], c == 0);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

std::string format_counts(const EvalCounts& counts) {
  std::vector<std::vector<std::string>> t{
      {"type", "gold", "pred", "correct", "P", "R", "F1"}};
  auto add = [&](const std::string& name, const SpanCounts& c) {
    const Prf s = prf(c);
    t.push_back({name, std::to_string(c.gold), std::to_string(c.predicted),
                 std::to_string(c.correct), fixed2(s.precision), fixed2(s.recall),
                 fixed2(s.f1)});
  };
  for (const auto& [type, c] : counts.per_type) add(type, c);
  add("overall", counts.overall);
  return render(t);
}

std::string report(const std::vector<ReportRow>& rows,
                   const std::optional<std::string>& baseline) {
  const ReportRow* base = nullptr;
  if (baseline && rows.size() > 1) {
    for (const auto& r : rows) {
      if (r.name == *baseline) base = &r;
    }
  }
  std::vector<std::vector<std::string>> t;
  std::vector<std::string> header{"config", "F1 ± std", "runs"};
  if (base) header.push_back("Δ");
  t.push_back(header);
  for (const auto& r : rows) {
    std::string f1 = fixed2(r.mean);
    if (!std::isnan(r.stddev)) f1 += " ± " + fixed2(r.stddev);
    std::vector<std::string> line{r.name, f1, std::to_string(r.runs)};
    if (base) {
      if (&r == base) {
        line.push_back("");
      } else {
        const double d = r.mean - base->mean;
        line.push_back((d >= 0 ? "+" : "") + fixed2(d));
      }
    }
    t.push_back(line);
  }
  return render(t);
}

}  // namespace lmtag
