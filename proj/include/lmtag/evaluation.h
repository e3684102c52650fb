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

#ifndef LMTAG_EVALUATION_H_
#define LMTAG_EVALUATION_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lmtag/corpus.h"
#include "lmtag/scheme.h"

namespace lmtag {

struct SpanCounts {
  long gold = 0;
  long predicted = 0;
  long correct = 0;
};

// Percentages; each is 0 when its denominator is 0.
struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Prf prf(const SpanCounts& c);

// Exact span-and-type matches, per type and pooled.
struct EvalCounts {
  std::map<std::string, SpanCounts> per_type;
  SpanCounts overall;
  long sentences = 0;
  long tokens = 0;
  long exact_sentences = 0;  // sentences whose predicted spans equal gold

  Prf overall_scores() const { return prf(overall); }
  Prf type_scores(const std::string& type) const;
  void add(const std::vector<Span>& gold, const std::vector<Span>& predicted);
  void merge(const EvalCounts& other);
};

// Gold tags come from the sentences; both sides are decoded with the same
// scheme. Throws DataError naming the sentence index on length mismatch.
EvalCounts score(const std::vector<Sentence>& gold,
                 const std::vector<std::vector<std::string>>& predicted, SchemeKind scheme);

// Per-type and overall P/R/F1 table, two decimals.
std::string format_counts(const EvalCounts& counts);

struct ReportRow {
  std::string name;
  double mean = 0.0;
  double stddev = 0.0;  // NaN prints as a bare mean
  int runs = 0;
};

// Aligned "F1 +- std" table; with a baseline name, a delta column against that
// row (blank on the baseline row itself and when only one row is present).
std::string report(const std::vector<ReportRow>& rows,
                   const std::optional<std::string>& baseline = std::nullopt);

}  // namespace lmtag

#endif  // LMTAG_EVALUATION_H_
