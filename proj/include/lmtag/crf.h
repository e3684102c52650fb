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

#ifndef LMTAG_CRF_H_
#define LMTAG_CRF_H_

#include <span>
#include <string>
#include <vector>

#include "lmtag/graph.h"
#include "lmtag/layers.h"
#include "lmtag/scheme.h"

namespace lmtag {

// Linear-chain CRF over L labels.
//
// Emissions are [N x L]. Transitions are [(L + 2) x (L + 2)], row = previous
// label, column = next label, with two synthetic states: index L is START and
// L + 1 is STOP. A path y_1..y_N scores
//
//   T[START, y_1] + sum_k E[k, y_k] + sum_k T[y_{k-1}, y_k] + T[y_N, STOP].
//
// All lattice arithmetic is in log space with max-shifted log-sum-exp, so -inf
// entries act as hard constraints.

inline int crf_start(int num_labels) { return num_labels; }
inline int crf_stop(int num_labels) { return num_labels + 1; }

double sequence_score(const Tensor& emissions, const Tensor& transitions,
                      std::span<const int> tags);
double log_partition(const Tensor& emissions, const Tensor& transitions);
// P(y_k = l | x), [N x L]; rows sum to 1.
Tensor marginals(const Tensor& emissions, const Tensor& transitions);

struct ViterbiResult {
  std::vector<int> tags;
  double score = 0.0;
};
// Best path; ties go to the lowest label index at every backpointer and at
// the final state. Throws NumericError when every path scores -inf.
ViterbiResult viterbi(const Tensor& emissions, const Tensor& transitions);

// -inf on every transition the scheme forbids (including START -> STOP, any
// move into START and any move out of STOP), 0 elsewhere.
Tensor build_constraint_mask(const LabelScheme& scheme);

// Differentiable counterparts built from graph primitives.
Var crf_sequence_score(Var emissions, Var transitions, std::span<const int> tags);
Var crf_log_partition(Var emissions, Var transitions);
// log_partition - sequence_score(gold).
Var crf_nll(Var emissions, Var transitions, std::span<const int> gold);

// CRF head: emission projection plus trained transition table. With
// constraints on, the scheme mask is added to the trained table; the mask
// itself is a constant and never receives gradient.
class CrfLayer {
 public:
  CrfLayer() = default;
  CrfLayer(ParameterSet& params, const std::string& prefix, int input_dim,
           const LabelScheme& scheme, bool constrained, RngStream& rng);

  int num_labels() const { return num_labels_; }
  bool constrained() const { return constrained_; }

  Var emissions(Graph& g, Var hidden) const;
  Var transitions(Graph& g) const;
  // Effective transition table (parameter plus mask).
  Tensor transition_values() const;

  // Throws DataError when gold uses a masked transition.
  Var nll(Graph& g, Var emissions, std::span<const int> gold) const;
  ViterbiResult decode(const Tensor& emissions) const;

  static std::size_t parameter_count(int input_dim, int num_labels) {
    return Dense::parameter_count(input_dim, num_labels) +
           static_cast<std::size_t>(num_labels + 2) * (num_labels + 2);
  }

 private:
  Dense projection_;
  Parameter* transitions_ = nullptr;
  Tensor mask_;
  int num_labels_ = 0;
  bool constrained_ = false;
};

}  // namespace lmtag

#endif  // LMTAG_CRF_H_
