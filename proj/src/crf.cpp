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

#include "lmtag/crf.h"

#include <cmath>
#include <limits>

#include "lmtag/errors.h"

namespace lmtag {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_lattice(const Tensor& emissions, const Tensor& transitions) {
  const std::size_t L = emissions.cols();
  if (emissions.shape().rank() != 2 || emissions.rows() == 0 || L == 0) {
    throw ShapeError("crf: emissions must be [N x L] with N >= 1, got " +
                     emissions.shape().str());
  }
  if (transitions.rows() != L + 2 || transitions.cols() != L + 2) {
    throw ShapeError("crf: transitions " + transitions.shape().str() + " do not match " +
                     std::to_string(L) + " labels plus START/STOP");
  }
}

double lse(const std::vector<double>& v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// alpha[k][j]: log-sum of prefix scores ending at label j, emission included.
std::vector<std::vector<double>> forward_table(const Tensor& em, const Tensor& tr) {
  const std::size_t n = em.rows(), L = em.cols();
  const std::size_t start = L;
  std::vector<std::vector<double>> alpha(n, std::vector<double>(L));
  for (std::size_t j = 0; j < L; ++j) alpha[0][j] = tr.at(start, j) + em.at(0, j);
  std::vector<double> terms(L);
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t j = 0; j < L; ++j) {
      for (std::size_t i = 0; i < L; ++i) terms[i] = alpha[k - 1][i] + tr.at(i, j);
      alpha[k][j] = lse(terms) + em.at(k, j);
    }
  }
  return alpha;
}

// beta[k][i]: log-sum of suffix scores after position k given label i there.
std::vector<std::vector<double>> backward_table(const Tensor& em, const Tensor& tr) {
  const std::size_t n = em.rows(), L = em.cols();
  const std::size_t stop = L + 1;
  std::vector<std::vector<double>> beta(n, std::vector<double>(L));
  for (std::size_t i = 0; i < L; ++i) beta[n - 1][i] = tr.at(i, stop);
  std::vector<double> terms(L);
  for (std::size_t k = n - 1; k-- > 0;) {
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < L; ++j) {
        terms[j] = tr.at(i, j) + em.at(k + 1, j) + beta[k + 1][j];
      }
      beta[k][i] = lse(terms);
    }
  }
  return beta;
}

}  // namespace

double sequence_score(const Tensor& emissions, const Tensor& transitions,
                      std::span<const int> tags) {
  check_lattice(emissions, transitions);
  const int L = static_cast<int>(emissions.cols());
  if (tags.size() != emissions.rows()) {
    throw ShapeError("sequence_score: " + std::to_string(tags.size()) + " tags for " +
                     std::to_string(emissions.rows()) + " positions");
  }
  double s = 0.0;
  int prev = crf_start(L);
  for (std::size_t k = 0; k < tags.size(); ++k) {
    if (tags[k] < 0 || tags[k] >= L) {
      throw ShapeError("sequence_score: tag index " + std::to_string(tags[k]) +
                       " out of range at position " + std::to_string(k));
    }
    s += transitions.at(prev, tags[k]) + emissions.at(k, tags[k]);
    prev = tags[k];
  }
  return s + transitions.at(prev, crf_stop(L));
}

double log_partition(const Tensor& emissions, const Tensor& transitions) {
  check_lattice(emissions, transitions);
  const auto alpha = forward_table(emissions, transitions);
  const std::size_t L = emissions.cols();
  std::vector<double> terms(L);
  for (std::size_t j = 0; j < L; ++j) terms[j] = alpha.back()[j] + transitions.at(j, L + 1);
  return lse(terms);
}

Tensor marginals(const Tensor& emissions, const Tensor& transitions) {
  check_lattice(emissions, transitions);
  const auto alpha = forward_table(emissions, transitions);
  const auto beta = backward_table(emissions, transitions);
  const std::size_t n = emissions.rows(), L = emissions.cols();
  std::vector<double> terms(L);
  for (std::size_t j = 0; j < L; ++j) terms[j] = alpha.back()[j] + transitions.at(j, L + 1);
  const double z = lse(terms);
  Tensor out = Tensor::matrix(n, L);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < L; ++j) out.at(k, j) = std::exp(alpha[k][j] + beta[k][j] - z);
  }
  return out;
}

ViterbiResult viterbi(const Tensor& emissions, const Tensor& transitions) {
  check_lattice(emissions, transitions);
  const std::size_t n = emissions.rows(), L = emissions.cols();
  std::vector<double> score(L), next(L);
  std::vector<std::vector<int>> back(n, std::vector<int>(L, 0));
  for (std::size_t j = 0; j < L; ++j) score[j] = transitions.at(L, j) + emissions.at(0, j);
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t j = 0; j < L; ++j) {
      double best = kNegInf;
      int best_i = 0;
      for (std::size_t i = 0; i < L; ++i) {
        const double s = score[i] + transitions.at(i, j);
        if (s > best) {
          best = s;
          best_i = static_cast<int>(i);
        }
      }
      next[j] = best + emissions.at(k, j);
      back[k][j] = best_i;
    }
    std::swap(score, next);
  }
  double best = kNegInf;
  int last = 0;
  for (std::size_t j = 0; j < L; ++j) {
    const double s = score[j] + transitions.at(j, L + 1);
    if (s > best) {
      best = s;
      last = static_cast<int>(j);
    }
  }
  if (best == kNegInf) throw NumericError("viterbi: every tag path has score -inf");
  ViterbiResult r;
  r.score = best;
  r.tags.assign(n, 0);
  r.tags[n - 1] = last;
  for (std::size_t k = n - 1; k > 0; --k) r.tags[k - 1] = back[k][r.tags[k]];
  return r;
}

Tensor build_constraint_mask(const LabelScheme& scheme) {
  const int L = scheme.size();
  const int start = crf_start(L), stop = crf_stop(L);
  Tensor mask = Tensor::matrix(L + 2, L + 2, kNegInf);
  for (int a = 0; a < L + 2; ++a) {
    if (a == stop) continue;
    for (int b = 0; b < L + 2; ++b) {
      if (b == start) continue;
      const int from = a == start ? -1 : a;
      const int to = b == stop ? -1 : b;
      if (scheme.legal(from, to)) mask.at(a, b) = 0.0;
    }
  }
  return mask;
}

Var crf_sequence_score(Var emissions, Var transitions, std::span<const int> tags) {
  const int L = static_cast<int>(emissions.cols());
  if (tags.size() != emissions.rows()) {
    throw ShapeError("crf_sequence_score: " + std::to_string(tags.size()) + " tags for " +
                     std::to_string(emissions.rows()) + " positions");
  }
  std::vector<std::pair<std::size_t, std::size_t>> em_cells, tr_cells;
  int prev = crf_start(L);
  for (std::size_t k = 0; k < tags.size(); ++k) {
    if (tags[k] < 0 || tags[k] >= L) {
      throw ShapeError("crf_sequence_score: tag index " + std::to_string(tags[k]) +
                       " out of range at position " + std::to_string(k));
    }
    em_cells.emplace_back(k, tags[k]);
    tr_cells.emplace_back(prev, tags[k]);
    prev = tags[k];
  }
  tr_cells.emplace_back(prev, crf_stop(L));
  return add(gather_sum(emissions, em_cells), gather_sum(transitions, tr_cells));
}

Var crf_log_partition(Var emissions, Var transitions) {
  check_lattice(emissions.value(), transitions.value());
  const std::size_t n = emissions.rows(), L = emissions.cols();
  Var label_rows = slice(transitions, 0, 0, L);
  Var block = slice(label_rows, 1, 0, L);
  Var start = slice(slice(transitions, 0, L, 1), 1, 0, L);
  Var stop = reshape(slice(label_rows, 1, L + 1, 1), 1, L);
  Var alpha = add(start, n == 1 ? emissions : slice(emissions, 0, 0, 1));
  for (std::size_t k = 1; k < n; ++k) {
    Var paths = add(block, reshape(alpha, L, 1));
    alpha = add(logsumexp(paths, 0), slice(emissions, 0, k, 1));
  }
  return logsumexp(add(alpha, stop), 1);
}

Var crf_nll(Var emissions, Var transitions, std::span<const int> gold) {
  return sub(crf_log_partition(emissions, transitions),
             crf_sequence_score(emissions, transitions, gold));
}

CrfLayer::CrfLayer(ParameterSet& params, const std::string& prefix, int input_dim,
                   const LabelScheme& scheme, bool constrained, RngStream& rng)
    : projection_(params, prefix + ".proj", input_dim, scheme.size(), rng),
      num_labels_(scheme.size()),
      constrained_(constrained) {
  const int n = num_labels_ + 2;
  transitions_ = &params.add(prefix + ".transitions", Tensor::matrix(n, n));
  mask_ = constrained ? build_constraint_mask(scheme) : Tensor::matrix(n, n);
}

Var CrfLayer::emissions(Graph& g, Var hidden) const { return projection_.apply(g, hidden); }

Var CrfLayer::transitions(Graph& g) const {
  Var t = g.param(*transitions_);
  return constrained_ ? add(t, g.constant(mask_)) : t;
}

Tensor CrfLayer::transition_values() const {
  Tensor t = transitions_->value;
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += mask_[i];
  return t;
}

Var CrfLayer::nll(Graph& g, Var emissions, std::span<const int> gold) const {
  if (constrained_) {
    int prev = crf_start(num_labels_);
    for (std::size_t k = 0; k <= gold.size(); ++k) {
      const int next = k < gold.size() ? gold[k] : crf_stop(num_labels_);
      if (next < 0 || next >= num_labels_ + 2 || mask_.at(prev, next) != 0.0) {
        throw DataError("gold tag sequence violates the transition constraints at position " +
                        std::to_string(k));
      }
      prev = next;
    }
  }
  return crf_nll(emissions, transitions(g), gold);
}

ViterbiResult CrfLayer::decode(const Tensor& emissions) const {
  return viterbi(emissions, transition_values());
}

}  // namespace lmtag
