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

#ifndef LMTAG_SYNTH_H_
#define LMTAG_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "lmtag/corpus.h"
#include "lmtag/rng.h"

namespace lmtag {

// First-order Markov chain over symbols with an absorbing end state.
// start[j] = P(first token = j); next[i][j] = P(i -> j) for j < n and
// next[i][n] = P(i -> end).
struct MarkovChain {
  std::vector<std::string> symbols;
  std::vector<double> start;
  std::vector<std::vector<double>> next;

  int size() const { return static_cast<int>(symbols.size()); }
};

// Random sparse chain: every state moves to `fanout` distinct successors
// (weights uniform on (0.5, 1.5), then normalized) and ends with end_prob.
MarkovChain make_markov_chain(int vocab, int fanout, double end_prob, RngStream& rng);

std::vector<std::vector<std::string>> sample_markov(const MarkovChain& chain, int count,
                                                    RngStream& rng);

struct ChainEntropy {
  double nats_per_sentence = 0.0;
  double predictions_per_sentence = 0.0;  // expected tokens + 1 (end)
  double rate = 0.0;                      // nats per prediction
  double perplexity() const;
};

// Expected visits v = start (I - Q)^-1 (Q the token-to-token block) give
//   H_sentence = H(start) + sum_i v_i H(next[i])
//   predictions = 1 + sum_i v_i
// so a model that scores N + 1 predictions per sentence should reach
// exp(H_sentence / predictions).
ChainEntropy chain_entropy(const MarkovChain& chain);

// Two-grammar tagging task.
//
// Each sentence comes from grammar A or B. Both grammars share function words
// and a list of capitalized names; each grammar has its own content words,
// drawn from the same spelling distribution. Every sentence holds one name
// mention (one or two tokens) tagged PER under grammar A and LOC under
// grammar B, so only the grammar identity, carried by the sentence's content
// words, decides the type. Content words are capitalized with misc_prob and
// then tagged S-MISC. Tags are BIOES.
struct SynthTaskConfig {
  int content_words = 400;  // per grammar
  int min_content = 2;      // content words per sentence
  int max_content = 3;
  int min_function = 3;
  int max_function = 6;
  double two_token_entity = 0.3;
  double misc_prob = 0.1;
};

struct SynthTask {
  std::vector<Sentence> train;
  std::vector<Sentence> dev;
  std::vector<Sentence> test;
  std::vector<std::vector<std::string>> unlabeled;
};

SynthTask make_synth_task(const SynthTaskConfig& config, int train, int dev, int test,
                          int unlabeled, std::uint64_t seed);

}  // namespace lmtag

#endif  // LMTAG_SYNTH_H_
