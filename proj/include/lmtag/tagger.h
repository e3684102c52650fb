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

#ifndef LMTAG_TAGGER_H_
#define LMTAG_TAGGER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lmtag/config.h"
#include "lmtag/corpus.h"
#include "lmtag/crf.h"
#include "lmtag/graph.h"
#include "lmtag/layers.h"
#include "lmtag/persist.h"
#include "lmtag/scheme.h"

namespace lmtag {

// Where LM embeddings join the tagger.
//   none           baseline
//   input_first    appended to the token representation x_k
//   output_first   appended to the first bi-RNN layer's output
//   output_second  appended to the second bi-RNN layer's output
//   lm_only        no char/word/RNN path: CRF projection of h^LM only
enum class InsertionMode { kNone, kInputFirst, kOutputFirst, kOutputSecond, kLmOnly };

std::string insertion_mode_name(InsertionMode mode);
InsertionMode parse_insertion_mode(std::string_view name);

struct TaggerConfig {
  bool use_chars = true;
  CharEncoderConfig chars;
  // Character encoder input: raw token (true) or normalized token.
  bool chars_from_raw = true;
  int word_dim = 50;
  CellKind rnn = CellKind::kGru;
  int h1 = 300;
  int h2 = 300;
  // Dropout on the input of each bi-RNN layer and on the top RNN output.
  double rnn_input_dropout = 0.25;
  double output_dropout = 0.0;
  InsertionMode mode = InsertionMode::kNone;
  int lm_dim = 0;
  bool constrained = true;

  int char_dim_out() const { return use_chars ? chars.output_dim() : 0; }
  int token_dim() const { return char_dim_out() + word_dim; }
  int lm_at(InsertionMode m) const { return mode == m ? lm_dim : 0; }
  int layer1_input_dim() const { return token_dim() + lm_at(InsertionMode::kInputFirst); }
  int layer2_input_dim() const { return 2 * h1 + lm_at(InsertionMode::kOutputFirst); }
  int crf_input_dim() const {
    return mode == InsertionMode::kLmOnly ? lm_dim
                                          : 2 * h2 + lm_at(InsertionMode::kOutputSecond);
  }
  // Throws UsageError for inconsistent settings (mode none with lm_dim > 0,
  // lm_only without LM embeddings, non-positive sizes).
  void validate() const;

  void write(IniDocument& doc, const std::string& section) const;
  static TaggerConfig read(const IniDocument& doc, const std::string& section);
};

// Named hyperparameter sets:
//   conll2003-ner    GRU, H = 300, char bi-GRU with 80 hidden units over
//                    25-dim chars, 50-dim words, dropout 0.25 on RNN inputs
//   conll2000-chunk  LSTM, H = 200, char CNN with 30 filters of width 3 over
//                    30-dim chars, 50-dim words, dropout 0.5 on char
//                    embeddings, RNN inputs and the top RNN output
//   desk-ner, desk-chunk
//                    the same shapes with every size divided by 5 (rounded
//                    up)
TaggerConfig tagger_preset(std::string_view name);
std::vector<std::string> tagger_preset_names();

struct TaggerSizes {
  int words = 0;
  int chars = 0;
  int labels = 0;
};

// Closed-form count of all tagger parameters.
std::size_t parameter_count(const TaggerConfig& config, const TaggerSizes& sizes);

// Integer search over h2 for the count closest to target (ties go to the
// smaller h2). Throws UsageError if target is below the count at h2 = 1.
TaggerConfig match_parameters(const TaggerConfig& base, const TaggerSizes& sizes,
                              std::size_t target);

class TaggerModel {
 public:
  TaggerModel(TaggerConfig config, Vocabulary words, Vocabulary chars, LabelScheme scheme,
              std::uint64_t seed);

  TaggerModel(TaggerModel&&) = default;
  TaggerModel& operator=(TaggerModel&&) = default;

  const TaggerConfig& config() const { return config_; }
  const Vocabulary& words() const { return words_; }
  const Vocabulary& chars() const { return chars_; }
  const LabelScheme& scheme() const { return scheme_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  std::size_t parameter_count() const { return params_.scalar_count(); }
  TaggerSizes sizes() const { return {words_.size(), chars_.size(), scheme_.size()}; }

  // Copies rows of a pre-trained table (same vocabulary order).
  void set_word_embeddings(const Tensor& table);

  // Emission scores [N x L]. lm is [N x lm_dim] and required when the mode
  // uses LM embeddings with lm_dim > 0. Dropout applies only with a stream.
  Var forward(Graph& g, const Sentence& sentence, Var lm, RngStream* dropout_rng) const;
  Var forward(Graph& g, const Sentence& sentence, const Tensor* lm,
              RngStream* dropout_rng) const;

  // CRF negative log-likelihood of the sentence's gold tags.
  Var loss(Graph& g, const Sentence& sentence, const Tensor* lm, RngStream* dropout_rng) const;
  Var loss(Graph& g, const Sentence& sentence, Var lm, RngStream* dropout_rng) const;

  std::vector<std::string> predict(const Sentence& sentence, const Tensor* lm) const;

  std::vector<int> gold_indices(const Sentence& sentence) const;
  bool uses_lm() const;

  Container to_container() const;
  static TaggerModel from_container(const Container& c);
  void save(const std::string& path) const;
  static TaggerModel load(const std::string& path);

 private:
  TaggerConfig config_;
  Vocabulary words_;
  Vocabulary chars_;
  LabelScheme scheme_;
  std::uint64_t seed_ = 0;
  ParameterSet params_;
  CharEncoder char_encoder_;
  EmbeddingTable word_table_;
  BiLayer layer1_;
  BiLayer layer2_;
  CrfLayer crf_;
};

}  // namespace lmtag

#endif  // LMTAG_TAGGER_H_
