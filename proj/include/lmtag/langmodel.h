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

#ifndef LMTAG_LANGMODEL_H_
#define LMTAG_LANGMODEL_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lmtag/config.h"
#include "lmtag/corpus.h"
#include "lmtag/graph.h"
#include "lmtag/layers.h"
#include "lmtag/persist.h"
#include "lmtag/rng.h"

namespace lmtag {

enum class LmDirection { kForward, kBackward };
enum class LmInput { kTokenEmbedding, kCharCnn };

std::string lm_direction_name(LmDirection d);
LmDirection parse_lm_direction(std::string_view name);
std::string lm_input_name(LmInput input);
LmInput parse_lm_input(std::string_view name);

struct LmConfig {
  LmDirection direction = LmDirection::kForward;
  LmInput input = LmInput::kTokenEmbedding;
  int embed_dim = 32;
  CellKind cell = CellKind::kLstm;
  int hidden = 64;
  int projection = 0;  // LSTMP only
  int layers = 1;
  bool normalize = true;
  // kCharCnn input
  int char_dim = 16;
  int char_filters = 32;
  int char_width = 3;

  int output_dim() const { return cell == CellKind::kLstmp ? projection : hidden; }
  void write(IniDocument& doc, const std::string& section) const;
  static LmConfig read(const IniDocument& doc, const std::string& section);
};

// Recurrent language model over a closed vocabulary with a full softmax.
//
// A sentence t_1..t_N is scanned from a start sentinel: the scan input is
// (<S>, s_1, ..., s_N) and the targets are (s_1, ..., s_N, </S>), where s is
// the sentence in scan order. The forward direction scans s = t; the backward
// direction scans s = reverse(t) and maps outputs back to sentence positions.
// Every sentence therefore contributes N + 1 predictions.
class LanguageModel {
 public:
  LanguageModel(LmConfig config, Vocabulary words, Vocabulary chars, std::uint64_t seed);

  LanguageModel(LanguageModel&&) = default;
  LanguageModel& operator=(LanguageModel&&) = default;

  const LmConfig& config() const { return config_; }
  const Vocabulary& words() const { return words_; }
  const Vocabulary& chars() const { return chars_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  int vocab_size() const { return words_.size(); }
  int output_dim() const { return config_.output_dim(); }

  // Text of a token as the model sees it.
  std::string token_text(const std::string& raw) const;
  std::vector<int> token_ids(const std::vector<std::string>& raw_tokens) const;

  struct Pass {
    Tensor states;     // [N x d], row k is the state at sentence position k
    Tensor log_probs;  // [(N + 1) x V]; see forward_pass / backward_pass
  };
  // Positions are 0-based. Forward: states row k has consumed t_0..t_k;
  // log_probs row j predicts t_j (row N predicts </S>) from the state after
  // t_{j-1} (row 0 from the start sentinel).
  Pass forward_pass(const std::vector<std::string>& raw_tokens) const;
  // Mirror image: states row k has consumed t_{N-1}..t_k; log_probs row j
  // (j >= 1) predicts t_{j-1} from states row j, and row 0 predicts the
  // sentinel from states row 0. Equal to forward_pass on the reversed
  // sentence with both outputs index-reversed.
  Pass backward_pass(const std::vector<std::string>& raw_tokens) const;
  Pass run(const std::vector<std::string>& raw_tokens) const;

  // Graph-building pieces. Tokens are given in scan order.
  struct ScanOutput {
    Var states;      // [(N + 1) x d], row 0 after the start sentinel
    Var log_probs;   // [(N + 1) x V]
    std::vector<int> targets;
  };
  ScanOutput scan(Graph& g, const std::vector<std::string>& scan_tokens) const;

  // Summed negative log-likelihood of the sentence's N + 1 predictions.
  Var sentence_nll(Graph& g, const std::vector<std::string>& raw_tokens) const;
  // Top-layer states in sentence order [N x d] as graph nodes.
  Var sentence_states(Graph& g, const std::vector<std::string>& raw_tokens) const;

  Container to_container() const;
  static LanguageModel from_container(const Container& c);
  void save(const std::string& path) const;
  static LanguageModel load(const std::string& path);
  // crc32 of the encoded container; identifies the model in caches.
  std::uint32_t checksum() const;

 private:
  Var inputs(Graph& g, const std::vector<std::string>& scan_tokens) const;

  LmConfig config_;
  Vocabulary words_;
  Vocabulary chars_;
  std::uint64_t seed_ = 0;
  ParameterSet params_;
  EmbeddingTable embed_;
  CharEncoder char_cnn_;
  std::vector<RecurrentCell> cells_;
  Dense softmax_;
};

struct LmTrainSettings {
  int epochs = 10;
  double alpha = 1e-3;
  int batch_size = 16;
  double clip = 5.0;
  int min_count = 1;
  std::uint64_t seed = 1;
};

struct LmEpochLog {
  int epoch = 0;
  double train_perplexity = 0.0;
  double heldout_perplexity = 0.0;  // NaN without held-out data
};

using Corpus = std::vector<std::vector<std::string>>;

// Vocabularies built from the training corpus under the config's text rule.
Vocabulary lm_word_vocab(const LmConfig& config, const Corpus& corpus, int min_count);
Vocabulary lm_char_vocab(const LmConfig& config, const Corpus& corpus);

// Continues training an existing model for settings.epochs epochs with Adam
// and gradient clipping; each batch minimizes the mean NLL per prediction.
// Throws NumericError on a non-finite loss.
std::vector<LmEpochLog> train_lm(LanguageModel& model, const Corpus& corpus,
                                 const LmTrainSettings& settings,
                                 const Corpus* heldout = nullptr,
                                 const std::function<void(const LmEpochLog&)>& on_epoch = {});

// Builds vocabularies and a fresh model, then trains it.
LanguageModel train_lm(const LmConfig& config, const Corpus& corpus,
                       const LmTrainSettings& settings, std::vector<LmEpochLog>* log = nullptr,
                       const Corpus* heldout = nullptr);

struct NllTotals {
  double nll = 0.0;
  long predictions = 0;
};
NllTotals corpus_nll(const LanguageModel& model, const Corpus& corpus);
// exp(total NLL / total predictions), N + 1 predictions per sentence.
double perplexity(const LanguageModel& model, const Corpus& corpus);

struct LmEmbeddingSet {
  std::optional<Tensor> forward;   // [N x d_f]
  std::optional<Tensor> backward;  // [N x d_b]
  Tensor combined;                 // [N x (d_f + d_b)]
};

// At least one model must be given. Models are used read-only.
LmEmbeddingSet extract_embeddings(const LanguageModel* forward, const LanguageModel* backward,
                                  const std::vector<std::string>& raw_tokens);

std::vector<std::string> raw_tokens(const Sentence& s);
Corpus raw_corpus(const std::vector<Sentence>& sentences);

}  // namespace lmtag

#endif  // LMTAG_LANGMODEL_H_
