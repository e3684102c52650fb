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

#ifndef LMTAG_EXPERIMENT_H_
#define LMTAG_EXPERIMENT_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lmtag/config.h"
#include "lmtag/corpus.h"
#include "lmtag/evaluation.h"
#include "lmtag/langmodel.h"
#include "lmtag/tagger.h"
#include "lmtag/training.h"

namespace lmtag {

// Frozen LM embeddings for tagger input, cached per sentence. The cache key
// combines the models' checksums with the sentence hash, so a cache file
// written for other models is never consulted.
class LmFeatures {
 public:
  LmFeatures(std::shared_ptr<const LanguageModel> forward,
             std::shared_ptr<const LanguageModel> backward);

  int dim() const { return dim_; }
  bool has_forward() const { return forward_ != nullptr; }
  bool has_backward() const { return backward_ != nullptr; }
  const LanguageModel* forward() const { return forward_.get(); }
  const LanguageModel* backward() const { return backward_.get(); }

  const Tensor& get(const std::vector<std::string>& raw_tokens);
  const Tensor& get(const Sentence& s) { return get(raw_tokens(s)); }

  std::uint64_t key(const std::vector<std::string>& raw_tokens) const;
  std::size_t cached() const { return cache_.size(); }

  // Cache container: one tensor per sentence named by its hex key.
  void save_cache(const std::string& path) const;
  // Returns the number of entries adopted; entries for other models are
  // skipped.
  std::size_t load_cache(const std::string& path);

 private:
  std::shared_ptr<const LanguageModel> forward_;
  std::shared_ptr<const LanguageModel> backward_;
  std::uint64_t model_key_ = 0;
  int dim_ = 0;
  std::map<std::uint64_t, Tensor> cache_;
};

struct TaggerData {
  std::vector<Sentence> train;
  std::vector<Sentence> dev;
  std::vector<Sentence> test;
};

// Converts every sentence's tags from `from` to BIOES.
std::vector<Sentence> to_bioes(std::vector<Sentence> sentences, SchemeKind from);

struct TrainSettings {
  ScheduleConfig schedule;
  int batch_size = 16;
  double clip = 5.0;
  // Without dev monitoring, train a fixed number of epochs at schedule.alpha
  // and keep the last parameters.
  bool dev_monitored = true;
  int fixed_epochs = 10;
  std::string word_embeddings;  // optional pre-trained table
};

struct EpochEvent {
  std::uint64_t seed = 0;
  EpochRecord record;
};

struct TaggerRun {
  RunResult result;
  std::unique_ptr<TaggerModel> model;
  EvalCounts test_counts;
};

// Builds vocabularies from data.train, trains one tagger and scores the
// test split. Dev F1 drives the schedule. Deterministic given seed.
TaggerRun train_tagger(TaggerConfig config, const TaggerData& data, LmFeatures* lm,
                       const TrainSettings& settings, std::uint64_t seed,
                       const std::function<void(const EpochEvent&)>& on_epoch = {});

std::vector<std::vector<std::string>> predict_all(const TaggerModel& model,
                                                  const std::vector<Sentence>& sentences,
                                                  LmFeatures* lm);
EvalCounts evaluate(const TaggerModel& model, const std::vector<Sentence>& sentences,
                    LmFeatures* lm);

// Resolves lm_dim from the available LM features; throws UsageError when the
// insertion mode and the LM set disagree.
TaggerConfig bind_lm(TaggerConfig config, const LmFeatures* lm);

struct ExperimentConfig {
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  int columns = 2;
  int tag_column = -1;  // -1: last column
  SchemeKind input_scheme = SchemeKind::kBioes;
  TaggerConfig tagger;
  std::string forward_lm;   // path or empty
  std::string backward_lm;  // path or empty
  std::string lm_cache;
  TrainSettings train;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = ".";

  static ExperimentConfig read(const IniDocument& doc);
  IniDocument write() const;
};

TaggerData load_tagger_data(const ExperimentConfig& config);
std::vector<Sentence> load_conll_file(const std::string& path, int columns, int tag_column,
                                      SchemeKind scheme);

struct SweepEntry {
  std::string name;
  TaggerConfig config;
  LmFeatures* lm = nullptr;
};

struct SweepResult {
  std::vector<ReportRow> rows;
  std::vector<MultiSeedResult> runs;
};

// Trains every entry over all seeds; rows report mean +- std test F1.
SweepResult run_sweep(const std::vector<SweepEntry>& entries, const TaggerData& data,
                      const TrainSettings& settings, const std::vector<std::uint64_t>& seeds,
                      const std::function<void(const std::string&, const EpochEvent&)>& on_epoch =
                          {});

}  // namespace lmtag

#endif  // LMTAG_EXPERIMENT_H_
