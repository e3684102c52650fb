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

#include "lmtag/experiment.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "lmtag/errors.h"
#include "lmtag/persist.h"
#include "lmtag/rng.h"

namespace lmtag {

LmFeatures::LmFeatures(std::shared_ptr<const LanguageModel> forward,
                       std::shared_ptr<const LanguageModel> backward)
    : forward_(std::move(forward)), backward_(std::move(backward)) {
  if (!forward_ && !backward_) throw UsageError("LM features need at least one LM");
  if (forward_ && forward_->config().direction != LmDirection::kForward) {
    throw UsageError("forward LM slot holds a backward model");
  }
  if (backward_ && backward_->config().direction != LmDirection::kBackward) {
    throw UsageError("backward LM slot holds a forward model");
  }
  model_key_ = splitmix64((forward_ ? forward_->checksum() : 0u) * 0x100000001ull + 1);
  model_key_ = splitmix64(model_key_ ^ (backward_ ? backward_->checksum() : 0u));
  dim_ = (forward_ ? forward_->output_dim() : 0) + (backward_ ? backward_->output_dim() : 0);
}

std::uint64_t LmFeatures::key(const std::vector<std::string>& raw_tokens) const {
  return splitmix64(model_key_ ^ sentence_hash(raw_tokens));
}

const Tensor& LmFeatures::get(const std::vector<std::string>& raw_tokens) {
  const std::uint64_t k = key(raw_tokens);
  auto it = cache_.find(k);
  if (it != cache_.end() && it->second.rows() == raw_tokens.size()) return it->second;
  Tensor t = extract_embeddings(forward_.get(), backward_.get(), raw_tokens).combined;
  return cache_.insert_or_assign(k, std::move(t)).first->second;
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void LmFeatures::save_cache(const std::string& path) const {
  IniDocument doc;
  doc.set("cache", "model_key", hex(model_key_));
  doc.set("cache", "dim", dim_);
  Container c;
  c.config = doc.str();
  for (const auto& [k, t] : cache_) c.tensors.emplace_back(hex(k), t);
  save_container(path, c);
}

std::size_t LmFeatures::load_cache(const std::string& path) {
  const Container c = load_container(path);
  const IniDocument doc = IniDocument::parse(c.config);
  if (doc.get_string("cache", "model_key", "") != hex(model_key_)) return 0;
  std::size_t adopted = 0;
  for (const auto& [name, t] : c.tensors) {
    if (t.cols() != static_cast<std::size_t>(dim_)) continue;
    cache_.insert_or_assign(std::stoull(name, nullptr, 16), t);
    ++adopted;
  }
  return adopted;
}

std::vector<Sentence> to_bioes(std::vector<Sentence> sentences, SchemeKind from) {
  for (auto& s : sentences) {
    if (s.has_tags()) s.tags = convert_scheme(s.tags, from, SchemeKind::kBioes);
  }
  return sentences;
}

TaggerConfig bind_lm(TaggerConfig config, const LmFeatures* lm) {
  if (config.mode == InsertionMode::kNone) {
    if (lm) throw UsageError("LMs given but insertion mode is none");
    config.lm_dim = 0;
  } else {
    if (!lm) {
      throw UsageError("insertion mode " + insertion_mode_name(config.mode) +
                       " needs at least one LM");
    }
    if (config.lm_dim != 0 && config.lm_dim != lm->dim()) {
      throw UsageError("configured lm_dim " + std::to_string(config.lm_dim) +
                       " does not match the LM embedding size " + std::to_string(lm->dim()));
    }
    config.lm_dim = lm->dim();
  }
  config.validate();
  return config;
}

std::vector<std::vector<std::string>> predict_all(const TaggerModel& model,
                                                  const std::vector<Sentence>& sentences,
                                                  LmFeatures* lm) {
  std::vector<std::vector<std::string>> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    const Tensor* features = model.uses_lm() ? &lm->get(s) : nullptr;
    out.push_back(model.predict(s, features));
  }
  return out;
}

EvalCounts evaluate(const TaggerModel& model, const std::vector<Sentence>& sentences,
                    LmFeatures* lm) {
  return score(sentences, predict_all(model, sentences, lm), SchemeKind::kBioes);
}

TaggerRun train_tagger(TaggerConfig config, const TaggerData& data, LmFeatures* lm,
                       const TrainSettings& settings, std::uint64_t seed,
                       const std::function<void(const EpochEvent&)>& on_epoch) {
  const auto started = std::chrono::steady_clock::now();
  config = bind_lm(config, lm);
  if (data.train.empty()) throw DataError("no training sentences");
  if (settings.batch_size < 1) throw UsageError("batch size must be >= 1");

  std::vector<std::vector<std::string>> tag_lists;
  for (const auto& s : data.train) tag_lists.push_back(s.tags);
  LabelScheme scheme(SchemeKind::kBioes, collect_types(tag_lists));

  TaggerRun run;
  run.model = std::make_unique<TaggerModel>(config, build_word_vocab(data.train),
                                            build_char_vocab(data.train), scheme, seed);
  TaggerModel& model = *run.model;
  RngStream root(seed);
  if (!settings.word_embeddings.empty() && config.mode != InsertionMode::kLmOnly) {
    RngStream emb_rng = root.split(100);
    LoadedEmbeddings e = load_embeddings(settings.word_embeddings, model.words(), emb_rng);
    if (e.dim != config.word_dim) {
      throw UsageError("embedding file has dimension " + std::to_string(e.dim) +
                       " but word_dim is " + std::to_string(config.word_dim));
    }
    model.set_word_embeddings(e.table);
  }

  std::vector<const Tensor*> features(data.train.size(), nullptr);
  if (model.uses_lm()) {
    for (std::size_t i = 0; i < data.train.size(); ++i) features[i] = &lm->get(data.train[i]);
  }

  RngStream shuffle_rng = root.split(101);
  RngStream dropout_rng = root.split(102);
  Adam adam;
  std::vector<Parameter*> params = model.params().all();
  std::vector<std::size_t> order(data.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto train_epoch = [&](double alpha) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += settings.batch_size) {
      const std::size_t e = std::min(order.size(), b + settings.batch_size);
      Graph g;
      std::vector<Var> losses;
      for (std::size_t i = b; i < e; ++i) {
        losses.push_back(model.loss(g, data.train[order[i]], features[order[i]], &dropout_rng));
      }
      Var batch = losses.size() == 1 ? losses[0] : sum(concat(losses, 0));
      const double value = batch.value()[0];
      if (!std::isfinite(value)) throw NumericError("non-finite tagger loss");
      total += value;
      model.params().zero_grad();
      g.backward(scale(batch, 1.0 / static_cast<double>(e - b)));
      clip_gradients(params, settings.clip);
      adam.step(params, alpha);
    }
    return total / static_cast<double>(order.size());
  };
  auto dev_score = [&]() {
    return data.dev.empty() ? 0.0 : evaluate(model, data.dev, lm).overall_scores().f1;
  };

  run.result.seed = seed;
  if (settings.dev_monitored) {
    std::vector<Tensor> best = model.params().snapshot();
    ScheduleHooks hooks;
    hooks.train_epoch = [&](double alpha) { return train_epoch(alpha); };
    hooks.evaluate_dev = [&]() { return dev_score(); };
    hooks.save_best = [&]() { best = model.params().snapshot(); };
    hooks.restore_best = [&]() { model.params().restore(best); };
    hooks.on_epoch = [&](const EpochRecord& rec) {
      if (on_epoch) on_epoch({seed, rec});
    };
    const ScheduleResult r = run_schedule(settings.schedule, hooks);
    run.result.epochs = r.epochs;
    run.result.best_epoch = r.best_epoch;
    run.result.best_dev = r.best_dev;
  } else {
    for (int epoch = 1; epoch <= settings.fixed_epochs; ++epoch) {
      EpochRecord rec;
      rec.epoch = epoch;
      rec.executed = epoch;
      rec.alpha = settings.schedule.alpha;
      rec.train_loss = train_epoch(rec.alpha);
      rec.dev_score = dev_score();
      run.result.epochs.push_back(rec);
      if (on_epoch) on_epoch({seed, rec});
    }
    run.result.best_epoch = settings.fixed_epochs;
    run.result.best_dev = run.result.epochs.empty() ? dev_score() : run.result.epochs.back().dev_score;
  }

  if (!data.test.empty()) {
    run.test_counts = evaluate(model, data.test, lm);
    run.result.test_score = run.test_counts.overall_scores().f1;
  } else {
    run.result.test_score = std::numeric_limits<double>::quiet_NaN();
  }
  run.result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return run;
}

std::vector<Sentence> load_conll_file(const std::string& path, int columns, int tag_column,
                                      SchemeKind scheme) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return to_bioes(parse_conll(in, columns, tag_column < 0 ? columns - 1 : tag_column), scheme);
}

TaggerData load_tagger_data(const ExperimentConfig& c) {
  TaggerData d;
  if (c.train_path.empty()) throw UsageError("config has no [data] train path");
  d.train = load_conll_file(c.train_path, c.columns, c.tag_column, c.input_scheme);
  if (!c.dev_path.empty()) d.dev = load_conll_file(c.dev_path, c.columns, c.tag_column, c.input_scheme);
  if (!c.test_path.empty()) {
    d.test = load_conll_file(c.test_path, c.columns, c.tag_column, c.input_scheme);
  }
  return d;
}

ExperimentConfig ExperimentConfig::read(const IniDocument& doc) {
  ExperimentConfig c;
  c.train_path = doc.get_string("data", "train", "");
  c.dev_path = doc.get_string("data", "dev", "");
  c.test_path = doc.get_string("data", "test", "");
  c.columns = doc.get_int("data", "columns", c.columns);
  c.tag_column = doc.get_int("data", "tag_column", c.tag_column);
  c.input_scheme = parse_scheme_kind(doc.get_string("data", "scheme", "bioes"));
  c.tagger = TaggerConfig::read(doc, "tagger");
  auto lm_path = [&](const char* key) {
    std::string v = doc.get_string("lm", key, "none");
    return v == "none" ? std::string() : v;
  };
  c.forward_lm = lm_path("forward");
  c.backward_lm = lm_path("backward");
  c.lm_cache = doc.get_string("lm", "cache", "");
  ScheduleConfig& s = c.train.schedule;
  s.alpha = doc.get_double("train", "alpha", s.alpha);
  s.decay = doc.get_double("train", "decay", s.decay);
  s.anneal_epochs = doc.get_int("train", "anneal_epochs", s.anneal_epochs);
  s.anneal_phases = doc.get_int("train", "anneal_phases", s.anneal_phases);
  s.patience = doc.get_int("train", "patience", s.patience);
  s.max_epochs = doc.get_int("train", "max_epochs", s.max_epochs);
  c.train.batch_size = doc.get_int("train", "batch_size", c.train.batch_size);
  c.train.clip = doc.get_double("train", "clip", c.train.clip);
  c.train.dev_monitored = doc.get_bool("train", "dev_monitored", c.train.dev_monitored);
  c.train.fixed_epochs = doc.get_int("train", "fixed_epochs", c.train.fixed_epochs);
  c.train.word_embeddings = doc.get_string("train", "word_embeddings", "");
  if (auto seeds = doc.get("run", "seeds")) {
    c.seeds.clear();
    for (const auto& w : split_words(*seeds)) {
      try {
        c.seeds.push_back(std::stoull(w));
      } catch (const std::exception&) {
        throw DataError("config [run] seeds: not an integer: '" + w + "'");
      }
    }
    if (c.seeds.empty()) throw DataError("config [run] seeds is empty");
  }
  c.output_dir = doc.get_string("run", "output", c.output_dir);
  return c;
}

IniDocument ExperimentConfig::write() const {
  IniDocument doc;
  doc.set("data", "train", train_path);
  doc.set("data", "dev", dev_path);
  doc.set("data", "test", test_path);
  doc.set("data", "columns", columns);
  doc.set("data", "tag_column", tag_column);
  doc.set("data", "scheme", scheme_name(input_scheme));
  tagger.write(doc, "tagger");
  doc.set("lm", "forward", forward_lm.empty() ? "none" : forward_lm);
  doc.set("lm", "backward", backward_lm.empty() ? "none" : backward_lm);
  doc.set("lm", "cache", lm_cache);
  doc.set("train", "alpha", train.schedule.alpha);
  doc.set("train", "decay", train.schedule.decay);
  doc.set("train", "anneal_epochs", train.schedule.anneal_epochs);
  doc.set("train", "anneal_phases", train.schedule.anneal_phases);
  doc.set("train", "patience", train.schedule.patience);
  doc.set("train", "max_epochs", train.schedule.max_epochs);
  doc.set("train", "batch_size", train.batch_size);
  doc.set("train", "clip", train.clip);
  doc.set("train", "dev_monitored", train.dev_monitored);
  doc.set("train", "fixed_epochs", train.fixed_epochs);
  doc.set("train", "word_embeddings", train.word_embeddings);
  std::vector<std::string> s;
  for (auto v : seeds) s.push_back(std::to_string(v));
  doc.set("run", "seeds", join_words(s));
  doc.set("run", "output", output_dir);
  return doc;
}

SweepResult run_sweep(const std::vector<SweepEntry>& entries, const TaggerData& data,
                      const TrainSettings& settings, const std::vector<std::uint64_t>& seeds,
                      const std::function<void(const std::string&, const EpochEvent&)>& on_epoch) {
  SweepResult out;
  for (const auto& entry : entries) {
    auto one = [&](std::uint64_t seed) {
      return train_tagger(entry.config, data, entry.lm, settings, seed,
                          [&](const EpochEvent& ev) {
                            if (on_epoch) on_epoch(entry.name, ev);
                          })
          .result;
    };
    MultiSeedResult r = multi_seed(one, seeds);
    out.rows.push_back({entry.name, r.test.mean, r.test.stddev, r.test.n});
    out.runs.push_back(std::move(r));
  }
  return out;
}

}  // namespace lmtag
