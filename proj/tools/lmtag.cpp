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

// lmtag command-line interface.
//
// Exit codes: 0 success, 1 usage, 2 data, 3 numeric failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lmtag/config.h"
#include "lmtag/corpus.h"
#include "lmtag/errors.h"
#include "lmtag/evaluation.h"
#include "lmtag/experiment.h"
#include "lmtag/langmodel.h"
#include "lmtag/persist.h"
#include "lmtag/synth.h"
#include "lmtag/tagger.h"
#include "lmtag/training.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace lmtag {
namespace {

// JSON-lines writer; silent when no path was given.
class JsonLog {
 public:
  explicit JsonLog(const std::string& path) {
    if (!path.empty()) {
      out_.open(path, std::ios::trunc);
      if (!out_) throw DataError("cannot write log '" + path + "'");
    }
  }
  void write(const json& record) {
    if (out_.is_open()) out_ << record.dump() << '\n';
  }

 private:
  std::ofstream out_;
};

Corpus read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return raw_corpus(parse_plain_text(in));
}

void write_conll(const std::string& path, const std::vector<Sentence>& sentences) {
  std::ostringstream out;
  for (const auto& s : sentences) {
    for (std::size_t k = 0; k < s.size(); ++k) out << s.tokens[k].raw << ' ' << s.tags[k] << '\n';
    out << '\n';
  }
  write_file(path, out.str());
}

void write_lines(const std::string& path, const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& s : corpus) out << join_words(s) << '\n';
  write_file(path, out.str());
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

json epoch_json(const std::string& config, const EpochEvent& ev) {
  return {{"event", "epoch"},
          {"config", config},
          {"seed", ev.seed},
          {"epoch", ev.record.epoch},
          {"executed", ev.record.executed},
          {"phase", phase_name(ev.record.phase)},
          {"alpha", ev.record.alpha},
          {"train_loss", ev.record.train_loss},
          {"dev_f1", ev.record.dev_score}};
}

json counts_json(const EvalCounts& c) {
  json types = json::object();
  for (const auto& [type, tc] : c.per_type) {
    const Prf s = prf(tc);
    types[type] = {{"gold", tc.gold}, {"predicted", tc.predicted}, {"correct", tc.correct},
                   {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  }
  const Prf s = c.overall_scores();
  return {{"gold", c.overall.gold},
          {"predicted", c.overall.predicted},
          {"correct", c.overall.correct},
          {"precision", s.precision},
          {"recall", s.recall},
          {"f1", s.f1},
          {"types", types}};
}

std::shared_ptr<const LanguageModel> load_lm(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_shared<const LanguageModel>(LanguageModel::load(path));
}

std::unique_ptr<LmFeatures> make_features(const std::string& fwd, const std::string& bwd,
                                          const std::string& cache) {
  if (fwd.empty() && bwd.empty()) return nullptr;
  auto f = std::make_unique<LmFeatures>(load_lm(fwd), load_lm(bwd));
  if (!cache.empty() && fs::exists(cache)) f->load_cache(cache);
  return f;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string kind = "task";
  std::string out = ".";
  std::uint64_t seed = 1;
  int train = 200;
  int dev = 200;
  int test = 200;
  int unlabeled = 20000;
  int vocab = 20;
  int fanout = 3;
  double end_prob = 0.12;
};

int cmd_synth(const SynthArgs& a) {
  fs::create_directories(a.out);
  if (a.kind == "task") {
    const SynthTask task = make_synth_task({}, a.train, a.dev, a.test, a.unlabeled, a.seed);
    write_conll((fs::path(a.out) / "train.conll").string(), task.train);
    write_conll((fs::path(a.out) / "dev.conll").string(), task.dev);
    write_conll((fs::path(a.out) / "test.conll").string(), task.test);
    write_lines((fs::path(a.out) / "unlabeled.txt").string(), task.unlabeled);
  } else if (a.kind == "markov") {
    RngStream rng(a.seed);
    const MarkovChain chain = make_markov_chain(a.vocab, a.fanout, a.end_prob, rng);
    RngStream train_rng = rng.split(1);
    RngStream test_rng = rng.split(2);
    write_lines((fs::path(a.out) / "train.txt").string(), sample_markov(chain, a.train, train_rng));
    write_lines((fs::path(a.out) / "test.txt").string(), sample_markov(chain, a.test, test_rng));
    const ChainEntropy e = chain_entropy(chain);
    std::cout << "entropy_rate " << e.rate << "\nperplexity " << e.perplexity() << '\n';
  } else {
    throw UsageError("unknown synth kind '" + a.kind + "' (task|markov)");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// lm-train / lm-eval / lm-embed

struct LmTrainArgs {
  std::string corpus;
  std::string heldout;
  std::string config;
  std::string out;
  std::string log;
  std::string direction;
  std::string input;
  std::string cell;
  int embed_dim = -1;
  int hidden = -1;
  int projection = -1;
  int layers = -1;
  int epochs = -1;
  int batch_size = -1;
  double alpha = -1;
  int min_count = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int cmd_lm_train(const LmTrainArgs& a) {
  IniDocument doc;
  if (!a.config.empty()) doc = IniDocument::load(a.config);
  LmConfig c = LmConfig::read(doc, "lm");
  LmTrainSettings s;
  s.epochs = doc.get_int("lm_train", "epochs", s.epochs);
  s.alpha = doc.get_double("lm_train", "alpha", s.alpha);
  s.batch_size = doc.get_int("lm_train", "batch_size", s.batch_size);
  s.clip = doc.get_double("lm_train", "clip", s.clip);
  s.min_count = doc.get_int("lm_train", "min_count", s.min_count);
  s.seed = static_cast<std::uint64_t>(doc.get_int("lm_train", "seed", static_cast<int>(s.seed)));
  if (!a.direction.empty()) c.direction = parse_lm_direction(a.direction);
  if (!a.input.empty()) c.input = parse_lm_input(a.input);
  if (!a.cell.empty()) c.cell = parse_cell_kind(a.cell);
  if (a.embed_dim > 0) c.embed_dim = a.embed_dim;
  if (a.hidden > 0) c.hidden = a.hidden;
  if (a.projection >= 0) c.projection = a.projection;
  if (a.layers > 0) c.layers = a.layers;
  if (a.epochs >= 0) s.epochs = a.epochs;
  if (a.batch_size > 0) s.batch_size = a.batch_size;
  if (a.alpha > 0) s.alpha = a.alpha;
  if (a.min_count > 0) s.min_count = a.min_count;
  if (a.seed_set) s.seed = a.seed;

  const Corpus corpus = read_corpus(a.corpus);
  Corpus heldout;
  if (!a.heldout.empty()) heldout = read_corpus(a.heldout);
  JsonLog log(a.log);
  LanguageModel model(c, lm_word_vocab(c, corpus, s.min_count), lm_char_vocab(c, corpus), s.seed);
  train_lm(model, corpus, s, a.heldout.empty() ? nullptr : &heldout, [&](const LmEpochLog& e) {
    json rec = {{"event", "lm_epoch"},
                {"direction", lm_direction_name(c.direction)},
                {"epoch", e.epoch},
                {"train_perplexity", e.train_perplexity}};
    if (!std::isnan(e.heldout_perplexity)) rec["heldout_perplexity"] = e.heldout_perplexity;
    log.write(rec);
    std::cerr << "epoch " << e.epoch << " train ppl " << fixed(e.train_perplexity, 3);
    if (!std::isnan(e.heldout_perplexity)) {
      std::cerr << " heldout ppl " << fixed(e.heldout_perplexity, 3);
    }
    std::cerr << '\n';
  });
  model.save(a.out);
  std::cout << "saved " << a.out << " (vocab " << model.vocab_size() << ", "
            << model.params().scalar_count() << " parameters, checksum " << model.checksum()
            << ")\n";
  return 0;
}

int cmd_lm_eval(const std::string& model_path, const std::string& corpus_path) {
  const LanguageModel model = LanguageModel::load(model_path);
  const double ppl = perplexity(model, read_corpus(corpus_path));
  std::cout << fixed(ppl, 4) << '\n';
  return 0;
}

int cmd_lm_embed(const std::string& fwd, const std::string& bwd, const std::string& sentences,
                 const std::string& out) {
  if (fwd.empty() && bwd.empty()) throw UsageError("lm-embed needs --forward and/or --backward");
  LmFeatures features(load_lm(fwd), load_lm(bwd));
  const Corpus corpus = read_corpus(sentences);
  for (const auto& s : corpus) features.get(s);
  features.save_cache(out);
  std::cout << "cached " << features.cached() << " sentences, rows of length " << features.dim()
            << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// tag-train / tag-eval / tag

struct TagTrainArgs {
  std::string config;
  std::string out;
  std::vector<std::uint64_t> seeds;
};

int cmd_tag_train(const TagTrainArgs& a) {
  const IniDocument doc = IniDocument::load(a.config);
  ExperimentConfig c = ExperimentConfig::read(doc);
  if (!a.seeds.empty()) c.seeds = a.seeds;
  if (!a.out.empty()) c.output_dir = a.out;
  auto features = make_features(c.forward_lm, c.backward_lm, c.lm_cache);
  // Mode and LM set must agree before any data is read or trained on.
  bind_lm(c.tagger, features.get());
  const TaggerData data = load_tagger_data(c);
  fs::create_directories(c.output_dir);
  const fs::path dir(c.output_dir);
  write_file((dir / "experiment.ini").string(), c.write().str());
  JsonLog log((dir / "run_log.jsonl").string());
  JsonLog results((dir / "results.jsonl").string());

  std::vector<double> test_scores;
  std::vector<double> dev_scores;
  for (std::uint64_t seed : c.seeds) {
    TaggerRun run = train_tagger(c.tagger, data, features.get(), c.train, seed,
                                 [&](const EpochEvent& ev) { log.write(epoch_json("tagger", ev)); });
    const std::string model_path = (dir / ("model_seed" + std::to_string(seed) + ".lmtc")).string();
    run.model->save(model_path);
    results.write({{"event", "run"},
                   {"seed", seed},
                   {"best_epoch", run.result.best_epoch},
                   {"dev_f1", run.result.best_dev},
                   {"test_f1", std::isnan(run.result.test_score) ? json(nullptr)
                                                                  : json(run.result.test_score)},
                   {"parameters", run.model->parameter_count()},
                   {"test", counts_json(run.test_counts)}});
    std::cerr << "seed " << seed << ": best dev F1 " << fixed(run.result.best_dev, 2)
              << " (epoch " << run.result.best_epoch << "), test F1 "
              << fixed(run.result.test_score, 2) << ", " << fixed(run.result.wall_seconds, 1)
              << " s\n";
    test_scores.push_back(run.result.test_score);
    dev_scores.push_back(run.result.best_dev);
  }
  const Aggregate test = aggregate(test_scores);
  const Aggregate dev = aggregate(dev_scores);
  results.write({{"event", "aggregate"},
                 {"runs", test.n},
                 {"dev_mean", dev.mean},
                 {"dev_std", std::isnan(dev.stddev) ? json(nullptr) : json(dev.stddev)},
                 {"test_mean", test.mean},
                 {"test_std", std::isnan(test.stddev) ? json(nullptr) : json(test.stddev)}});
  std::cout << report({{insertion_mode_name(c.tagger.mode), test.mean, test.stddev, test.n}});
  if (features && !c.lm_cache.empty()) features->save_cache(c.lm_cache);
  return 0;
}

struct TagEvalArgs {
  std::string model;
  std::string data;
  std::string config;
  std::string forward;
  std::string backward;
  std::string scheme = "bioes";
  int columns = 2;
  std::string output;
};

std::unique_ptr<LmFeatures> features_for(const TaggerModel& model, const TagEvalArgs& a) {
  std::string fwd = a.forward;
  std::string bwd = a.backward;
  std::string cache;
  if (!a.config.empty()) {
    const ExperimentConfig c = ExperimentConfig::read(IniDocument::load(a.config));
    if (fwd.empty()) fwd = c.forward_lm;
    if (bwd.empty()) bwd = c.backward_lm;
    cache = c.lm_cache;
  }
  auto f = make_features(fwd, bwd, cache);
  if (model.uses_lm()) {
    if (!f) throw UsageError("model uses LM embeddings; pass --forward/--backward or --config");
    if (f->dim() != model.config().lm_dim) {
      throw UsageError("LM embedding size " + std::to_string(f->dim()) +
                       " does not match the model's " + std::to_string(model.config().lm_dim));
    }
  }
  return f;
}

int cmd_tag_eval(const TagEvalArgs& a) {
  const TaggerModel model = TaggerModel::load(a.model);
  auto features = features_for(model, a);
  const auto sentences =
      load_conll_file(a.data, a.columns, a.columns - 1, parse_scheme_kind(a.scheme));
  const auto predicted = predict_all(model, sentences, features.get());
  const EvalCounts counts = score(sentences, predicted, SchemeKind::kBioes);
  std::cout << format_counts(counts);
  if (!a.output.empty()) {
    std::ostringstream out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      for (std::size_t k = 0; k < sentences[i].size(); ++k) {
        out << sentences[i].tokens[k].raw << ' ' << sentences[i].tags[k] << ' ' << predicted[i][k]
            << '\n';
      }
      out << '\n';
    }
    write_file(a.output, out.str());
  }
  return 0;
}

int cmd_tag(const TagEvalArgs& a, const std::string& input) {
  const TaggerModel model = TaggerModel::load(a.model);
  auto features = features_for(model, a);
  std::vector<Sentence> sentences;
  if (input.empty() || input == "-") {
    sentences = parse_plain_text(std::cin);
  } else {
    std::ifstream in(input);
    if (!in) throw DataError("cannot open '" + input + "'");
    sentences = parse_plain_text(in);
  }
  const auto predicted = predict_all(model, sentences, features.get());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    for (std::size_t k = 0; k < sentences[i].size(); ++k) {
      std::cout << (k + 1) << '\t' << sentences[i].tokens[k].raw << '\t'
                << sentences[i].tokens[k].norm << '\t' << predicted[i][k] << '\n';
    }
    std::cout << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// ablate

struct AblateArgs {
  std::string kind;
  std::string config;
  std::string out;
  std::vector<std::string> combos{"none", "fwd", "bwd", "fwd+bwd"};
  double fraction = 0.01;
  std::vector<std::uint64_t> seeds;
};

int cmd_ablate(const AblateArgs& a) {
  static const std::vector<std::string> kinds{"insertion", "lm-combo", "no-rnn", "param-match",
                                              "subsample"};
  if (std::find(kinds.begin(), kinds.end(), a.kind) == kinds.end()) {
    throw UsageError("unknown ablation kind '" + a.kind + "'");
  }
  ExperimentConfig c = ExperimentConfig::read(IniDocument::load(a.config));
  if (!a.seeds.empty()) c.seeds = a.seeds;
  if (!a.out.empty()) c.output_dir = a.out;
  TaggerData data = load_tagger_data(c);

  auto fwd = load_lm(c.forward_lm);
  auto bwd = load_lm(c.backward_lm);
  std::unique_ptr<LmFeatures> both;
  if (fwd || bwd) {
    both = std::make_unique<LmFeatures>(fwd, bwd);
    if (!c.lm_cache.empty() && fs::exists(c.lm_cache)) both->load_cache(c.lm_cache);
  }
  TaggerConfig base = c.tagger;
  base.mode = InsertionMode::kNone;
  base.lm_dim = 0;
  TaggerConfig taglm = c.tagger;
  if (taglm.mode == InsertionMode::kNone || taglm.mode == InsertionMode::kLmOnly) {
    taglm.mode = InsertionMode::kOutputFirst;
  }
  taglm.lm_dim = 0;
  auto need_lm = [&]() {
    if (!both) throw UsageError("ablation '" + a.kind + "' needs [lm] forward and/or backward");
  };

  std::vector<SweepEntry> entries;
  std::optional<std::string> baseline;
  std::vector<std::unique_ptr<LmFeatures>> owned;
  if (a.kind == "insertion") {
    need_lm();
    for (auto m : {InsertionMode::kInputFirst, InsertionMode::kOutputFirst,
                   InsertionMode::kOutputSecond}) {
      TaggerConfig t = taglm;
      t.mode = m;
      entries.push_back({insertion_mode_name(m), t, both.get()});
    }
  } else if (a.kind == "lm-combo") {
    baseline = "no LM";
    for (const auto& combo : a.combos) {
      if (combo == "none") {
        entries.push_back({"no LM", base, nullptr});
        continue;
      }
      const bool use_f = combo == "fwd" || combo == "fwd+bwd";
      const bool use_b = combo == "bwd" || combo == "fwd+bwd";
      if (!use_f && !use_b) throw UsageError("unknown LM combination '" + combo + "'");
      if ((use_f && !fwd) || (use_b && !bwd)) {
        throw UsageError("LM combination '" + combo + "' needs the corresponding LM in [lm]");
      }
      owned.push_back(std::make_unique<LmFeatures>(use_f ? fwd : nullptr, use_b ? bwd : nullptr));
      std::string name = use_f && use_b ? "forward+backward" : use_f ? "forward" : "backward";
      entries.push_back({name, taglm, owned.back().get()});
    }
  } else if (a.kind == "no-rnn") {
    need_lm();
    baseline = "no LM";
    TaggerConfig only = taglm;
    only.mode = InsertionMode::kLmOnly;
    entries.push_back({"no LM", base, nullptr});
    entries.push_back({"TagLM", taglm, both.get()});
    entries.push_back({"LM only (no task RNN)", only, both.get()});
  } else if (a.kind == "param-match") {
    need_lm();
    baseline = "no LM";
    const TaggerConfig bound = bind_lm(taglm, both.get());
    const TaggerSizes sizes{build_word_vocab(data.train).size(),
                            build_char_vocab(data.train).size(), [&] {
                              std::vector<std::vector<std::string>> tl;
                              for (const auto& s : data.train) tl.push_back(s.tags);
                              return LabelScheme(SchemeKind::kBioes, collect_types(tl)).size();
                            }()};
    const TaggerConfig matched = match_parameters(base, sizes, parameter_count(bound, sizes));
    std::cerr << "parameters: baseline " << parameter_count(base, sizes) << ", TagLM "
              << parameter_count(bound, sizes) << ", matched baseline (h2 = " << matched.h2
              << ") " << parameter_count(matched, sizes) << '\n';
    entries.push_back({"no LM", base, nullptr});
    entries.push_back({"no LM, matched parameters", matched, nullptr});
    entries.push_back({"TagLM", taglm, both.get()});
  } else {
    need_lm();
    baseline = "no LM";
    RngStream rng(c.seeds.front());
    data.train = subsample(data.train, a.fraction, rng);
    std::cerr << "subsample: " << data.train.size() << " training sentences\n";
    entries.push_back({"no LM", base, nullptr});
    entries.push_back({"TagLM", taglm, both.get()});
  }

  fs::create_directories(c.output_dir);
  JsonLog log((fs::path(c.output_dir) / ("ablate_" + a.kind + ".jsonl")).string());
  const SweepResult r = run_sweep(entries, data, c.train, c.seeds,
                                  [&](const std::string& name, const EpochEvent& ev) {
                                    log.write(epoch_json(name, ev));
                                  });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (const auto& run : r.runs[i].runs) {
      log.write({{"event", "run"},
                 {"config", entries[i].name},
                 {"seed", run.seed},
                 {"dev_f1", run.best_dev},
                 {"test_f1", run.test_score}});
    }
  }
  std::cout << report(r.rows, baseline);
  if (both && !c.lm_cache.empty()) both->save_cache(c.lm_cache);
  return 0;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"lmtag: language-model-augmented sequence tagging"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate synthetic corpora");
  s->add_option("--kind", synth.kind, "task | markov")->capture_default_str();
  s->add_option("--out", synth.out, "Output directory")->capture_default_str();
  s->add_option("--seed", synth.seed)->capture_default_str();
  s->add_option("--train", synth.train)->capture_default_str();
  s->add_option("--dev", synth.dev)->capture_default_str();
  s->add_option("--test", synth.test)->capture_default_str();
  s->add_option("--unlabeled", synth.unlabeled)->capture_default_str();
  s->add_option("--vocab", synth.vocab, "Markov chain size")->capture_default_str();
  s->add_option("--fanout", synth.fanout)->capture_default_str();
  s->add_option("--end-prob", synth.end_prob)->capture_default_str();

  LmTrainArgs lt;
  auto* ltc = app.add_subcommand("lm-train", "Train a forward or backward language model");
  ltc->add_option("--corpus", lt.corpus, "One sentence per line")->required();
  ltc->add_option("--out", lt.out, "Model container path")->required();
  ltc->add_option("--config", lt.config, "INI file with [lm] and [lm_train]");
  ltc->add_option("--heldout", lt.heldout, "Held-out corpus for per-epoch perplexity");
  ltc->add_option("--log", lt.log, "JSON-lines log");
  ltc->add_option("--direction", lt.direction, "forward | backward");
  ltc->add_option("--input", lt.input, "token_embedding | char_cnn");
  ltc->add_option("--cell", lt.cell, "lstm | lstmp");
  ltc->add_option("--embed-dim", lt.embed_dim);
  ltc->add_option("--hidden", lt.hidden);
  ltc->add_option("--projection", lt.projection);
  ltc->add_option("--layers", lt.layers);
  ltc->add_option("--epochs", lt.epochs);
  ltc->add_option("--batch-size", lt.batch_size);
  ltc->add_option("--alpha", lt.alpha);
  ltc->add_option("--min-count", lt.min_count);
  auto* seed_opt = ltc->add_option("--seed", lt.seed);

  std::string le_model, le_corpus;
  auto* lec = app.add_subcommand("lm-eval", "Print perplexity of a language model");
  lec->add_option("--model", le_model)->required();
  lec->add_option("--corpus", le_corpus)->required();

  std::string em_fwd, em_bwd, em_sentences, em_out;
  auto* emc = app.add_subcommand("lm-embed", "Cache LM embeddings for sentences");
  emc->add_option("--forward", em_fwd, "Forward LM container");
  emc->add_option("--backward", em_bwd, "Backward LM container");
  emc->add_option("--sentences", em_sentences, "One sentence per line")->required();
  emc->add_option("--out", em_out, "Cache container path")->required();

  TagTrainArgs tt;
  auto* ttc = app.add_subcommand("tag-train", "Train taggers over the configured seeds");
  ttc->add_option("--config", tt.config, "Experiment INI file")->required();
  ttc->add_option("--out", tt.out, "Output directory (overrides [run] output)");
  ttc->add_option("--seeds", tt.seeds, "Seeds (override [run] seeds)");

  TagEvalArgs te;
  auto* tec = app.add_subcommand("tag-eval", "Score a tagger on CoNLL data");
  tec->add_option("--model", te.model)->required();
  tec->add_option("--data", te.data)->required();
  tec->add_option("--config", te.config, "Experiment INI providing [lm] paths");
  tec->add_option("--forward", te.forward);
  tec->add_option("--backward", te.backward);
  tec->add_option("--scheme", te.scheme, "Tag scheme of the data")->capture_default_str();
  tec->add_option("--columns", te.columns, "Columns per line; tags in the last")
      ->capture_default_str();
  tec->add_option("--output", te.output, "Write token, gold and predicted columns");

  TagEvalArgs tg;
  std::string tg_input;
  auto* tgc = app.add_subcommand("tag", "Tag plain text (one sentence per line)");
  tgc->add_option("--model", tg.model)->required();
  tgc->add_option("--input", tg_input, "Text file, '-' for stdin");
  tgc->add_option("--config", tg.config, "Experiment INI providing [lm] paths");
  tgc->add_option("--forward", tg.forward);
  tgc->add_option("--backward", tg.backward);

  AblateArgs ab;
  auto* abc = app.add_subcommand("ablate", "Run an ablation sweep");
  abc->add_option("--kind", ab.kind, "insertion | lm-combo | no-rnn | param-match | subsample")
      ->required();
  abc->add_option("--config", ab.config, "Experiment INI file")->required();
  abc->add_option("--out", ab.out, "Output directory");
  abc->add_option("--combos", ab.combos, "LM combinations for lm-combo")->delimiter(',');
  abc->add_option("--fraction", ab.fraction, "Training fraction for subsample")
      ->capture_default_str();
  abc->add_option("--seeds", ab.seeds);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  lt.seed_set = seed_opt->count() > 0;

  if (*s) return cmd_synth(synth);
  if (*ltc) return cmd_lm_train(lt);
  if (*lec) return cmd_lm_eval(le_model, le_corpus);
  if (*emc) return cmd_lm_embed(em_fwd, em_bwd, em_sentences, em_out);
  if (*ttc) return cmd_tag_train(tt);
  if (*tec) return cmd_tag_eval(te);
  if (*tgc) return cmd_tag(tg, tg_input);
  if (*abc) return cmd_ablate(ab);
  return 1;
}

}  // namespace
}  // namespace lmtag

int main(int argc, char** argv) {
  try {
    return lmtag::run_cli(argc, argv);
  } catch (const lmtag::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const lmtag::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const lmtag::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
