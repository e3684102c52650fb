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

#include "lmtag/langmodel.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "lmtag/errors.h"
#include "lmtag/training.h"

namespace lmtag {

std::string lm_direction_name(LmDirection d) {
  return d == LmDirection::kForward ? "forward" : "backward";
}

LmDirection parse_lm_direction(std::string_view name) {
  if (name == "forward" || name == "fwd") return LmDirection::kForward;
  if (name == "backward" || name == "bwd") return LmDirection::kBackward;
  throw UsageError("unknown LM direction '" + std::string(name) + "'");
}

std::string lm_input_name(LmInput input) {
  return input == LmInput::kTokenEmbedding ? "token_embedding" : "char_cnn";
}

LmInput parse_lm_input(std::string_view name) {
  if (name == "token_embedding") return LmInput::kTokenEmbedding;
  if (name == "char_cnn") return LmInput::kCharCnn;
  throw UsageError("unknown LM input '" + std::string(name) + "'");
}

void LmConfig::write(IniDocument& doc, const std::string& section) const {
  doc.set(section, "direction", lm_direction_name(direction));
  doc.set(section, "input", lm_input_name(input));
  doc.set(section, "embed_dim", embed_dim);
  doc.set(section, "cell", cell_kind_name(cell));
  doc.set(section, "hidden", hidden);
  doc.set(section, "projection", projection);
  doc.set(section, "layers", layers);
  doc.set(section, "normalize", normalize);
  doc.set(section, "char_dim", char_dim);
  doc.set(section, "char_filters", char_filters);
  doc.set(section, "char_width", char_width);
}

LmConfig LmConfig::read(const IniDocument& doc, const std::string& section) {
  LmConfig c;
  c.direction = parse_lm_direction(doc.get_string(section, "direction", "forward"));
  c.input = parse_lm_input(doc.get_string(section, "input", "token_embedding"));
  c.embed_dim = doc.get_int(section, "embed_dim", c.embed_dim);
  c.cell = parse_cell_kind(doc.get_string(section, "cell", "lstm"));
  c.hidden = doc.get_int(section, "hidden", c.hidden);
  c.projection = doc.get_int(section, "projection", c.projection);
  c.layers = doc.get_int(section, "layers", c.layers);
  c.normalize = doc.get_bool(section, "normalize", c.normalize);
  c.char_dim = doc.get_int(section, "char_dim", c.char_dim);
  c.char_filters = doc.get_int(section, "char_filters", c.char_filters);
  c.char_width = doc.get_int(section, "char_width", c.char_width);
  return c;
}

LanguageModel::LanguageModel(LmConfig config, Vocabulary words, Vocabulary chars,
                             std::uint64_t seed)
    : config_(config), words_(std::move(words)), chars_(std::move(chars)), seed_(seed) {
  if (config_.layers < 1 || config_.hidden < 1 || config_.embed_dim < 1) {
    throw UsageError("LM needs layers, hidden and embed_dim >= 1");
  }
  if (config_.cell == CellKind::kGru) throw UsageError("LM cell must be lstm or lstmp");
  if (config_.cell == CellKind::kLstmp && config_.projection < 1) {
    throw UsageError("lstmp LM needs projection >= 1");
  }
  RngStream rng(seed);
  int in_dim = 0;
  if (config_.input == LmInput::kTokenEmbedding) {
    embed_ = EmbeddingTable(params_, "lm.embed", words_.size(), config_.embed_dim, rng);
    in_dim = config_.embed_dim;
  } else {
    CharEncoderConfig cc;
    cc.kind = CharEncoderKind::kCnn;
    cc.char_dim = config_.char_dim;
    cc.filters = config_.char_filters;
    cc.width = config_.char_width;
    char_cnn_ = CharEncoder(params_, "lm.chars", cc, chars_.size(), rng);
    in_dim = cc.output_dim();
  }
  for (int l = 0; l < config_.layers; ++l) {
    CellSpec spec{config_.cell, in_dim, config_.hidden, config_.projection};
    cells_.emplace_back(params_, "lm.layer" + std::to_string(l), spec, rng);
    in_dim = spec.output_dim();
  }
  softmax_ = Dense(params_, "lm.softmax", in_dim, words_.size(), rng);
}

std::string LanguageModel::token_text(const std::string& raw) const {
  return config_.normalize ? normalize(raw) : raw;
}

std::vector<int> LanguageModel::token_ids(const std::vector<std::string>& raw_tokens) const {
  std::vector<int> ids;
  ids.reserve(raw_tokens.size());
  for (const auto& t : raw_tokens) ids.push_back(words_.id(token_text(t)));
  return ids;
}

Var LanguageModel::inputs(Graph& g, const std::vector<std::string>& scan_tokens) const {
  if (config_.input == LmInput::kTokenEmbedding) {
    std::vector<int> ids{Vocabulary::kBos};
    for (const auto& t : scan_tokens) ids.push_back(words_.id(token_text(t)));
    return embed_.lookup(g, ids);
  }
  std::vector<std::vector<int>> chars{{Vocabulary::kBos}};
  for (const auto& t : scan_tokens) {
    auto ids = char_ids(token_text(t), chars_);
    if (ids.empty()) ids.push_back(Vocabulary::kUnk);
    chars.push_back(std::move(ids));
  }
  return char_cnn_.encode(g, chars, nullptr);
}

LanguageModel::ScanOutput LanguageModel::scan(Graph& g,
                                              const std::vector<std::string>& scan_tokens) const {
  ScanOutput out;
  Var x = inputs(g, scan_tokens);
  for (const auto& cell : cells_) x = cell.scan(g, x, false);
  out.states = x;
  out.log_probs = log_softmax(softmax_.apply(g, x));
  for (const auto& t : scan_tokens) out.targets.push_back(words_.id(token_text(t)));
  out.targets.push_back(Vocabulary::kEos);
  return out;
}

namespace {

std::vector<std::string> reversed(const std::vector<std::string>& v) {
  return std::vector<std::string>(v.rbegin(), v.rend());
}

Tensor reverse_rows(const Tensor& t, std::size_t first) {
  const std::size_t n = t.rows() - first;
  const std::size_t c = t.cols();
  Tensor out = Tensor::matrix(n, c);
  for (std::size_t r = 0; r < n; ++r) {
    const auto src = t.row_span(t.rows() - 1 - r);
    std::copy(src.begin(), src.end(), out.data().begin() + r * c);
  }
  return out;
}

Tensor drop_first_row(const Tensor& t) {
  const std::size_t c = t.cols();
  Tensor out = Tensor::matrix(t.rows() - 1, c);
  std::copy(t.data().begin() + c, t.data().end(), out.data().begin());
  return out;
}

}  // namespace

LanguageModel::Pass LanguageModel::forward_pass(const std::vector<std::string>& raw_tokens) const {
  if (raw_tokens.empty()) throw DataError("empty sentence");
  Graph g(false);
  ScanOutput s = scan(g, raw_tokens);
  return {drop_first_row(s.states.value()), s.log_probs.value()};
}

LanguageModel::Pass LanguageModel::backward_pass(
    const std::vector<std::string>& raw_tokens) const {
  if (raw_tokens.empty()) throw DataError("empty sentence");
  Graph g(false);
  ScanOutput s = scan(g, reversed(raw_tokens));
  // scan row r (r >= 1) sits at sentence position N - r.
  return {reverse_rows(s.states.value(), 1), reverse_rows(s.log_probs.value(), 0)};
}

LanguageModel::Pass LanguageModel::run(const std::vector<std::string>& raw_tokens) const {
  return config_.direction == LmDirection::kForward ? forward_pass(raw_tokens)
                                                    : backward_pass(raw_tokens);
}

Var LanguageModel::sentence_nll(Graph& g, const std::vector<std::string>& raw_tokens) const {
  if (raw_tokens.empty()) throw DataError("empty sentence");
  ScanOutput s = scan(g, config_.direction == LmDirection::kForward ? raw_tokens
                                                                    : reversed(raw_tokens));
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t r = 0; r < s.targets.size(); ++r) {
    cells.emplace_back(r, static_cast<std::size_t>(s.targets[r]));
  }
  return scale(gather_sum(s.log_probs, cells), -1.0);
}

Var LanguageModel::sentence_states(Graph& g, const std::vector<std::string>& raw_tokens) const {
  if (raw_tokens.empty()) throw DataError("empty sentence");
  const std::size_t n = raw_tokens.size();
  if (config_.direction == LmDirection::kForward) {
    return slice(scan(g, raw_tokens).states, 0, 1, n);
  }
  Var states = scan(g, reversed(raw_tokens)).states;
  std::vector<Var> rows;
  for (std::size_t k = 0; k < n; ++k) rows.push_back(slice(states, 0, n - k, 1));
  return n == 1 ? rows[0] : concat(rows, 0);
}

Container LanguageModel::to_container() const {
  IniDocument doc;
  doc.set("model", "kind", "language_model");
  doc.set("model", "seed", std::to_string(seed_));
  config_.write(doc, "lm");
  doc.set("vocab", "words", join_words(words_.symbols()));
  doc.set("vocab", "chars", join_words(chars_.symbols()));
  Container c;
  c.config = doc.str();
  for (const Parameter* p : params_.all()) c.tensors.emplace_back(p->name, p->value);
  return c;
}

LanguageModel LanguageModel::from_container(const Container& c) {
  const IniDocument doc = IniDocument::parse(c.config);
  if (doc.get_string("model", "kind", "") != "language_model") {
    throw DataError("container does not hold a language model");
  }
  LanguageModel m(LmConfig::read(doc, "lm"), Vocabulary(split_words(doc.require("vocab", "words"))),
                  Vocabulary(split_words(doc.get_string("vocab", "chars", ""))),
                  std::stoull(doc.require("model", "seed")));
  for (Parameter* p : m.params_.all()) {
    const Tensor& t = c.tensor(p->name);
    if (t.shape() != p->value.shape()) {
      throw DataError("tensor '" + p->name + "' has shape " + t.shape().str() + ", expected " +
                      p->value.shape().str());
    }
    p->value = t;
  }
  return m;
}

void LanguageModel::save(const std::string& path) const { save_container(path, to_container()); }

LanguageModel LanguageModel::load(const std::string& path) {
  return from_container(load_container(path));
}

std::uint32_t LanguageModel::checksum() const {
  return container_checksum(to_container());
}

Vocabulary lm_word_vocab(const LmConfig& config, const Corpus& corpus, int min_count) {
  Corpus texts;
  texts.reserve(corpus.size());
  for (const auto& s : corpus) {
    std::vector<std::string> t;
    for (const auto& w : s) t.push_back(config.normalize ? normalize(w) : w);
    texts.push_back(std::move(t));
  }
  return build_vocab(texts, min_count);
}

Vocabulary lm_char_vocab(const LmConfig& config, const Corpus& corpus) {
  if (config.input != LmInput::kCharCnn) return Vocabulary();
  Corpus chars;
  for (const auto& s : corpus) {
    std::vector<std::string> cs;
    for (const auto& w : s) {
      for (char32_t c : utf8_code_points(config.normalize ? normalize(w) : w)) {
        cs.push_back(utf8_encode(c));
      }
    }
    chars.push_back(std::move(cs));
  }
  return build_vocab(chars, 1);
}

NllTotals corpus_nll(const LanguageModel& model, const Corpus& corpus) {
  NllTotals t;
  for (const auto& s : corpus) {
    if (s.empty()) continue;
    Graph g(false);
    t.nll += model.sentence_nll(g, s).value()[0];
    t.predictions += static_cast<long>(s.size()) + 1;
  }
  return t;
}

double perplexity(const LanguageModel& model, const Corpus& corpus) {
  const NllTotals t = corpus_nll(model, corpus);
  if (t.predictions == 0) return std::numeric_limits<double>::quiet_NaN();
  return std::exp(t.nll / static_cast<double>(t.predictions));
}

std::vector<LmEpochLog> train_lm(LanguageModel& model, const Corpus& corpus,
                                 const LmTrainSettings& settings, const Corpus* heldout,
                                 const std::function<void(const LmEpochLog&)>& on_epoch) {
  if (settings.batch_size < 1) throw UsageError("batch size must be >= 1");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!corpus[i].empty()) order.push_back(i);
  }
  if (order.empty() && settings.epochs > 0) throw DataError("LM training corpus is empty");

  RngStream shuffle_rng = RngStream(settings.seed).split(1);
  Adam adam;
  std::vector<Parameter*> params = model.params().all();
  std::vector<LmEpochLog> log;
  for (int epoch = 1; epoch <= settings.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double total_nll = 0.0;
    long total_pred = 0;
    for (std::size_t b = 0; b < order.size(); b += settings.batch_size) {
      const std::size_t e = std::min(order.size(), b + settings.batch_size);
      Graph g;
      std::vector<Var> losses;
      long preds = 0;
      for (std::size_t i = b; i < e; ++i) {
        losses.push_back(model.sentence_nll(g, corpus[order[i]]));
        preds += static_cast<long>(corpus[order[i]].size()) + 1;
      }
      Var total = losses.size() == 1 ? losses[0] : sum(concat(losses, 0));
      const double nll = total.value()[0];
      if (!std::isfinite(nll)) {
        throw NumericError("non-finite LM loss in epoch " + std::to_string(epoch));
      }
      total_nll += nll;
      total_pred += preds;
      model.params().zero_grad();
      g.backward(scale(total, 1.0 / static_cast<double>(preds)));
      clip_gradients(params, settings.clip);
      adam.step(params, settings.alpha);
    }
    LmEpochLog entry;
    entry.epoch = epoch;
    entry.train_perplexity = std::exp(total_nll / static_cast<double>(total_pred));
    entry.heldout_perplexity = heldout ? perplexity(model, *heldout)
                                       : std::numeric_limits<double>::quiet_NaN();
    log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return log;
}

LanguageModel train_lm(const LmConfig& config, const Corpus& corpus,
                       const LmTrainSettings& settings, std::vector<LmEpochLog>* log,
                       const Corpus* heldout) {
  LanguageModel model(config, lm_word_vocab(config, corpus, settings.min_count),
                      lm_char_vocab(config, corpus), settings.seed);
  auto entries = train_lm(model, corpus, settings, heldout);
  if (log) *log = std::move(entries);
  return model;
}

LmEmbeddingSet extract_embeddings(const LanguageModel* forward, const LanguageModel* backward,
                                  const std::vector<std::string>& raw_tokens) {
  if (!forward && !backward) throw UsageError("extract_embeddings needs at least one LM");
  LmEmbeddingSet set;
  if (forward) set.forward = forward->forward_pass(raw_tokens).states;
  if (backward) set.backward = backward->backward_pass(raw_tokens).states;
  if (set.forward && set.backward) {
    const std::size_t n = raw_tokens.size();
    const std::size_t df = set.forward->cols();
    const std::size_t db = set.backward->cols();
    set.combined = Tensor::matrix(n, df + db);
    for (std::size_t k = 0; k < n; ++k) {
      auto f = set.forward->row_span(k);
      auto b = set.backward->row_span(k);
      auto out = set.combined.data().begin() + k * (df + db);
      std::copy(f.begin(), f.end(), out);
      std::copy(b.begin(), b.end(), out + df);
    }
  } else {
    set.combined = set.forward ? *set.forward : *set.backward;
  }
  return set;
}

std::vector<std::string> raw_tokens(const Sentence& s) {
  std::vector<std::string> out;
  out.reserve(s.tokens.size());
  for (const auto& t : s.tokens) out.push_back(t.raw);
  return out;
}

Corpus raw_corpus(const std::vector<Sentence>& sentences) {
  Corpus out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(raw_tokens(s));
  return out;
}

}  // namespace lmtag
