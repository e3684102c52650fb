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

#include "lmtag/tagger.h"

#include <cmath>

#include "lmtag/errors.h"

namespace lmtag {

std::string insertion_mode_name(InsertionMode mode) {
  switch (mode) {
    case InsertionMode::kNone: return "none";
    case InsertionMode::kInputFirst: return "input_first";
    case InsertionMode::kOutputFirst: return "output_first";
    case InsertionMode::kOutputSecond: return "output_second";
    case InsertionMode::kLmOnly: return "lm_only";
  }
  return "?";
}

InsertionMode parse_insertion_mode(std::string_view name) {
  for (auto m : {InsertionMode::kNone, InsertionMode::kInputFirst, InsertionMode::kOutputFirst,
                 InsertionMode::kOutputSecond, InsertionMode::kLmOnly}) {
    if (insertion_mode_name(m) == name) return m;
  }
  throw UsageError("unknown insertion mode '" + std::string(name) + "'");
}

void TaggerConfig::validate() const {
  if (mode == InsertionMode::kNone && lm_dim != 0) {
    throw UsageError("insertion mode none with LM dimension " + std::to_string(lm_dim));
  }
  if (mode == InsertionMode::kLmOnly) {
    if (lm_dim <= 0) throw UsageError("lm_only mode needs LM embeddings (lm_dim > 0)");
    return;
  }
  if (lm_dim < 0) throw UsageError("negative LM dimension");
  if (word_dim < 1 || h1 < 1 || h2 < 1) throw UsageError("word_dim, h1 and h2 must be >= 1");
  if (rnn == CellKind::kLstmp) throw UsageError("tagger RNN must be gru or lstm");
  if (use_chars) {
    if (chars.char_dim < 1) throw UsageError("char_dim must be >= 1");
    if (chars.kind == CharEncoderKind::kCnn && (chars.filters < 1 || chars.width < 1)) {
      throw UsageError("char CNN needs filters and width >= 1");
    }
    if (chars.kind == CharEncoderKind::kRnn && (chars.hidden < 1 || chars.layers < 1)) {
      throw UsageError("char RNN needs hidden and layers >= 1");
    }
  }
  for (double p : {rnn_input_dropout, output_dropout, chars.dropout}) {
    if (p < 0.0 || p >= 1.0) throw UsageError("dropout rates must be in [0, 1)");
  }
}

void TaggerConfig::write(IniDocument& doc, const std::string& s) const {
  doc.set(s, "use_chars", use_chars);
  doc.set(s, "char_encoder", chars.kind == CharEncoderKind::kCnn ? "cnn" : "rnn");
  doc.set(s, "char_dim", chars.char_dim);
  doc.set(s, "char_filters", chars.filters);
  doc.set(s, "char_width", chars.width);
  doc.set(s, "char_hidden", chars.hidden);
  doc.set(s, "char_layers", chars.layers);
  doc.set(s, "char_dropout", chars.dropout);
  doc.set(s, "chars_from_raw", chars_from_raw);
  doc.set(s, "word_dim", word_dim);
  doc.set(s, "rnn", cell_kind_name(rnn));
  doc.set(s, "h1", h1);
  doc.set(s, "h2", h2);
  doc.set(s, "rnn_input_dropout", rnn_input_dropout);
  doc.set(s, "output_dropout", output_dropout);
  doc.set(s, "mode", insertion_mode_name(mode));
  doc.set(s, "lm_dim", lm_dim);
  doc.set(s, "constrained", constrained);
}

TaggerConfig TaggerConfig::read(const IniDocument& doc, const std::string& s) {
  TaggerConfig c;
  if (auto preset = doc.get(s, "preset")) c = tagger_preset(*preset);
  c.use_chars = doc.get_bool(s, "use_chars", c.use_chars);
  const std::string enc =
      doc.get_string(s, "char_encoder", c.chars.kind == CharEncoderKind::kCnn ? "cnn" : "rnn");
  if (enc == "cnn") {
    c.chars.kind = CharEncoderKind::kCnn;
  } else if (enc == "rnn") {
    c.chars.kind = CharEncoderKind::kRnn;
  } else {
    throw DataError("unknown char_encoder '" + enc + "'");
  }
  c.chars.char_dim = doc.get_int(s, "char_dim", c.chars.char_dim);
  c.chars.filters = doc.get_int(s, "char_filters", c.chars.filters);
  c.chars.width = doc.get_int(s, "char_width", c.chars.width);
  c.chars.hidden = doc.get_int(s, "char_hidden", c.chars.hidden);
  c.chars.layers = doc.get_int(s, "char_layers", c.chars.layers);
  c.chars.dropout = doc.get_double(s, "char_dropout", c.chars.dropout);
  c.chars_from_raw = doc.get_bool(s, "chars_from_raw", c.chars_from_raw);
  c.word_dim = doc.get_int(s, "word_dim", c.word_dim);
  c.rnn = parse_cell_kind(doc.get_string(s, "rnn", cell_kind_name(c.rnn)));
  c.h1 = doc.get_int(s, "h1", c.h1);
  c.h2 = doc.get_int(s, "h2", c.h2);
  c.rnn_input_dropout = doc.get_double(s, "rnn_input_dropout", c.rnn_input_dropout);
  c.output_dropout = doc.get_double(s, "output_dropout", c.output_dropout);
  c.mode = parse_insertion_mode(doc.get_string(s, "mode", insertion_mode_name(c.mode)));
  c.lm_dim = doc.get_int(s, "lm_dim", c.lm_dim);
  c.constrained = doc.get_bool(s, "constrained", c.constrained);
  return c;
}

namespace {

int shrink(int v) { return (v + 4) / 5; }

}  // namespace

TaggerConfig tagger_preset(std::string_view name) {
  TaggerConfig c;
  const bool desk = name.starts_with("desk-");
  const std::string_view task = desk ? name.substr(5) : name;
  if (task == "conll2003-ner" || task == "ner") {
    c.rnn = CellKind::kGru;
    c.h1 = c.h2 = 300;
    c.chars.kind = CharEncoderKind::kRnn;
    c.chars.char_dim = 25;
    c.chars.hidden = 80;
    c.chars.layers = 1;
    c.chars.dropout = 0.0;
    c.word_dim = 50;
    c.rnn_input_dropout = 0.25;
    c.output_dropout = 0.0;
  } else if (task == "conll2000-chunk" || task == "chunk") {
    c.rnn = CellKind::kLstm;
    c.h1 = c.h2 = 200;
    c.chars.kind = CharEncoderKind::kCnn;
    c.chars.char_dim = 30;
    c.chars.filters = 30;
    c.chars.width = 3;
    c.chars.dropout = 0.5;
    c.word_dim = 50;
    c.rnn_input_dropout = 0.5;
    c.output_dropout = 0.5;
  } else {
    throw UsageError("unknown tagger preset '" + std::string(name) + "'");
  }
  if (desk) {
    c.h1 = shrink(c.h1);
    c.h2 = shrink(c.h2);
    c.chars.char_dim = shrink(c.chars.char_dim);
    c.chars.hidden = shrink(c.chars.hidden);
    c.chars.filters = shrink(c.chars.filters);
    c.word_dim = shrink(c.word_dim);
  }
  return c;
}

std::vector<std::string> tagger_preset_names() {
  return {"conll2003-ner", "conll2000-chunk", "desk-ner", "desk-chunk"};
}

std::size_t parameter_count(const TaggerConfig& c, const TaggerSizes& sizes) {
  if (c.mode == InsertionMode::kLmOnly) {
    return CrfLayer::parameter_count(c.crf_input_dim(), sizes.labels);
  }
  std::size_t n = 0;
  if (c.use_chars) n += CharEncoder::parameter_count(c.chars, sizes.chars);
  n += static_cast<std::size_t>(sizes.words) * c.word_dim;
  n += BiLayer::parameter_count(CellSpec{c.rnn, c.layer1_input_dim(), c.h1, 0});
  n += BiLayer::parameter_count(CellSpec{c.rnn, c.layer2_input_dim(), c.h2, 0});
  n += CrfLayer::parameter_count(c.crf_input_dim(), sizes.labels);
  return n;
}

TaggerConfig match_parameters(const TaggerConfig& base, const TaggerSizes& sizes,
                              std::size_t target) {
  if (base.mode == InsertionMode::kLmOnly) throw UsageError("lm_only has no h2 to match");
  auto count_at = [&](int h2) {
    TaggerConfig c = base;
    c.h2 = h2;
    return parameter_count(c, sizes);
  };
  if (target < count_at(1)) {
    throw UsageError("target parameter count " + std::to_string(target) +
                     " is below the minimum " + std::to_string(count_at(1)));
  }
  int lo = 1;
  int hi = std::max(1, base.h2);
  while (count_at(hi) < target) hi *= 2;
  // Smallest h2 whose count reaches the target.
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (count_at(mid) >= target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  int best = lo;
  if (lo > 1 && target - count_at(lo - 1) <= count_at(lo) - target) best = lo - 1;
  TaggerConfig out = base;
  out.h2 = best;
  return out;
}

TaggerModel::TaggerModel(TaggerConfig config, Vocabulary words, Vocabulary chars,
                         LabelScheme scheme, std::uint64_t seed)
    : config_(config),
      words_(std::move(words)),
      chars_(std::move(chars)),
      scheme_(std::move(scheme)),
      seed_(seed) {
  config_.validate();
  RngStream rng(seed);
  if (config_.mode != InsertionMode::kLmOnly) {
    if (config_.use_chars) {
      char_encoder_ = CharEncoder(params_, "tagger.chars", config_.chars, chars_.size(), rng);
    }
    word_table_ = EmbeddingTable(params_, "tagger.words", words_.size(), config_.word_dim, rng);
    layer1_ = BiLayer(params_, "tagger.rnn1",
                      CellSpec{config_.rnn, config_.layer1_input_dim(), config_.h1, 0},
                      config_.rnn_input_dropout, rng);
    layer2_ = BiLayer(params_, "tagger.rnn2",
                      CellSpec{config_.rnn, config_.layer2_input_dim(), config_.h2, 0},
                      config_.rnn_input_dropout, rng);
  }
  crf_ = CrfLayer(params_, "tagger.crf", config_.crf_input_dim(), scheme_, config_.constrained,
                  rng);
}

void TaggerModel::set_word_embeddings(const Tensor& table) {
  if (config_.mode == InsertionMode::kLmOnly) return;
  Parameter& p = word_table_.table();
  if (table.shape() != p.value.shape()) {
    throw ShapeError("word embedding table " + table.shape().str() + " does not match " +
                     p.value.shape().str());
  }
  p.value = table;
}

bool TaggerModel::uses_lm() const {
  return config_.mode != InsertionMode::kNone && config_.lm_dim > 0;
}

Var TaggerModel::forward(Graph& g, const Sentence& sentence, const Tensor* lm,
                         RngStream* dropout_rng) const {
  return forward(g, sentence, lm ? g.constant(*lm) : Var(), dropout_rng);
}

Var TaggerModel::forward(Graph& g, const Sentence& sentence, Var lm,
                         RngStream* dropout_rng) const {
  const std::size_t n = sentence.size();
  if (n == 0) throw DataError("empty sentence");
  if (uses_lm()) {
    if (!lm.valid()) {
      throw UsageError("insertion mode " + insertion_mode_name(config_.mode) +
                       " needs LM embeddings");
    }
    if (lm.rows() != n || lm.cols() != static_cast<std::size_t>(config_.lm_dim)) {
      throw ShapeError("LM embeddings are " + lm.shape().str() + ", expected [" +
                       std::to_string(n) + "x" + std::to_string(config_.lm_dim) + "]");
    }
  }
  auto join = [&](Var h, InsertionMode at) {
    return uses_lm() && config_.mode == at ? concat({h, lm}, 1) : h;
  };
  if (config_.mode == InsertionMode::kLmOnly) return crf_.emissions(g, lm);

  std::vector<int> word_ids;
  word_ids.reserve(n);
  for (const auto& t : sentence.tokens) word_ids.push_back(words_.id(t.norm));
  Var x = word_table_.lookup(g, word_ids);
  if (config_.use_chars) {
    std::vector<std::vector<int>> token_chars;
    token_chars.reserve(n);
    for (const auto& t : sentence.tokens) {
      auto ids = char_ids(config_.chars_from_raw ? t.raw : t.norm, chars_);
      if (ids.empty()) ids.push_back(Vocabulary::kUnk);
      token_chars.push_back(std::move(ids));
    }
    x = concat({char_encoder_.encode(g, token_chars, dropout_rng), x}, 1);
  }
  x = join(x, InsertionMode::kInputFirst);
  Var h = join(layer1_.run(g, x, dropout_rng), InsertionMode::kOutputFirst);
  h = join(layer2_.run(g, h, dropout_rng), InsertionMode::kOutputSecond);
  if (dropout_rng != nullptr && config_.output_dropout > 0.0) {
    h = dropout_mask_apply(
        h, dropout_mask(h.rows(), h.cols(), config_.output_dropout, *dropout_rng));
  }
  return crf_.emissions(g, h);
}

std::vector<int> TaggerModel::gold_indices(const Sentence& sentence) const {
  if (sentence.tags.size() != sentence.size()) throw DataError("sentence has no gold tags");
  std::vector<int> gold;
  gold.reserve(sentence.size());
  for (std::size_t k = 0; k < sentence.size(); ++k) {
    const int id = scheme_.index(sentence.tags[k]);
    if (id < 0) {
      throw DataError("tag '" + sentence.tags[k] + "' at position " + std::to_string(k) +
                      " is not in the " + scheme_name(scheme_.kind()) + " inventory");
    }
    gold.push_back(id);
  }
  return gold;
}

Var TaggerModel::loss(Graph& g, const Sentence& sentence, const Tensor* lm,
                      RngStream* dropout_rng) const {
  return loss(g, sentence, lm ? g.constant(*lm) : Var(), dropout_rng);
}

Var TaggerModel::loss(Graph& g, const Sentence& sentence, Var lm,
                      RngStream* dropout_rng) const {
  const std::vector<int> gold = gold_indices(sentence);
  return crf_.nll(g, forward(g, sentence, lm, dropout_rng), gold);
}

std::vector<std::string> TaggerModel::predict(const Sentence& sentence, const Tensor* lm) const {
  Graph g(false);
  const ViterbiResult best = crf_.decode(forward(g, sentence, lm, nullptr).value());
  std::vector<std::string> tags;
  tags.reserve(best.tags.size());
  for (int t : best.tags) tags.push_back(scheme_.tag(t));
  return tags;
}

Container TaggerModel::to_container() const {
  IniDocument doc;
  doc.set("model", "kind", "tagger");
  doc.set("model", "seed", std::to_string(seed_));
  config_.write(doc, "tagger");
  doc.set("labels", "scheme", scheme_name(scheme_.kind()));
  doc.set("labels", "types", join_words(scheme_.types()));
  doc.set("vocab", "words", join_words(words_.symbols()));
  doc.set("vocab", "chars", join_words(chars_.symbols()));
  Container c;
  c.config = doc.str();
  for (const Parameter* p : params_.all()) c.tensors.emplace_back(p->name, p->value);
  return c;
}

TaggerModel TaggerModel::from_container(const Container& c) {
  const IniDocument doc = IniDocument::parse(c.config);
  if (doc.get_string("model", "kind", "") != "tagger") {
    throw DataError("container does not hold a tagger");
  }
  TaggerModel m(TaggerConfig::read(doc, "tagger"),
                Vocabulary(split_words(doc.get_string("vocab", "words", ""))),
                Vocabulary(split_words(doc.get_string("vocab", "chars", ""))),
                LabelScheme(parse_scheme_kind(doc.require("labels", "scheme")),
                            split_words(doc.get_string("labels", "types", ""))),
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

void TaggerModel::save(const std::string& path) const { save_container(path, to_container()); }

TaggerModel TaggerModel::load(const std::string& path) {
  return from_container(load_container(path));
}

}  // namespace lmtag
