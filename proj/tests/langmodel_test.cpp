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


#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "lmtag/errors.h"
#include "lmtag/langmodel.h"
#include "support.h"

using namespace lmtag;
using lmtag::testing::gradcheck;

namespace {

using Tokens = std::vector<std::string>;

Vocabulary small_vocab() {
  return Vocabulary(Tokens{"the", "cat", "sat", "on", "mat", "."});
}

LmConfig tiny(CellKind cell = CellKind::kLstm) {
  LmConfig c;
  c.embed_dim = 5;
  c.hidden = 6;
  c.cell = cell;
  if (cell == CellKind::kLstmp) c.projection = 3;
  return c;
}

Tokens random_sentence(RngStream& rng, int max_len = 7) {
  static const Tokens words{"The", "cat", "sat", "on", "mat", ".", "dog"};
  Tokens s(1 + rng.below(max_len));
  for (auto& w : s) w = words[rng.below(words.size())];
  return s;
}

void randomize(LanguageModel& m, RngStream& rng) {
  for (Parameter* p : m.params().all())
    for (double& x : p->value.data()) x = rng.uniform(-0.5, 0.5);
}

bool same_rows(const Tensor& a, std::size_t ra, const Tensor& b, std::size_t rb) {
  for (std::size_t j = 0; j < a.cols(); ++j)
    if (a.at(ra, j) != b.at(rb, j)) return false;
  return true;
}

}  // namespace

TEST_SUITE("langmodel") {

TEST_CASE("log probability rows are distributions") {
  RngStream rng(1);
  for (CellKind cell : {CellKind::kLstm, CellKind::kLstmp}) {
    LanguageModel lm(tiny(cell), small_vocab(), Vocabulary(), 3);
    auto pass = lm.forward_pass({"the", "cat", "sat"});
    CHECK(pass.states.rows() == 3);
    CHECK(static_cast<int>(pass.states.cols()) == lm.output_dim());
    CHECK(pass.log_probs.rows() == 4);
    CHECK(static_cast<int>(pass.log_probs.cols()) == lm.vocab_size());
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0;
      for (std::size_t j = 0; j < pass.log_probs.cols(); ++j) s += std::exp(pass.log_probs.at(r, j));
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("zero weights give uniform perplexity") {
  LanguageModel lm(tiny(), small_vocab(), Vocabulary(), 3);
  for (Parameter* p : lm.params().all()) p->value.fill(0.0);
  CHECK(lm.vocab_size() == 10);
  Corpus corpus{{"the", "cat"}, {"zebra", "sat", "on", "the", "mat", "."}};
  CHECK(std::abs(perplexity(lm, corpus) - 10.0) <= 1e-9);
}

TEST_CASE("perplexity matches a naive summation") {
  RngStream rng(2);
  LanguageModel fwd(tiny(), small_vocab(), Vocabulary(), 4);
  LmConfig bc = tiny();
  bc.direction = LmDirection::kBackward;
  LanguageModel bwd(bc, small_vocab(), Vocabulary(), 5);
  Corpus corpus;
  for (int i = 0; i < 10; ++i) corpus.push_back(random_sentence(rng));
  for (LanguageModel* lm : {&fwd, &bwd}) {
    double nll = 0;
    long count = 0;
    for (const auto& s : corpus) {
      auto pass = lm->run(s);
      auto ids = lm->token_ids(s);
      const std::size_t n = s.size();
      if (lm->config().direction == LmDirection::kForward) {
        for (std::size_t j = 0; j < n; ++j) nll -= pass.log_probs.at(j, ids[j]);
        nll -= pass.log_probs.at(n, Vocabulary::kEos);
      } else {
        for (std::size_t j = 1; j <= n; ++j) nll -= pass.log_probs.at(j, ids[j - 1]);
        nll -= pass.log_probs.at(0, Vocabulary::kEos);  // scan-relative end sentinel
      }
      count += static_cast<long>(n) + 1;
    }
    auto totals = corpus_nll(*lm, corpus);
    CHECK(totals.predictions == count);
    CHECK(totals.nll == doctest::Approx(nll).epsilon(1e-12));
    CHECK(perplexity(*lm, corpus) == doctest::Approx(std::exp(nll / count)).epsilon(1e-12));
  }
}

TEST_CASE("backward pass equals forward pass on the reversed sentence") {
  RngStream rng(3);
  for (CellKind cell : {CellKind::kLstm, CellKind::kLstmp}) {
    LanguageModel lm(tiny(cell), small_vocab(), Vocabulary(), 6);
    randomize(lm, rng);
    for (int trial = 0; trial < 100; ++trial) {
      Tokens s = random_sentence(rng);
      Tokens r(s.rbegin(), s.rend());
      auto b = lm.backward_pass(s);
      auto f = lm.forward_pass(r);
      const std::size_t n = s.size();
      for (std::size_t k = 0; k < n; ++k) CHECK(same_rows(b.states, k, f.states, n - 1 - k));
      for (std::size_t j = 0; j <= n; ++j) CHECK(same_rows(b.log_probs, j, f.log_probs, n - j));
    }
  }
}

TEST_CASE("causality") {
  RngStream rng(4);
  LanguageModel lm(tiny(), small_vocab(), Vocabulary(), 6);
  randomize(lm, rng);
  for (int trial = 0; trial < 30; ++trial) {
    Tokens s = random_sentence(rng);
    Tokens t = s;
    const std::size_t k = rng.below(s.size());
    t[k] = t[k] == "cat" ? "mat" : "cat";
    auto fs = lm.forward_pass(s), ft = lm.forward_pass(t);
    auto bs = lm.backward_pass(s), bt = lm.backward_pass(t);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i < k) CHECK(same_rows(fs.states, i, ft.states, i));
      if (i > k) CHECK(same_rows(bs.states, i, bt.states, i));
    }
  }
}

TEST_CASE("single token sentence") {
  LanguageModel lm(tiny(), small_vocab(), Vocabulary(), 6);
  auto f = lm.forward_pass({"cat"});
  auto b = lm.backward_pass({"cat"});
  CHECK(f.states.rows() == 1);
  CHECK(b.states.rows() == 1);
  CHECK(same_rows(f.states, 0, b.states, 0));
  CHECK_THROWS_AS(lm.forward_pass({}), DataError);
}

TEST_CASE("graph states agree with the inference pass") {
  RngStream rng(5);
  for (LmDirection d : {LmDirection::kForward, LmDirection::kBackward}) {
    LmConfig c = tiny();
    c.direction = d;
    LanguageModel lm(c, small_vocab(), Vocabulary(), 6);
    Tokens s = random_sentence(rng);
    Graph g(false);
    CHECK(lm.sentence_states(g, s).value() == lm.run(s).states);
  }
}

TEST_CASE("nll gradients") {
  RngStream rng(6);
  for (CellKind cell : {CellKind::kLstm, CellKind::kLstmp}) {
    LmConfig c = tiny(cell);
    c.direction = LmDirection::kBackward;
    LanguageModel lm(c, small_vocab(), Vocabulary(), 6);
    randomize(lm, rng);
    Tokens s{"the", "cat", "sat", "."};
    auto params = lm.params().all();
    auto res = gradcheck(params, [&](Graph& g) { return lm.sentence_nll(g, s); });
    CHECK(res.max_rel <= 1e-4);
  }
  LmConfig cc = tiny();
  cc.input = LmInput::kCharCnn;
  cc.char_dim = 3;
  cc.char_filters = 4;
  Corpus corpus{{"the", "cat"}};
  LanguageModel lm(cc, lm_word_vocab(cc, corpus, 1), lm_char_vocab(cc, corpus), 2);
  auto params = lm.params().all();
  auto res = gradcheck(params, [&](Graph& g) { return lm.sentence_nll(g, {"the", "cat"}); });
  CHECK(res.max_rel <= 1e-4);
}

TEST_CASE("memorizes a repeated sentence") {
  LmConfig c = tiny();
  c.embed_dim = 8;
  c.hidden = 16;
  Corpus corpus(4, Tokens{"the", "cat", "sat", "on", "the", "mat", "."});
  LmTrainSettings st;
  st.epochs = 200;
  st.alpha = 0.01;
  st.batch_size = 4;
  std::vector<LmEpochLog> log;
  LanguageModel lm = train_lm(c, corpus, st, &log);
  REQUIRE(log.size() == 200);
  CHECK(perplexity(lm, corpus) <= 1.05);
  for (int e = 1; e < 15; ++e) CHECK(log[e].train_perplexity <= log[e - 1].train_perplexity + 1e-6);
}

TEST_CASE("zero epochs leave the initialization") {
  Corpus corpus{{"a", "b"}};
  LmConfig c = tiny();
  LmTrainSettings st;
  st.epochs = 0;
  st.seed = 9;
  LanguageModel trained = train_lm(c, corpus, st);
  LanguageModel fresh(c, lm_word_vocab(c, corpus, 1), Vocabulary(), 9);
  CHECK(trained.checksum() == fresh.checksum());
  st.epochs = 1;
  CHECK_THROWS_AS(train_lm(c, Corpus{}, st), DataError);
}

TEST_CASE("training is deterministic given the seed") {
  Corpus corpus{{"a", "b", "c"}, {"b", "a"}, {"c"}};
  LmTrainSettings st;
  st.epochs = 3;
  st.batch_size = 2;
  LanguageModel a = train_lm(tiny(), corpus, st);
  LanguageModel b = train_lm(tiny(), corpus, st);
  CHECK(a.checksum() == b.checksum());
  st.seed = 2;
  CHECK(train_lm(tiny(), corpus, st).checksum() != a.checksum());
}

TEST_CASE("container round trip") {
  RngStream rng(7);
  LmConfig c = tiny(CellKind::kLstmp);
  c.direction = LmDirection::kBackward;
  c.layers = 2;
  LanguageModel lm(c, small_vocab(), Vocabulary(), 6);
  randomize(lm, rng);
  const std::string path = "lm_roundtrip_test.lmtc";
  lm.save(path);
  LanguageModel back = LanguageModel::load(path);
  std::remove(path.c_str());
  CHECK(back.config().direction == LmDirection::kBackward);
  CHECK(back.config().layers == 2);
  CHECK(back.words() == lm.words());
  for (const Parameter* p : lm.params().all())
    CHECK(back.params().at(p->name).value == to_stored_precision(p->value));
  CHECK(back.checksum() == LanguageModel::from_container(back.to_container()).checksum());
}

TEST_CASE("embedding extraction") {
  RngStream rng(8);
  LmConfig fc = tiny();
  LmConfig bc = tiny(CellKind::kLstmp);
  bc.direction = LmDirection::kBackward;
  LanguageModel fwd(fc, small_vocab(), Vocabulary(), 1);
  LanguageModel bwd(bc, small_vocab(), Vocabulary(), 2);
  Tokens s{"the", "cat", "sat"};
  auto both = extract_embeddings(&fwd, &bwd, s);
  CHECK(both.combined.cols() == 6 + 3);
  CHECK(both.combined.rows() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t j = 0; j < 6; ++j) CHECK(both.combined.at(k, j) == both.forward->at(k, j));
    for (std::size_t j = 0; j < 3; ++j) CHECK(both.combined.at(k, 6 + j) == both.backward->at(k, j));
  }
  auto f_only = extract_embeddings(&fwd, nullptr, s);
  CHECK(f_only.combined == *f_only.forward);
  CHECK_FALSE(f_only.backward.has_value());
  auto b_only = extract_embeddings(nullptr, &bwd, s);
  CHECK(b_only.combined == bwd.backward_pass(s).states);
  CHECK(extract_embeddings(&fwd, &bwd, s).combined == both.combined);
  CHECK_THROWS_AS(extract_embeddings(nullptr, nullptr, s), UsageError);
}

TEST_CASE("config validation and io") {
  LmConfig gru = tiny();
  gru.cell = CellKind::kGru;
  CHECK_THROWS_AS(LanguageModel(gru, small_vocab(), Vocabulary(), 1), UsageError);
  LmConfig c = tiny(CellKind::kLstmp);
  c.input = LmInput::kCharCnn;
  c.normalize = false;
  IniDocument doc;
  c.write(doc, "lm");
  LmConfig back = LmConfig::read(doc, "lm");
  CHECK(back.cell == CellKind::kLstmp);
  CHECK(back.projection == 3);
  CHECK(back.input == LmInput::kCharCnn);
  CHECK_FALSE(back.normalize);
  CHECK(parse_lm_direction("backward") == LmDirection::kBackward);
  CHECK_THROWS_AS(parse_lm_direction("sideways"), UsageError);
}

TEST_CASE("normalization controls the token text") {
  LmConfig c = tiny();
  LanguageModel lm(c, small_vocab(), Vocabulary(), 1);
  CHECK(lm.token_text("The") == "the");
  CHECK(lm.token_ids({"The", "zebra"}) == std::vector<int>{lm.words().id("the"), Vocabulary::kUnk});
  c.normalize = false;
  LanguageModel raw(c, small_vocab(), Vocabulary(), 1);
  CHECK(raw.token_text("The") == "The");
}

}  // TEST_SUITE
