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
#include <sstream>
#include <vector>

#include "doctest.h"
#include "lmtag/errors.h"
#include "lmtag/layers.h"
#include "support.h"

using namespace lmtag;
using lmtag::testing::gradcheck;
using lmtag::testing::random_tensor;

namespace {

using Vec = std::vector<double>;

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// v [1 x rows(m)] times m.
Vec vecmat(const Vec& v, const Tensor& m) {
  Vec out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += v[i] * m.at(i, j);
  return out;
}

struct PlainState {
  Vec h, c;
};

// Textbook cell equations on plain vectors.
PlainState plain_step(const ParameterSet& ps, const std::string& pre, const CellSpec& spec,
                      const Vec& x, const PlainState& s) {
  const int h = spec.hidden_dim;
  const Tensor& b = ps.at(pre + ".b").value;
  Vec xw = vecmat(x, ps.at(pre + ".W").value);
  PlainState out;
  if (spec.kind == CellKind::kGru) {
    Vec hu = vecmat(s.h, ps.at(pre + ".U_zr").value);
    Vec z(h), r(h), rh(h);
    for (int j = 0; j < h; ++j) {
      z[j] = sig(xw[j] + b[j] + hu[j]);
      r[j] = sig(xw[h + j] + b[h + j] + hu[h + j]);
      rh[j] = r[j] * s.h[j];
    }
    Vec nu = vecmat(rh, ps.at(pre + ".U_n").value);
    out.h.resize(h);
    for (int j = 0; j < h; ++j) {
      const double n = std::tanh(xw[2 * h + j] + b[2 * h + j] + nu[j]);
      out.h[j] = (1 - z[j]) * n + z[j] * s.h[j];
    }
    return out;
  }
  Vec hu = vecmat(s.h, ps.at(pre + ".U").value);
  out.c.resize(h);
  Vec m(h);
  for (int j = 0; j < h; ++j) {
    auto a = [&](int gate) { return xw[gate * h + j] + b[gate * h + j] + hu[gate * h + j]; };
    const double i = sig(a(0)), f = sig(a(1)), o = sig(a(2)), g = std::tanh(a(3));
    out.c[j] = f * s.c[j] + i * g;
    m[j] = o * std::tanh(out.c[j]);
  }
  out.h = spec.kind == CellKind::kLstmp ? vecmat(m, ps.at(pre + ".P").value) : m;
  return out;
}

const CellSpec kSpecs[] = {
    {CellKind::kGru, 3, 4, 0},
    {CellKind::kLstm, 3, 4, 0},
    {CellKind::kLstmp, 3, 5, 2},
};

void randomize(ParameterSet& ps, RngStream& rng) {
  for (Parameter* p : ps.all())
    for (double& x : p->value.data()) x = rng.uniform(-0.8, 0.8);
}

}  // namespace

TEST_SUITE("layers") {

TEST_CASE("cell parameter counts follow the closed forms") {
  RngStream rng(1);
  for (const CellSpec& spec : kSpecs) {
    ParameterSet ps;
    RecurrentCell cell(ps, "c", spec, rng);
    const std::size_t d = spec.input_dim, h = spec.hidden_dim, p = spec.projection_dim;
    std::size_t expect = 0;
    if (spec.kind == CellKind::kGru) expect = 3 * (d * h + h * h + h);
    if (spec.kind == CellKind::kLstm) expect = 4 * (d * h + h * h + h);
    if (spec.kind == CellKind::kLstmp) expect = 4 * (d * h + p * h + h) + h * p;
    CHECK(ps.scalar_count() == expect);
    CHECK(RecurrentCell::parameter_count(spec) == expect);
    CHECK(cell.output_dim() == (spec.kind == CellKind::kLstmp ? 2 : spec.hidden_dim));
  }
}

TEST_CASE("zero parameters map the zero state to zero") {
  RngStream rng(1);
  for (const CellSpec& spec : kSpecs) {
    ParameterSet ps;
    RecurrentCell cell(ps, "c", spec, rng);
    for (Parameter* p : ps.all()) p->value.fill(0.0);
    Graph g(false);
    auto s = cell.step(g, g.constant(Tensor::matrix(1, 3, 0.0)), cell.zero_state(g));
    for (double x : s.h.value().data()) CHECK(x == 0.0);
    if (spec.kind != CellKind::kGru)
      for (double x : s.c.value().data()) CHECK(x == 0.0);
  }
}

TEST_CASE("lstm forget bias starts at one") {
  RngStream rng(1);
  ParameterSet ps;
  RecurrentCell cell(ps, "c", {CellKind::kLstm, 2, 3, 0}, rng);
  const Tensor& b = ps.at("c.b").value;
  for (int j = 0; j < 12; ++j) CHECK(b[j] == (j >= 3 && j < 6 ? 1.0 : 0.0));
}

TEST_CASE("cell steps match plain equations") {
  RngStream rng(21);
  for (const CellSpec& spec : kSpecs) {
    CAPTURE(cell_kind_name(spec.kind));
    ParameterSet ps;
    RecurrentCell cell(ps, "c", spec, rng);
    randomize(ps, rng);
    Tensor xs = random_tensor(4, 3, rng);
    Graph g(false);
    Var out = cell.scan(g, g.constant(xs), false);
    PlainState s{Vec(cell.output_dim(), 0.0), Vec(spec.hidden_dim, 0.0)};
    for (std::size_t k = 0; k < 4; ++k) {
      Vec x(xs.row_span(k).begin(), xs.row_span(k).end());
      s = plain_step(ps, "c", spec, x, s);
      for (int j = 0; j < cell.output_dim(); ++j)
        CHECK(out.value().at(k, j) == doctest::Approx(s.h[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("reverse scan equals forward scan of reversed rows") {
  RngStream rng(5);
  for (const CellSpec& spec : kSpecs) {
    ParameterSet ps;
    RecurrentCell cell(ps, "c", spec, rng);
    Tensor xs = random_tensor(5, 3, rng);
    Tensor rev = Tensor::matrix(5, 3);
    for (std::size_t k = 0; k < 5; ++k)
      for (std::size_t j = 0; j < 3; ++j) rev.at(4 - k, j) = xs.at(k, j);
    Graph g(false);
    const Tensor a = cell.scan(g, g.constant(xs), true).value();
    const Tensor b = cell.scan(g, g.constant(rev), false).value();
    for (std::size_t k = 0; k < 5; ++k)
      for (std::size_t j = 0; j < a.cols(); ++j) CHECK(a.at(k, j) == b.at(4 - k, j));
  }
}

TEST_CASE("cell and bi-layer gradients") {
  RngStream rng(8);
  for (const CellSpec& spec : kSpecs) {
    CAPTURE(cell_kind_name(spec.kind));
    ParameterSet ps;
    BiLayer layer(ps, "bi", spec, 0.0, rng);
    randomize(ps, rng);
    Parameter& x = ps.add("x", random_tensor(4, 3, rng));
    Tensor w = random_tensor(4, layer.output_dim(), rng);
    auto params = ps.all();
    auto res = gradcheck(params, [&](Graph& g) {
      return sum(mul(layer.run(g, g.param(x), nullptr), g.constant(w)));
    });
    CHECK(res.max_rel <= 1e-4);
  }
}

TEST_CASE("dense and embedding gradients") {
  RngStream rng(9);
  ParameterSet ps;
  Dense dense(ps, "d", 4, 3, rng);
  EmbeddingTable table(ps, "e", 6, 4, rng);
  randomize(ps, rng);
  const std::vector<int> ids{5, 1, 1, 0};
  Tensor w = random_tensor(4, 3, rng);
  auto params = ps.all();
  auto res = gradcheck(params, [&](Graph& g) {
    return sum(mul(tanh(dense.apply(g, table.lookup(g, ids))), g.constant(w)));
  });
  CHECK(res.max_rel <= 1e-4);
  CHECK(Dense::parameter_count(4, 3) == 15);
}

TEST_CASE("char encoder gradients and shapes") {
  RngStream rng(10);
  CharEncoderConfig cnn;
  cnn.kind = CharEncoderKind::kCnn;
  cnn.char_dim = 3;
  cnn.filters = 4;
  cnn.width = 3;
  CharEncoderConfig rnn;
  rnn.kind = CharEncoderKind::kRnn;
  rnn.char_dim = 3;
  rnn.hidden = 2;
  rnn.layers = 2;
  const std::vector<std::vector<int>> tokens{{4, 5, 6, 7}, {8}, {5, 4}};
  for (const auto& config : {cnn, rnn}) {
    ParameterSet ps;
    CharEncoder enc(ps, "ch", config, 9, rng);
    randomize(ps, rng);
    CHECK(ps.scalar_count() == CharEncoder::parameter_count(config, 9));
    Tensor w = random_tensor(3, enc.output_dim(), rng);
    auto params = ps.all();
    auto res = gradcheck(params, [&](Graph& g) {
      Var out = enc.encode(g, tokens, nullptr);
      CHECK(out.rows() == 3);
      CHECK(static_cast<int>(out.cols()) == config.output_dim());
      return sum(mul(out, g.constant(w)));
    });
    CHECK(res.max_rel <= 1e-4);
  }
  CHECK(cnn.output_dim() == 4);
  CHECK(rnn.output_dim() == 4);
}

TEST_CASE("char cnn is position invariant by max pooling") {
  RngStream rng(12);
  CharEncoderConfig cnn;
  cnn.char_dim = 4;
  cnn.filters = 5;
  cnn.width = 3;
  ParameterSet ps;
  CharEncoder enc(ps, "ch", cnn, 10, rng);
  Graph g(false);
  const std::vector<int> word{4, 5, 6};
  Tensor one = enc.encode_token(g, word, nullptr).value();
  Tensor again = enc.encode(g, {{7, 8}, word}, nullptr).value();
  for (std::size_t j = 0; j < 5; ++j) CHECK(one[j] == again.at(1, j));
}

TEST_CASE("embedding file loading") {
  Vocabulary vocab(std::vector<std::string>{"the", "cat", "0000"});
  RngStream rng(2);
  std::istringstream in("The 1 2\nzebra 3 4\ncat 5 6\n1999 7 8\nthe 9 9\n");
  auto e = load_embeddings(in, vocab, rng);
  CHECK(e.dim == 2);
  CHECK(e.found == 3);
  CHECK(e.coverage == doctest::Approx(1.0));
  const int the = vocab.id("the");
  CHECK(e.table.at(the, 0) == 1.0);
  CHECK(e.table.at(vocab.id("0000"), 1) == 8.0);
  std::istringstream ragged("a 1 2\nb 3\n");
  CHECK_THROWS_AS(load_embeddings(ragged, vocab, rng), DataError);
  std::istringstream bad("a 1 x\n");
  CHECK_THROWS_AS(load_embeddings(bad, vocab, rng), DataError);
  std::istringstream empty("");
  CHECK_THROWS_AS(load_embeddings(empty, vocab, rng), DataError);
}

TEST_CASE("init ranges") {
  RngStream rng(4);
  Tensor w = glorot_uniform(10, 30, rng);
  const double lim = std::sqrt(6.0 / 40.0);
  for (double x : w.data()) CHECK(std::abs(x) <= lim);
  Tensor e = embedding_uniform(50, 12, rng);
  for (double x : e.data()) CHECK(std::abs(x) <= std::sqrt(3.0 / 12.0));
}

}  // TEST_SUITE
