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

#include "lmtag/layers.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lmtag/errors.h"

namespace lmtag {

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t = Tensor::matrix(fan_in, fan_out);
  for (double& x : t.data()) x = rng.uniform(-limit, limit);
  return t;
}

Tensor embedding_uniform(std::size_t rows, std::size_t dim, RngStream& rng) {
  const double limit = std::sqrt(3.0 / static_cast<double>(dim));
  Tensor t = Tensor::matrix(rows, dim);
  for (double& x : t.data()) x = rng.uniform(-limit, limit);
  return t;
}

// ---------------------------------------------------------------------------
// Dense / EmbeddingTable

Dense::Dense(ParameterSet& params, const std::string& prefix, int in_dim, int out_dim,
             RngStream& rng)
    : in_dim_(in_dim), out_dim_(out_dim) {
  if (in_dim <= 0 || out_dim <= 0) {
    throw UsageError(prefix + ": dense dimensions must be positive");
  }
  weight_ = &params.add(prefix + ".W", glorot_uniform(in_dim, out_dim, rng));
  bias_ = &params.add(prefix + ".b", Tensor::matrix(1, out_dim));
}

Var Dense::apply(Graph& g, Var x) const {
  return add(matmul(x, g.param(*weight_)), g.param(*bias_));
}

std::size_t Dense::parameter_count(int in_dim, int out_dim) {
  return static_cast<std::size_t>(in_dim) * out_dim + out_dim;
}

EmbeddingTable::EmbeddingTable(ParameterSet& params, const std::string& name, int vocab_size,
                               int dim, RngStream& rng)
    : vocab_size_(vocab_size), dim_(dim) {
  if (vocab_size <= 0 || dim <= 0) {
    throw UsageError(name + ": embedding table dimensions must be positive");
  }
  table_ = &params.add(name, embedding_uniform(vocab_size, dim, rng));
}

Var EmbeddingTable::lookup(Graph& g, std::span<const int> ids) const {
  return embedding_lookup(g.param(*table_), ids);
}

// ---------------------------------------------------------------------------
// RecurrentCell

CellKind parse_cell_kind(std::string_view name) {
  if (name == "gru" || name == "GRU") return CellKind::kGru;
  if (name == "lstm" || name == "LSTM") return CellKind::kLstm;
  if (name == "lstmp" || name == "LSTMP") return CellKind::kLstmp;
  throw UsageError("unknown cell kind '" + std::string(name) + "'");
}

std::string cell_kind_name(CellKind kind) {
  switch (kind) {
    case CellKind::kGru: return "gru";
    case CellKind::kLstm: return "lstm";
    case CellKind::kLstmp: return "lstmp";
  }
  return "?";
}

RecurrentCell::RecurrentCell(ParameterSet& params, const std::string& prefix, CellSpec spec,
                             RngStream& rng)
    : spec_(spec) {
  const int d = spec.input_dim, h = spec.hidden_dim, p = spec.projection_dim;
  if (d <= 0 || h <= 0 || (spec.kind == CellKind::kLstmp && p <= 0)) {
    throw UsageError(prefix + ": cell dimensions must be positive");
  }
  switch (spec.kind) {
    case CellKind::kGru:
      w_ = &params.add(prefix + ".W", glorot_uniform(d, 3 * h, rng));
      u_ = &params.add(prefix + ".U_zr", glorot_uniform(h, 2 * h, rng));
      un_ = &params.add(prefix + ".U_n", glorot_uniform(h, h, rng));
      b_ = &params.add(prefix + ".b", Tensor::matrix(1, 3 * h));
      break;
    case CellKind::kLstm:
    case CellKind::kLstmp: {
      const int rec = spec.kind == CellKind::kLstmp ? p : h;
      w_ = &params.add(prefix + ".W", glorot_uniform(d, 4 * h, rng));
      u_ = &params.add(prefix + ".U", glorot_uniform(rec, 4 * h, rng));
      Tensor b = Tensor::matrix(1, 4 * h);
      for (int j = h; j < 2 * h; ++j) b[j] = 1.0;  // forget gate
      b_ = &params.add(prefix + ".b", std::move(b));
      if (spec.kind == CellKind::kLstmp) {
        proj_ = &params.add(prefix + ".P", glorot_uniform(h, p, rng));
      }
      break;
    }
  }
}

std::size_t RecurrentCell::parameter_count(const CellSpec& spec) {
  const std::size_t d = spec.input_dim, h = spec.hidden_dim, p = spec.projection_dim;
  switch (spec.kind) {
    case CellKind::kGru: return 3 * (d * h + h * h + h);
    case CellKind::kLstm: return 4 * (d * h + h * h + h);
    case CellKind::kLstmp: return 4 * (d * h + p * h + h) + h * p;
  }
  return 0;
}

RecurrentCell::State RecurrentCell::zero_state(Graph& g) const {
  State s;
  s.h = g.constant(Tensor::matrix(1, spec_.output_dim()));
  if (spec_.kind != CellKind::kGru) s.c = g.constant(Tensor::matrix(1, spec_.hidden_dim));
  return s;
}

Var RecurrentCell::project_inputs(Graph& g, Var inputs) const {
  if (static_cast<int>(inputs.cols()) != spec_.input_dim) {
    throw ShapeError("cell input has " + std::to_string(inputs.cols()) +
                     " columns, expected " + std::to_string(spec_.input_dim));
  }
  return add(matmul(inputs, g.param(*w_)), g.param(*b_));
}

RecurrentCell::State RecurrentCell::step(Graph& g, Var x, const State& state) const {
  if (x.rows() != 1) throw ShapeError("cell step expects one input row, got " + x.shape().str());
  return step_projected(g, project_inputs(g, x), state);
}

RecurrentCell::State RecurrentCell::step_projected(Graph& g, Var xw, const State& state) const {
  const std::size_t h = spec_.hidden_dim;
  State next;
  if (spec_.kind == CellKind::kGru) {
    Var zr = sigmoid(add(slice(xw, 1, 0, 2 * h), matmul(state.h, g.param(*u_))));
    Var z = slice(zr, 1, 0, h);
    Var r = slice(zr, 1, h, h);
    Var n = tanh(add(slice(xw, 1, 2 * h, h), matmul(mul(r, state.h), g.param(*un_))));
    next.h = add(n, mul(z, sub(state.h, n)));
    return next;
  }
  Var pre = add(xw, matmul(state.h, g.param(*u_)));
  Var gates = sigmoid(slice(pre, 1, 0, 3 * h));
  Var i = slice(gates, 1, 0, h);
  Var f = slice(gates, 1, h, h);
  Var o = slice(gates, 1, 2 * h, h);
  Var cand = tanh(slice(pre, 1, 3 * h, h));
  next.c = add(mul(f, state.c), mul(i, cand));
  Var m = mul(o, tanh(next.c));
  next.h = spec_.kind == CellKind::kLstmp ? matmul(m, g.param(*proj_)) : m;
  return next;
}

Var RecurrentCell::scan(Graph& g, Var inputs, bool reverse) const {
  Var xw = project_inputs(g, inputs);
  const std::size_t n = inputs.rows();
  std::vector<Var> outputs(n);
  State state = zero_state(g);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t t = reverse ? n - 1 - k : k;
    state = step_projected(g, n == 1 ? xw : slice(xw, 0, t, 1), state);
    outputs[t] = state.h;
  }
  return n == 1 ? outputs[0] : concat(outputs, 0);
}

// ---------------------------------------------------------------------------
// BiLayer

BiLayer::BiLayer(ParameterSet& params, const std::string& prefix, CellSpec spec,
                 double input_dropout, RngStream& rng)
    : fwd_(params, prefix + ".fwd", spec, rng),
      bwd_(params, prefix + ".bwd", spec, rng),
      dropout_(input_dropout) {}

Var BiLayer::run(Graph& g, Var inputs, RngStream* dropout_rng) const {
  if (dropout_rng != nullptr && dropout_ > 0.0) {
    inputs = dropout_mask_apply(inputs,
                                dropout_mask(inputs.rows(), inputs.cols(), dropout_, *dropout_rng));
  }
  Var f = fwd_.scan(g, inputs, false);
  Var b = bwd_.scan(g, inputs, true);
  return concat({f, b}, 1);
}

// ---------------------------------------------------------------------------
// CharEncoder

CharEncoder::CharEncoder(ParameterSet& params, const std::string& prefix,
                         CharEncoderConfig config, int char_vocab_size, RngStream& rng)
    : config_(config),
      chars_(params, prefix + ".chars", char_vocab_size, config.char_dim, rng) {
  if (config.kind == CharEncoderKind::kCnn) {
    if (config.width <= 0 || config.filters <= 0) {
      throw UsageError(prefix + ": CNN width and filters must be positive");
    }
    kernel_ = &params.add(prefix + ".conv.W",
                          glorot_uniform(static_cast<std::size_t>(config.width) * config.char_dim,
                                         config.filters, rng));
    kernel_bias_ = &params.add(prefix + ".conv.b", Tensor::matrix(1, config.filters));
  } else {
    if (config.layers <= 0) throw UsageError(prefix + ": char RNN needs at least one layer");
    int in = config.char_dim;
    for (int l = 0; l < config.layers; ++l) {
      CellSpec spec{CellKind::kGru, in, config.hidden, 0};
      rnn_.emplace_back(params, prefix + ".rnn" + std::to_string(l), spec, config.dropout, rng);
      in = 2 * config.hidden;
    }
  }
}

std::size_t CharEncoder::parameter_count(const CharEncoderConfig& config, int char_vocab_size) {
  std::size_t n = static_cast<std::size_t>(char_vocab_size) * config.char_dim;
  if (config.kind == CharEncoderKind::kCnn) {
    return n + static_cast<std::size_t>(config.width) * config.char_dim * config.filters +
           config.filters;
  }
  int in = config.char_dim;
  for (int l = 0; l < config.layers; ++l) {
    n += BiLayer::parameter_count(CellSpec{CellKind::kGru, in, config.hidden, 0});
    in = 2 * config.hidden;
  }
  return n;
}

Var CharEncoder::encode_embedded(Graph& g, Var embedded, RngStream* dropout_rng) const {
  const std::size_t len = embedded.rows();
  if (config_.kind == CharEncoderKind::kCnn) {
    const std::size_t width = config_.width;
    const std::size_t pad = (width - 1) / 2;
    const std::size_t right = pad + (len + 2 * pad < width ? width - (len + 2 * pad) : 0);
    std::vector<Var> rows;
    if (pad > 0) rows.push_back(g.constant(Tensor::matrix(pad, config_.char_dim)));
    rows.push_back(embedded);
    if (right > 0) rows.push_back(g.constant(Tensor::matrix(right, config_.char_dim)));
    Var padded = rows.size() == 1 ? embedded : concat(rows, 0);
    const std::size_t windows = padded.rows() - width + 1;
    std::vector<Var> shifted;
    for (std::size_t o = 0; o < width; ++o) shifted.push_back(slice(padded, 0, o, windows));
    Var unfolded = width == 1 ? shifted[0] : concat(shifted, 1);
    Var conv = tanh(add(matmul(unfolded, g.param(*kernel_)), g.param(*kernel_bias_)));
    return max_over_axis(conv, 0);
  }
  // The first layer's input is the (already dropped-out) embedding matrix.
  Var h = embedded;
  for (std::size_t l = 0; l < rnn_.size(); ++l) {
    h = rnn_[l].run(g, h, l == 0 ? nullptr : dropout_rng);
  }
  const std::size_t hid = config_.hidden;
  Var last_fwd = slice(slice(h, 0, len - 1, 1), 1, 0, hid);
  Var first_bwd = slice(slice(h, 0, 0, 1), 1, hid, hid);
  return concat({last_fwd, first_bwd}, 1);
}

Var CharEncoder::encode(Graph& g, const std::vector<std::vector<int>>& token_chars,
                        RngStream* dropout_rng) const {
  std::vector<int> all;
  for (const auto& chars : token_chars) {
    if (chars.empty()) throw ShapeError("char_encode: token with no characters");
    all.insert(all.end(), chars.begin(), chars.end());
  }
  Var embedded = chars_.lookup(g, all);
  const bool drop = dropout_rng != nullptr && config_.dropout > 0.0;
  std::vector<Var> outputs;
  std::size_t offset = 0;
  for (const auto& chars : token_chars) {
    Var e = slice(embedded, 0, offset, chars.size());
    offset += chars.size();
    if (drop) {
      e = dropout_mask_apply(e, dropout_mask(e.rows(), e.cols(), config_.dropout, *dropout_rng));
    }
    outputs.push_back(encode_embedded(g, e, dropout_rng));
  }
  return outputs.size() == 1 ? outputs[0] : concat(outputs, 0);
}

Var CharEncoder::encode_token(Graph& g, std::span<const int> chars,
                              RngStream* dropout_rng) const {
  return encode(g, {std::vector<int>(chars.begin(), chars.end())}, dropout_rng);
}

// ---------------------------------------------------------------------------
// Pre-trained embeddings

LoadedEmbeddings load_embeddings(std::istream& in, const Vocabulary& vocab, RngStream& rng) {
  LoadedEmbeddings out;
  std::vector<bool> seen(vocab.size(), false);
  std::vector<std::pair<int, std::vector<double>>> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word)) continue;
    std::vector<double> values;
    std::string field;
    while (ss >> field) {
      try {
        values.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw DataError("embedding line " + std::to_string(line_no) + ": bad number '" +
                        field + "'");
      }
    }
    if (out.dim == 0) {
      if (values.empty()) {
        throw DataError("embedding line " + std::to_string(line_no) + ": no vector values");
      }
      out.dim = static_cast<int>(values.size());
    } else if (static_cast<int>(values.size()) != out.dim) {
      throw DataError("embedding line " + std::to_string(line_no) + ": expected " +
                      std::to_string(out.dim) + " values, found " +
                      std::to_string(values.size()));
    }
    const std::string norm = normalize(word);
    if (!vocab.contains(norm)) continue;
    const int id = vocab.id(norm);
    if (id < Vocabulary::kReserved || seen[id]) continue;
    seen[id] = true;
    rows.emplace_back(id, std::move(values));
  }
  if (out.dim == 0) throw DataError("embedding file is empty");
  out.table = embedding_uniform(vocab.size(), out.dim, rng);
  for (auto& [id, values] : rows) {
    std::copy(values.begin(), values.end(), out.table.data().begin() + id * out.dim);
  }
  out.found = static_cast<int>(rows.size());
  const int real = vocab.size() - Vocabulary::kReserved;
  out.coverage = real > 0 ? static_cast<double>(out.found) / real : 0.0;
  return out;
}

LoadedEmbeddings load_embeddings(const std::string& path, const Vocabulary& vocab,
                                 RngStream& rng) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file '" + path + "'");
  return load_embeddings(in, vocab, rng);
}

}  // namespace lmtag
