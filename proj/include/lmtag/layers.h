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

#ifndef LMTAG_LAYERS_H_
#define LMTAG_LAYERS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmtag/corpus.h"
#include "lmtag/graph.h"
#include "lmtag/rng.h"

namespace lmtag {

// Uniform(-sqrt(6 / (fan_in + fan_out)), +sqrt(6 / (fan_in + fan_out))).
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, RngStream& rng);
// Uniform(-sqrt(3 / dim), +sqrt(3 / dim)) rows; used for lookup tables.
Tensor embedding_uniform(std::size_t rows, std::size_t dim, RngStream& rng);

// Fully connected layer y = x W + b with W [in x out].
class Dense {
 public:
  Dense() = default;
  Dense(ParameterSet& params, const std::string& prefix, int in_dim, int out_dim,
        RngStream& rng);

  Var apply(Graph& g, Var x) const;
  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  static std::size_t parameter_count(int in_dim, int out_dim);

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
  int in_dim_ = 0;
  int out_dim_ = 0;
};

// Lookup table E [vocab x dim]. Out-of-range ids are a caller error; unknown
// words arrive as Vocabulary::kUnk and read that row.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(ParameterSet& params, const std::string& name, int vocab_size, int dim,
                 RngStream& rng);

  Var lookup(Graph& g, std::span<const int> ids) const;
  Parameter& table() const { return *table_; }
  int dim() const { return dim_; }
  int vocab_size() const { return vocab_size_; }

 private:
  Parameter* table_ = nullptr;
  int vocab_size_ = 0;
  int dim_ = 0;
};

enum class CellKind { kGru, kLstm, kLstmp };

CellKind parse_cell_kind(std::string_view name);
std::string cell_kind_name(CellKind kind);

struct CellSpec {
  CellKind kind = CellKind::kLstm;
  int input_dim = 0;
  int hidden_dim = 0;
  int projection_dim = 0;  // LSTMP only

  int output_dim() const { return kind == CellKind::kLstmp ? projection_dim : hidden_dim; }
};

// Recurrent cells. With x the input row, h the previous output and sigma the
// logistic function:
//
// GRU (update z, reset r):
//   z  = sigma(x Wz + h Uz + bz)
//   r  = sigma(x Wr + h Ur + br)
//   n  = tanh(x Wn + (r * h) Un + bn)
//   h' = (1 - z) * n + z * h
//   parameters: W [d x 3h], U_zr [h x 2h], U_n [h x h], b [1 x 3h]
//
// LSTM (input i, forget f, output o, candidate g):
//   [i f o g] = x W + h U + b, with sigma on i, f, o and tanh on g
//   c' = f * c + i * g
//   h' = o * tanh(c')
//   parameters: W [d x 4h], U [h x 4h], b [1 x 4h]; forget bias starts at 1
//
// LSTMP: LSTM whose output m' = o * tanh(c') is projected, r' = m' P with
// P [h x p]; r' is both the output and the recurrent input, so U is [p x 4h].
//
// Counts: GRU 3(dh + hh + h); LSTM 4(dh + hh + h); LSTMP 4(dh + ph + h) + hp.
class RecurrentCell {
 public:
  struct State {
    Var h;  // output (projected for LSTMP)
    Var c;  // memory cell (unused for GRU)
  };

  RecurrentCell() = default;
  RecurrentCell(ParameterSet& params, const std::string& prefix, CellSpec spec,
                RngStream& rng);

  const CellSpec& spec() const { return spec_; }
  int output_dim() const { return spec_.output_dim(); }
  static std::size_t parameter_count(const CellSpec& spec);

  State zero_state(Graph& g) const;

  // One step on a raw input row x [1 x input_dim].
  State step(Graph& g, Var x, const State& state) const;

  // x W + b for all rows of X [n x input_dim].
  Var project_inputs(Graph& g, Var inputs) const;
  // One step given a row of project_inputs().
  State step_projected(Graph& g, Var projected_row, const State& state) const;

  // Scans the rows of X from a zero state. Returns the outputs [n x out],
  // row k holding the state after consuming row k. With reverse the scan
  // runs from the last row to the first; rows keep their input positions.
  Var scan(Graph& g, Var inputs, bool reverse) const;

 private:
  CellSpec spec_;
  Parameter* w_ = nullptr;
  Parameter* u_ = nullptr;   // U_zr for GRU
  Parameter* un_ = nullptr;  // GRU only
  Parameter* b_ = nullptr;
  Parameter* proj_ = nullptr;  // LSTMP only
};

// Bidirectional layer: output row k is [fwd_k ; bwd_k]. Dropout applies to
// the layer input only, and only when a dropout stream is supplied.
class BiLayer {
 public:
  BiLayer() = default;
  BiLayer(ParameterSet& params, const std::string& prefix, CellSpec spec, double input_dropout,
          RngStream& rng);

  Var run(Graph& g, Var inputs, RngStream* dropout_rng) const;
  int output_dim() const { return fwd_.output_dim() + bwd_.output_dim(); }
  const RecurrentCell& forward_cell() const { return fwd_; }
  const RecurrentCell& backward_cell() const { return bwd_; }
  static std::size_t parameter_count(const CellSpec& spec) {
    return 2 * RecurrentCell::parameter_count(spec);
  }

 private:
  RecurrentCell fwd_;
  RecurrentCell bwd_;
  double dropout_ = 0.0;
};

enum class CharEncoderKind { kCnn, kRnn };

struct CharEncoderConfig {
  CharEncoderKind kind = CharEncoderKind::kCnn;
  int char_dim = 30;
  // CNN
  int filters = 30;
  int width = 3;
  // bi-RNN (GRU cells)
  int hidden = 80;
  int layers = 1;
  // Dropout on the character embeddings.
  double dropout = 0.0;

  int output_dim() const { return kind == CharEncoderKind::kCnn ? filters : 2 * hidden; }
};

// Token-level character encoder.
//
// CNN: embed chars, pad (width - 1) / 2 zero rows on each side (and at the
// right until at least one full window exists), convolve, tanh, max over
// positions -> [1 x filters].
// RNN: stacked bidirectional GRU layers over the char embeddings; output is
// [final forward state ; final backward state] of the top layer.
class CharEncoder {
 public:
  CharEncoder() = default;
  CharEncoder(ParameterSet& params, const std::string& prefix, CharEncoderConfig config,
              int char_vocab_size, RngStream& rng);

  // Encodes each token; returns [tokens x output_dim].
  Var encode(Graph& g, const std::vector<std::vector<int>>& token_chars,
             RngStream* dropout_rng) const;
  Var encode_token(Graph& g, std::span<const int> chars, RngStream* dropout_rng) const;

  const CharEncoderConfig& config() const { return config_; }
  int output_dim() const { return config_.output_dim(); }
  static std::size_t parameter_count(const CharEncoderConfig& config, int char_vocab_size);

 private:
  Var encode_embedded(Graph& g, Var embedded, RngStream* dropout_rng) const;

  CharEncoderConfig config_;
  EmbeddingTable chars_;
  Parameter* kernel_ = nullptr;  // [(width * char_dim) x filters]
  Parameter* kernel_bias_ = nullptr;
  std::vector<BiLayer> rnn_;
};

struct LoadedEmbeddings {
  Tensor table;        // [vocab x dim]
  int dim = 0;
  int found = 0;       // vocabulary entries covered by the file
  double coverage = 0.0;  // found / (non-reserved vocabulary size)
};

// Reads "word v1 ... vd" lines. The dimension comes from the first line; a
// line with a different count throws DataError with its line number. Words
// are matched after normalize(). Rows not in the file (including reserved
// ids) are drawn from embedding_uniform.
LoadedEmbeddings load_embeddings(const std::string& path, const Vocabulary& vocab,
                                 RngStream& rng);
LoadedEmbeddings load_embeddings(std::istream& in, const Vocabulary& vocab, RngStream& rng);

}  // namespace lmtag

#endif  // LMTAG_LAYERS_H_
