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

#include "lmtag/graph.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lmtag/errors.h"
#include "lmtag/rng.h"

namespace lmtag {

// ---------------------------------------------------------------------------
// ParameterSet

Parameter& ParameterSet::add(std::string name, Tensor value) {
  if (find(name) != nullptr) {
    throw UsageError("duplicate parameter name '" + name + "'");
  }
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->grad = Tensor(value.shape(), 0.0);
  p->value = std::move(value);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterSet::at(std::string_view name) {
  Parameter* p = find(name);
  if (p == nullptr) throw UsageError("no parameter named '" + std::string(name) + "'");
  return *p;
}

const Parameter& ParameterSet::at(std::string_view name) const {
  const Parameter* p = find(name);
  if (p == nullptr) throw UsageError("no parameter named '" + std::string(name) + "'");
  return *p;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

void ParameterSet::set_frozen(bool frozen) {
  for (auto& p : params_) p->frozen = frozen;
}

std::vector<Tensor> ParameterSet::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParameterSet::restore(const std::vector<Tensor>& values) {
  if (values.size() != params_.size()) {
    throw UsageError("snapshot has " + std::to_string(values.size()) +
                     " tensors, parameter set has " + std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].shape() != params_[i]->value.shape()) {
      throw ShapeError("restore: shape mismatch for " + params_[i]->name);
    }
    params_[i]->value = values[i];
  }
}

// ---------------------------------------------------------------------------
// Graph

const Tensor& Var::value() const { return graph_->value(id_); }

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::param(Parameter& p) {
  Node n;
  n.value = p.value;
  n.op = "param";
  n.param = &p;
  n.requires_grad = record_gradients_ && !p.frozen;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::record(Tensor value, const char* op, std::span<const Var> parents,
                  BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.parents.reserve(parents.size());
  for (const Var& v : parents) {
    n.parents.push_back(v.id());
    if (nodes_[v.id()].requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor& Graph::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Graph::backward(Var loss) {
  if (loss.graph_ != this) throw UsageError("backward: loss belongs to another graph");
  if (loss.value().size() != 1) {
    throw NumericError("backward: loss must be a scalar, got shape " +
                       loss.value().shape().str());
  }
  grad(loss.id()).fill(1.0);
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.param != nullptr) {
      Tensor& pg = n.param->grad;
      if (pg.empty()) pg = Tensor(n.param->value.shape(), 0.0);
      auto dst = pg.data();
      auto src = n.grad.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    } else if (n.backward) {
      n.backward(*this, n.grad);
    }
  }
}

// ---------------------------------------------------------------------------
// Operations

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_rank2(const char* op, const Tensor& t) {
  if (t.shape().rank() != 2) {
    throw ShapeError(std::string(op) + ": operand must be rank 2, got " +
                     t.shape().str());
  }
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape().str() +
                   " and " + b.shape().str());
}

void check_same_graph(const char* op, Var a, Var b) {
  if (&a.graph() != &b.graph()) {
    throw UsageError(std::string(op) + ": operands belong to different graphs");
  }
}

// c[m x n] += a[m x k] . b[k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// c[m x k] += a[m x n] . b[k x n]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    double* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        s0 += ai[j] * bp[j];
        s1 += ai[j + 1] * bp[j + 1];
        s2 += ai[j + 2] * bp[j + 2];
        s3 += ai[j + 3] * bp[j + 3];
      }
      for (; j < n; ++j) s0 += ai[j] * bp[j];
      ci[p] += (s0 + s1) + (s2 + s3);
    }
  }
}

// c[k x n] += a[m x k]^T . b[m x n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void accumulate(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

Var matmul(Var a, Var b) {
  check_same_graph("matmul", a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2("matmul", av);
  require_rank2("matmul", bv);
  if (av.cols() != bv.rows()) shape_fail("matmul", av, bv);
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out = Tensor::matrix(m, n);
  gemm_nn(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  const int ia = a.id(), ib = b.id();
  Var parents[] = {a, b};
  return a.graph().record(std::move(out), "matmul", parents,
      [ia, ib, m, k, n](Graph& g, const Tensor& dc) {
        if (g.requires_grad(ia)) {
          gemm_nt(dc.data().data(), g.value(ib).data().data(),
                  g.grad(ia).data().data(), m, n, k);
        }
        if (g.requires_grad(ib)) {
          gemm_tn(g.value(ia).data().data(), dc.data().data(),
                  g.grad(ib).data().data(), m, k, n);
        }
      });
}

Var add(Var a, Var b) {
  check_same_graph("add", a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2("add", av);
  require_rank2("add", bv);
  const std::size_t m = av.rows(), n = av.cols();
  enum class Mode { kSame, kRow, kCol } mode;
  if (bv.shape() == av.shape()) {
    mode = Mode::kSame;
  } else if (bv.rows() == 1 && bv.cols() == n) {
    mode = Mode::kRow;
  } else if (bv.cols() == 1 && bv.rows() == m) {
    mode = Mode::kCol;
  } else {
    shape_fail("add", av, bv);
  }
  Tensor out = av;
  double* o = out.data().data();
  const double* bd = bv.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = mode == Mode::kSame ? bd[i * n + j]
                       : mode == Mode::kRow ? bd[j]
                                            : bd[i];
      o[i * n + j] += x;
    }
  }
  const int ia = a.id(), ib = b.id();
  Var parents[] = {a, b};
  return a.graph().record(std::move(out), "add", parents,
      [ia, ib, m, n, mode](Graph& g, const Tensor& dc) {
        if (g.requires_grad(ia)) accumulate(g.grad(ia), dc);
        if (!g.requires_grad(ib)) return;
        Tensor& db = g.grad(ib);
        if (mode == Mode::kSame) {
          accumulate(db, dc);
          return;
        }
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            db[mode == Mode::kRow ? j : i] += dc[i * n + j];
          }
        }
      });
}

Var sub(Var a, Var b) {
  check_same_graph("sub", a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2("sub", av);
  if (av.shape() != bv.shape()) shape_fail("sub", av, bv);
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const int ia = a.id(), ib = b.id();
  Var parents[] = {a, b};
  return a.graph().record(std::move(out), "sub", parents,
      [ia, ib](Graph& g, const Tensor& dc) {
        if (g.requires_grad(ia)) accumulate(g.grad(ia), dc);
        if (g.requires_grad(ib)) {
          Tensor& db = g.grad(ib);
          for (std::size_t i = 0; i < db.size(); ++i) db[i] -= dc[i];
        }
      });
}

Var mul(Var a, Var b) {
  check_same_graph("mul", a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2("mul", av);
  if (av.shape() != bv.shape()) shape_fail("mul", av, bv);
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const int ia = a.id(), ib = b.id();
  Var parents[] = {a, b};
  return a.graph().record(std::move(out), "mul", parents,
      [ia, ib](Graph& g, const Tensor& dc) {
        if (g.requires_grad(ia)) {
          Tensor& da = g.grad(ia);
          const Tensor& bv = g.value(ib);
          for (std::size_t i = 0; i < da.size(); ++i) da[i] += dc[i] * bv[i];
        }
        if (g.requires_grad(ib)) {
          Tensor& db = g.grad(ib);
          const Tensor& av = g.value(ia);
          for (std::size_t i = 0; i < db.size(); ++i) db[i] += dc[i] * av[i];
        }
      });
}

Var scale(Var a, double factor) {
  const Tensor& av = a.value();
  require_rank2("scale", av);
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor;
  const int ia = a.id();
  Var parents[] = {a};
  return a.graph().record(std::move(out), "scale", parents,
      [ia, factor](Graph& g, const Tensor& dc) {
        Tensor& da = g.grad(ia);
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += dc[i] * factor;
      });
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  Graph& g = parts[0].graph();
  const Tensor& first = parts[0].value();
  require_rank2("concat", first);
  std::size_t rows = 0, cols = 0;
  for (const Var& v : parts) {
    if (&v.graph() != &g) throw UsageError("concat: operands belong to different graphs");
    const Tensor& t = v.value();
    require_rank2("concat", t);
    if (axis == 0) {
      if (t.cols() != first.cols()) shape_fail("concat(axis=0)", first, t);
      rows += t.rows();
      cols = t.cols();
    } else {
      if (t.rows() != first.rows()) shape_fail("concat(axis=1)", first, t);
      cols += t.cols();
      rows = t.rows();
    }
  }
  Tensor out = Tensor::matrix(rows, cols);
  std::vector<int> ids;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& v : parts) {
    const Tensor& t = v.value();
    ids.push_back(v.id());
    offsets.push_back(offset);
    if (axis == 0) {
      std::copy(t.data().begin(), t.data().end(), out.data().begin() + offset * cols);
      offset += t.rows();
    } else {
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy(t.row_span(r).begin(), t.row_span(r).end(),
                  out.data().begin() + r * cols + offset);
      }
      offset += t.cols();
    }
  }
  return g.record(std::move(out), "concat", parts,
      [ids = std::move(ids), offsets = std::move(offsets), axis, cols](
          Graph& g, const Tensor& dc) {
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!g.requires_grad(ids[k])) continue;
          Tensor& d = g.grad(ids[k]);
          const std::size_t r_n = d.rows(), c_n = d.cols();
          for (std::size_t r = 0; r < r_n; ++r) {
            for (std::size_t c = 0; c < c_n; ++c) {
              const std::size_t src = axis == 0 ? (offsets[k] + r) * cols + c
                                                : r * cols + offsets[k] + c;
              d[r * c_n + c] += dc[src];
            }
          }
        }
      });
}

Var slice(Var a, int axis, std::size_t start, std::size_t length) {
  const Tensor& av = a.value();
  require_rank2("slice", av);
  if (axis != 0 && axis != 1) throw ShapeError("slice: axis must be 0 or 1");
  const std::size_t extent = axis == 0 ? av.rows() : av.cols();
  if (length == 0 || start + length > extent) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " +
                     std::to_string(start + length) + ") on axis " +
                     std::to_string(axis) + " out of bounds for " + av.shape().str());
  }
  const std::size_t cols = av.cols();
  Tensor out = axis == 0 ? Tensor::matrix(length, cols) : Tensor::matrix(av.rows(), length);
  if (axis == 0) {
    std::copy(av.data().begin() + start * cols,
              av.data().begin() + (start + length) * cols, out.data().begin());
  } else {
    for (std::size_t r = 0; r < av.rows(); ++r) {
      for (std::size_t c = 0; c < length; ++c) out[r * length + c] = av[r * cols + start + c];
    }
  }
  const int ia = a.id();
  Var parents[] = {a};
  return a.graph().record(std::move(out), "slice", parents,
      [ia, axis, start, length, cols](Graph& g, const Tensor& dc) {
        Tensor& da = g.grad(ia);
        if (axis == 0) {
          for (std::size_t i = 0; i < dc.size(); ++i) da[start * cols + i] += dc[i];
        } else {
          const std::size_t rows = da.rows();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < length; ++c) {
              da[r * cols + start + c] += dc[r * length + c];
            }
          }
        }
      });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  Tensor out = a.value().reshaped(Shape{rows, cols});
  const int ia = a.id();
  Var parents[] = {a};
  return a.graph().record(std::move(out), "reshape", parents,
      [ia](Graph& g, const Tensor& dc) {
        Tensor& da = g.grad(ia);
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += dc[i];
      });
}

Var sigmoid(Var a) {
  require_rank2("sigmoid", a.value());
  Tensor out = a.value();
  for (double& x : out.data()) x = stable_sigmoid(x);
  const int ia = a.id();
  const int self = static_cast<int>(a.graph().size());
  Var parents[] = {a};
  return a.graph().record(std::move(out), "sigmoid", parents,
      [ia, self](Graph& g, const Tensor& dc) {
        Tensor& da = g.grad(ia);
        const Tensor& y = g.value(self);
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += dc[i] * y[i] * (1.0 - y[i]);
      });
}

Var tanh(Var a) {
  require_rank2("tanh", a.value());
  Tensor out = a.value();
  for (double& x : out.data()) x = std::tanh(x);
  const int ia = a.id();
  const int self = static_cast<int>(a.graph().size());
  Var parents[] = {a};
  return a.graph().record(std::move(out), "tanh", parents,
      [ia, self](Graph& g, const Tensor& dc) {
        Tensor& da = g.grad(ia);
        const Tensor& y = g.value(self);
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += dc[i] * (1.0 - y[i] * y[i]);
      });
}

namespace {

// Row-wise log-sum-exp, max-shifted. A row of all -inf yields -inf.
double row_logsumexp(const double* x, std::size_t n, std::size_t stride = 1) {
  double m = kNegInf;
  for (std::size_t j = 0; j < n; ++j) m = std::max(m, x[j * stride]);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += std::exp(x[j * stride] - m);
  return m + std::log(s);
}

}  // namespace

Var softmax(Var a) {
  const Tensor& av = a.value();
  require_rank2("softmax", av);
  const std::size_t m = av.rows(), n = av.cols();
  Tensor out = av;
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data().data() + i * n;
    const double lse = row_logsumexp(row, n);
    for (std::size_t j = 0; j < n; ++j) row[j] = std::exp(row[j] - lse);
  }
  const int ia = a.id();
  const int self = static_cast<int>(a.graph().size());
  Var parents[] = {a};
  return a.graph().record(std::move(out), "softmax", parents,
      [ia, self, m, n](Graph& g, const Tensor& dc) {
        Tensor& da = g.grad(ia);
        const Tensor& y = g.value(self);
        for (std::size_t i = 0; i < m; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j) dot += dc[i * n + j] * y[i * n + j];
          for (std::size_t j = 0; j < n; ++j) {
            da[i * n + j] += y[i * n + j] * (dc[i * n + j] - dot);
          }
        }
      });
}

Var log_softmax(Var a) {
  const Tensor& av = a.value();
  require_rank2("log_softmax", av);
  const std::size_t m = av.rows(), n = av.cols();
  Tensor out = av;
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data().data() + i * n;
    const double lse = row_logsumexp(row, n);
    for (std::size_t j = 0; j < n; ++j) row[j] -= lse;
  }
  const int ia = a.id();
  const int self = static_cast<int>(a.graph().size());
  Var parents[] = {a};
  return a.graph().record(std::move(out), "log_softmax", parents,
      [ia, self, m, n](Graph& g, const Tensor& dc) {
        Tensor& da = g.grad(ia);
        const Tensor& y = g.value(self);
        for (std::size_t i = 0; i < m; ++i) {
          double total = 0.0;
          for (std::size_t j = 0; j < n; ++j) total += dc[i * n + j];
          for (std::size_t j = 0; j < n; ++j) {
            da[i * n + j] += dc[i * n + j] - std::exp(y[i * n + j]) * total;
          }
        }
      });
}

Var logsumexp(Var a, int axis) {
  const Tensor& av = a.value();
  require_rank2("logsumexp", av);
  if (axis != 0 && axis != 1) throw ShapeError("logsumexp: axis must be 0 or 1");
  const std::size_t m = av.rows(), n = av.cols();
  Tensor out = axis == 1 ? Tensor::matrix(m, 1) : Tensor::matrix(1, n);
  const double* x = av.data().data();
  if (axis == 1) {
    for (std::size_t i = 0; i < m; ++i) out[i] = row_logsumexp(x + i * n, n);
  } else {
    for (std::size_t j = 0; j < n; ++j) out[j] = row_logsumexp(x + j, m, n);
  }
  const int ia = a.id();
  const int self = static_cast<int>(a.graph().size());
  Var parents[] = {a};
  return a.graph().record(std::move(out), "logsumexp", parents,
      [ia, self, m, n, axis](Graph& g, const Tensor& dc) {
        Tensor& da = g.grad(ia);
        const Tensor& x = g.value(ia);
        const Tensor& y = g.value(self);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t k = axis == 1 ? i : j;
            if (y[k] == kNegInf) continue;
            da[i * n + j] += dc[k] * std::exp(x[i * n + j] - y[k]);
          }
        }
      });
}

Var max_over_axis(Var a, int axis) {
  const Tensor& av = a.value();
  require_rank2("max_over_axis", av);
  if (axis != 0 && axis != 1) throw ShapeError("max_over_axis: axis must be 0 or 1");
  const std::size_t m = av.rows(), n = av.cols();
  const std::size_t outer = axis == 0 ? n : m;
  const std::size_t inner = axis == 0 ? m : n;
  Tensor out = axis == 0 ? Tensor::matrix(1, n) : Tensor::matrix(m, 1);
  std::vector<std::size_t> argmax(outer);
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t best = 0;
    double best_v = kNegInf;
    for (std::size_t i = 0; i < inner; ++i) {
      const double v = axis == 0 ? av[i * n + o] : av[o * n + i];
      if (i == 0 || v > best_v) {
        best_v = v;
        best = i;
      }
    }
    out[o] = best_v;
    argmax[o] = axis == 0 ? best * n + o : o * n + best;
  }
  const int ia = a.id();
  Var parents[] = {a};
  return a.graph().record(std::move(out), "max_over_axis", parents,
      [ia, argmax = std::move(argmax)](Graph& g, const Tensor& dc) {
        Tensor& da = g.grad(ia);
        for (std::size_t o = 0; o < argmax.size(); ++o) da[argmax[o]] += dc[o];
      });
}

Var dropout_mask_apply(Var a, const Tensor& mask) {
  const Tensor& av = a.value();
  require_rank2("dropout_mask_apply", av);
  if (mask.shape() != av.shape()) shape_fail("dropout_mask_apply", av, mask);
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const int ia = a.id();
  Var parents[] = {a};
  return a.graph().record(std::move(out), "dropout_mask_apply", parents,
      [ia, mask](Graph& g, const Tensor& dc) {
        Tensor& da = g.grad(ia);
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += dc[i] * mask[i];
      });
}

Var embedding_lookup(Var table, std::span<const int> ids) {
  const Tensor& tv = table.value();
  require_rank2("embedding_lookup", tv);
  const std::size_t v = tv.rows(), d = tv.cols();
  if (ids.empty()) throw ShapeError("embedding_lookup: empty id list");
  Tensor out = Tensor::matrix(ids.size(), d);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= v) {
      throw ShapeError("embedding_lookup: id " + std::to_string(ids[r]) +
                       " out of range for table " + tv.shape().str());
    }
    std::copy(tv.row_span(ids[r]).begin(), tv.row_span(ids[r]).end(),
              out.data().begin() + r * d);
  }
  const int it = table.id();
  Var parents[] = {table};
  return table.graph().record(std::move(out), "embedding_lookup", parents,
      [it, d, ids = std::vector<int>(ids.begin(), ids.end())](Graph& g,
                                                               const Tensor& dc) {
        Tensor& dt = g.grad(it);
        for (std::size_t r = 0; r < ids.size(); ++r) {
          double* dst = dt.data().data() + static_cast<std::size_t>(ids[r]) * d;
          for (std::size_t j = 0; j < d; ++j) dst[j] += dc[r * d + j];
        }
      });
}

Var sum(Var a) {
  require_rank2("sum", a.value());
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  const int ia = a.id();
  Var parents[] = {a};
  return a.graph().record(Tensor::scalar(s), "sum", parents,
      [ia](Graph& g, const Tensor& dc) {
        Tensor& da = g.grad(ia);
        for (double& x : da.data()) x += dc[0];
      });
}

Var gather_sum(Var a, std::span<const std::pair<std::size_t, std::size_t>> cells) {
  const Tensor& av = a.value();
  require_rank2("gather_sum", av);
  double s = 0.0;
  for (const auto& [r, c] : cells) {
    if (r >= av.rows() || c >= av.cols()) {
      throw ShapeError("gather_sum: cell (" + std::to_string(r) + ", " +
                       std::to_string(c) + ") out of bounds for " + av.shape().str());
    }
    s += av.at(r, c);
  }
  const int ia = a.id();
  const std::size_t n = av.cols();
  Var parents[] = {a};
  return a.graph().record(Tensor::scalar(s), "gather_sum", parents,
      [ia, n, cells = std::vector<std::pair<std::size_t, std::size_t>>(
                  cells.begin(), cells.end())](Graph& g, const Tensor& dc) {
        Tensor& da = g.grad(ia);
        for (const auto& [r, c] : cells) da[r * n + c] += dc[0];
      });
}

Tensor dropout_mask(std::size_t rows, std::size_t cols, double rate, RngStream& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw UsageError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  Tensor mask = Tensor::matrix(rows, cols, 1.0);
  if (rate == 0.0) return mask;
  const double keep = 1.0 - rate;
  for (double& x : mask.data()) x = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return mask;
}

double clip_gradients(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    if (p->frozen || p->grad.empty()) continue;
    for (double g : p->grad.data()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in parameter '" + p->name + "'");
      }
      sq += g * g;
    }
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (Parameter* p : params) {
      if (p->frozen || p->grad.empty()) continue;
      for (double& g : p->grad.data()) g *= factor;
    }
  }
  return norm;
}

}  // namespace lmtag
