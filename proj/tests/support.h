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


#ifndef LMTAG_TESTS_SUPPORT_H_
#define LMTAG_TESTS_SUPPORT_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lmtag/graph.h"
#include "lmtag/rng.h"
#include "lmtag/tensor.h"

namespace lmtag::testing {

struct GradCheck {
  double max_rel = 0.0;
  std::string worst;  // parameter[index] with the largest error
  long checked = 0;
};

// Central differences against the tape gradient for every scalar of every
// parameter. Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheck gradcheck(std::span<Parameter* const> params,
                           const std::function<Var(Graph&)>& loss_fn, double h = 1e-5,
                           double floor = 1e-5) {
  for (Parameter* p : params) p->zero_grad();
  {
    Graph g;
    g.backward(loss_fn(g));
  }
  auto eval = [&] {
    Graph g(false);
    return loss_fn(g).value()[0];
  };
  GradCheck out;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double keep = p->value[i];
      p->value[i] = keep + h;
      const double up = eval();
      p->value[i] = keep - h;
      const double down = eval();
      p->value[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p->grad[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), floor});
      if (rel > out.max_rel) {
        out.max_rel = rel;
        out.worst = p->name + "[" + std::to_string(i) + "]";
      }
      ++out.checked;
    }
  }
  return out;
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, RngStream& rng, double lo = -1,
                            double hi = 1) {
  Tensor t = Tensor::matrix(rows, cols);
  for (double& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

// Every label path of length n over L labels, in lexicographic order.
inline std::vector<std::vector<int>> all_paths(int n, int L) {
  std::vector<std::vector<int>> out;
  std::vector<int> path(n, 0);
  while (true) {
    out.push_back(path);
    int k = n - 1;
    while (k >= 0 && ++path[k] == L) path[k--] = 0;
    if (k < 0) break;
  }
  return out;
}

// Path score with START = L and STOP = L + 1 rows/columns of tr.
inline double brute_score(const Tensor& em, const Tensor& tr, const std::vector<int>& path) {
  const int L = static_cast<int>(em.cols());
  double s = tr.at(L, path[0]);
  for (std::size_t k = 0; k < path.size(); ++k) {
    s += em.at(k, path[k]);
    if (k + 1 < path.size()) s += tr.at(path[k], path[k + 1]);
  }
  return s + tr.at(path.back(), L + 1);
}

inline double brute_log_partition(const Tensor& em, const Tensor& tr) {
  std::vector<double> scores;
  for (auto& p : all_paths(static_cast<int>(em.rows()), static_cast<int>(em.cols()))) {
    scores.push_back(brute_score(em, tr, p));
  }
  double m = *std::max_element(scores.begin(), scores.end());
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double s = 0;
  for (double x : scores) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace lmtag::testing

#endif  // LMTAG_TESTS_SUPPORT_H_
