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


#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "lmtag/errors.h"
#include "lmtag/training.h"
#include "support.h"

using namespace lmtag;
using lmtag::testing::random_tensor;

namespace {

// Student t density integrated by composite Simpson; upper tail P(T > t).
double t_upper_tail(double t, double df) {
  auto pdf = [df](double x) {
    return std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) /
           std::sqrt(df * M_PI) * std::pow(1 + x * x / df, -(df + 1) / 2);
  };
  const double a = 0.0, b = std::abs(t);
  const int n = 20000;
  const double h = (b - a) / n;
  double s = pdf(a) + pdf(b);
  for (int i = 1; i < n; ++i) s += pdf(a + i * h) * (i % 2 ? 4 : 2);
  const double half = s * h / 3;  // P(0 < T < |t|)
  return t >= 0 ? 0.5 - half : 0.5 + half;
}

// Simulated training: the "model" is the number of epochs it has absorbed.
struct FakeRun {
  std::function<double(int)> curve;  // dev score after k retained epochs
  int model = 0;
  int saved = -1;
  std::vector<double> alphas;

  ScheduleHooks hooks() {
    ScheduleHooks h;
    h.train_epoch = [this](double alpha) {
      alphas.push_back(alpha);
      ++model;
      return 1.0 / model;
    };
    h.evaluate_dev = [this] { return curve(model); };
    h.save_best = [this] { saved = model; };
    h.restore_best = [this] { model = saved; };
    return h;
  }
};

}  // namespace

TEST_SUITE("training") {

TEST_CASE("adam first step on a scalar") {
  ParameterSet ps;
  Parameter& p = ps.add("p", Tensor::scalar(0.5));
  p.grad = Tensor::scalar(1.0);
  Adam adam;
  auto params = ps.all();
  adam.step(params, 0.001);
  // m_hat = 1, v_hat = 1: delta = -alpha / (1 + eps)
  CHECK(p.value[0] - 0.5 == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-12));
  CHECK(adam.steps() == 1);
}

TEST_CASE("adam matches a direct evaluation of the update") {
  RngStream rng(3);
  ParameterSet ps;
  Parameter& a = ps.add("a", random_tensor(2, 3, rng));
  Parameter& b = ps.add("b", random_tensor(1, 4, rng));
  std::vector<double> m(10, 0.0), v(10, 0.0), x;
  for (double w : a.value.data()) x.push_back(w);
  for (double w : b.value.data()) x.push_back(w);
  Adam adam;
  auto params = ps.all();
  for (int t = 1; t <= 25; ++t) {
    a.grad = random_tensor(2, 3, rng, -2, 2);
    b.grad = random_tensor(1, 4, rng, -2, 2);
    std::vector<double> g;
    for (double w : a.grad.data()) g.push_back(w);
    for (double w : b.grad.data()) g.push_back(w);
    const double alpha = t < 10 ? 0.01 : 0.001;
    for (int i = 0; i < 10; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      x[i] -= alpha * mh / (std::sqrt(vh) + 1e-8);
    }
    adam.step(params, alpha);
  }
  for (int i = 0; i < 6; ++i) CHECK(a.value[i] == doctest::Approx(x[i]).epsilon(1e-12));
  for (int i = 0; i < 4; ++i) CHECK(b.value[i] == doctest::Approx(x[6 + i]).epsilon(1e-12));
  CHECK(adam.first_moment(a).shape() == a.value.shape());
}

TEST_CASE("adam zero gradient keeps parameters and decays moments") {
  ParameterSet ps;
  Parameter& p = ps.add("p", Tensor::scalar(1.0));
  Adam adam;
  auto params = ps.all();
  p.grad = Tensor::scalar(2.0);
  adam.step(params, 0.1);
  const double after_first = p.value[0];
  const double m1 = adam.first_moment(p)[0], v1 = adam.second_moment(p)[0];
  p.grad = Tensor::scalar(0.0);
  adam.step(params, 0.1);
  CHECK(adam.first_moment(p)[0] == doctest::Approx(0.9 * m1));
  CHECK(adam.second_moment(p)[0] == doctest::Approx(0.999 * v1));
  ParameterSet fresh;
  Parameter& q = fresh.add("q", Tensor::scalar(1.0));
  q.grad = Tensor::scalar(0.0);
  Adam idle;
  auto qs = fresh.all();
  for (int i = 0; i < 5; ++i) idle.step(qs, 0.1);
  CHECK(q.value[0] == 1.0);
  CHECK(after_first < 1.0);
}

TEST_CASE("adam skips frozen parameters and rejects non-finite updates") {
  ParameterSet ps;
  Parameter& p = ps.add("p", Tensor::scalar(1.0));
  p.frozen = true;
  p.grad = Tensor::scalar(1.0);
  Adam adam;
  auto params = ps.all();
  adam.step(params, 0.1);
  CHECK(p.value[0] == 1.0);
  p.frozen = false;
  p.grad = Tensor::scalar(std::nan(""));
  CHECK_THROWS_AS(adam.step(params, 0.1), NumericError);
}

TEST_CASE("adam reduces a quadratic loss") {
  ParameterSet ps;
  Parameter& p = ps.add("p", Tensor::row({3.0, -2.0}));
  Adam adam;
  auto params = ps.all();
  double prev = 1e300;
  for (int i = 0; i < 20; ++i) {
    ps.zero_grad();
    Graph g;
    Var loss = sum(mul(g.param(p), g.param(p)));
    CHECK(loss.value()[0] < prev);
    prev = loss.value()[0];
    g.backward(loss);
    adam.step(params, 0.05);
  }
}

TEST_CASE("schedule trace with the dev peak at epoch 7") {
  FakeRun run;
  run.curve = [](int k) { return k <= 7 ? k : 7.0 - 0.1 * (k - 7); };
  ScheduleConfig cfg;
  cfg.patience = 0;
  auto res = run_schedule(cfg, run.hooks());
  CHECK(res.trigger_epoch == 7);
  CHECK(res.best_epoch == 7);
  CHECK(res.best_dev == 7.0);
  REQUIRE(res.epochs.size() == 18);  // 8 constant (one past the peak) + 10 annealed
  for (int i = 0; i < 8; ++i) {
    CHECK(res.epochs[i].epoch == i + 1);
    CHECK(res.epochs[i].alpha == 1e-3);
    CHECK(res.epochs[i].phase == Phase::kConstant);
  }
  for (int i = 0; i < 10; ++i) {
    const EpochRecord& r = res.epochs[8 + i];
    CHECK(r.epoch == 8 + i);
    CHECK(r.executed == 9 + i);
    CHECK(r.phase == (i < 5 ? Phase::kAnneal1 : Phase::kAnneal2));
    CHECK(r.alpha == (i < 5 ? 1e-4 : 1e-5));
  }
  CHECK(res.epochs.back().epoch == 17);
  CHECK(run.model == 7);  // best checkpoint restored
}

TEST_CASE("anneal waits for a plateau") {
  FakeRun run;
  run.curve = [](int k) { return std::min(k, 20); };
  ScheduleConfig cfg;
  cfg.patience = 3;
  cfg.max_epochs = 1000;
  auto res = run_schedule(cfg, run.hooks());
  CHECK(res.trigger_epoch == 20);
  const auto constant = std::count_if(res.epochs.begin(), res.epochs.end(), [](const auto& r) {
    return r.phase == Phase::kConstant;
  });
  CHECK(constant == 24);
  CHECK(res.epochs.size() == 34);
}

TEST_CASE("checkpoint is the best dev epoch, including annealed ones") {
  FakeRun run;
  run.curve = [](int k) { return k <= 3 ? k : k == 10 ? 50.0 : 1.0; };
  ScheduleConfig cfg;
  cfg.patience = 2;
  auto res = run_schedule(cfg, run.hooks());
  CHECK(res.trigger_epoch == 3);
  CHECK(res.best_epoch == 10);
  CHECK(res.best_dev == 50.0);
  CHECK(run.model == 10);
}

TEST_CASE("max epochs caps the constant phase") {
  FakeRun run;
  run.curve = [](int k) { return k; };
  ScheduleConfig cfg;
  cfg.max_epochs = 4;
  cfg.anneal_phases = 0;
  auto res = run_schedule(cfg, run.hooks());
  CHECK(res.epochs.size() == 4);
  cfg.patience = -1;
  CHECK_THROWS_AS(run_schedule(cfg, run.hooks()), UsageError);
}

TEST_CASE("aggregate") {
  const std::vector<double> two{90, 92};
  auto a = aggregate(two);
  CHECK(a.mean == 91.0);
  CHECK(a.stddev == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  const std::vector<double> same(10, 91.0);
  CHECK(aggregate(same).mean == 91.0);
  CHECK(aggregate(same).stddev == 0.0);
  const std::vector<double> one{5.0};
  CHECK(std::isnan(aggregate(one).stddev));
}

TEST_CASE("aggregate matches a streaming recomputation and ignores order") {
  RngStream rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(2 + rng.below(15));
    for (double& x : xs) x = rng.uniform(80, 95);
    double mean = 0, m2 = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double d = xs[i] - mean;
      mean += d / (i + 1);
      m2 += d * (xs[i] - mean);
    }
    auto a = aggregate(xs);
    CHECK(std::abs(a.mean - mean) <= 1e-12);
    CHECK(std::abs(a.stddev - std::sqrt(m2 / (xs.size() - 1))) <= 1e-12);
    std::vector<double> shuffled = xs;
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    auto b = aggregate(shuffled);
    CHECK(a.mean == b.mean);
    CHECK(a.stddev == b.stddev);
  }
}

TEST_CASE("multi_seed keeps seed order and aggregates") {
  auto run = [](std::uint64_t seed) {
    RunResult r;
    r.seed = seed;
    r.test_score = 90.0 + static_cast<double>(seed);
    r.best_dev = 80.0 + static_cast<double>(seed % 3);
    return r;
  };
  const std::vector<std::uint64_t> seeds{3, 1, 2}, other{2, 3, 1};
  auto a = multi_seed(run, seeds);
  auto b = multi_seed(run, other);
  REQUIRE(a.runs.size() == 3);
  CHECK(a.runs[0].seed == 3);
  CHECK(a.test.mean == 92.0);
  CHECK(a.test.stddev == 1.0);
  CHECK(a.test.mean == b.test.mean);
  CHECK(a.test.stddev == b.test.stddev);
  CHECK(a.dev.mean == b.dev.mean);
}

TEST_CASE("welch test against the t distribution") {
  auto r = welch_test({91.93, 0.19, 10}, {91.62, 0.33, 10});
  const double va = 0.19 * 0.19 / 10, vb = 0.33 * 0.33 / 10;
  const double t = 0.31 / std::sqrt(va + vb);
  const double df = (va + vb) * (va + vb) / (va * va / 9 + vb * vb / 9);
  CHECK(r.t == doctest::Approx(t).epsilon(1e-12));
  CHECK(r.df == doctest::Approx(df).epsilon(1e-12));
  CHECK(r.p_two_sided == doctest::Approx(2 * t_upper_tail(t, df)).epsilon(1e-7));
  CHECK(r.p_greater == doctest::Approx(t_upper_tail(t, df)).epsilon(1e-7));
  CHECK(r.p_two_sided >= 0.018);
  CHECK(r.p_two_sided <= 0.024);

  auto same = welch_test({90, 1, 5}, {90, 1, 5});
  CHECK(same.t == 0.0);
  CHECK(same.p_two_sided == doctest::Approx(1.0));
  auto flat = welch_test({90, 0, 5}, {90, 0, 5});
  CHECK(flat.p_two_sided == 1.0);
  auto far = welch_test({99, 0.01, 10}, {50, 0.01, 10});
  CHECK(far.p_two_sided < 1e-6);
  CHECK(far.p_greater < 1e-6);
  auto rev = welch_test({50, 0.01, 10}, {99, 0.01, 10});
  CHECK(rev.p_greater > 1 - 1e-6);
  CHECK_THROWS_AS(welch_test({1, 1, 1}, {1, 1, 5}), UsageError);
}

TEST_CASE("sample stats") {
  const std::vector<double> xs{1, 2, 3, 4};
  auto s = sample_stats(xs);
  CHECK(s.n == 4);
  CHECK(s.mean == 2.5);
  CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
}

}  // TEST_SUITE
