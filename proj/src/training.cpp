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

#include "lmtag/training.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "lmtag/errors.h"

namespace lmtag {

void Adam::step(std::span<Parameter* const> params, double alpha) {
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (Parameter* p : params) {
    if (p->frozen) continue;
    auto it = moments_.find(p);
    if (it == moments_.end()) {
      it = moments_.emplace(p, Moments{Tensor(p->value.shape(), 0.0),
                                       Tensor(p->value.shape(), 0.0)}).first;
    }
    auto m = it->second.m.data();
    auto v = it->second.v.data();
    auto w = p->value.data();
    auto g = p->grad.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= alpha * mhat / (std::sqrt(vhat) + config_.epsilon);
      if (!std::isfinite(w[i])) {
        throw NumericError("non-finite value after update of '" + p->name + "'");
      }
    }
  }
}

std::string phase_name(Phase phase) {
  switch (phase) {
    case Phase::kConstant: return "constant";
    case Phase::kAnneal1: return "anneal1";
    case Phase::kAnneal2: return "anneal2";
    case Phase::kDone: return "done";
  }
  return "?";
}

ScheduleResult run_schedule(const ScheduleConfig& config, const ScheduleHooks& hooks) {
  if (config.patience < 0 || config.max_epochs < 1 || config.anneal_epochs < 0 ||
      config.anneal_phases < 0 || config.anneal_phases > 2 || config.decay <= 0.0) {
    throw UsageError("invalid schedule configuration");
  }
  ScheduleResult result;
  result.best_dev = -std::numeric_limits<double>::infinity();
  int executed = 0;
  int stale = 0;

  auto run_epoch = [&](int epoch, Phase phase, double alpha) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.executed = ++executed;
    rec.phase = phase;
    rec.alpha = alpha;
    rec.train_loss = hooks.train_epoch(alpha);
    rec.dev_score = hooks.evaluate_dev();
    result.epochs.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
    if (rec.dev_score > result.best_dev) {
      result.best_dev = rec.dev_score;
      result.best_epoch = epoch;
      if (hooks.save_best) hooks.save_best();
      return true;
    }
    return false;
  };

  for (int epoch = 1;; ++epoch) {
    if (run_epoch(epoch, Phase::kConstant, config.alpha)) {
      stale = 0;
    } else {
      ++stale;
    }
    if (stale > config.patience || epoch >= config.max_epochs) break;
  }

  result.trigger_epoch = result.best_epoch;
  if (hooks.restore_best) hooks.restore_best();
  int epoch = result.best_epoch;
  double alpha = config.alpha;
  for (int k = 0; k < config.anneal_phases; ++k) {
    alpha /= config.decay;
    const Phase phase = k == 0 ? Phase::kAnneal1 : Phase::kAnneal2;
    for (int e = 0; e < config.anneal_epochs; ++e) run_epoch(++epoch, phase, alpha);
  }
  if (hooks.restore_best) hooks.restore_best();
  return result;
}

Aggregate aggregate(std::span<const double> values) {
  Aggregate a;
  a.n = static_cast<int>(values.size());
  if (values.empty()) {
    a.mean = std::numeric_limits<double>::quiet_NaN();
    a.stddev = a.mean;
    return a;
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  a.mean = sum / a.n;
  if (a.n < 2) {
    a.stddev = std::numeric_limits<double>::quiet_NaN();
    return a;
  }
  double sq = 0.0;
  for (double v : sorted) sq += (v - a.mean) * (v - a.mean);
  a.stddev = std::sqrt(sq / (a.n - 1));
  return a;
}

MultiSeedResult multi_seed(const std::function<RunResult(std::uint64_t)>& run,
                           std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw UsageError("multi_seed needs at least one seed");
  MultiSeedResult out;
  std::vector<double> test;
  std::vector<double> dev;
  for (std::uint64_t s : seeds) {
    RunResult r = run(s);
    r.seed = s;
    test.push_back(r.test_score);
    dev.push_back(r.best_dev);
    out.runs.push_back(std::move(r));
  }
  out.test = aggregate(test);
  out.dev = aggregate(dev);
  return out;
}

SampleStats sample_stats(std::span<const double> values) {
  const Aggregate a = aggregate(values);
  return {a.mean, a.stddev, a.n};
}

WelchResult welch_test(const SampleStats& a, const SampleStats& b) {
  if (a.n < 2 || b.n < 2) throw UsageError("welch_test needs at least two samples per group");
  const double va = a.stddev * a.stddev / a.n;
  const double vb = b.stddev * b.stddev / b.n;
  const double diff = a.mean - b.mean;
  WelchResult r;
  if (va + vb == 0.0) {
    r.df = a.n + b.n - 2;
    if (diff == 0.0) {
      r.t = 0.0;
      r.p_two_sided = 1.0;
      r.p_greater = 0.5;
    } else {
      r.t = diff > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
      r.p_two_sided = 0.0;
      r.p_greater = diff > 0 ? 0.0 : 1.0;
    }
    return r;
  }
  r.t = diff / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) /
         (va * va / (a.n - 1) + vb * vb / (b.n - 1));
  const boost::math::students_t dist(r.df);
  r.p_greater = boost::math::cdf(boost::math::complement(dist, r.t));
  r.p_two_sided = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
  r.p_two_sided = std::min(1.0, r.p_two_sided);
  return r;
}

}  // namespace lmtag
