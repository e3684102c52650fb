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

#ifndef LMTAG_TRAINING_H_
#define LMTAG_TRAINING_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmtag/graph.h"

namespace lmtag {

// Adam with bias correction:
//   m <- b1 m + (1 - b1) g
//   v <- b2 v + (1 - b2) g^2
//   p <- p - alpha * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Applies one update from each parameter's grad. Frozen parameters are
  // skipped. Throws NumericError if an updated value is not finite.
  void step(std::span<Parameter* const> params, double alpha);

  long steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  const Tensor& first_moment(const Parameter& p) const { return moments_.at(&p).m; }
  const Tensor& second_moment(const Parameter& p) const { return moments_.at(&p).v; }

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };
  AdamConfig config_;
  long steps_ = 0;
  std::unordered_map<const Parameter*, Moments> moments_;
};

// Constant learning rate until the development score stops improving, then
// two annealing phases (alpha / 10, then alpha / 100) of anneal_epochs each.
//
// The constant phase ends once `patience` consecutive epochs fail to beat the
// best score (so patience 0 ends it at the first non-improving epoch), or at
// max_epochs. Training then resumes from the best checkpoint, and the
// annealing epochs are numbered from the best epoch onward. The best
// development checkpoint over all epochs is restored at the end.
struct ScheduleConfig {
  double alpha = 1e-3;
  double decay = 10.0;
  int anneal_epochs = 5;
  int anneal_phases = 2;
  int patience = 5;
  int max_epochs = 50;
};

enum class Phase { kConstant, kAnneal1, kAnneal2, kDone };
std::string phase_name(Phase phase);

struct EpochRecord {
  int epoch = 0;     // position in the retained model's training history
  int executed = 0;  // count of epochs actually trained so far
  Phase phase = Phase::kConstant;
  double alpha = 0.0;
  double train_loss = 0.0;
  double dev_score = 0.0;
};

struct ScheduleHooks {
  std::function<double(double alpha)> train_epoch;  // returns mean training loss
  std::function<double()> evaluate_dev;
  std::function<void()> save_best;
  std::function<void()> restore_best;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct ScheduleResult {
  std::vector<EpochRecord> epochs;
  int trigger_epoch = 0;  // best epoch when annealing began
  int best_epoch = 0;
  double best_dev = 0.0;
};

ScheduleResult run_schedule(const ScheduleConfig& config, const ScheduleHooks& hooks);

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_dev = 0.0;
  double test_score = 0.0;
  double wall_seconds = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n - 1); NaN when n < 2
  int n = 0;
};

// Values are summed in sorted order so the result does not depend on the
// order runs finished in.
Aggregate aggregate(std::span<const double> values);

struct MultiSeedResult {
  Aggregate test;
  Aggregate dev;
  std::vector<RunResult> runs;  // in seed-list order
};

// Runs one training per seed (each with its own state) and aggregates test
// and best-dev scores.
MultiSeedResult multi_seed(const std::function<RunResult(std::uint64_t)>& run,
                           std::span<const std::uint64_t> seeds);

struct SampleStats {
  double mean = 0.0;
  double stddev = 0.0;
  int n = 0;
};

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_two_sided = 1.0;
  double p_greater = 0.5;  // one-sided, alternative mean(a) > mean(b)
};

// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
// freedom; p-values from the Student t CDF. With both deviations zero, equal
// means give t = 0, p = 1 and unequal means give p = 0.
WelchResult welch_test(const SampleStats& a, const SampleStats& b);
SampleStats sample_stats(std::span<const double> values);

}  // namespace lmtag

#endif  // LMTAG_TRAINING_H_
