// Copyright 2026 The wslrec Authors.
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

#ifndef WSLREC_TRAINER_HPP_
#define WSLREC_TRAINER_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wslrec/corpus.hpp"
#include "wslrec/random.hpp"
#include "wslrec/seqmodel.hpp"
#include "wslrec/types.hpp"

namespace wslrec {

// ---------------------------------------------------------------------------
// Positive label strategies.

enum class WeakSource : std::uint8_t { kBr, kItemCf, kOriginal };

std::string_view weak_source_name(WeakSource source);
// Comma separated list of "br", "itemcf", "original".
std::vector<WeakSource> parse_weak_sources(std::string_view list);

struct NextC {
  std::size_t c = 1;
};
struct NextAll {};
struct WeakUnion {
  std::vector<WeakSource> sources;
  std::size_t k = 20;
};
struct MinedFineTune {};

using LabelStrategy = std::variant<NextC, NextAll, WeakUnion, MinedFineTune>;

// "next1", "nextc:<c>", "nextall", "weak:<sources>:<k>", "mined".
LabelStrategy parse_strategy(std::string_view spec);
std::string strategy_name(const LabelStrategy& strategy);

// Per-instance inputs a strategy may consult. `weak_sets` holds, in source
// order, each configured source's top-k set for this instance; `mined` is
// the pre-trained model's top-k set.
struct LabelInputs {
  std::span<const ItemSet> weak_sets;
  const ItemSet* mined = nullptr;
};

// Positive set for one instance (sorted, never empty).
//   NextC(c)      {v_{t+1}, ..., v_{min(t+c, n_u)}}
//   NextAll       the future set
//   WeakUnion     union of the weak sets
//   MinedFineTune {v_{t+1}} + (mined & future set)
ItemSet build_labels(const LabelStrategy& strategy,
                     const TrainingInstance& instance,
                     const LabelInputs& inputs = {});

// ---------------------------------------------------------------------------
// Sampled softmax.

// Uniform proposal over the vocabulary; log Q(v) = -log |V|.
struct UniformProposal {
  std::size_t num_items = 0;
  Real log_prob(ItemIndex) const {
    return -std::log(static_cast<Real>(num_items));
  }
};

// `count` i.i.d. uniform draws with members of `exclude` rejected.
std::vector<ItemIndex> sample_negatives(Rng& rng, const UniformProposal& q,
                                        std::size_t count,
                                        const ItemSet& exclude);

struct LossOptions {
  // Subtract log Q from every score before the softmax.
  bool proposal_correction = true;
};

// Sum over positives p of
//   -( g(p) - log( exp(g(p)) + sum_n exp(g(n)) ) ),  g = f - log Q,
// evaluated through the differences g(n) - g(p). When `grads` is given the
// exact gradient is added into it. Throws NumericError on non-finite values.
Real sampled_softmax_loss(const SequenceModel& model,
                          std::span<const ItemIndex> history,
                          std::span<const ItemIndex> positives,
                          std::span<const ItemIndex> negatives,
                          SequenceModel* grads = nullptr,
                          const LossOptions& options = {});

// ---------------------------------------------------------------------------
// Adam.

struct AdamOptions {
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState(const SequenceModel& like, AdamOptions options = {})
      : options_(options), m_(like.zeros_like()), v_(like.zeros_like()) {}

  // Bias-corrected Adam update of every tensor.
  void step(SequenceModel& params, const SequenceModel& grads, Real lr);

  std::uint64_t steps() const { return step_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  SequenceModel m_;
  SequenceModel v_;
  std::uint64_t step_ = 0;
};

// ---------------------------------------------------------------------------
// Training loop.

enum class NegativePool : std::uint8_t {
  // batch_size * negatives_per_instance draws shared by the batch.
  kPerInstance,
  // negatives_per_instance draws shared by the batch.
  kPerBatch,
};

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t negatives_per_instance = 10;
  NegativePool negative_pool = NegativePool::kPerInstance;
  Real learning_rate = 0.001;
  std::size_t max_iterations = 1'000'000;
  std::size_t eval_interval = 1000;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  LossOptions loss;
};

void validate(const TrainConfig& config);

struct LogRecord {
  std::size_t iter = 0;
  Real loss_avg = 0;  // mean instance loss since the previous record
  Real recall50_val = 0;
  bool best = false;
};

// {"iter":..,"loss_avg":..,"recall50_val":..,"best":..} per line.
void write_training_log(std::ostream& out, std::span<const LogRecord> log);

// Validation metric, higher is better.
using EvalHook = std::function<Real(const SequenceModel&)>;

struct FitResult {
  SequenceModel model;  // parameters of the best evaluation
  std::vector<LogRecord> log;
  std::size_t iterations = 0;
};

// Minibatch training from `init`. positives[i] is the label set of
// instances[i]. The hook runs at iteration 0, every eval_interval
// iterations and at the last iteration; training stops once `patience`
// consecutive evaluations fail to improve on the best.
FitResult fit(const SequenceModel& init,
              std::span<const TrainingInstance> instances,
              std::span<const ItemSet> positives, const TrainConfig& config,
              const EvalHook& hook);

}  // namespace wslrec

#endif  // WSLREC_TRAINER_HPP_
