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

// Three-stage weakly supervised training: pre-train on weak labels, mine
// each training instance's top-k set with the pre-trained model, fine-tune
// on the next item plus the mined items that also occur in the future.

#ifndef WSLREC_PIPELINE_HPP_
#define WSLREC_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "wslrec/corpus.hpp"
#include "wslrec/eval.hpp"
#include "wslrec/modelfree.hpp"
#include "wslrec/seqmodel.hpp"
#include "wslrec/trainer.hpp"

namespace wslrec {

struct WeakSupervisionConfig {
  std::vector<WeakSource> sources = {WeakSource::kBr, WeakSource::kItemCf};
  std::size_t k_ws = 20;
  std::size_t mining_k = 50;
  ItemCfOptions itemcf;
};

void validate(const WeakSupervisionConfig& config);

// Artifacts the weak sources are computed from. ItemCF needs a similarity
// table and Original a conventionally trained model.
struct WeakArtifacts {
  const SimilarityTable* itemcf = nullptr;
  const SequenceModel* original = nullptr;
};

// A training set bound to its corpus: instances of the training users and
// the validation users that drive early stopping.
struct TrainingData {
  const Corpus* corpus = nullptr;
  const SplitCorpus* split = nullptr;
  std::size_t max_history = 20;
  std::vector<TrainingInstance> instances;

  static TrainingData build(const Corpus& corpus, const SplitCorpus& split,
                            std::size_t max_history);
};

// Recall@50 on the validation users.
EvalHook validation_hook(const TrainingData& data);

// Each source's top-k_ws set for every instance: result[i][s] belongs to
// instances[i] and sources[s].
std::vector<std::vector<ItemSet>> weak_label_sets(
    std::span<const TrainingInstance> instances,
    const WeakSupervisionConfig& config, const WeakArtifacts& artifacts);

using MinedKey = std::pair<UserIndex, std::size_t>;  // (user, t)

class MinedLabelTable {
 public:
  MinedLabelTable() = default;
  explicit MinedLabelTable(std::size_t k) : k_(k) {}

  std::size_t k() const { return k_; }
  std::size_t size() const { return rows_.size(); }
  // Ranked top-k list, or nullptr.
  const std::vector<ItemIndex>* find(UserIndex user, std::size_t t) const;
  void insert(UserIndex user, std::size_t t, std::vector<ItemIndex> items);
  const std::map<MinedKey, std::vector<ItemIndex>>& rows() const {
    return rows_;
  }

  bool operator==(const MinedLabelTable&) const = default;

 private:
  std::size_t k_ = 0;
  std::map<MinedKey, std::vector<ItemIndex>> rows_;
};

// TSV `user<TAB>t<TAB>item,item,...`, items in rank order.
void save_mined(const std::filesystem::path& path,
                const MinedLabelTable& table);
MinedLabelTable load_mined(const std::filesystem::path& path);

// Positive sets of every instance under a strategy. `weak` is needed for
// WeakUnion and `mined` for MinedFineTune.
std::vector<ItemSet> label_instances(
    const LabelStrategy& strategy, std::span<const TrainingInstance> instances,
    const std::vector<std::vector<ItemSet>>* weak = nullptr,
    const MinedLabelTable* mined = nullptr);

struct StageResult {
  FitResult fit;
  std::vector<ItemSet> positives;
};

// Conventional training with a Next-c / Next-all strategy.
StageResult train_standard(const TrainingData& data,
                           const LabelStrategy& strategy,
                           const SequenceModel& init,
                           const TrainConfig& config);

// Fit on the union of the configured weak sources.
StageResult pretrain(const TrainingData& data,
                     const WeakSupervisionConfig& weak,
                     const WeakArtifacts& artifacts, const SequenceModel& init,
                     const TrainConfig& config);

// Unrestricted top-k of every training instance under `model`. Instances
// are spread over `threads` workers; the table is independent of the
// thread count.
MinedLabelTable mine_topk(const SequenceModel& model, const TrainingData& data,
                          std::size_t k, unsigned threads = 1);

// Fit from the pre-trained parameters with the mined fine-tune labels.
// Throws when the table misses any training instance.
StageResult finetune(const SequenceModel& pretrained,
                     const MinedLabelTable& mined, const TrainingData& data,
                     const TrainConfig& config);

struct WslrecResult {
  StageResult pretrain;
  MinedLabelTable mined;
  StageResult finetune;
};

struct WslrecOptions {
  TrainConfig pretrain;
  TrainConfig finetune;
  unsigned threads = 1;
  // When set, pretrain.ckpt, pretrain_log.jsonl, mined.tsv, final.ckpt and
  // finetune_log.jsonl are written there.
  std::optional<std::filesystem::path> out_dir;
};

WslrecResult run_wslrec(const TrainingData& data,
                        const WeakSupervisionConfig& weak,
                        const WeakArtifacts& artifacts,
                        const SequenceModel& init, const WslrecOptions& options);

// ---------------------------------------------------------------------------
// Ensemble baseline.

struct EnsembleSplit {
  std::size_t a = 0;  // BR
  std::size_t b = 0;  // ItemCF
  std::size_t c = 0;  // model
};

// BR top-a, then ItemCF top-b, then model top-c, duplicates dropped keeping
// the first occurrence, backfilled with the model's next-ranked items up to
// k. `br` must already be BR's top-a list; `itemcf` and `model` are ranked
// lists that are cut here. Throws unless a + b + c == k.
std::vector<ItemIndex> ensemble_topk(std::span<const ItemIndex> br,
                                     std::span<const ItemIndex> itemcf,
                                     std::span<const ItemIndex> model,
                                     const EnsembleSplit& split, std::size_t k);

struct EnsembleChoice {
  EnsembleSplit split;
  Real recall = 0;
};

// Recommender for a fixed split.
Recommender ensemble_recommender(const SimilarityTable& table,
                                 const SequenceModel& model,
                                 std::size_t max_history,
                                 const EnsembleSplit& split);

// Grid over a, b in steps of `step` (default k / 10), c = k - a - b,
// maximizing recall@k on `users`; the first best in (a, b) order wins.
EnsembleChoice tune_ensemble(const Corpus& corpus,
                             std::span<const UserIndex> users,
                             const SimilarityTable& table,
                             const SequenceModel& model,
                             std::size_t max_history, std::size_t k,
                             std::size_t step = 0);

}  // namespace wslrec

#endif  // WSLREC_PIPELINE_HPP_
