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

// Per-user averaged retrieval metrics and the hits difference rate.

#ifndef WSLREC_EVAL_HPP_
#define WSLREC_EVAL_HPP_

#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wslrec/corpus.hpp"
#include "wslrec/seqmodel.hpp"
#include "wslrec/types.hpp"

namespace wslrec {

struct MetricsAtK {
  Real precision = 0;
  Real recall = 0;
  Real f1 = 0;
  Real ndcg = 0;
  Real hit_rate = 0;
  std::size_t users = 0;
};

struct MetricOptions {
  // Divide each user's DCG by the ideal DCG.
  bool normalized_ndcg = false;
};

// Averages over users of
//   precision |B & Y| / k, recall |B & Y| / |Y|, f1 2|B & Y| / (k + |Y|),
//   hit 1(|B & Y| > 0), ndcg sum_{i<=k} 1(v_i in Y) / log2(i + 1),
// with B the first k entries of each list (shorter lists are used as-is and
// repeated entries count once). Throws when a truth set is empty.
MetricsAtK metrics_at_k(std::span<const std::vector<ItemIndex>> recommendations,
                        std::span<const ItemSet> truths, std::size_t k,
                        const MetricOptions& options = {});

// B & Y for one user's top-k list.
ItemSet hit_set(std::span<const ItemIndex> recommendation,
                const ItemSet& truth, std::size_t k);

// (|H1 | H2| - |H1 & H2|) / |H1 | H2|, zero when both are empty.
Real hdr(const ItemSet& hits_a, const ItemSet& hits_b);

// Sum of per-user values over the number of strictly positive ones; zero
// when none is positive.
Real mean_hdr(std::span<const Real> per_user);

using EvalReport = std::map<std::size_t, MetricsAtK>;

// history -> ranked list of (up to) k items.
using Recommender =
    std::function<std::vector<ItemIndex>(std::span<const ItemIndex>, std::size_t)>;

// Splits every user's sequence 80/20, asks the recommender for each cutoff
// and aggregates metrics_at_k.
EvalReport evaluate(const Recommender& recommender, const Corpus& corpus,
                    std::span<const UserIndex> users,
                    std::span<const std::size_t> cutoffs,
                    const MetricOptions& options = {});

// Recommender ranking all items with a model over the most recent
// max_history history items.
Recommender model_recommender(const SequenceModel& model,
                              std::size_t max_history);

// Recall@k of a model on the given users.
Real model_recall(const SequenceModel& model, const Corpus& corpus,
                  std::span<const UserIndex> users, std::size_t max_history,
                  std::size_t k);

// {"20": {"precision":..,"recall":..,"f1":..,"ndcg":..,"hit_rate":..}, ...}
std::string report_json(const EvalReport& report);
// Aligned plain-text table, one row per cutoff.
std::string report_table(const EvalReport& report);

}  // namespace wslrec

#endif  // WSLREC_EVAL_HPP_
