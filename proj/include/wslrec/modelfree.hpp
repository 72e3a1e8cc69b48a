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

// Model-free weak supervision: behavioral retargeting and item-based
// collaborative filtering over a log-damped weighted cosine similarity.

#ifndef WSLREC_MODELFREE_HPP_
#define WSLREC_MODELFREE_HPP_

#include <filesystem>
#include <span>
#include <vector>

#include "wslrec/corpus.hpp"
#include "wslrec/types.hpp"

namespace wslrec {

struct WeightedItem {
  ItemIndex item = 0;
  Real weight = 0;
};

// One sparse row per training user, sorted by item index.
// W(u, v) = count(v in S_u) / log2(1 + n_u).
struct UserItemWeights {
  std::size_t num_items = 0;
  std::vector<std::vector<WeightedItem>> rows;
};

UserItemWeights build_weights(const Corpus& corpus,
                              std::span<const UserIndex> train_users);

struct Neighbor {
  ItemIndex item = 0;
  Real sim = 0;
};

class SimilarityTable {
 public:
  SimilarityTable() = default;
  SimilarityTable(std::vector<std::vector<Neighbor>> rows, std::size_t prune)
      : rows_(std::move(rows)), prune_(prune) {}

  std::size_t num_items() const { return rows_.size(); }
  std::size_t prune_width() const { return prune_; }
  // Neighbors of v by descending similarity, ties by ascending index.
  std::span<const Neighbor> row(ItemIndex v) const { return rows_.at(v); }

 private:
  std::vector<std::vector<Neighbor>> rows_;
  std::size_t prune_ = 0;
};

// Accumulates W(u,v) W(u,v') over co-occurring pairs, normalizes by the
// item norms and keeps the prune_n best neighbors per item. Users are
// sharded across `threads` workers and the partial sums are merged in
// shard order; only threads == 1 reproduces the sequential sums bit for
// bit.
SimilarityTable build_similarity(const UserItemWeights& weights,
                                 std::size_t prune_n, unsigned threads = 1);

// TSV `item<TAB>item<TAB>similarity`, rows sorted by (first item,
// descending similarity), similarities printed with 17 significant digits.
void save_similarity(const std::filesystem::path& path,
                     const SimilarityTable& table);
SimilarityTable load_similarity(const std::filesystem::path& path,
                                std::size_t num_items);

// Distinct items among the last k positions of the history, most recent
// first.
std::vector<ItemIndex> br_topk(std::span<const ItemIndex> history,
                               std::size_t k);

struct ItemCfOptions {
  // Treat history items as candidates with sim(v, v) = 1.
  bool include_history = false;
};

// Top-k items by max similarity to any history item, best first, ties by
// ascending index. May return fewer than k items.
std::vector<ItemIndex> itemcf_topk(std::span<const ItemIndex> history,
                                   const SimilarityTable& table, std::size_t k,
                                   const ItemCfOptions& options = {});

}  // namespace wslrec

#endif  // WSLREC_MODELFREE_HPP_
