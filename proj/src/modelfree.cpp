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

#include "wslrec/modelfree.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "wslrec/error.hpp"

namespace wslrec {

UserItemWeights build_weights(const Corpus& corpus,
                              std::span<const UserIndex> train_users) {
  UserItemWeights w;
  w.num_items = corpus.num_items();
  w.rows.reserve(train_users.size());
  for (UserIndex u : train_users) {
    const auto& items = corpus.sequence(u).items;
    std::vector<ItemIndex> sorted(items);
    std::sort(sorted.begin(), sorted.end());
    const Real denom = std::log2(1.0 + static_cast<Real>(items.size()));
    std::vector<WeightedItem> row;
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      row.push_back({sorted[i], static_cast<Real>(j - i) / denom});
      i = j;
    }
    w.rows.push_back(std::move(row));
  }
  return w;
}

namespace {

inline std::uint64_t pair_key(ItemIndex a, ItemIndex b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

struct PartialSums {
  std::unordered_map<std::uint64_t, Real> dots;
  std::vector<Real> sq_norms;
};

void accumulate(const UserItemWeights& weights, std::size_t begin,
                std::size_t end, PartialSums& out) {
  out.sq_norms.assign(weights.num_items, 0.0);
  for (std::size_t u = begin; u < end; ++u) {
    const auto& row = weights.rows[u];
    for (std::size_t i = 0; i < row.size(); ++i) {
      out.sq_norms[row[i].item] += row[i].weight * row[i].weight;
      for (std::size_t j = i + 1; j < row.size(); ++j) {
        out.dots[pair_key(row[i].item, row[j].item)] +=
            row[i].weight * row[j].weight;
      }
    }
  }
}

bool by_sim_desc(const Neighbor& a, const Neighbor& b) {
  if (a.sim != b.sim) return a.sim > b.sim;
  return a.item < b.item;
}

}  // namespace

SimilarityTable build_similarity(const UserItemWeights& weights,
                                 std::size_t prune_n, unsigned threads) {
  if (weights.rows.empty()) throw Error("no training users to build ItemCF");
  const std::size_t n_users = weights.rows.size();
  const std::size_t shards =
      std::max<std::size_t>(1, std::min<std::size_t>(threads, n_users));

  std::vector<PartialSums> partial(shards);
  if (shards == 1) {
    accumulate(weights, 0, n_users, partial[0]);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t s = 0; s < shards; ++s) {
      const std::size_t b = n_users * s / shards;
      const std::size_t e = n_users * (s + 1) / shards;
      workers.emplace_back(
          [&, b, e, s] { accumulate(weights, b, e, partial[s]); });
    }
    for (auto& w : workers) w.join();
  }

  PartialSums& total = partial[0];
  for (std::size_t s = 1; s < shards; ++s) {
    for (std::size_t v = 0; v < weights.num_items; ++v) {
      total.sq_norms[v] += partial[s].sq_norms[v];
    }
    // Per-key sums are added in shard order whatever the hash order is.
    for (const auto& [key, dot] : partial[s].dots) total.dots[key] += dot;
  }

  std::vector<std::vector<Neighbor>> rows(weights.num_items);
  for (const auto& [key, dot] : total.dots) {
    const auto a = static_cast<ItemIndex>(key >> 32);
    const auto b = static_cast<ItemIndex>(key & 0xffffffffu);
    Real sim = dot / (std::sqrt(total.sq_norms[a]) *
                      std::sqrt(total.sq_norms[b]));
    sim = std::min<Real>(sim, 1.0);
    rows[a].push_back({b, sim});
    rows[b].push_back({a, sim});
  }
  for (auto& row : rows) {
    if (row.size() > prune_n) {
      std::partial_sort(row.begin(), row.begin() + prune_n, row.end(),
                        by_sim_desc);
      row.resize(prune_n);
    } else {
      std::sort(row.begin(), row.end(), by_sim_desc);
    }
    row.shrink_to_fit();
  }
  return SimilarityTable(std::move(rows), prune_n);
}

void save_similarity(const std::filesystem::path& path,
                     const SimilarityTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  char buf[64];
  for (ItemIndex v = 0; v < table.num_items(); ++v) {
    for (const auto& n : table.row(v)) {
      std::snprintf(buf, sizeof(buf), "%.17g", n.sim);
      out << v << '\t' << n.item << '\t' << buf << '\n';
    }
  }
}

SimilarityTable load_similarity(const std::filesystem::path& path,
                                std::size_t num_items) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::vector<Neighbor>> rows(num_items);
  std::size_t widest = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ItemIndex a = 0;
    ItemIndex b = 0;
    double sim = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    auto r1 = std::from_chars(p, end, a);
    if (r1.ec != std::errc() || r1.ptr == end || *r1.ptr != '\t') {
      throw ParseError(line_no, "similarity table: malformed row");
    }
    auto r2 = std::from_chars(r1.ptr + 1, end, b);
    if (r2.ec != std::errc() || r2.ptr == end || *r2.ptr != '\t') {
      throw ParseError(line_no, "similarity table: malformed row");
    }
    auto r3 = std::from_chars(r2.ptr + 1, end, sim);
    if (r3.ec != std::errc() || r3.ptr != end) {
      throw ParseError(line_no, "similarity table: malformed similarity");
    }
    if (a >= num_items || b >= num_items) {
      throw DimensionError("similarity table references item " +
                           std::to_string(std::max(a, b)) +
                           " but the corpus has " + std::to_string(num_items));
    }
    rows[a].push_back({b, sim});
    widest = std::max(widest, rows[a].size());
  }
  for (auto& row : rows) std::sort(row.begin(), row.end(), by_sim_desc);
  return SimilarityTable(std::move(rows), widest);
}

std::vector<ItemIndex> br_topk(std::span<const ItemIndex> history,
                               std::size_t k) {
  const auto window = history.last(std::min(k, history.size()));
  std::vector<ItemIndex> out;
  for (auto it = window.rbegin(); it != window.rend(); ++it) {
    if (std::find(out.begin(), out.end(), *it) == out.end()) {
      out.push_back(*it);
    }
  }
  return out;
}

std::vector<ItemIndex> itemcf_topk(std::span<const ItemIndex> history,
                                   const SimilarityTable& table, std::size_t k,
                                   const ItemCfOptions& options) {
  // Dense scratch indexed by item, reset through the touched list.
  thread_local std::vector<Real> best;
  thread_local std::vector<char> state;  // 0 unseen, 1 candidate, 2 history
  best.resize(std::max(best.size(), table.num_items()));
  state.resize(best.size(), 0);
  std::vector<ItemIndex> touched;

  for (ItemIndex h : history) {
    if (h >= table.num_items()) {
      throw DimensionError("history item " + std::to_string(h) +
                           " outside the similarity table");
    }
    if (state[h] != 2) {
      state[h] = 2;
      best[h] = 1.0;
      touched.push_back(h);
    }
  }
  const std::size_t history_items = touched.size();
  for (std::size_t i = 0; i < history_items; ++i) {
    for (const auto& n : table.row(touched[i])) {
      char& st = state[n.item];
      if (st == 2) continue;
      if (st == 0) {
        st = 1;
        best[n.item] = n.sim;
        touched.push_back(n.item);
      } else {
        best[n.item] = std::max(best[n.item], n.sim);
      }
    }
  }

  std::vector<Neighbor> cands;
  const std::size_t first = options.include_history ? 0 : history_items;
  cands.reserve(touched.size() - first);
  for (std::size_t i = first; i < touched.size(); ++i) {
    cands.push_back({touched[i], best[touched[i]]});
  }
  for (ItemIndex v : touched) state[v] = 0;

  const std::size_t take = std::min(k, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + take, cands.end(),
                    by_sim_desc);
  std::vector<ItemIndex> out(take);
  for (std::size_t i = 0; i < take; ++i) out[i] = cands[i].item;
  return out;
}

}  // namespace wslrec
