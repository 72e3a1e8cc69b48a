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

// Implicit-feedback corpus: ingestion, sequence building, 5-core style
// filtering, user splits and instance generation.

#ifndef WSLREC_CORPUS_HPP_
#define WSLREC_CORPUS_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wslrec/types.hpp"

namespace wslrec {

struct InteractionEvent {
  std::string user;
  std::string item;
  std::int64_t timestamp = 0;

  bool operator==(const InteractionEvent&) const = default;
};

// Parses `user<TAB>item<TAB>timestamp` lines. Blank lines are skipped; a
// malformed line throws ParseError carrying its 1-based line number.
std::vector<InteractionEvent> ingest_events(std::istream& in);
std::vector<InteractionEvent> ingest_events_file(
    const std::filesystem::path& path);

// A user's time-ordered items, still keyed by external ids.
struct RawSequence {
  std::string user;
  std::vector<std::string> items;
};

// Groups events per user (users in first-appearance order) and sorts each
// user's items by timestamp. The sort is stable, so ties keep input order.
std::vector<RawSequence> build_sequences(
    std::span<const InteractionEvent> events);

// Bidirectional external id <-> dense 0-based index mapping.
class IdMap {
 public:
  std::uint32_t insert(const std::string& external);
  std::optional<std::uint32_t> find(const std::string& external) const;
  const std::string& external(std::uint32_t index) const {
    return to_external_.at(index);
  }
  std::size_t size() const { return to_external_.size(); }

 private:
  std::vector<std::string> to_external_;
  std::unordered_map<std::string, std::uint32_t> to_internal_;
};

struct BehaviorSequence {
  UserIndex user = 0;
  std::vector<ItemIndex> items;

  std::size_t size() const { return items.size(); }
};

struct Corpus {
  IdMap users;
  IdMap items;
  // sequences[u].user == u.
  std::vector<BehaviorSequence> sequences;

  std::size_t num_users() const { return sequences.size(); }
  std::size_t num_items() const { return items.size(); }
  const BehaviorSequence& sequence(UserIndex u) const {
    return sequences.at(u);
  }
};

struct FilterOptions {
  std::size_t min_user_len = 5;
  std::size_t min_item_users = 5;
};

// Repeatedly drops users shorter than min_user_len and items seen by fewer
// than min_item_users distinct users until neither rule removes anything.
// Surviving users are indexed in input order, items in first appearance
// order scanning the surviving sequences. Throws EmptyCorpusError when
// nothing survives.
Corpus filter_corpus(std::span<const RawSequence> sequences,
                     const FilterOptions& options = {});

struct SplitCorpus {
  std::vector<UserIndex> train;
  std::vector<UserIndex> valid;
  std::vector<UserIndex> test;
};

// Seeded shuffle of all users, then contiguous cuts at
// floor(|U| * r0 / R) and floor(|U| * (r0 + r1) / R), R = r0 + r1 + r2.
SplitCorpus split_users(const Corpus& corpus, std::uint64_t seed,
                        std::array<unsigned, 3> ratios = {8, 1, 1});

// Split index t follows the 1-based convention: history is v_1..v_t, the
// next item is v_{t+1}. `history` views into the owning corpus.
struct TrainingInstance {
  UserIndex user = 0;
  std::size_t t = 0;
  std::span<const ItemIndex> history;
  ItemIndex next_item = 0;
  ItemSet future_set;
  // Items v_{t+1}..v_{n_u} in order, with repeats.
  std::span<const ItemIndex> future;
};

inline constexpr std::size_t kFirstSplitIndex = 4;

// n_u - 4 instances for t = 4..n_u-1, histories truncated to the most
// recent max_history items. Throws when n_u < 5.
std::vector<TrainingInstance> training_instances(const BehaviorSequence& seq,
                                                 std::size_t max_history);

std::vector<TrainingInstance> training_instances(
    const Corpus& corpus, std::span<const UserIndex> users,
    std::size_t max_history);

struct EvalSplit {
  std::span<const ItemIndex> history;  // first floor(0.8 n_u) items
  ItemSet truth;                       // set of the remaining items
};

EvalSplit eval_split(const BehaviorSequence& seq);

// The last `max_len` entries of a history.
inline std::span<const ItemIndex> recent(std::span<const ItemIndex> history,
                                         std::size_t max_len) {
  if (history.size() <= max_len) return history;
  return history.subspan(history.size() - max_len);
}

// Corpus directory layout: users.tsv and items.tsv
// (`external_id<TAB>internal_index`), sequences.tsv
// (`user_index<TAB>item,item,...`) and split.tsv (`user_index<TAB>part`).
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus,
                 const SplitCorpus& split);

struct StoredCorpus {
  Corpus corpus;
  SplitCorpus split;
};

StoredCorpus load_corpus(const std::filesystem::path& dir);

}  // namespace wslrec

#endif  // WSLREC_CORPUS_HPP_
