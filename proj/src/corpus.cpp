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

#include "wslrec/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "wslrec/error.hpp"
#include "wslrec/random.hpp"

namespace wslrec {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<InteractionEvent> ingest_events(std::istream& in) {
  std::vector<InteractionEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(line_no, "expected 3 tab-separated fields, got " +
                                    std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw ParseError(line_no, "empty user or item id");
    }
    std::int64_t ts = 0;
    if (!parse_int(fields[2], ts) || ts < 0) {
      throw ParseError(line_no, "bad timestamp '" + std::string(fields[2]) +
                                    "'");
    }
    events.push_back({std::string(fields[0]), std::string(fields[1]), ts});
  }
  return events;
}

std::vector<InteractionEvent> ingest_events_file(
    const std::filesystem::path& path) {
  auto in = open_in(path);
  return ingest_events(in);
}

std::vector<RawSequence> build_sequences(
    std::span<const InteractionEvent> events) {
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::vector<const InteractionEvent*>> per_user;
  std::vector<RawSequence> out;
  for (const auto& e : events) {
    auto [it, inserted] = slot.try_emplace(e.user, out.size());
    if (inserted) {
      out.push_back({e.user, {}});
      per_user.emplace_back();
    }
    per_user[it->second].push_back(&e);
  }
  for (std::size_t u = 0; u < out.size(); ++u) {
    auto& evs = per_user[u];
    std::stable_sort(evs.begin(), evs.end(),
                     [](const InteractionEvent* a, const InteractionEvent* b) {
                       return a->timestamp < b->timestamp;
                     });
    out[u].items.reserve(evs.size());
    for (const auto* e : evs) out[u].items.push_back(e->item);
  }
  return out;
}

std::uint32_t IdMap::insert(const std::string& external) {
  auto [it, inserted] = to_internal_.try_emplace(
      external, static_cast<std::uint32_t>(to_external_.size()));
  if (inserted) to_external_.push_back(external);
  return it->second;
}

std::optional<std::uint32_t> IdMap::find(const std::string& external) const {
  const auto it = to_internal_.find(external);
  if (it == to_internal_.end()) return std::nullopt;
  return it->second;
}

Corpus filter_corpus(std::span<const RawSequence> sequences,
                     const FilterOptions& options) {
  // Work on temporary item ids; final ids are assigned after the fixpoint.
  IdMap tmp_items;
  std::vector<std::vector<std::uint32_t>> seqs(sequences.size());
  for (std::size_t u = 0; u < sequences.size(); ++u) {
    seqs[u].reserve(sequences[u].items.size());
    for (const auto& item : sequences[u].items) {
      seqs[u].push_back(tmp_items.insert(item));
    }
  }

  std::vector<char> user_alive(seqs.size(), 1);
  std::vector<char> item_alive(tmp_items.size(), 1);
  std::vector<std::size_t> item_users(tmp_items.size());
  std::vector<std::size_t> last_seen(tmp_items.size());

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t u = 0; u < seqs.size(); ++u) {
      if (!user_alive[u]) continue;
      std::size_t len = 0;
      for (auto v : seqs[u]) len += item_alive[v] ? 1 : 0;
      if (len < options.min_user_len) {
        user_alive[u] = 0;
        changed = true;
      }
    }
    std::fill(item_users.begin(), item_users.end(), 0);
    std::fill(last_seen.begin(), last_seen.end(), SIZE_MAX);
    for (std::size_t u = 0; u < seqs.size(); ++u) {
      if (!user_alive[u]) continue;
      for (auto v : seqs[u]) {
        if (item_alive[v] && last_seen[v] != u) {
          last_seen[v] = u;
          ++item_users[v];
        }
      }
    }
    for (std::size_t v = 0; v < item_alive.size(); ++v) {
      if (item_alive[v] && item_users[v] < options.min_item_users) {
        item_alive[v] = 0;
        changed = true;
      }
    }
  }

  Corpus corpus;
  for (std::size_t u = 0; u < seqs.size(); ++u) {
    if (!user_alive[u]) continue;
    BehaviorSequence seq;
    seq.user = corpus.users.insert(sequences[u].user);
    for (std::size_t i = 0; i < seqs[u].size(); ++i) {
      if (item_alive[seqs[u][i]]) {
        seq.items.push_back(corpus.items.insert(sequences[u].items[i]));
      }
    }
    corpus.sequences.push_back(std::move(seq));
  }
  if (corpus.sequences.empty()) throw EmptyCorpusError();
  return corpus;
}

SplitCorpus split_users(const Corpus& corpus, std::uint64_t seed,
                        std::array<unsigned, 3> ratios) {
  const std::size_t n = corpus.num_users();
  if (n < ratios.size()) {
    throw Error("cannot split " + std::to_string(n) + " users into " +
                std::to_string(ratios.size()) + " partitions");
  }
  const unsigned total = ratios[0] + ratios[1] + ratios[2];
  if (total == 0) throw ConfigError("split ratios sum to zero");

  std::vector<UserIndex> order(n);
  std::iota(order.begin(), order.end(), UserIndex{0});
  Rng rng(seed);
  rng.shuffle(std::span<UserIndex>(order));

  const std::size_t cut1 = n * ratios[0] / total;
  const std::size_t cut2 = n * (ratios[0] + ratios[1]) / total;
  SplitCorpus split;
  split.train.assign(order.begin(), order.begin() + cut1);
  split.valid.assign(order.begin() + cut1, order.begin() + cut2);
  split.test.assign(order.begin() + cut2, order.end());
  // Canonical order, so a split reloaded from disk is indistinguishable.
  for (auto* part : {&split.train, &split.valid, &split.test}) {
    std::sort(part->begin(), part->end());
  }
  return split;
}

std::vector<TrainingInstance> training_instances(const BehaviorSequence& seq,
                                                 std::size_t max_history) {
  const std::size_t n = seq.size();
  if (n < kFirstSplitIndex + 1) {
    throw Error("sequence of user " + std::to_string(seq.user) +
                " is shorter than 5");
  }
  if (max_history == 0) throw ConfigError("max history length must be >= 1");
  const std::span<const ItemIndex> items(seq.items);
  std::vector<TrainingInstance> out;
  out.reserve(n - kFirstSplitIndex);
  for (std::size_t t = kFirstSplitIndex; t < n; ++t) {
    TrainingInstance inst;
    inst.user = seq.user;
    inst.t = t;
    inst.history = recent(items.first(t), max_history);
    inst.next_item = items[t];
    inst.future = items.subspan(t);
    inst.future_set = make_item_set(inst.future);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<TrainingInstance> training_instances(
    const Corpus& corpus, std::span<const UserIndex> users,
    std::size_t max_history) {
  std::vector<TrainingInstance> out;
  for (UserIndex u : users) {
    auto part = training_instances(corpus.sequence(u), max_history);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

EvalSplit eval_split(const BehaviorSequence& seq) {
  const std::size_t n = seq.size();
  const std::size_t cut = n * 4 / 5;
  if (cut == 0 || cut == n) {
    throw Error("sequence of user " + std::to_string(seq.user) +
                " is too short to split for evaluation");
  }
  const std::span<const ItemIndex> items(seq.items);
  return {items.first(cut), make_item_set(items.subspan(cut))};
}

void save_corpus(const std::filesystem::path& dir, const Corpus& corpus,
                 const SplitCorpus& split) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "users.tsv");
    for (std::size_t u = 0; u < corpus.users.size(); ++u) {
      out << corpus.users.external(static_cast<std::uint32_t>(u)) << '\t' << u
          << '\n';
    }
  }
  {
    auto out = open_out(dir / "items.tsv");
    for (std::size_t v = 0; v < corpus.items.size(); ++v) {
      out << corpus.items.external(static_cast<std::uint32_t>(v)) << '\t' << v
          << '\n';
    }
  }
  {
    auto out = open_out(dir / "sequences.tsv");
    for (const auto& seq : corpus.sequences) {
      out << seq.user << '\t';
      for (std::size_t i = 0; i < seq.items.size(); ++i) {
        if (i) out << ',';
        out << seq.items[i];
      }
      out << '\n';
    }
  }
  {
    std::vector<const char*> part(corpus.num_users(), nullptr);
    for (auto u : split.train) part.at(u) = "train";
    for (auto u : split.valid) part.at(u) = "valid";
    for (auto u : split.test) part.at(u) = "test";
    auto out = open_out(dir / "split.tsv");
    for (std::size_t u = 0; u < part.size(); ++u) {
      if (part[u] == nullptr) throw Error("split does not cover every user");
      out << u << '\t' << part[u] << '\n';
    }
  }
}

namespace {

IdMap load_id_map(const std::filesystem::path& path) {
  auto in = open_in(path);
  IdMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line, '\t');
    std::uint32_t index = 0;
    if (fields.size() != 2 || !parse_int(fields[1], index)) {
      throw ParseError(line_no, path.filename().string() + ": malformed row");
    }
    if (map.insert(std::string(fields[0])) != index) {
      throw ParseError(line_no, path.filename().string() +
                                    ": indices must be dense and in order");
    }
  }
  return map;
}

}  // namespace

StoredCorpus load_corpus(const std::filesystem::path& dir) {
  StoredCorpus stored;
  Corpus& corpus = stored.corpus;
  corpus.users = load_id_map(dir / "users.tsv");
  corpus.items = load_id_map(dir / "items.tsv");

  auto in = open_in(dir / "sequences.tsv");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line, '\t');
    BehaviorSequence seq;
    if (fields.size() != 2 || !parse_int(fields[0], seq.user) ||
        seq.user != corpus.sequences.size()) {
      throw ParseError(line_no, "sequences.tsv: malformed row");
    }
    for (auto tok : split_fields(fields[1], ',')) {
      ItemIndex v = 0;
      if (!parse_int(tok, v) || v >= corpus.num_items()) {
        throw ParseError(line_no, "sequences.tsv: bad item index");
      }
      seq.items.push_back(v);
    }
    corpus.sequences.push_back(std::move(seq));
  }
  if (corpus.sequences.size() != corpus.users.size()) {
    throw Error("sequences.tsv and users.tsv disagree on user count");
  }

  auto split_in = open_in(dir / "split.tsv");
  line_no = 0;
  while (std::getline(split_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line, '\t');
    UserIndex u = 0;
    if (fields.size() != 2 || !parse_int(fields[0], u) ||
        u >= corpus.num_users()) {
      throw ParseError(line_no, "split.tsv: malformed row");
    }
    if (fields[1] == "train") {
      stored.split.train.push_back(u);
    } else if (fields[1] == "valid") {
      stored.split.valid.push_back(u);
    } else if (fields[1] == "test") {
      stored.split.test.push_back(u);
    } else {
      throw ParseError(line_no, "split.tsv: unknown part");
    }
  }
  return stored;
}

}  // namespace wslrec
