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


#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "test_util.hpp"
#include "wslrec/corpus.hpp"
#include "wslrec/error.hpp"

using namespace wslrec;

TEST_CASE("ingest parses records") {
  std::istringstream one("u1\ti1\t100\n");
  const auto events = ingest_events(one);
  REQUIRE(events.size() == 1);
  CHECK(events[0] == InteractionEvent{"u1", "i1", 100});

  std::istringstream empty("");
  CHECK(ingest_events(empty).empty());

  std::istringstream crlf("u1\ti1\t5\r\n\nu2\ti2\t6\n");
  CHECK(ingest_events(crlf).size() == 2);
}

TEST_CASE("ingest reports the failing line") {
  std::istringstream bad("u1\ti1\t1\nu1\ti2\tabc\nu2\ti1\t3\n");
  try {
    ingest_events(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream fields("u1\ti1\n");
  CHECK_THROWS_AS(ingest_events(fields), ParseError);
  std::istringstream negative("u1\ti1\t-4\n");
  CHECK_THROWS_AS(ingest_events(negative), ParseError);
}

TEST_CASE("sequences are sorted by time, ties keep input order") {
  const std::vector<InteractionEvent> ev = {
      {"u1", "i2", 200}, {"u2", "i9", 5}, {"u1", "i1", 100},
      {"u1", "i3", 300}, {"u1", "i4", 300}, {"u2", "i8", 1}};
  const auto seqs = build_sequences(ev);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].user == "u1");
  CHECK(seqs[0].items == std::vector<std::string>{"i1", "i2", "i3", "i4"});
  CHECK(seqs[1].user == "u2");
  CHECK(seqs[1].items == std::vector<std::string>{"i8", "i9"});
}

namespace {

std::vector<RawSequence> raw(const std::vector<std::vector<int>>& seqs) {
  std::vector<RawSequence> out;
  for (std::size_t u = 0; u < seqs.size(); ++u) {
    RawSequence r{"u" + std::to_string(u), {}};
    for (int v : seqs[u]) r.items.push_back("i" + std::to_string(v));
    out.push_back(r);
  }
  return out;
}

// Scan-and-delete until nothing changes.
std::map<std::string, std::vector<std::string>> fixpoint_oracle(
    std::vector<RawSequence> seqs, std::size_t min_user, std::size_t min_item) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<RawSequence> kept;
    for (auto& s : seqs) {
      if (s.items.size() >= min_user) {
        kept.push_back(s);
      } else {
        changed = true;
      }
    }
    seqs = kept;
    std::map<std::string, std::set<std::string>> users_of;
    for (const auto& s : seqs) {
      for (const auto& v : s.items) users_of[v].insert(s.user);
    }
    for (auto& s : seqs) {
      std::vector<std::string> items;
      for (const auto& v : s.items) {
        if (users_of[v].size() >= min_item) {
          items.push_back(v);
        } else {
          changed = true;
        }
      }
      s.items = items;
    }
  }
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& s : seqs) out[s.user] = s.items;
  return out;
}

std::map<std::string, std::vector<std::string>> external(const Corpus& c) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& s : c.sequences) {
    auto& items = out[c.users.external(s.user)];
    for (ItemIndex v : s.items) items.push_back(c.items.external(v));
  }
  return out;
}

}  // namespace

TEST_CASE("filter keeps a dense corpus unchanged") {
  std::vector<std::vector<int>> seqs(6, {0, 1, 2, 3, 4, 5});
  const auto c = filter_corpus(raw(seqs));
  CHECK(c.num_users() == 6);
  CHECK(c.num_items() == 6);
  for (std::size_t u = 0; u < 6; ++u) {
    CHECK(c.sequence(static_cast<UserIndex>(u)).items ==
          std::vector<ItemIndex>{0, 1, 2, 3, 4, 5});
  }
}

TEST_CASE("filter cascades to a fixpoint") {
  // Item 6 is shared by five users only because of the short user; once
  // that user goes, item 6 goes, and user 5 falls below five items.
  std::vector<std::vector<int>> seqs = {
      {0, 1, 2, 3, 4, 6}, {0, 1, 2, 3, 4, 6}, {0, 1, 2, 3, 4, 6},
      {0, 1, 2, 3, 4},    {0, 1, 2, 3, 4},    {0, 1, 2, 3, 6},
      {6, 0, 1, 2}};
  const auto c = filter_corpus(raw(seqs));
  CHECK(c.num_users() == 5);
  CHECK(c.num_items() == 5);
  CHECK(external(c) == fixpoint_oracle(raw(seqs), 5, 5));
  CHECK_FALSE(c.users.find("u5").has_value());
  CHECK_FALSE(c.items.find("i6").has_value());
}

TEST_CASE("filter matches the brute-force fixpoint oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<int>> seqs(50);
    for (auto& s : seqs) {
      const std::size_t len = 2 + rng.uniform_index(12);
      for (std::size_t i = 0; i < len; ++i) {
        s.push_back(static_cast<int>(rng.uniform_index(25)));
      }
    }
    const auto expected = fixpoint_oracle(raw(seqs), 5, 5);
    if (expected.empty()) {
      CHECK_THROWS_AS(filter_corpus(raw(seqs)), EmptyCorpusError);
      continue;
    }
    const auto c = filter_corpus(raw(seqs));
    CHECK(external(c) == expected);

    // Dense indices: users in input order, items in first appearance.
    std::vector<std::string> order;
    for (const auto& s : c.sequences) {
      for (ItemIndex v : s.items) {
        const auto& name = c.items.external(v);
        if (std::find(order.begin(), order.end(), name) == order.end()) {
          order.push_back(name);
        }
      }
    }
    for (std::size_t v = 0; v < order.size(); ++v) {
      CHECK(c.items.external(static_cast<ItemIndex>(v)) == order[v]);
    }
    for (std::size_t u = 1; u < c.num_users(); ++u) {
      CHECK(std::stoi(c.users.external(static_cast<UserIndex>(u - 1)).substr(1)) <
            std::stoi(c.users.external(static_cast<UserIndex>(u)).substr(1)));
    }
  }
}

TEST_CASE("filter of nothing throws") {
  CHECK_THROWS_AS(filter_corpus(raw({{1, 2}})), EmptyCorpusError);
}

TEST_CASE("split sizes follow floor cuts") {
  Rng rng(1);
  const auto c10 = testing::random_corpus(rng, 10, 5, 5, 6);
  const auto s = split_users(c10, 7);
  CHECK(s.train.size() == 8);
  CHECK(s.valid.size() == 1);
  CHECK(s.test.size() == 1);

  const auto c97 = testing::random_corpus(rng, 97, 5, 5, 6);
  const auto t = split_users(c97, 7);
  CHECK(t.train.size() == 77);
  CHECK(t.valid.size() == 10);
  CHECK(t.test.size() == 10);

  std::vector<UserIndex> all = t.train;
  all.insert(all.end(), t.valid.begin(), t.valid.end());
  all.insert(all.end(), t.test.begin(), t.test.end());
  std::sort(all.begin(), all.end());
  CHECK(all == testing::all_users(c97));
}

TEST_CASE("split is deterministic under its seed") {
  Rng rng(2);
  const auto c = testing::random_corpus(rng, 40, 5, 5, 6);
  const auto a = split_users(c, 3);
  const auto b = split_users(c, 3);
  CHECK(a.train == b.train);
  CHECK(a.valid == b.valid);
  CHECK(a.test == b.test);
  const auto other = split_users(c, 4);
  CHECK((other.train != a.train || other.test != a.test));
  CHECK_THROWS(split_users(testing::random_corpus(rng, 2, 5, 5, 6), 1));
}

TEST_CASE("training instances") {
  const BehaviorSequence five{0, {10, 11, 12, 13, 14}};
  const auto one = training_instances(five, 20);
  REQUIRE(one.size() == 1);
  CHECK(one[0].t == 4);
  CHECK(one[0].next_item == 14);
  CHECK(one[0].future_set == ItemSet{14});
  CHECK(one[0].history.size() == 4);

  const BehaviorSequence nine{0, {1, 2, 3, 4, 5, 6, 7, 8, 9}};
  const auto inst = training_instances(nine, 3);
  const auto it = std::find_if(inst.begin(), inst.end(),
                               [](const auto& i) { return i.t == 7; });
  REQUIRE(it != inst.end());
  CHECK(std::vector<ItemIndex>(it->history.begin(), it->history.end()) ==
        std::vector<ItemIndex>{5, 6, 7});
  CHECK(it->next_item == 8);
  CHECK(std::vector<ItemIndex>(it->future.begin(), it->future.end()) ==
        std::vector<ItemIndex>{8, 9});

  const BehaviorSequence eight{0, {1, 2, 3, 4, 5, 6, 7, 8}};
  CHECK(training_instances(eight, 20).size() == 4);

  const BehaviorSequence repeats{0, {1, 2, 3, 4, 5, 5, 2}};
  CHECK(training_instances(repeats, 20)[0].future_set == ItemSet{2, 5});

  CHECK_THROWS(training_instances(BehaviorSequence{0, {1, 2, 3, 4}}, 20));
}

TEST_CASE("evaluation split") {
  const BehaviorSequence ten{0, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
  const auto a = eval_split(ten);
  CHECK(a.history.size() == 8);
  CHECK(a.truth == ItemSet{8, 9});

  const BehaviorSequence five{0, {0, 1, 2, 3, 4}};
  const auto b = eval_split(five);
  CHECK(b.history.size() == 4);
  CHECK(b.truth == ItemSet{4});

  const BehaviorSequence rep{0, {0, 1, 2, 3, 4, 5, 6, 7, 9, 9}};
  CHECK(eval_split(rep).truth == ItemSet{9});
}

TEST_CASE("corpus directory round trip") {
  const auto raw_seqs = raw({{0, 1, 2, 3, 4}, {4, 3, 2, 1, 0}, {0, 2, 4, 1, 3},
                             {1, 1, 2, 3, 4, 0}, {3, 4, 0, 1, 2}});
  const auto c = filter_corpus(raw_seqs);
  const auto split = split_users(c, 9);
  const auto dir = testing::temp_dir("corpus_rt");
  save_corpus(dir, c, split);
  const auto loaded = load_corpus(dir);
  CHECK(external(loaded.corpus) == external(c));
  for (std::size_t u = 0; u < c.num_users(); ++u) {
    CHECK(loaded.corpus.sequences[u].items == c.sequences[u].items);
  }
  CHECK(loaded.split.train == split.train);
  CHECK(loaded.split.valid == split.valid);
  CHECK(loaded.split.test == split.test);
}
