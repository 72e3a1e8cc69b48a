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


#include <cmath>
#include <set>

#include "doctest.h"
#include "test_util.hpp"
#include "wslrec/eval.hpp"
#include "wslrec/modelfree.hpp"

using namespace wslrec;

namespace {

MetricsAtK one_user(std::vector<ItemIndex> rec, ItemSet truth, std::size_t k,
                    MetricOptions opt = {}) {
  const std::vector<std::vector<ItemIndex>> recs = {std::move(rec)};
  const std::vector<ItemSet> truths = {std::move(truth)};
  return metrics_at_k(recs, truths, k, opt);
}

struct Oracle {
  double precision = 0, recall = 0, f1 = 0, hit = 0, ndcg = 0;
};

Oracle brute_metrics(const std::vector<std::vector<ItemIndex>>& recs,
                     const std::vector<ItemSet>& truths, std::size_t k) {
  Oracle o;
  for (std::size_t u = 0; u < recs.size(); ++u) {
    const std::set<ItemIndex> y(truths[u].begin(), truths[u].end());
    std::set<ItemIndex> b, hits;
    double dcg = 0;
    for (std::size_t i = 0; i < recs[u].size() && i < k; ++i) {
      const ItemIndex v = recs[u][i];
      if (!b.insert(v).second) continue;
      if (y.count(v)) {
        hits.insert(v);
        dcg += 1 / std::log2(i + 2.0);
      }
    }
    const double h = hits.size();
    o.precision += h / k;
    o.recall += h / y.size();
    o.f1 += 2 * h / (k + y.size());
    o.hit += h > 0;
    o.ndcg += dcg;
  }
  const double n = recs.size();
  o.precision /= n;
  o.recall /= n;
  o.f1 /= n;
  o.hit /= n;
  o.ndcg /= n;
  return o;
}

double brute_hdr(const std::set<ItemIndex>& a, const std::set<ItemIndex>& b) {
  std::size_t uni = 0, inter = 0;
  for (ItemIndex v = 0; v < 64; ++v) {
    const bool in_a = a.count(v), in_b = b.count(v);
    uni += in_a || in_b;
    inter += in_a && in_b;
  }
  return uni ? double(uni - inter) / uni : 0.0;
}

ItemSet bits_to_set(unsigned mask) {
  ItemSet s;
  for (ItemIndex v = 0; v < 4; ++v) {
    if (mask >> v & 1) s.push_back(v);
  }
  return s;
}

}  // namespace

TEST_CASE("metric examples") {
  const auto m = one_user({0, 1}, {0, 1}, 2);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == 1.0);
  CHECK(m.hit_rate == 1.0);
  CHECK(m.ndcg == doctest::Approx(1.0 + 1.0 / std::log2(3.0)).epsilon(1e-15));
  CHECK(m.ndcg == doctest::Approx(1.6309).epsilon(1e-4));

  const auto miss = one_user({2, 3}, {0, 1}, 2);
  CHECK(miss.precision == 0.0);
  CHECK(miss.recall == 0.0);
  CHECK(miss.f1 == 0.0);
  CHECK(miss.hit_rate == 0.0);
  CHECK(miss.ndcg == 0.0);

  // Short lists keep k in the precision denominator.
  const auto short_list = one_user({0}, {0, 1}, 4);
  CHECK(short_list.precision == 0.25);
  CHECK(short_list.recall == 0.5);
  CHECK(short_list.f1 == doctest::Approx(2.0 / 6.0));

  // Repeats count once.
  const auto repeat = one_user({0, 0, 1}, {0, 1}, 3);
  CHECK(repeat.recall == 1.0);
  CHECK(repeat.ndcg == doctest::Approx(1.0 + 0.5));

  const auto norm = one_user({5, 0}, {0, 1}, 2, {true});
  CHECK(norm.ndcg == doctest::Approx((1 / std::log2(3.0)) / (1 + 1 / std::log2(3.0))));

  CHECK_THROWS(one_user({0}, {}, 1));
  CHECK_THROWS(one_user({0}, {0}, 0));
}

TEST_CASE("metrics match the brute-force oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::vector<ItemIndex>> recs(200);
    std::vector<ItemSet> truths(200);
    for (std::size_t u = 0; u < 200; ++u) {
      const std::size_t len = rng.uniform_index(60);
      for (std::size_t i = 0; i < len; ++i) {
        recs[u].push_back(static_cast<ItemIndex>(rng.uniform_index(80)));
      }
      const std::size_t ny = 1 + rng.uniform_index(15);
      std::vector<ItemIndex> y;
      for (std::size_t i = 0; i < ny; ++i) y.push_back(static_cast<ItemIndex>(rng.uniform_index(80)));
      truths[u] = make_item_set(y);
    }
    for (std::size_t k : {1, 5, 20, 50}) {
      const auto got = metrics_at_k(recs, truths, k);
      const auto want = brute_metrics(recs, truths, k);
      CHECK(std::abs(got.precision - want.precision) <= 1e-12);
      CHECK(std::abs(got.recall - want.recall) <= 1e-12);
      CHECK(std::abs(got.f1 - want.f1) <= 1e-12);
      CHECK(std::abs(got.hit_rate - want.hit) <= 1e-12);
      CHECK(std::abs(got.ndcg - want.ndcg) <= 1e-12);
      CHECK(got.users == 200);

      // Per-user identity: precision * k == recall * |Y|.
      for (std::size_t u = 0; u < 20; ++u) {
        const auto m = metrics_at_k(std::span(recs).subspan(u, 1),
                                    std::span(truths).subspan(u, 1), k);
        CHECK(std::abs(m.precision * k - m.recall * truths[u].size()) < 1e-12);
        double bound = 0;
        for (std::size_t i = 1; i <= k; ++i) bound += 1 / std::log2(i + 1.0);
        CHECK(m.ndcg <= bound + 1e-12);
      }
    }
  }
}

TEST_CASE("metrics do not depend on user order") {
  const std::vector<std::vector<ItemIndex>> recs = {{0, 1, 2}, {3, 4}, {5}};
  const std::vector<ItemSet> truths = {{1}, {3, 9}, {2, 5, 7}};
  const std::vector<std::vector<ItemIndex>> rrecs = {{5}, {0, 1, 2}, {3, 4}};
  const std::vector<ItemSet> rtruths = {{2, 5, 7}, {1}, {3, 9}};
  const auto a = metrics_at_k(recs, truths, 3);
  const auto b = metrics_at_k(rrecs, rtruths, 3);
  CHECK(a.recall == doctest::Approx(b.recall).epsilon(1e-15));
  CHECK(a.ndcg == doctest::Approx(b.ndcg).epsilon(1e-15));
}

TEST_CASE("hdr examples") {
  CHECK(hdr({0, 1}, {1, 2}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(hdr({}, {}) == 0.0);
  CHECK(hdr({3, 4}, {3, 4}) == 0.0);
  const std::vector<double> values = {2.0 / 3.0, 0.0, 0.5};
  CHECK(mean_hdr(values) == doctest::Approx(7.0 / 12.0).epsilon(1e-15));
  const std::vector<double> zeros = {0.0, 0.0};
  CHECK(mean_hdr(zeros) == 0.0);
  CHECK(mean_hdr(std::span<const double>{}) == 0.0);
  CHECK(hit_set(std::vector<ItemIndex>{4, 1, 2, 9}, {1, 9}, 3) == ItemSet{1});
}

TEST_CASE("hdr over every pair of subsets of four items") {
  for (unsigned a = 0; a < 16; ++a) {
    for (unsigned b = 0; b < 16; ++b) {
      const auto sa = bits_to_set(a), sb = bits_to_set(b);
      const double h = hdr(sa, sb);
      CHECK(h == hdr(sb, sa));
      CHECK(h >= 0.0);
      CHECK(h <= 1.0);
      if (a == b) CHECK(h == 0.0);
      CHECK(std::abs(h - brute_hdr({sa.begin(), sa.end()}, {sb.begin(), sb.end()})) <= 1e-12);
    }
  }
}

TEST_CASE("mean hdr matches the brute-force oracle") {
  Rng rng(8);
  std::vector<double> per_user;
  double sum = 0;
  int positive = 0;
  for (int u = 0; u < 100; ++u) {
    ItemSet a, b;
    for (ItemIndex v = 0; v < 10; ++v) {
      if (rng.bernoulli(0.2)) a.push_back(v);
      if (rng.bernoulli(0.2)) b.push_back(v);
    }
    const double h = brute_hdr({a.begin(), a.end()}, {b.begin(), b.end()});
    per_user.push_back(hdr(a, b));
    sum += h;
    positive += h > 0;
  }
  CHECK(std::abs(mean_hdr(per_user) - sum / positive) <= 1e-12);
}

TEST_CASE("oracle recommender reaches full recall") {
  Rng rng(3);
  const auto corpus = testing::random_corpus(rng, 40, 30, 5, 20);
  const auto users = testing::all_users(corpus);
  for (UserIndex u : users) {
    const auto split = eval_split(corpus.sequence(u));
    const ItemSet truth = split.truth;
    const std::size_t cutoff[] = {truth.size()};
    // Reverse order on purpose.
    Recommender oracle = [&](std::span<const ItemIndex>, std::size_t) {
      return std::vector<ItemIndex>(truth.rbegin(), truth.rend());
    };
    const UserIndex one[] = {u};
    CHECK(evaluate(oracle, corpus, one, cutoff).at(truth.size()).recall == 1.0);
  }
}

TEST_CASE("constant recommender is stable") {
  const auto corpus = testing::fixture_corpus();
  const auto users = testing::all_users(corpus);
  Recommender constant = [](std::span<const ItemIndex>, std::size_t k) {
    std::vector<ItemIndex> out;
    for (ItemIndex v = 0; v < k && v < 8; ++v) out.push_back(v);
    return out;
  };
  const std::size_t cutoffs[] = {2, 5};
  const auto a = report_json(evaluate(constant, corpus, users, cutoffs));
  const auto b = report_json(evaluate(constant, corpus, users, cutoffs));
  CHECK(a == b);
  CHECK(a.find("\"2\"") != std::string::npos);
  CHECK(report_table(evaluate(constant, corpus, users, cutoffs)).find("recall") !=
        std::string::npos);
}

TEST_CASE("BR on the fixture corpus") {
  // Users 4 and 5. History {3,3,1,4,1} with truth {1,5} gives BR@5 = [1,4,3];
  // history {2,7,1,0,2,0} with truth {0,1} gives [0,2,1,7].
  const auto corpus = testing::fixture_corpus();
  const UserIndex users[] = {4, 5};
  Recommender br = [](std::span<const ItemIndex> h, std::size_t k) {
    return br_topk(h, k);
  };
  const std::size_t cutoffs[] = {5};
  const auto m = evaluate(br, corpus, users, cutoffs).at(5);
  CHECK(m.precision == doctest::Approx((1.0 / 5 + 2.0 / 5) / 2).epsilon(1e-15));
  CHECK(m.recall == doctest::Approx((0.5 + 1.0) / 2).epsilon(1e-15));
  CHECK(m.f1 == doctest::Approx((2.0 / 7 + 4.0 / 7) / 2).epsilon(1e-15));
  CHECK(m.hit_rate == 1.0);
  CHECK(m.ndcg == doctest::Approx((1.0 + 1.5) / 2).epsilon(1e-15));
  CHECK(m.users == 2);
}
