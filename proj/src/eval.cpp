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

#include "wslrec/eval.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "wslrec/error.hpp"

namespace wslrec {

MetricsAtK metrics_at_k(std::span<const std::vector<ItemIndex>> recommendations,
                        std::span<const ItemSet> truths, std::size_t k,
                        const MetricOptions& options) {
  if (recommendations.size() != truths.size()) {
    throw Error("recommendation and truth counts differ");
  }
  if (k == 0) throw Error("metrics need k >= 1");
  MetricsAtK m;
  m.users = truths.size();
  if (m.users == 0) return m;

  const Real kk = static_cast<Real>(k);
  for (std::size_t u = 0; u < truths.size(); ++u) {
    const ItemSet& truth = truths[u];
    if (truth.empty()) {
      throw Error("user " + std::to_string(u) + " has an empty truth set");
    }
    const auto& rec = recommendations[u];
    const std::size_t n = std::min(k, rec.size());
    ItemSet seen;
    std::size_t hits = 0;
    Real dcg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const ItemIndex v = rec[i];
      if (contains(seen, v)) continue;
      seen.insert(std::upper_bound(seen.begin(), seen.end(), v), v);
      if (contains(truth, v)) {
        ++hits;
        dcg += 1.0 / std::log2(static_cast<Real>(i) + 2.0);
      }
    }
    if (options.normalized_ndcg) {
      Real idcg = 0;
      for (std::size_t i = 0; i < std::min(k, truth.size()); ++i) {
        idcg += 1.0 / std::log2(static_cast<Real>(i) + 2.0);
      }
      dcg /= idcg;
    }
    const Real h = static_cast<Real>(hits);
    const Real ny = static_cast<Real>(truth.size());
    m.precision += h / kk;
    m.recall += h / ny;
    m.f1 += 2.0 * h / (kk + ny);
    m.hit_rate += hits > 0 ? 1.0 : 0.0;
    m.ndcg += dcg;
  }
  const Real nu = static_cast<Real>(m.users);
  m.precision /= nu;
  m.recall /= nu;
  m.f1 /= nu;
  m.hit_rate /= nu;
  m.ndcg /= nu;
  return m;
}

ItemSet hit_set(std::span<const ItemIndex> recommendation,
                const ItemSet& truth, std::size_t k) {
  const auto top = recommendation.first(std::min(k, recommendation.size()));
  return set_intersection(make_item_set(top), truth);
}

Real hdr(const ItemSet& hits_a, const ItemSet& hits_b) {
  const std::size_t uni = set_union(hits_a, hits_b).size();
  if (uni == 0) return 0.0;
  const std::size_t inter = set_intersection(hits_a, hits_b).size();
  return static_cast<Real>(uni - inter) / static_cast<Real>(uni);
}

Real mean_hdr(std::span<const Real> per_user) {
  Real sum = 0;
  std::size_t positive = 0;
  for (Real v : per_user) {
    sum += v;
    if (v > 0) ++positive;
  }
  return positive == 0 ? 0.0 : sum / static_cast<Real>(positive);
}

EvalReport evaluate(const Recommender& recommender, const Corpus& corpus,
                    std::span<const UserIndex> users,
                    std::span<const std::size_t> cutoffs,
                    const MetricOptions& options) {
  std::vector<EvalSplit> splits;
  std::vector<ItemSet> truths;
  splits.reserve(users.size());
  for (UserIndex u : users) {
    splits.push_back(eval_split(corpus.sequence(u)));
    truths.push_back(splits.back().truth);
  }
  EvalReport report;
  for (std::size_t k : cutoffs) {
    std::vector<std::vector<ItemIndex>> recs;
    recs.reserve(splits.size());
    for (const auto& s : splits) recs.push_back(recommender(s.history, k));
    report[k] = metrics_at_k(recs, truths, k, options);
  }
  return report;
}

Recommender model_recommender(const SequenceModel& model,
                              std::size_t max_history) {
  return [&model, max_history](std::span<const ItemIndex> history,
                               std::size_t k) {
    return topk_items(model, recent(history, max_history), k);
  };
}

Real model_recall(const SequenceModel& model, const Corpus& corpus,
                  std::span<const UserIndex> users, std::size_t max_history,
                  std::size_t k) {
  const std::size_t cutoff[] = {k};
  return evaluate(model_recommender(model, max_history), corpus, users, cutoff)
      .at(k)
      .recall;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, m] : report) {
    nlohmann::ordered_json e;
    e["precision"] = m.precision;
    e["recall"] = m.recall;
    e["f1"] = m.f1;
    e["ndcg"] = m.ndcg;
    e["hit_rate"] = m.hit_rate;
    j[std::to_string(k)] = e;
  }
  return j.dump(2);
}

std::string report_table(const EvalReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%6s %10s %10s %10s %10s %10s %7s\n", "k",
                "precision", "recall", "f1", "ndcg", "hit_rate", "users");
  out << line;
  for (const auto& [k, m] : report) {
    std::snprintf(line, sizeof(line),
                  "%6zu %10.6f %10.6f %10.6f %10.6f %10.6f %7zu\n", k,
                  m.precision, m.recall, m.f1, m.ndcg, m.hit_rate, m.users);
    out << line;
  }
  return out.str();
}

}  // namespace wslrec
