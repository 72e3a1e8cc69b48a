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

#include "wslrec/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include "wslrec/error.hpp"

namespace wslrec {

void validate(const WeakSupervisionConfig& c) {
  if (c.sources.empty()) {
    throw ConfigError("weak supervision needs at least one source");
  }
  if (c.k_ws == 0) throw ConfigError("k_ws must be >= 1");
  if (c.mining_k == 0) throw ConfigError("mining_k must be >= 1");
}

TrainingData TrainingData::build(const Corpus& corpus,
                                 const SplitCorpus& split,
                                 std::size_t max_history) {
  TrainingData data;
  data.corpus = &corpus;
  data.split = &split;
  data.max_history = max_history;
  data.instances = training_instances(corpus, split.train, max_history);
  return data;
}

EvalHook validation_hook(const TrainingData& data) {
  return [&data](const SequenceModel& model) {
    return model_recall(model, *data.corpus, data.split->valid,
                        data.max_history, 50);
  };
}

std::vector<std::vector<ItemSet>> weak_label_sets(
    std::span<const TrainingInstance> instances,
    const WeakSupervisionConfig& config, const WeakArtifacts& artifacts) {
  validate(config);
  for (WeakSource s : config.sources) {
    if (s == WeakSource::kItemCf && artifacts.itemcf == nullptr) {
      throw Error("weak source itemcf needs a similarity table");
    }
    if (s == WeakSource::kOriginal && artifacts.original == nullptr) {
      throw Error("weak source original needs a standard-trained checkpoint");
    }
  }
  std::vector<std::vector<ItemSet>> out(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto history = instances[i].history;
    out[i].reserve(config.sources.size());
    for (WeakSource s : config.sources) {
      switch (s) {
        case WeakSource::kBr:
          out[i].push_back(make_item_set(br_topk(history, config.k_ws)));
          break;
        case WeakSource::kItemCf:
          out[i].push_back(make_item_set(itemcf_topk(
              history, *artifacts.itemcf, config.k_ws, config.itemcf)));
          break;
        case WeakSource::kOriginal:
          out[i].push_back(make_item_set(
              topk_items(*artifacts.original, history, config.k_ws)));
          break;
      }
    }
  }
  return out;
}

const std::vector<ItemIndex>* MinedLabelTable::find(UserIndex user,
                                                    std::size_t t) const {
  const auto it = rows_.find({user, t});
  return it == rows_.end() ? nullptr : &it->second;
}

void MinedLabelTable::insert(UserIndex user, std::size_t t,
                             std::vector<ItemIndex> items) {
  if (items.size() > k_) {
    throw Error("mined set larger than the mining cutoff");
  }
  rows_[{user, t}] = std::move(items);
}

void save_mined(const std::filesystem::path& path,
                const MinedLabelTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& [key, items] : table.rows()) {
    out << key.first << '\t' << key.second << '\t';
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out << ',';
      out << items[i];
    }
    out << '\n';
  }
}

MinedLabelTable load_mined(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::tuple<UserIndex, std::size_t, std::vector<ItemIndex>>> rows;
  std::size_t widest = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string user_s, t_s, items_s;
    if (!std::getline(fields, user_s, '\t') || !std::getline(fields, t_s, '\t')) {
      throw ParseError(line_no, "mined table: malformed row");
    }
    std::getline(fields, items_s);
    UserIndex u = 0;
    std::size_t t = 0;
    auto r1 = std::from_chars(user_s.data(), user_s.data() + user_s.size(), u);
    auto r2 = std::from_chars(t_s.data(), t_s.data() + t_s.size(), t);
    if (r1.ec != std::errc() || r2.ec != std::errc()) {
      throw ParseError(line_no, "mined table: bad key");
    }
    std::vector<ItemIndex> items;
    std::istringstream list(items_s);
    std::string tok;
    while (std::getline(list, tok, ',')) {
      ItemIndex v = 0;
      auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) {
        throw ParseError(line_no, "mined table: bad item '" + tok + "'");
      }
      items.push_back(v);
    }
    widest = std::max(widest, items.size());
    rows.emplace_back(u, t, std::move(items));
  }
  MinedLabelTable table(widest);
  for (auto& [u, t, items] : rows) table.insert(u, t, std::move(items));
  return table;
}

std::vector<ItemSet> label_instances(
    const LabelStrategy& strategy, std::span<const TrainingInstance> instances,
    const std::vector<std::vector<ItemSet>>* weak,
    const MinedLabelTable* mined) {
  const bool needs_weak = std::holds_alternative<WeakUnion>(strategy);
  const bool needs_mined = std::holds_alternative<MinedFineTune>(strategy);
  if (needs_weak && (weak == nullptr || weak->size() != instances.size())) {
    throw Error("weak label sets do not cover the training instances");
  }
  if (needs_mined && mined == nullptr) throw Error("no mined table given");

  std::vector<ItemSet> out;
  out.reserve(instances.size());
  ItemSet mined_set;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    LabelInputs inputs;
    if (needs_weak) inputs.weak_sets = (*weak)[i];
    if (needs_mined) {
      const auto* row = mined->find(inst.user, inst.t);
      if (row != nullptr) {
        mined_set = make_item_set(*row);
        inputs.mined = &mined_set;
      }
    }
    out.push_back(build_labels(strategy, inst, inputs));
  }
  return out;
}

StageResult train_standard(const TrainingData& data,
                           const LabelStrategy& strategy,
                           const SequenceModel& init,
                           const TrainConfig& config) {
  bind_to_corpus(init, data.corpus->num_items());
  StageResult r{FitResult{init, {}, 0}, label_instances(strategy, data.instances)};
  r.fit = fit(init, data.instances, r.positives, config, validation_hook(data));
  return r;
}

StageResult pretrain(const TrainingData& data,
                     const WeakSupervisionConfig& weak,
                     const WeakArtifacts& artifacts, const SequenceModel& init,
                     const TrainConfig& config) {
  bind_to_corpus(init, data.corpus->num_items());
  if (artifacts.original != nullptr) {
    bind_to_corpus(*artifacts.original, data.corpus->num_items());
  }
  const auto sets = weak_label_sets(data.instances, weak, artifacts);
  const LabelStrategy strategy = WeakUnion{weak.sources, weak.k_ws};
  StageResult r{FitResult{init, {}, 0},
                label_instances(strategy, data.instances, &sets)};
  r.fit = fit(init, data.instances, r.positives, config, validation_hook(data));
  return r;
}

MinedLabelTable mine_topk(const SequenceModel& model, const TrainingData& data,
                          std::size_t k, unsigned threads) {
  bind_to_corpus(model, data.corpus->num_items());
  if (k == 0) throw ConfigError("mining_k must be >= 1");
  const auto& inst = data.instances;
  std::vector<std::vector<ItemIndex>> lists(inst.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      lists[i] = topk_items(model, inst[i].history, k);
    }
  };
  const std::size_t shards =
      std::max<std::size_t>(1, std::min<std::size_t>(threads, inst.size()));
  if (shards == 1) {
    work(0, inst.size());
  } else {
    std::vector<std::thread> workers;
    for (std::size_t s = 0; s < shards; ++s) {
      workers.emplace_back(work, inst.size() * s / shards,
                           inst.size() * (s + 1) / shards);
    }
    for (auto& w : workers) w.join();
  }
  MinedLabelTable table(k);
  for (std::size_t i = 0; i < inst.size(); ++i) {
    table.insert(inst[i].user, inst[i].t, std::move(lists[i]));
  }
  return table;
}

StageResult finetune(const SequenceModel& pretrained,
                     const MinedLabelTable& mined, const TrainingData& data,
                     const TrainConfig& config) {
  bind_to_corpus(pretrained, data.corpus->num_items());
  std::vector<MinedKey> missing;
  for (const auto& inst : data.instances) {
    if (mined.find(inst.user, inst.t) == nullptr) {
      missing.emplace_back(inst.user, inst.t);
    }
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "mined table misses " << missing.size() << " training instances:";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
      msg << " (" << missing[i].first << "," << missing[i].second << ")";
    }
    if (missing.size() > 20) msg << " ...";
    throw Error(msg.str());
  }
  StageResult r{FitResult{pretrained, {}, 0},
                label_instances(MinedFineTune{}, data.instances, nullptr,
                                &mined)};
  r.fit = fit(pretrained, data.instances, r.positives, config,
              validation_hook(data));
  return r;
}

namespace {

void write_log(const std::filesystem::path& path,
               std::span<const LogRecord> log) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_training_log(out, log);
}

}  // namespace

WslrecResult run_wslrec(const TrainingData& data,
                        const WeakSupervisionConfig& weak,
                        const WeakArtifacts& artifacts,
                        const SequenceModel& init,
                        const WslrecOptions& options) {
  validate(weak);
  if (options.out_dir) std::filesystem::create_directories(*options.out_dir);

  StageResult pre = pretrain(data, weak, artifacts, init, options.pretrain);
  if (options.out_dir) {
    save_checkpoint(*options.out_dir / "pretrain.ckpt", pre.fit.model);
    write_log(*options.out_dir / "pretrain_log.jsonl", pre.fit.log);
  }

  MinedLabelTable mined =
      mine_topk(pre.fit.model, data, weak.mining_k, options.threads);
  if (options.out_dir) save_mined(*options.out_dir / "mined.tsv", mined);

  StageResult fine = finetune(pre.fit.model, mined, data, options.finetune);
  if (options.out_dir) {
    save_checkpoint(*options.out_dir / "final.ckpt", fine.fit.model);
    write_log(*options.out_dir / "finetune_log.jsonl", fine.fit.log);
  }
  WslrecResult r{std::move(pre), std::move(mined), std::move(fine)};
  return r;
}

std::vector<ItemIndex> ensemble_topk(std::span<const ItemIndex> br,
                                     std::span<const ItemIndex> itemcf,
                                     std::span<const ItemIndex> model,
                                     const EnsembleSplit& split,
                                     std::size_t k) {
  if (split.a + split.b + split.c != k) {
    throw ConfigError("ensemble split must satisfy a + b + c == k");
  }
  std::vector<ItemIndex> out;
  out.reserve(k);
  auto take = [&](std::span<const ItemIndex> src, std::size_t n) {
    for (std::size_t i = 0; i < std::min(n, src.size()) && out.size() < k;
         ++i) {
      if (std::find(out.begin(), out.end(), src[i]) == out.end()) {
        out.push_back(src[i]);
      }
    }
  };
  take(br, split.a);
  take(itemcf, split.b);
  take(model, model.size());  // top-c first, then the backfill
  return out;
}

Recommender ensemble_recommender(const SimilarityTable& table,
                                 const SequenceModel& model,
                                 std::size_t max_history,
                                 const EnsembleSplit& split) {
  return [&table, &model, max_history, split](
             std::span<const ItemIndex> history, std::size_t k) {
    if (split.a + split.b + split.c != k) {
      throw ConfigError("ensemble split does not add up to the cutoff");
    }
    const auto br = br_topk(history, split.a);
    const auto cf = itemcf_topk(history, table, split.b);
    const auto ranked = topk_items(model, recent(history, max_history), 2 * k);
    return ensemble_topk(br, cf, ranked, split, k);
  };
}

EnsembleChoice tune_ensemble(const Corpus& corpus,
                             std::span<const UserIndex> users,
                             const SimilarityTable& table,
                             const SequenceModel& model,
                             std::size_t max_history, std::size_t k,
                             std::size_t step) {
  if (k == 0) throw ConfigError("ensemble cutoff must be >= 1");
  if (step == 0) step = std::max<std::size_t>(1, k / 10);

  // Everything that does not depend on (a, b) is computed once per user.
  struct UserCache {
    std::span<const ItemIndex> history;
    std::vector<ItemIndex> itemcf;
    std::vector<ItemIndex> ranked;
  };
  std::vector<UserCache> cache;
  std::vector<ItemSet> truths;
  for (UserIndex u : users) {
    const auto split = eval_split(corpus.sequence(u));
    cache.push_back({split.history, itemcf_topk(split.history, table, k),
                     topk_items(model, recent(split.history, max_history),
                                2 * k)});
    truths.push_back(split.truth);
  }

  EnsembleChoice best{{0, 0, k}, -1.0};
  for (std::size_t a = 0; a <= k; a += step) {
    std::vector<std::vector<ItemIndex>> br_lists;
    for (const auto& c : cache) br_lists.push_back(br_topk(c.history, a));
    for (std::size_t b = 0; a + b <= k; b += step) {
      const EnsembleSplit split{a, b, k - a - b};
      std::vector<std::vector<ItemIndex>> recs;
      recs.reserve(cache.size());
      for (std::size_t i = 0; i < cache.size(); ++i) {
        recs.push_back(ensemble_topk(br_lists[i], cache[i].itemcf,
                                     cache[i].ranked, split, k));
      }
      const Real recall = metrics_at_k(recs, truths, k).recall;
      if (recall > best.recall) best = {split, recall};
    }
  }
  return best;
}

}  // namespace wslrec
