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


// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wslrec/cli.hpp"
#include "wslrec/corpus.hpp"
#include "wslrec/eval.hpp"
#include "wslrec/modelfree.hpp"
#include "wslrec/pipeline.hpp"
#include "wslrec/random.hpp"
#include "wslrec/seqmodel.hpp"
#include "wslrec/synth.hpp"
#include "wslrec/trainer.hpp"

namespace fs = std::filesystem;
using namespace wslrec;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

Corpus make_corpus(const std::vector<std::vector<ItemIndex>>& seqs,
                   std::size_t num_items) {
  Corpus c;
  for (std::size_t v = 0; v < num_items; ++v) c.items.insert("i" + std::to_string(v));
  for (std::size_t u = 0; u < seqs.size(); ++u) {
    c.users.insert("u" + std::to_string(u));
    c.sequences.push_back({static_cast<UserIndex>(u), seqs[u]});
  }
  return c;
}

std::vector<UserIndex> all_users(const Corpus& c) {
  std::vector<UserIndex> out(c.num_users());
  for (std::size_t u = 0; u < out.size(); ++u) out[u] = static_cast<UserIndex>(u);
  return out;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("wslrec_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// ---------------------------------------------------------------------------
// 1. ItemCF exactness.

Verdict itemcf_exactness() {
  Rng rng(101);
  long double worst = 0;
  std::size_t mismatches = 0, lists = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n_users = 5 + rng.uniform_index(46);
    const std::size_t n_items = 5 + rng.uniform_index(96);
    std::vector<std::vector<ItemIndex>> seqs(n_users);
    for (auto& s : seqs) {
      const std::size_t len = 1 + rng.uniform_index(30);
      for (std::size_t i = 0; i < len; ++i) {
        s.push_back(static_cast<ItemIndex>(rng.uniform_index(n_items)));
      }
    }
    const Corpus corpus = make_corpus(seqs, n_items);
    const auto users = all_users(corpus);
    const auto table = build_similarity(build_weights(corpus, users), n_items);

    // Dense weighted cosine in extended precision.
    std::vector<std::vector<long double>> w(n_users, std::vector<long double>(n_items, 0));
    for (std::size_t u = 0; u < n_users; ++u) {
      for (ItemIndex v : seqs[u]) w[u][v] += 1;
      for (auto& x : w[u]) x /= std::log2(1.0L + seqs[u].size());
    }
    std::vector<std::vector<double>> got(n_items, std::vector<double>(n_items, 0.0));
    for (ItemIndex a = 0; a < n_items; ++a) {
      for (const auto& n : table.row(a)) got[a][n.item] = n.sim;
    }
    for (std::size_t a = 0; a < n_items; ++a) {
      for (std::size_t b = 0; b < n_items; ++b) {
        if (a == b) continue;
        long double dot = 0, na = 0, nb = 0;
        for (std::size_t u = 0; u < n_users; ++u) {
          dot += w[u][a] * w[u][b];
          na += w[u][a] * w[u][a];
          nb += w[u][b] * w[u][b];
        }
        const long double want = dot == 0 ? 0 : dot / (std::sqrt(na) * std::sqrt(nb));
        worst = std::max(worst, std::abs(want - static_cast<long double>(got[a][b])));
      }
    }

    // argTopk over the dense matrix: max over history, history excluded.
    for (std::size_t u = 0; u < n_users; ++u) {
      const auto& h = seqs[u];
      const std::set<ItemIndex> hs(h.begin(), h.end());
      std::vector<std::pair<double, ItemIndex>> cand;
      for (ItemIndex v = 0; v < n_items; ++v) {
        if (hs.count(v)) continue;
        double best = 0;
        bool any = false;
        for (ItemIndex x : hs) {
          if (got[x][v] > 0) {
            best = any ? std::max(best, got[x][v]) : got[x][v];
            any = true;
          }
        }
        if (any) cand.push_back({-best, v});
      }
      std::sort(cand.begin(), cand.end());
      for (std::size_t k : {std::size_t{1}, std::size_t{5}, std::size_t{20},
                            std::size_t{50}, n_items}) {
        std::vector<ItemIndex> want;
        for (std::size_t i = 0; i < k && i < cand.size(); ++i) want.push_back(cand[i].second);
        ++lists;
        mismatches += itemcf_topk(h, table, k) != want;
      }
    }
  }
  return {worst <= 1e-12 && mismatches == 0,
          "50 corpora, max |sim - oracle| " + fmt("%.2e", static_cast<double>(worst)) +
              ", top-k mismatches " + std::to_string(mismatches) + "/" +
              std::to_string(lists)};
}

// ---------------------------------------------------------------------------
// 2. Gradient correctness.

double gradient_error(const SequenceModel& model, std::span<const ItemIndex> history,
                      const ItemSet& positives, const std::vector<ItemIndex>& negatives) {
  auto grads = model.zeros_like();
  sampled_softmax_loss(model, history, positives, negatives, &grads);
  auto probe = model;
  const double h = 1e-6;
  double worst = 0;
  for (std::size_t t = 0; t < probe.tensors().size(); ++t) {
    Matrix& w = probe.tensors()[t];
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double keep = w.data()[i];
      w.data()[i] = keep + h;
      const double up = sampled_softmax_loss(probe, history, positives, negatives);
      w.data()[i] = keep - h;
      const double down = sampled_softmax_loss(probe, history, positives, negatives);
      w.data()[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double analytic = grads.tensors()[t].data()[i];
      const double err = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-3});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

Verdict gradients() {
  const std::vector<LabelStrategy> strategies = {
      NextC{1}, NextC{3}, NextAll{},
      WeakUnion{{WeakSource::kBr, WeakSource::kItemCf, WeakSource::kOriginal}, 3},
      MinedFineTune{}};
  double worst = 0;
  std::size_t checks = 0;
  for (auto kind : {EncoderKind::kMeanPool, EncoderKind::kGru, EncoderKind::kMultiHead}) {
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(derive_seed(seed, "grad") + s * 7 + static_cast<std::uint64_t>(kind));
        const std::size_t n = 5 + rng.uniform_index(26);
        const std::size_t d = 1 + rng.uniform_index(8);
        const std::size_t heads = 1 + rng.uniform_index(4);
        const auto model = SequenceModel::random({n, d, kind, heads}, seed);
        BehaviorSequence seq{0, {}};
        const std::size_t len = 6 + rng.uniform_index(15);
        for (std::size_t i = 0; i < len; ++i) {
          seq.items.push_back(static_cast<ItemIndex>(rng.uniform_index(n)));
        }
        const auto instances = training_instances(seq, 20);
        const auto& inst = instances[rng.uniform_index(instances.size())];
        // Weak and mined sets: arbitrary item sets, as the label rules only
        // combine them with the instance.
        std::vector<ItemSet> weak(3);
        ItemSet mined;
        for (ItemIndex v = 0; v < n; ++v) {
          for (auto& w : weak) {
            if (rng.bernoulli(0.1)) w.push_back(v);
          }
          if (rng.bernoulli(0.3)) mined.push_back(v);
        }
        const ItemSet pos = build_labels(strategies[s], inst, {weak, &mined});
        std::vector<ItemIndex> neg;
        const std::size_t draws = 1 + rng.uniform_index(12);
        for (std::size_t i = 0; i < draws; ++i) {
          const auto v = static_cast<ItemIndex>(rng.uniform_index(n));
          if (!contains(pos, v)) neg.push_back(v);
        }
        worst = std::max(worst, gradient_error(model, inst.history, pos, neg));
        ++checks;
      }
    }
  }
  return {worst < 1e-4, std::to_string(checks) +
                            " models (3 encoders x 5 strategies x 20 seeds), max rel err " +
                            fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------
// 3. Metric exactness.

Verdict metrics() {
  Rng rng(303);
  double worst = 0;
  std::vector<std::vector<ItemIndex>> recs(200);
  std::vector<ItemSet> truths(200);
  for (std::size_t u = 0; u < 200; ++u) {
    const std::size_t len = rng.uniform_index(70);
    for (std::size_t i = 0; i < len; ++i) {
      recs[u].push_back(static_cast<ItemIndex>(rng.uniform_index(100)));
    }
    std::vector<ItemIndex> y;
    const std::size_t ny = 1 + rng.uniform_index(20);
    for (std::size_t i = 0; i < ny; ++i) y.push_back(static_cast<ItemIndex>(rng.uniform_index(100)));
    truths[u] = make_item_set(y);
  }
  for (std::size_t k : {1, 5, 10, 20, 50}) {
    double p = 0, r = 0, f = 0, hit = 0, ndcg = 0;
    for (std::size_t u = 0; u < 200; ++u) {
      std::set<ItemIndex> seen, hits;
      double dcg = 0;
      for (std::size_t i = 0; i < k && i < recs[u].size(); ++i) {
        if (!seen.insert(recs[u][i]).second) continue;
        if (std::binary_search(truths[u].begin(), truths[u].end(), recs[u][i])) {
          hits.insert(recs[u][i]);
          dcg += 1 / std::log2(i + 2.0);
        }
      }
      const double h = hits.size(), ny = truths[u].size();
      p += h / k;
      r += h / ny;
      f += 2 * h / (k + ny);
      hit += h > 0;
      ndcg += dcg;
    }
    const auto m = metrics_at_k(recs, truths, k);
    for (auto [a, b] : {std::pair{m.precision, p}, {m.recall, r}, {m.f1, f},
                        {m.hit_rate, hit}, {m.ndcg, ndcg}}) {
      worst = std::max(worst, std::abs(a - b / 200));
    }
  }

  // Every pair of hit sets over a 4-item universe.
  std::size_t bad_pairs = 0;
  for (unsigned a = 0; a < 16; ++a) {
    for (unsigned b = 0; b < 16; ++b) {
      ItemSet sa, sb;
      int uni = 0, inter = 0;
      for (ItemIndex v = 0; v < 4; ++v) {
        const bool ia = a >> v & 1, ib = b >> v & 1;
        if (ia) sa.push_back(v);
        if (ib) sb.push_back(v);
        uni += ia || ib;
        inter += ia && ib;
      }
      const double want = uni ? double(uni - inter) / uni : 0.0;
      const double h = hdr(sa, sb);
      bad_pairs += !(std::abs(h - want) <= 1e-12 && h == hdr(sb, sa) && h >= 0 &&
                     h <= 1 && (a != b || h == 0));
    }
  }

  std::vector<double> per_user;
  double sum = 0;
  int positive = 0;
  for (int u = 0; u < 200; ++u) {
    std::set<ItemIndex> a, b;
    for (ItemIndex v = 0; v < 8; ++v) {
      if (rng.bernoulli(0.25)) a.insert(v);
      if (rng.bernoulli(0.25)) b.insert(v);
    }
    std::set<ItemIndex> uni(a), inter;
    uni.insert(b.begin(), b.end());
    for (ItemIndex v : a) {
      if (b.count(v)) inter.insert(v);
    }
    const double want = uni.empty() ? 0.0 : double(uni.size() - inter.size()) / uni.size();
    per_user.push_back(hdr({a.begin(), a.end()}, {b.begin(), b.end()}));
    worst = std::max(worst, std::abs(per_user.back() - want));
    sum += want;
    positive += want > 0;
  }
  worst = std::max(worst, std::abs(mean_hdr(per_user) - sum / positive));
  return {worst <= 1e-12 && bad_pairs == 0,
          "200 users, max |metric - oracle| " + fmt("%.2e", worst) +
              ", hdr violations over 256 subset pairs " + std::to_string(bad_pairs)};
}

// ---------------------------------------------------------------------------
// 4. Fine-tune label exactness on the fixture corpus.

Corpus fixture_corpus() {
  return make_corpus({{0, 1, 2, 3, 4, 5, 6, 7},
                      {1, 2, 1, 3, 5, 2, 0},
                      {7, 6, 5, 4, 3, 2},
                      {0, 2, 4, 6, 0, 2, 4, 6, 1},
                      {3, 3, 1, 4, 1, 5, 1},
                      {2, 7, 1, 0, 2, 0, 1, 0}},
                     8);
}

TrainConfig tiny_config(std::size_t iterations) {
  TrainConfig c;
  c.batch_size = 4;
  c.negatives_per_instance = 3;
  c.max_iterations = iterations;
  c.eval_interval = 10;
  c.seed = 41;
  return c;
}

Verdict finetune_labels() {
  const Corpus corpus = fixture_corpus();
  const SplitCorpus split{{0, 1, 2, 3}, {4}, {5}};
  const auto data = TrainingData::build(corpus, split, 20);
  const auto table = build_similarity(build_weights(corpus, split.train), 200);
  WeakSupervisionConfig weak;
  weak.k_ws = 3;
  weak.mining_k = 2;
  WslrecOptions opt;
  opt.pretrain = tiny_config(50);
  opt.finetune = tiny_config(50);
  const auto init = SequenceModel::random({8, 4, EncoderKind::kGru, 1}, 3);
  const auto r = run_wslrec(data, weak, {&table, nullptr}, init, opt);

  // Mine again from the pre-trained model, independently of the stored table.
  std::size_t wrong = 0, degenerate = 0;
  for (std::size_t i = 0; i < data.instances.size(); ++i) {
    const auto& inst = data.instances[i];
    const auto b = topk_items(r.pretrain.fit.model, inst.history, weak.mining_k);
    std::set<ItemIndex> want = {inst.next_item};
    for (ItemIndex v : b) {
      if (std::find(inst.future.begin(), inst.future.end(), v) != inst.future.end()) {
        want.insert(v);
      }
    }
    wrong += ItemSet(want.begin(), want.end()) != r.finetune.positives[i];
    degenerate += want.size() == 1;
  }
  return {wrong == 0 && degenerate > 0,
          std::to_string(data.instances.size()) + " instances, mismatches " +
              std::to_string(wrong) + ", degenerate {next} instances " +
              std::to_string(degenerate)};
}

// ---------------------------------------------------------------------------
// 5 and 6. Directional runs on the planted-cluster corpus.

struct Planted {
  Corpus corpus;
  SplitCorpus split;
  TrainingData data;
  SimilarityTable table;
};

const std::uint64_t kCorpusSeed = 7;
const std::uint64_t kRunSeeds[] = {1, 2, 3};

Planted& planted() {
  static Planted p = [] {
    Planted p;
    SynthConfig s;  // 1000 users, 500 items, 10 clusters, p_in 0.8, repeat 0.3
    s.seed = derive_seed(kCorpusSeed, "synth");
    p.corpus = filter_corpus(build_sequences(generate(s)));
    p.split = split_users(p.corpus, derive_seed(kCorpusSeed, "split"));
    return p;
  }();
  if (p.data.corpus == nullptr) {
    p.data = TrainingData::build(p.corpus, p.split, 20);
    p.table = build_similarity(build_weights(p.corpus, p.split.train), 200);
  }
  return p;
}

// MeanPool, d = 64, batch 32 with 10 shared negatives per instance,
// Adam 1e-3, up to 20k iterations, validation every 1000, patience 5.
const ModelShape kShape{0, 64, EncoderKind::kMeanPool, 1};

TrainConfig directional_config(std::uint64_t seed, std::string_view stage) {
  TrainConfig c;
  c.batch_size = 32;
  c.negatives_per_instance = 10;
  c.learning_rate = 0.001;
  c.max_iterations = 20000;
  c.eval_interval = 1000;
  c.patience = 5;
  c.seed = derive_seed(seed, stage);
  return c;
}

SequenceModel init_model(std::uint64_t seed) {
  ModelShape shape = kShape;
  shape.num_items = planted().corpus.num_items();
  return SequenceModel::random(shape, derive_seed(seed, "init"));
}

double test_recall20(const SequenceModel& m) {
  const auto& p = planted();
  return model_recall(m, p.corpus, p.split.test, 20, 20);
}

std::map<std::pair<std::string, std::uint64_t>, double> g_recall;

double standard_recall(const std::string& strategy, std::uint64_t seed) {
  const auto key = std::pair{strategy, seed};
  if (auto it = g_recall.find(key); it != g_recall.end()) return it->second;
  const auto r = train_standard(planted().data, parse_strategy(strategy), init_model(seed),
                                directional_config(seed, "train"));
  return g_recall[key] = test_recall20(r.fit.model);
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

Verdict next_c_vs_next_all() {
  const auto start = std::chrono::steady_clock::now();
  planted();
  int n1_wins = 0, n3_wins = 0;
  std::ostringstream detail;
  detail << "test recall@20 (next1/nextc:3/nextall):";
  for (std::uint64_t seed : kRunSeeds) {
    const double n1 = standard_recall("next1", seed);
    const double n3 = standard_recall("nextc:3", seed);
    const double all = standard_recall("nextall", seed);
    n1_wins += n1 > all;
    n3_wins += n3 > all;
    detail << " seed " << seed << " " << fmt("%.4f", n1) << "/" << fmt("%.4f", n3) << "/"
           << fmt("%.4f", all) << ";";
  }
  const double secs = seconds_since(start);
  detail << " wins " << n1_wins << "/3 and " << n3_wins << "/3, " << fmt("%.0f", secs) << " s";
  return {n1_wins >= 2 && n3_wins >= 2 && secs < 300, detail.str()};
}

Verdict wslrec_lift() {
  const auto start = std::chrono::steady_clock::now();
  auto& p = planted();
  int wins = 0;
  std::ostringstream detail;
  detail << "test recall@20 (wslrec/next1):";
  for (std::uint64_t seed : kRunSeeds) {
    WeakSupervisionConfig weak;  // BR + ItemCF, k_ws 20, mining_k 50
    WslrecOptions opt;
    opt.pretrain = directional_config(seed, "pretrain");
    opt.finetune = directional_config(seed, "finetune");
    const auto r = run_wslrec(p.data, weak, {&p.table, nullptr}, init_model(seed), opt);
    const double w = test_recall20(r.finetune.fit.model);
    const double n1 = standard_recall("next1", seed);
    wins += w > n1;
    detail << " seed " << seed << " " << fmt("%.4f", w) << "/" << fmt("%.4f", n1) << ";";
  }
  const double secs = seconds_since(start);
  detail << " wins " << wins << "/3, " << fmt("%.0f", secs) << " s";
  return {wins >= 2 && secs < 600, detail.str()};
}

// ---------------------------------------------------------------------------
// 7. Original + full mining reduces to Next-All.

Verdict reduction_identity() {
  SynthConfig s;
  s.n_users = 150;
  s.n_items = 60;
  s.n_clusters = 6;
  s.seed = 77;
  const Corpus corpus = filter_corpus(build_sequences(generate(s)));
  const SplitCorpus split = split_users(corpus, 77);
  const auto data = TrainingData::build(corpus, split, 20);
  const auto init = SequenceModel::random({corpus.num_items(), 8, EncoderKind::kGru, 1}, 5);
  const auto original = train_standard(data, NextC{1}, init, tiny_config(40)).fit.model;
  WeakSupervisionConfig weak;
  weak.sources = {WeakSource::kOriginal};
  weak.mining_k = corpus.num_items();
  WslrecOptions opt;
  opt.pretrain = tiny_config(40);
  opt.finetune = tiny_config(40);
  const auto r = run_wslrec(data, weak, {nullptr, &original}, init, opt);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < data.instances.size(); ++i) {
    wrong += r.finetune.positives[i] != data.instances[i].future_set;
  }
  return {wrong == 0, std::to_string(data.instances.size()) +
                          " instances, fine-tune labels != future set: " +
                          std::to_string(wrong)};
}

// ---------------------------------------------------------------------------
// 8. CLI chain determinism.

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "wslrec");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

bool chain(const fs::path& dir) {
  const auto d = [&](const char* name) { return (dir / name).string(); };
  return cli({"synth", "--users", "300", "--items", "100", "--seed", "5", "--out",
              d("events.tsv")}) == 0 &&
         cli({"preprocess", "--input", d("events.tsv"), "--seed", "5", "--out",
              d("corpus")}) == 0 &&
         cli({"itemcf", "--corpus", d("corpus"), "--threads", "1", "--out", d("sim.tsv")}) == 0 &&
         cli({"run", "--corpus", d("corpus"), "--itemcf", d("sim.tsv"), "--dim", "16",
              "--batch-size", "32", "--max-iterations", "300", "--eval-interval", "100",
              "--seed", "5", "--threads", "1", "--out", d("run")}) == 0 &&
         cli({"evaluate", "--corpus", d("corpus"), "--ckpt", d("run/final.ckpt"), "--k",
              "20,50", "--out", d("report.json")}) == 0;
}

Verdict cli_determinism() {
  const auto a = scratch("chain_a");
  const auto b = scratch("chain_b");
  if (!chain(a) || !chain(b)) return {false, "chain exited nonzero"};
  std::size_t differ = 0;
  const char* files[] = {"events.tsv", "sim.tsv", "run/pretrain.ckpt", "run/mined.tsv",
                         "run/final.ckpt", "run/pretrain_log.jsonl",
                         "run/finetune_log.jsonl", "report.json"};
  for (const char* f : files) differ += slurp(a / f) != slurp(b / f) || slurp(a / f).empty();
  return {differ == 0, "gru chain twice, " + std::to_string(std::size(files)) +
                           " artifacts compared, differing " + std::to_string(differ)};
}

// ---------------------------------------------------------------------------
// 9. Top-k retrieval exactness.

Verdict topk_exactness() {
  Rng rng(909);
  std::size_t mismatches = 0, lists = 0;
  long double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(999);
    const std::size_t d = 1 + rng.uniform_index(16);
    const auto kind = static_cast<EncoderKind>(rng.uniform_index(3));
    auto model = SequenceModel::random({n, d, kind, 1 + rng.uniform_index(4)},
                                       static_cast<std::uint64_t>(trial));
    // Duplicate some rows so that exact ties occur.
    for (int i = 0; i < 5; ++i) {
      model.embeddings().row(rng.uniform_index(n)) =
          model.embeddings().row(rng.uniform_index(n)).eval();
    }
    std::vector<ItemIndex> history;
    const std::size_t len = 1 + rng.uniform_index(20);
    for (std::size_t i = 0; i < len; ++i) history.push_back(static_cast<ItemIndex>(rng.uniform_index(n)));

    const Matrix rep = encode(model, history);
    const Vector scores = score_all(model, rep);
    for (ItemIndex v = 0; v < n; ++v) {
      long double best = -INFINITY;
      for (Eigen::Index j = 0; j < rep.rows(); ++j) {
        long double dot = 0;
        for (std::size_t c = 0; c < d; ++c) {
          dot += static_cast<long double>(model.embeddings()(v, c)) * rep(j, c);
        }
        best = std::max(best, dot);
      }
      worst = std::max(worst, std::abs(best - scores[v]));
    }
    std::vector<ItemIndex> order(n);
    for (ItemIndex v = 0; v < n; ++v) order[v] = v;
    std::sort(order.begin(), order.end(), [&](ItemIndex a, ItemIndex b) {
      return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
    });
    for (std::size_t k : {std::size_t{1}, std::size_t{5}, std::size_t{20}, std::size_t{50}, n}) {
      const std::vector<ItemIndex> want(order.begin(), order.begin() + std::min(k, n));
      ++lists;
      mismatches += topk_items(model, history, k) != want;
    }
  }
  return {mismatches == 0 && worst <= 1e-12,
          "100 models, mismatches " + std::to_string(mismatches) + "/" +
              std::to_string(lists) + ", max |score - extended oracle| " +
              fmt("%.2e", static_cast<double>(worst))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wslrec acceptance suite"};
  std::vector<int> only;
  app.add_option("--only", only, "run just these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"itemcf exactness", itemcf_exactness},
      {"gradient check", gradients},
      {"metric exactness", metrics},
      {"fine-tune labels", finetune_labels},
      {"next-c beats next-all", next_c_vs_next_all},
      {"wslrec beats next1", wslrec_lift},
      {"original reduces to next-all", reduction_identity},
      {"cli determinism", cli_determinism},
      {"top-k exactness", topk_exactness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << "criterion " << id << " " << (v.pass ? "PASS" : "FAIL") << "  "
              << criteria[i].first << ": " << v.detail << " ["
              << fmt("%.1f", seconds_since(start)) << " s]" << std::endl;
  }
  return failed;
}
