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

#include "wslrec/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wslrec/corpus.hpp"
#include "wslrec/error.hpp"
#include "wslrec/eval.hpp"
#include "wslrec/modelfree.hpp"
#include "wslrec/pipeline.hpp"
#include "wslrec/random.hpp"
#include "wslrec/seqmodel.hpp"
#include "wslrec/synth.hpp"
#include "wslrec/trainer.hpp"

namespace wslrec {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

class UsageError : public Error {
 public:
  using Error::Error;
};

// One configurable key, usable both as a JSON key and as a flag
// ("--" + key with '_' replaced by '-').
struct Field {
  std::string key;
  std::string help;
  std::function<CLI::Option*(CLI::App&, const std::string&, RunConfig&)> bind;
  std::function<void(RunConfig&, const json&)> read;
  std::function<void(const RunConfig&, ordered_json&)> write;
  std::function<void(RunConfig&, const RunConfig&)> copy;
};

template <class T>
Field field(std::string key, T RunConfig::*member, std::string help) {
  Field f;
  f.key = key;
  f.help = std::move(help);
  f.bind = [member, help = f.help](CLI::App& app, const std::string& names,
                                   RunConfig& target) -> CLI::Option* {
    if constexpr (std::is_same_v<T, bool>) {
      const std::string negated = "!--no-" + names.substr(2);
      return app.add_flag(names + "," + negated, target.*member, help);
    } else {
      return app.add_option(names, target.*member, help)->capture_default_str();
    }
  };
  f.read = [member, key](RunConfig& c, const json& value) {
    try {
      c.*member = value.get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + key + "' has the wrong type");
    }
  };
  f.write = [member, key](const RunConfig& c, ordered_json& out) {
    out[key] = c.*member;
  };
  f.copy = [member](RunConfig& dst, const RunConfig& src) {
    dst.*member = src.*member;
  };
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      field("input", &RunConfig::input, "interaction TSV user<TAB>item<TAB>timestamp"),
      field("corpus", &RunConfig::corpus, "processed corpus directory"),
      field("out", &RunConfig::out, "output path"),
      field("itemcf", &RunConfig::itemcf, "item similarity table"),
      field("original", &RunConfig::original,
            "checkpoint backing the 'original' weak source"),
      field("ckpt", &RunConfig::ckpt, "model checkpoint"),
      field("mined", &RunConfig::mined, "mined top-k table"),
      field("log", &RunConfig::log, "training log (JSON lines)"),
      field("min_user", &RunConfig::min_user, "minimum interactions per user"),
      field("min_item", &RunConfig::min_item, "minimum interactions per item"),
      field("prune", &RunConfig::prune, "neighbors kept per item"),
      field("itemcf_include_history", &RunConfig::itemcf_include_history,
            "let ItemCF recommend history items (sim(v,v) = 1)"),
      field("encoder", &RunConfig::encoder, "gru | meanpool | multihead"),
      field("dim", &RunConfig::dim, "embedding dimension"),
      field("heads", &RunConfig::heads, "user vectors (multihead only)"),
      field("max_history", &RunConfig::max_history, "history length fed to the encoder"),
      field("strategy", &RunConfig::strategy,
            "next1 | nextc:<c> | nextall | weak:<sources>:<k>"),
      field("batch_size", &RunConfig::batch_size, "instances per iteration"),
      field("negatives", &RunConfig::negatives, "sampled negatives per instance"),
      field("negative_pool", &RunConfig::negative_pool,
            "instance (batch*negatives shared draws) | batch (negatives shared draws)"),
      field("learning_rate", &RunConfig::learning_rate, "Adam learning rate"),
      field("max_iterations", &RunConfig::max_iterations, "iteration budget per stage"),
      field("finetune_iterations", &RunConfig::finetune_iterations,
            "fine-tune iteration budget, 0 = max_iterations"),
      field("eval_interval", &RunConfig::eval_interval,
            "iterations between validation checks"),
      field("patience", &RunConfig::patience,
            "non-improving checks before stopping"),
      field("proposal_correction", &RunConfig::proposal_correction,
            "subtract log Q in the sampled softmax"),
      field("weak", &RunConfig::weak, "weak sources, subset of br,itemcf,original"),
      field("kws", &RunConfig::kws, "cutoff of every weak source"),
      field("mine_k", &RunConfig::mine_k, "mining cutoff"),
      field("users", &RunConfig::users, "synthetic users"),
      field("items", &RunConfig::items, "synthetic items"),
      field("clusters", &RunConfig::clusters, "synthetic item clusters"),
      field("p_in", &RunConfig::p_in, "probability of staying in the cluster"),
      field("repeat", &RunConfig::repeat, "probability of a repeat of the last 5 items"),
      field("min_len", &RunConfig::min_len, "shortest synthetic sequence"),
      field("max_len", &RunConfig::max_len, "longest synthetic sequence"),
      field("k", &RunConfig::k, "comma-separated cutoffs"),
      field("split", &RunConfig::split, "users to evaluate: test | valid | train"),
      field("rec", &RunConfig::rec, "recommender: br | itemcf:<table> | <checkpoint>"),
      field("rec_a", &RunConfig::rec_a, "first recommender"),
      field("rec_b", &RunConfig::rec_b, "second recommender"),
      field("step", &RunConfig::step, "ensemble grid step, 0 = k/10"),
      field("ndcg_normalized", &RunConfig::ndcg_normalized,
            "divide DCG by the ideal DCG"),
      field("seed", &RunConfig::seed, "root seed"),
      field("threads", &RunConfig::threads, "worker threads"),
  };
  return all;
}

const Field& find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw std::logic_error("no config field " + key);
}

RunConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    const auto it = std::find_if(fields().begin(), fields().end(),
                                 [&](const Field& f) { return f.key == key; });
    if (it == fields().end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    it->read(c, value);
  }
  return c;
}

// A subcommand: its keys, flag aliases and body.
struct Command {
  std::string name;
  std::string help;
  std::vector<std::string> keys;
  std::map<std::string, std::string> aliases;  // key -> extra flag
  std::function<void(const RunConfig&, std::ostream&, std::ostream&)> run;
};

const std::string& need(const std::string& value, const char* key) {
  if (value.empty()) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    throw UsageError("missing --" + flag);
  }
  return value;
}

std::vector<std::size_t> parse_cutoffs(const std::string& list) {
  std::vector<std::size_t> out;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t v = 0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size() || v == 0) {
      throw ConfigError("bad cutoff '" + tok + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("no cutoffs given");
  return out;
}

const std::vector<UserIndex>& users_of(const SplitCorpus& split,
                                       const std::string& which) {
  if (which == "test") return split.test;
  if (which == "valid") return split.valid;
  if (which == "train") return split.train;
  throw ConfigError("unknown split '" + which + "'");
}

ModelShape model_shape(const RunConfig& c, std::size_t num_items) {
  return {num_items, c.dim, parse_encoder(c.encoder), c.heads};
}

TrainConfig train_config(const RunConfig& c, std::string_view stage) {
  TrainConfig t;
  t.batch_size = c.batch_size;
  t.negatives_per_instance = c.negatives;
  if (c.negative_pool == "instance") {
    t.negative_pool = NegativePool::kPerInstance;
  } else if (c.negative_pool == "batch") {
    t.negative_pool = NegativePool::kPerBatch;
  } else {
    throw ConfigError("negative_pool must be 'instance' or 'batch'");
  }
  t.learning_rate = c.learning_rate;
  t.max_iterations = c.max_iterations;
  t.eval_interval = c.eval_interval;
  t.patience = c.patience;
  t.loss.proposal_correction = c.proposal_correction;
  t.seed = derive_seed(c.seed, stage);
  return t;
}

TrainConfig finetune_config(const RunConfig& c) {
  TrainConfig t = train_config(c, "finetune");
  if (c.finetune_iterations > 0) t.max_iterations = c.finetune_iterations;
  return t;
}

WeakSupervisionConfig weak_config(const RunConfig& c) {
  WeakSupervisionConfig w;
  w.sources = parse_weak_sources(c.weak);
  w.k_ws = c.kws;
  w.mining_k = c.mine_k;
  w.itemcf.include_history = c.itemcf_include_history;
  return w;
}

bool uses(const WeakSupervisionConfig& w, WeakSource s) {
  return std::find(w.sources.begin(), w.sources.end(), s) != w.sources.end();
}

// Loaded artifacts behind a WeakArtifacts view.
struct ArtifactStore {
  std::unique_ptr<SimilarityTable> itemcf;
  std::unique_ptr<SequenceModel> original;

  WeakArtifacts view() const { return {itemcf.get(), original.get()}; }
};

ArtifactStore load_artifacts(const RunConfig& c,
                             const WeakSupervisionConfig& w,
                             std::size_t num_items) {
  ArtifactStore s;
  if (uses(w, WeakSource::kItemCf)) {
    s.itemcf = std::make_unique<SimilarityTable>(
        load_similarity(need(c.itemcf, "itemcf"), num_items));
  }
  if (uses(w, WeakSource::kOriginal)) {
    s.original =
        std::make_unique<SequenceModel>(load_checkpoint(need(c.original, "original")));
  }
  return s;
}

void write_log_file(const std::string& path, std::span<const LogRecord> log) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_training_log(out, log);
}

void write_text(const std::string& path, const std::string& text,
                std::ostream& fallback) {
  if (path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

// Builds a recommender from "br", "itemcf:<table>" or a checkpoint path.
// The recommender owns whatever it loaded.
Recommender make_recommender(const std::string& spec, const RunConfig& c,
                             std::size_t num_items) {
  if (spec == "br") {
    return [](std::span<const ItemIndex> h, std::size_t k) {
      return br_topk(h, k);
    };
  }
  if (spec.starts_with("itemcf:")) {
    auto table = std::make_shared<SimilarityTable>(
        load_similarity(spec.substr(7), num_items));
    const ItemCfOptions options{c.itemcf_include_history};
    return [table, options](std::span<const ItemIndex> h, std::size_t k) {
      return itemcf_topk(h, *table, k, options);
    };
  }
  auto model = std::make_shared<SequenceModel>(load_checkpoint(spec));
  bind_to_corpus(*model, num_items);
  const std::size_t max_history = c.max_history;
  return [model, max_history](std::span<const ItemIndex> h, std::size_t k) {
    return topk_items(*model, recent(h, max_history), k);
  };
}

// ---------------------------------------------------------------------------

void run_synth(const RunConfig& c, std::ostream&, std::ostream& err) {
  SynthConfig s;
  s.n_users = c.users;
  s.n_items = c.items;
  s.n_clusters = c.clusters;
  s.p_in = c.p_in;
  s.repeat_prob = c.repeat;
  s.min_len = c.min_len;
  s.max_len = c.max_len;
  s.seed = derive_seed(c.seed, "synth");
  const auto events = generate(s);
  std::ofstream out(need(c.out, "out"));
  if (!out) throw Error("cannot write " + c.out);
  write_events(out, events);
  err << "wrote " << events.size() << " events\n";
}

void run_preprocess(const RunConfig& c, std::ostream&, std::ostream& err) {
  const auto events = ingest_events_file(need(c.input, "input"));
  const auto raw = build_sequences(events);
  const Corpus corpus = filter_corpus(raw, {c.min_user, c.min_item});
  const SplitCorpus split = split_users(corpus, derive_seed(c.seed, "split"));
  save_corpus(need(c.out, "out"), corpus, split);
  err << corpus.num_users() << " users, " << corpus.num_items()
      << " items; split " << split.train.size() << "/" << split.valid.size()
      << "/" << split.test.size() << "\n";
}

void run_itemcf(const RunConfig& c, std::ostream&, std::ostream& err) {
  const auto stored = load_corpus(need(c.corpus, "corpus"));
  const auto weights = build_weights(stored.corpus, stored.split.train);
  const auto table = build_similarity(weights, c.prune, c.threads);
  save_similarity(need(c.out, "out"), table);
  err << "similarity table over " << table.num_items() << " items\n";
}

void report_fit(const FitResult& fit, std::ostream& err) {
  Real best = 0;
  for (const auto& r : fit.log) {
    if (r.best) best = r.recall50_val;
  }
  err << fit.iterations << " iterations, best validation recall@50 " << best
      << "\n";
}

void run_train(const RunConfig& c, std::ostream&, std::ostream& err) {
  need(c.out, "out");
  const auto stored = load_corpus(need(c.corpus, "corpus"));
  const auto data =
      TrainingData::build(stored.corpus, stored.split, c.max_history);
  const auto init = SequenceModel::random(
      model_shape(c, stored.corpus.num_items()), derive_seed(c.seed, "init"));
  const LabelStrategy strategy = parse_strategy(c.strategy);
  StageResult r = [&] {
    if (const auto* w = std::get_if<WeakUnion>(&strategy)) {
      WeakSupervisionConfig weak = weak_config(c);
      weak.sources = w->sources;
      weak.k_ws = w->k;
      const auto store = load_artifacts(c, weak, stored.corpus.num_items());
      return pretrain(data, weak, store.view(), init, train_config(c, "train"));
    }
    if (std::holds_alternative<MinedFineTune>(strategy)) {
      throw ConfigError("the mined strategy is run by 'finetune'");
    }
    return train_standard(data, strategy, init, train_config(c, "train"));
  }();
  save_checkpoint(c.out, r.fit.model);
  write_log_file(c.log, r.fit.log);
  report_fit(r.fit, err);
}

void run_pretrain(const RunConfig& c, std::ostream&, std::ostream& err) {
  need(c.out, "out");
  const auto stored = load_corpus(need(c.corpus, "corpus"));
  const auto data =
      TrainingData::build(stored.corpus, stored.split, c.max_history);
  const auto weak = weak_config(c);
  const auto store = load_artifacts(c, weak, stored.corpus.num_items());
  const auto init = SequenceModel::random(
      model_shape(c, stored.corpus.num_items()), derive_seed(c.seed, "init"));
  const auto r =
      pretrain(data, weak, store.view(), init, train_config(c, "pretrain"));
  save_checkpoint(c.out, r.fit.model);
  write_log_file(c.log, r.fit.log);
  report_fit(r.fit, err);
}

void run_mine(const RunConfig& c, std::ostream&, std::ostream& err) {
  need(c.out, "out");
  const auto stored = load_corpus(need(c.corpus, "corpus"));
  const auto model = load_checkpoint(need(c.ckpt, "ckpt"));
  const auto data =
      TrainingData::build(stored.corpus, stored.split, c.max_history);
  const auto table = mine_topk(model, data, c.mine_k, c.threads);
  save_mined(c.out, table);
  err << "mined " << table.size() << " instances\n";
}

void run_finetune(const RunConfig& c, std::ostream&, std::ostream& err) {
  need(c.out, "out");
  const auto stored = load_corpus(need(c.corpus, "corpus"));
  const auto model = load_checkpoint(need(c.ckpt, "ckpt"));
  const auto mined = load_mined(need(c.mined, "mined"));
  const auto data =
      TrainingData::build(stored.corpus, stored.split, c.max_history);
  const auto r = finetune(model, mined, data, finetune_config(c));
  save_checkpoint(c.out, r.fit.model);
  write_log_file(c.log, r.fit.log);
  report_fit(r.fit, err);
}

void run_run(const RunConfig& c, std::ostream&, std::ostream& err) {
  const auto stored = load_corpus(need(c.corpus, "corpus"));
  const auto data =
      TrainingData::build(stored.corpus, stored.split, c.max_history);
  const auto weak = weak_config(c);
  const auto store = load_artifacts(c, weak, stored.corpus.num_items());
  const auto init = SequenceModel::random(
      model_shape(c, stored.corpus.num_items()), derive_seed(c.seed, "init"));
  WslrecOptions options;
  options.pretrain = train_config(c, "pretrain");
  options.finetune = finetune_config(c);
  options.threads = c.threads;
  options.out_dir = need(c.out, "out");
  const auto r = run_wslrec(data, weak, store.view(), init, options);
  err << "pretrain: ";
  report_fit(r.pretrain.fit, err);
  err << "finetune: ";
  report_fit(r.finetune.fit, err);
}

void run_evaluate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto stored = load_corpus(need(c.corpus, "corpus"));
  const std::string spec = !c.rec.empty() ? c.rec : need(c.ckpt, "ckpt");
  const auto rec = make_recommender(spec, c, stored.corpus.num_items());
  const auto cutoffs = parse_cutoffs(c.k);
  const auto report = evaluate(rec, stored.corpus, users_of(stored.split, c.split),
                               cutoffs, {c.ndcg_normalized});
  write_text(c.out, report_json(report) + "\n", out);
  err << report_table(report);
}

void run_hdr(const RunConfig& c, std::ostream& out, std::ostream&) {
  const auto stored = load_corpus(need(c.corpus, "corpus"));
  const std::size_t n = stored.corpus.num_items();
  const auto rec_a = make_recommender(need(c.rec_a, "rec_a"), c, n);
  const auto rec_b = make_recommender(need(c.rec_b, "rec_b"), c, n);
  const auto& users = users_of(stored.split, c.split);
  ordered_json j;
  for (std::size_t k : parse_cutoffs(c.k)) {
    std::vector<Real> per_user;
    for (UserIndex u : users) {
      const auto s = eval_split(stored.corpus.sequence(u));
      per_user.push_back(hdr(hit_set(rec_a(s.history, k), s.truth, k),
                             hit_set(rec_b(s.history, k), s.truth, k)));
    }
    j[std::to_string(k)] = {{"mean_hdr", mean_hdr(per_user)},
                            {"users", per_user.size()}};
  }
  write_text(c.out, j.dump(2) + "\n", out);
}

void run_ensemble(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto stored = load_corpus(need(c.corpus, "corpus"));
  const std::size_t n = stored.corpus.num_items();
  const auto table = load_similarity(need(c.itemcf, "itemcf"), n);
  const auto model = load_checkpoint(need(c.ckpt, "ckpt"));
  bind_to_corpus(model, n);
  ordered_json j;
  for (std::size_t k : parse_cutoffs(c.k)) {
    const auto choice = tune_ensemble(stored.corpus, stored.split.valid, table,
                                      model, c.max_history, k, c.step);
    const auto rec = ensemble_recommender(table, model, c.max_history, choice.split);
    const std::size_t cut[] = {k};
    const auto report = evaluate(rec, stored.corpus,
                                 users_of(stored.split, c.split), cut,
                                 {c.ndcg_normalized});
    const auto& m = report.at(k);
    j[std::to_string(k)] = {
        {"a", choice.split.a},
        {"b", choice.split.b},
        {"c", choice.split.c},
        {"valid_recall", choice.recall},
        {"precision", m.precision},
        {"recall", m.recall},
        {"f1", m.f1},
        {"ndcg", m.ndcg},
        {"hit_rate", m.hit_rate}};
    err << "k=" << k << ": a=" << choice.split.a << " b=" << choice.split.b
        << " c=" << choice.split.c << " recall " << m.recall << "\n";
  }
  write_text(c.out, j.dump(2) + "\n", out);
}

const std::vector<std::string> kModelKeys = {"encoder", "dim", "heads",
                                             "max_history"};
const std::vector<std::string> kTrainKeys = {
    "batch_size", "negatives", "negative_pool", "learning_rate",
    "max_iterations", "eval_interval", "patience", "proposal_correction",
    "log"};

std::vector<std::string> join(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<Command> commands() {
  return {
      {"synth", "generate a planted-cluster interaction log",
       {"users", "items", "clusters", "p_in", "repeat", "min_len", "max_len",
        "seed", "out"},
       {},
       run_synth},
      {"preprocess", "filter, index and split an interaction log",
       {"input", "out", "min_user", "min_item", "seed"},
       {},
       run_preprocess},
      {"itemcf", "build the item similarity table from the training users",
       {"corpus", "prune", "out", "threads"},
       {},
       run_itemcf},
      {"train", "conventional training with a labeling strategy",
       join({{"corpus", "strategy", "seed", "out", "itemcf", "original",
              "itemcf_include_history"},
             kModelKeys, kTrainKeys}),
       {},
       run_train},
      {"pretrain", "pre-train on the union of weak sources",
       join({{"corpus", "weak", "kws", "itemcf", "original",
              "itemcf_include_history", "seed", "out"},
             kModelKeys, kTrainKeys}),
       {},
       run_pretrain},
      {"mine", "top-k of every training instance under a checkpoint",
       {"corpus", "ckpt", "mine_k", "max_history", "out", "threads"},
       {{"mine_k", "--k"}},
       run_mine},
      {"finetune", "fine-tune a checkpoint on mined labels",
       join({{"corpus", "ckpt", "mined", "seed", "out", "max_history",
              "finetune_iterations"},
             kTrainKeys}),
       {},
       run_finetune},
      {"run", "pre-train, mine and fine-tune in one go",
       join({{"corpus", "weak", "kws", "mine_k", "itemcf", "original",
              "itemcf_include_history", "seed", "out", "threads",
              "finetune_iterations"},
             kModelKeys, kTrainKeys}),
       {},
       run_run},
      {"evaluate", "top-k metrics of a recommender",
       {"corpus", "ckpt", "rec", "k", "split", "max_history", "ndcg_normalized",
        "itemcf_include_history", "out"},
       {},
       run_evaluate},
      {"hdr", "hits difference rate of two recommenders",
       {"corpus", "rec_a", "rec_b", "k", "split", "max_history",
        "itemcf_include_history", "out"},
       {},
       run_hdr},
      {"ensemble", "tuned BR + ItemCF + model ensemble",
       {"corpus", "itemcf", "ckpt", "k", "step", "split", "max_history",
        "ndcg_normalized", "out"},
       {},
       run_ensemble},
  };
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Weakly supervised sequential recommendation", "wslrec"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  const auto cmds = commands();
  RunConfig flags;
  std::string config_path;
  struct Bound {
    CLI::App* app;
    const Command* cmd;
    std::vector<std::pair<CLI::Option*, const Field*>> options;
  };
  std::vector<Bound> bound;
  for (const auto& cmd : cmds) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config_path, "flat JSON config; flags win");
    Bound b{sub, &cmd, {}};
    for (const auto& key : cmd.keys) {
      const Field& f = find_field(key);
      std::string names = "--" + key;
      std::replace(names.begin(), names.end(), '_', '-');
      if (const auto a = cmd.aliases.find(key); a != cmd.aliases.end()) {
        names += "," + a->second;
      }
      b.options.emplace_back(f.bind(*sub, names, flags), &f);
    }
    bound.push_back(std::move(b));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const Bound* chosen = nullptr;
  for (const auto& b : bound) {
    if (b.app->parsed()) chosen = &b;
  }
  if (chosen == nullptr) return 2;

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : read_config_file(config_path);
    for (const auto& [opt, f] : chosen->options) {
      if (opt->count() > 0) f->copy(config, flags);
    }
    ordered_json resolved;
    for (const auto& [opt, f] : chosen->options) f->write(config, resolved);
    err << "wslrec " << chosen->cmd->name << " " << resolved.dump() << "\n";
    chosen->cmd->run(config, out, err);
  } catch (const UsageError& e) {
    err << "wslrec " << chosen->cmd->name << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "wslrec " << chosen->cmd->name << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int dispatch(int argc, const char* const* argv) {
  return dispatch(argc, argv, std::cout, std::cerr);
}

}  // namespace wslrec
