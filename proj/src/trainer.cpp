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

#include "wslrec/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "wslrec/error.hpp"

namespace wslrec {

std::string_view weak_source_name(WeakSource source) {
  switch (source) {
    case WeakSource::kBr:
      return "br";
    case WeakSource::kItemCf:
      return "itemcf";
    case WeakSource::kOriginal:
      return "original";
  }
  return "unknown";
}

std::vector<WeakSource> parse_weak_sources(std::string_view list) {
  std::vector<WeakSource> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t end = list.find(',', start);
    if (end == std::string_view::npos) end = list.size();
    const auto tok = list.substr(start, end - start);
    WeakSource s;
    if (tok == "br") {
      s = WeakSource::kBr;
    } else if (tok == "itemcf") {
      s = WeakSource::kItemCf;
    } else if (tok == "original") {
      s = WeakSource::kOriginal;
    } else {
      throw ConfigError("unknown weak source '" + std::string(tok) + "'");
    }
    if (std::find(out.begin(), out.end(), s) != out.end()) {
      throw ConfigError("weak source listed twice: " + std::string(tok));
    }
    out.push_back(s);
    start = end + 1;
  }
  return out;
}

namespace {

std::size_t parse_count(std::string_view s, const char* what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v == 0) {
    throw ConfigError(std::string("bad ") + what + " '" + std::string(s) +
                      "'");
  }
  return v;
}

}  // namespace

LabelStrategy parse_strategy(std::string_view spec) {
  if (spec == "next1") return NextC{1};
  if (spec == "nextall") return NextAll{};
  if (spec == "mined") return MinedFineTune{};
  if (spec.starts_with("nextc:")) {
    return NextC{parse_count(spec.substr(6), "next-c count")};
  }
  if (spec.starts_with("weak:")) {
    const auto rest = spec.substr(5);
    const auto colon = rest.rfind(':');
    if (colon == std::string_view::npos) {
      throw ConfigError("weak strategy needs weak:<sources>:<k>");
    }
    WeakUnion w;
    w.sources = parse_weak_sources(rest.substr(0, colon));
    w.k = parse_count(rest.substr(colon + 1), "weak cutoff");
    return w;
  }
  throw ConfigError("unknown strategy '" + std::string(spec) + "'");
}

std::string strategy_name(const LabelStrategy& strategy) {
  struct Visitor {
    std::string operator()(const NextC& s) const {
      return s.c == 1 ? "next1" : "nextc:" + std::to_string(s.c);
    }
    std::string operator()(const NextAll&) const { return "nextall"; }
    std::string operator()(const WeakUnion& s) const {
      std::string out = "weak:";
      for (std::size_t i = 0; i < s.sources.size(); ++i) {
        if (i) out += ',';
        out += weak_source_name(s.sources[i]);
      }
      return out + ":" + std::to_string(s.k);
    }
    std::string operator()(const MinedFineTune&) const { return "mined"; }
  };
  return std::visit(Visitor{}, strategy);
}

ItemSet build_labels(const LabelStrategy& strategy,
                     const TrainingInstance& instance,
                     const LabelInputs& inputs) {
  struct Visitor {
    const TrainingInstance& inst;
    const LabelInputs& in;

    ItemSet operator()(const NextC& s) const {
      if (s.c == 0) throw ConfigError("next-c needs c >= 1");
      return make_item_set(inst.future.first(std::min(s.c, inst.future.size())));
    }
    ItemSet operator()(const NextAll&) const { return inst.future_set; }
    ItemSet operator()(const WeakUnion& s) const {
      if (s.sources.empty()) throw ConfigError("weak union has no sources");
      if (in.weak_sets.size() != s.sources.size()) {
        throw Error("weak sets missing for user " + std::to_string(inst.user) +
                    " t=" + std::to_string(inst.t));
      }
      ItemSet out;
      for (const auto& set : in.weak_sets) out = set_union(out, set);
      // ItemCF alone can come back empty.
      if (out.empty()) out.push_back(inst.next_item);
      return out;
    }
    ItemSet operator()(const MinedFineTune&) const {
      if (in.mined == nullptr) {
        throw Error("no mined set for user " + std::to_string(inst.user) +
                    " t=" + std::to_string(inst.t));
      }
      return set_union(ItemSet{inst.next_item},
                       set_intersection(*in.mined, inst.future_set));
    }
  };
  return std::visit(Visitor{instance, inputs}, strategy);
}

std::vector<ItemIndex> sample_negatives(Rng& rng, const UniformProposal& q,
                                        std::size_t count,
                                        const ItemSet& exclude) {
  const auto in_range = static_cast<std::size_t>(
      std::lower_bound(exclude.begin(), exclude.end(), q.num_items) -
      exclude.begin());
  if (q.num_items <= in_range) {
    throw Error("no items left to sample negatives from");
  }
  std::vector<ItemIndex> out;
  out.reserve(count);
  while (out.size() < count) {
    const auto v = static_cast<ItemIndex>(rng.uniform_index(q.num_items));
    if (!contains(exclude, v)) out.push_back(v);
  }
  return out;
}

namespace {

// Negatives as rows of a gathered embedding block; rows with keep == 0 are
// skipped. Gradients of the block rows go to `grad` (same shape as `emb`).
struct NegativeBlock {
  const Matrix& emb;
  std::span<const ItemIndex> items;
  std::span<const char> keep;
  Matrix* grad = nullptr;
};

Real block_loss(const SequenceModel& model, std::span<const ItemIndex> history,
                std::span<const ItemIndex> positives, const NegativeBlock& neg,
                SequenceModel* grads, const LossOptions& options) {
  if (positives.empty()) throw Error("sampled softmax needs a positive");
  for (ItemIndex v : positives) {
    if (v >= model.num_items()) {
      throw Error("item " + std::to_string(v) + " out of range");
    }
  }
  const EncoderTape tape(model, history);
  const UserRepresentation& rep = tape.output();
  const Matrix& emb = model.embeddings();
  const UniformProposal q{model.num_items()};
  const std::size_t np = positives.size();
  const std::size_t nn = neg.items.size();
  const Eigen::Index m = rep.rows();

  // Score of a candidate is its best head.
  auto best_of = [m](const auto& row_scores, Eigen::Index& head) {
    head = 0;
    Real best = row_scores(0);
    for (Eigen::Index j = 1; j < m; ++j) {
      if (row_scores(j) > best) {
        best = row_scores(j);
        head = j;
      }
    }
    return best;
  };

  std::vector<Eigen::Index> h_pos(np), h_neg(nn);
  std::vector<Real> b(np);
  for (std::size_t i = 0; i < np; ++i) {
    const Vector s = rep * emb.row(positives[i]).transpose();
    b[i] = best_of(s, h_pos[i]);
    if (options.proposal_correction) b[i] -= q.log_prob(positives[i]);
  }

  // loss_i = log(1 + sum_j exp(a_j - b_i)) with a_j, b_i the (corrected)
  // scores of negative j and positive i. Factoring out exp(a_j - max a)
  // makes each positive O(1) once the negatives are summed.
  const Matrix neg_scores = neg.emb * rep.transpose();  // nn x m
  const Real log_q = q.log_prob(0);  // uniform
  std::vector<Real> a(nn, 0.0), e(nn, 0.0);
  Real a_max = -std::numeric_limits<Real>::infinity();
  bool any = false;
  for (std::size_t j = 0; j < nn; ++j) {
    if (!neg.keep[j]) continue;
    a[j] = best_of(neg_scores.row(static_cast<Eigen::Index>(j)), h_neg[j]);
    if (options.proposal_correction) a[j] -= log_q;
    a_max = std::max(a_max, a[j]);
    any = true;
  }
  Real e_sum = 0;
  for (std::size_t j = 0; j < nn; ++j) {
    if (!neg.keep[j]) continue;
    e[j] = std::exp(a[j] - a_max);
    e_sum += e[j];
  }
  if (!any) return 0.0;

  std::vector<Real> g_pos(np, 0.0);
  Real neg_weight = 0;  // sum_i exp(a_max - b_i - top_i) / z_i
  Real loss = 0;
  for (std::size_t i = 0; i < np; ++i) {
    const Real top = std::max(0.0, a_max - b[i]);
    const Real anchor = std::exp(-top);
    const Real scale = std::exp(a_max - b[i] - top);
    const Real z = anchor + e_sum * scale;
    const Real li = top + std::log(z);
    if (!std::isfinite(li)) {
      throw NumericError("non-finite sampled softmax loss (positive score " +
                         std::to_string(b[i]) + ")");
    }
    loss += li;
    g_pos[i] = -(z - anchor) / z;
    neg_weight += scale / z;
  }

  if (grads != nullptr) {
    Matrix d_rep = Matrix::Zero(m, rep.cols());
    Matrix& d_emb = grads->embeddings();
    for (std::size_t i = 0; i < np; ++i) {
      d_rep.row(h_pos[i]) += g_pos[i] * emb.row(positives[i]);
      d_emb.row(positives[i]) += g_pos[i] * rep.row(h_pos[i]);
    }
    if (m == 1) {
      Vector g_neg(static_cast<Eigen::Index>(nn));
      for (std::size_t j = 0; j < nn; ++j) {
        g_neg(static_cast<Eigen::Index>(j)) = e[j] * neg_weight;
      }
      d_rep.row(0).noalias() += g_neg.transpose() * neg.emb;
      neg.grad->noalias() += g_neg * rep.row(0);
    } else {
      for (std::size_t j = 0; j < nn; ++j) {
        if (e[j] == 0) continue;
        const auto r = static_cast<Eigen::Index>(j);
        const Real g = e[j] * neg_weight;
        d_rep.row(h_neg[j]) += g * neg.emb.row(r);
        neg.grad->row(r) += g * rep.row(h_neg[j]);
      }
    }
    tape.backward(d_rep, *grads);
  }
  return loss;
}

}  // namespace

Real sampled_softmax_loss(const SequenceModel& model,
                          std::span<const ItemIndex> history,
                          std::span<const ItemIndex> positives,
                          std::span<const ItemIndex> negatives,
                          SequenceModel* grads, const LossOptions& options) {
  for (ItemIndex v : negatives) {
    if (v >= model.num_items()) {
      throw Error("item " + std::to_string(v) + " out of range");
    }
  }
  const Matrix neg_emb = model.embeddings()(negatives, Eigen::all);
  Matrix neg_grad = Matrix::Zero(neg_emb.rows(), neg_emb.cols());
  const std::vector<char> keep(negatives.size(), 1);
  const Real loss =
      block_loss(model, history, positives,
                 {neg_emb, negatives, keep, &neg_grad}, grads, options);
  if (grads != nullptr) {
    for (std::size_t j = 0; j < negatives.size(); ++j) {
      grads->embeddings().row(negatives[j]) +=
          neg_grad.row(static_cast<Eigen::Index>(j));
    }
  }
  return loss;
}

void AdamState::step(SequenceModel& params, const SequenceModel& grads,
                     Real lr) {
  if (!(params.shape() == m_.shape()) || !(grads.shape() == m_.shape())) {
    throw DimensionError("Adam: parameter, gradient and state shapes differ");
  }
  ++step_;
  const Real b1 = options_.beta1;
  const Real b2 = options_.beta2;
  const Real c1 = 1.0 - std::pow(b1, static_cast<Real>(step_));
  const Real c2 = 1.0 - std::pow(b2, static_cast<Real>(step_));
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = m_.tensors();
  auto v = v_.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i].cwiseAbs2();
    p[i].array() -= lr * (m[i].array() / c1) /
                    ((v[i].array() / c2).sqrt() + options_.epsilon);
  }
}

void validate(const TrainConfig& c) {
  if (c.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (c.negatives_per_instance == 0) {
    throw ConfigError("negatives_per_instance must be positive");
  }
  if (c.eval_interval == 0) throw ConfigError("eval_interval must be positive");
  if (c.patience == 0) throw ConfigError("patience must be positive");
  if (!(c.learning_rate > 0)) {
    throw ConfigError("learning_rate must be positive");
  }
}

void write_training_log(std::ostream& out, std::span<const LogRecord> log) {
  for (const auto& r : log) {
    nlohmann::ordered_json j;
    j["iter"] = r.iter;
    j["loss_avg"] = r.loss_avg;
    j["recall50_val"] = r.recall50_val;
    j["best"] = r.best;
    out << j.dump() << '\n';
  }
}

FitResult fit(const SequenceModel& init,
              std::span<const TrainingInstance> instances,
              std::span<const ItemSet> positives, const TrainConfig& config,
              const EvalHook& hook) {
  validate(config);
  if (instances.size() != positives.size()) {
    throw Error("every training instance needs a positive set");
  }
  if (instances.empty()) throw Error("no training instances");

  FitResult result{init, {}, 0};
  SequenceModel params = init;
  SequenceModel grads = init.zeros_like();
  AdamState adam(params);
  Rng order_rng(derive_seed(config.seed, "batch-order"));
  Rng negative_rng(derive_seed(config.seed, "negatives"));
  const UniformProposal q{params.num_items()};

  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  order_rng.shuffle(std::span<std::size_t>(order));
  std::size_t cursor = 0;

  Real best_metric = hook(params);
  result.log.push_back({0, 0.0, best_metric, true});
  std::size_t stale = 0;
  Real loss_sum = 0;
  std::size_t loss_count = 0;

  const std::size_t pool_size =
      config.negative_pool == NegativePool::kPerInstance
          ? config.batch_size * config.negatives_per_instance
          : config.negatives_per_instance;
  Matrix pool_emb, pool_grad;
  std::vector<char> keep;

  for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
    const std::size_t batch = std::min(config.batch_size, instances.size());
    const std::vector<ItemIndex> pool =
        sample_negatives(negative_rng, q, pool_size, {});
    pool_emb = params.embeddings()(pool, Eigen::all);
    pool_grad.setZero(pool_emb.rows(), pool_emb.cols());
    grads.set_zero();
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        order_rng.shuffle(std::span<std::size_t>(order));
        cursor = 0;
      }
      const std::size_t idx = order[cursor++];
      const ItemSet& pos = positives[idx];
      keep.resize(pool.size());
      for (std::size_t j = 0; j < pool.size(); ++j) {
        keep[j] = !contains(pos, pool[j]);
      }
      loss_sum += block_loss(params, instances[idx].history, pos,
                             {pool_emb, pool, keep, &pool_grad}, &grads,
                             config.loss);
      ++loss_count;
    }
    for (std::size_t j = 0; j < pool.size(); ++j) {
      grads.embeddings().row(pool[j]) +=
          pool_grad.row(static_cast<Eigen::Index>(j));
    }
    for (Matrix& g : grads.tensors()) g /= static_cast<Real>(batch);
    adam.step(params, grads, config.learning_rate);
    result.iterations = iter;

    if (iter % config.eval_interval == 0 || iter == config.max_iterations) {
      const Real metric = hook(params);
      const bool improved = metric > best_metric;
      result.log.push_back(
          {iter, loss_count ? loss_sum / static_cast<Real>(loss_count) : 0.0,
           metric, improved});
      loss_sum = 0;
      loss_count = 0;
      if (improved) {
        best_metric = metric;
        result.model = params;
        stale = 0;
      } else if (++stale >= config.patience) {
        break;
      }
    }
  }
  return result;
}

}  // namespace wslrec
