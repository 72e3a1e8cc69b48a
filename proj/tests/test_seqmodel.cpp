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
#include <fstream>

#include "doctest.h"
#include "test_util.hpp"
#include "wslrec/error.hpp"
#include "wslrec/math.hpp"
#include "wslrec/seqmodel.hpp"

using namespace wslrec;

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar loops over the gate equations, h0 = 0.
std::vector<double> gru_oracle(const SequenceModel& m,
                               const std::vector<ItemIndex>& hist) {
  using T = SequenceModel;
  const auto p = m.tensors();
  const std::size_t d = m.dim();
  std::vector<double> h(d, 0.0);
  for (ItemIndex v : hist) {
    std::vector<double> x(d), z(d), r(d), c(d), hn(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = p[0](v, i);
    for (std::size_t i = 0; i < d; ++i) {
      double az = p[T::kBz](i, 0), ar = p[T::kBr](i, 0);
      for (std::size_t j = 0; j < d; ++j) {
        az += p[T::kWz](i, j) * x[j] + p[T::kUz](i, j) * h[j];
        ar += p[T::kWr](i, j) * x[j] + p[T::kUr](i, j) * h[j];
      }
      z[i] = sigm(az);
      r[i] = sigm(ar);
    }
    for (std::size_t i = 0; i < d; ++i) {
      double ac = p[T::kBh](i, 0);
      for (std::size_t j = 0; j < d; ++j) {
        ac += p[T::kWh](i, j) * x[j] + p[T::kUh](i, j) * r[j] * h[j];
      }
      c[i] = std::tanh(ac);
    }
    for (std::size_t i = 0; i < d; ++i) hn[i] = (1 - z[i]) * h[i] + z[i] * c[i];
    h = hn;
  }
  return h;
}

std::vector<ItemIndex> argsort_oracle(const Vector& scores, const ItemSet& exclude) {
  std::vector<ItemIndex> idx;
  for (Eigen::Index v = 0; v < scores.size(); ++v) {
    if (!contains(exclude, static_cast<ItemIndex>(v))) {
      idx.push_back(static_cast<ItemIndex>(v));
    }
  }
  std::stable_sort(idx.begin(), idx.end(), [&](ItemIndex a, ItemIndex b) {
    return scores(a) > scores(b);
  });
  return idx;
}

}  // namespace

TEST_CASE("encoder names") {
  CHECK(parse_encoder("gru") == EncoderKind::kGru);
  CHECK(parse_encoder("meanpool") == EncoderKind::kMeanPool);
  CHECK(parse_encoder("multihead") == EncoderKind::kMultiHead);
  CHECK(encoder_name(EncoderKind::kGru) == "gru");
  CHECK_THROWS(parse_encoder("lstm"));
}

TEST_CASE("meanpool of one item is its embedding") {
  const auto m = SequenceModel::random({10, 4, EncoderKind::kMeanPool, 1}, 1);
  const std::vector<ItemIndex> h = {7};
  CHECK(encode(m, h) == m.embeddings().row(7));
  const std::vector<ItemIndex> h3 = {1, 2, 2};
  const Matrix rep = encode(m, h3);
  const Matrix want = (m.embeddings().row(1) + 2 * m.embeddings().row(2)) / 3;
  CHECK((rep - want).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS(encode(m, std::vector<ItemIndex>{}));
  CHECK_THROWS(encode(m, std::vector<ItemIndex>{10}));
}

TEST_CASE("multihead with a zero query is meanpool") {
  auto mh = SequenceModel::random({10, 4, EncoderKind::kMultiHead, 1}, 2);
  mh.tensors()[SequenceModel::kQueries].setZero();
  SequenceModel mp({10, 4, EncoderKind::kMeanPool, 1});
  mp.embeddings() = mh.embeddings();
  const std::vector<ItemIndex> h = {0, 3, 3, 9};
  CHECK((encode(mh, h) - encode(mp, h)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(encode(mh, h).rows() == 1);
}

TEST_CASE("multihead gives one row per head") {
  const auto m = SequenceModel::random({10, 4, EncoderKind::kMultiHead, 3}, 2);
  const std::vector<ItemIndex> h = {0, 3, 5};
  const Matrix rep = encode(m, h);
  CHECK(rep.rows() == 3);
  CHECK(rep.cols() == 4);
  // Each row is a convex combination of the history embeddings.
  for (Eigen::Index j = 0; j < 3; ++j) {
    Vector logits(3);
    for (int i = 0; i < 3; ++i) {
      logits(i) = m.tensors()[1].row(j).dot(m.embeddings().row(h[i]));
    }
    const Vector a = stable_softmax(logits);
    Vector want = Vector::Zero(4);
    for (int i = 0; i < 3; ++i) want += a(i) * m.embeddings().row(h[i]).transpose();
    CHECK((rep.row(j).transpose() - want).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("gru matches the scalar recurrence") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto m = SequenceModel::random({6, 3, EncoderKind::kGru, 1}, seed);
    Rng rng(seed + 100);
    for (Matrix& t : m.tensors()) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1, 1);
    }
    for (const auto& hist : {std::vector<ItemIndex>{2, 5},
                             std::vector<ItemIndex>{0, 1, 2, 3, 4, 5, 0}}) {
      const Matrix rep = encode(m, hist);
      const auto want = gru_oracle(m, hist);
      for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(rep(0, static_cast<Eigen::Index>(i)) - want[i]) < 1e-13);
      }
    }
  }
}

TEST_CASE("encode is deterministic") {
  for (auto kind : {EncoderKind::kMeanPool, EncoderKind::kGru, EncoderKind::kMultiHead}) {
    const auto m = SequenceModel::random({20, 5, kind, 2}, 4);
    const std::vector<ItemIndex> h = {3, 1, 4, 1, 5};
    CHECK(encode(m, h) == encode(m, h));
    CHECK(SequenceModel::random({20, 5, kind, 2}, 4) == m);
  }
}

TEST_CASE("score is the best head") {
  SequenceModel m({2, 2, EncoderKind::kMultiHead, 2});
  m.embeddings() << 1, 0, 0.6, 0.8;
  Matrix rep(1, 2);
  rep << 0.6, 0.8;
  CHECK(score(m, rep, 1) == doctest::Approx(1.0).epsilon(1e-15));

  Matrix two(2, 2);
  two << 0.3, 5, 0.9, -5;
  CHECK(score(m, two, 0) == doctest::Approx(0.9));
  CHECK(best_head(m, two, 0) == 1);

  Matrix tie(2, 2);
  tie << 1, 0, 1, 0;
  CHECK(best_head(m, tie, 0) == 0);

  const auto r = SequenceModel::random({30, 4, EncoderKind::kMultiHead, 3}, 9);
  const Matrix rr = encode(r, std::vector<ItemIndex>{1, 2, 3});
  const Vector all = score_all(r, rr);
  for (ItemIndex v = 0; v < 30; ++v) {
    double best = -1e300;
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int i = 0; i < 4; ++i) s += r.embeddings()(v, i) * rr(j, i);
      best = std::max(best, s);
    }
    CHECK(std::abs(all(v) - best) < 1e-14);
    CHECK(std::abs(score(r, rr, v) - best) < 1e-14);
  }
}

TEST_CASE("top-k examples") {
  // Every score is 1 + s_v with s = (0.1, 0.5, 0.3).
  SequenceModel m({3, 2, EncoderKind::kMeanPool, 1});
  m.embeddings() << 0.1, 1, 0.5, 1, 0.3, 1;
  const std::vector<ItemIndex> h = {0, 1, 2};
  CHECK(topk_items(m, h, 2) == std::vector<ItemIndex>{1, 2});
  CHECK(topk_items(m, h, 2, ItemSet{1}) == std::vector<ItemIndex>{2, 0});
  CHECK(topk_items(m, h, 9) == std::vector<ItemIndex>{1, 2, 0});
  CHECK_THROWS(topk_items(m, h, 0));
}

TEST_CASE("top-k equals the full argsort") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + rng.uniform_index(200);
    const auto kind = static_cast<EncoderKind>(trial % 3);
    const auto m = SequenceModel::random({n, 4, kind, 2}, trial);
    std::vector<ItemIndex> h;
    for (int i = 0; i < 6; ++i) h.push_back(static_cast<ItemIndex>(rng.uniform_index(n)));
    const Vector s = score_all(m, encode(m, h));
    const ItemSet ex = trial % 2 ? make_item_set(h) : ItemSet{};
    const auto full = argsort_oracle(s, ex);
    for (std::size_t k : {std::size_t{1}, std::size_t{10}, n}) {
      const auto got = topk_items(m, h, k, ex);
      const std::vector<ItemIndex> want(full.begin(),
                                        full.begin() + std::min(k, full.size()));
      CHECK(got == want);
    }
  }
}

TEST_CASE("top-k breaks ties by item index") {
  SequenceModel m({5, 1, EncoderKind::kMeanPool, 1});
  m.embeddings() << 1, 2, 2, 1, 2;
  const std::vector<ItemIndex> h = {0};
  CHECK(topk_items(m, h, 4) == std::vector<ItemIndex>{1, 2, 4, 0});
}

TEST_CASE("full softmax") {
  SequenceModel flat({4, 2, EncoderKind::kMeanPool, 1});
  flat.embeddings().col(0).setOnes();
  const Vector p = softmax_all(flat, std::vector<ItemIndex>{1});
  for (int v = 0; v < 4; ++v) CHECK(p(v) == doctest::Approx(0.25).epsilon(1e-15));

  Vector x(5);
  x << 0.3, -1.2, 4.0, 0.0, 2.5;
  const Vector base = stable_softmax(x);
  const Vector moved = stable_softmax(Vector(x.array() + 123.25));
  CHECK((base - moved).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("full softmax matches extended precision") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto m = SequenceModel::random({50, 4, EncoderKind::kGru, 1}, seed);
    m.embeddings() *= 40.0;  // large logits
    const std::vector<ItemIndex> h = {1, 2, 3};
    const Vector p = softmax_all(m, h);
    const Vector s = score_all(m, encode(m, h));
    long double mx = s.maxCoeff(), z = 0;
    for (int v = 0; v < 50; ++v) z += std::exp(static_cast<long double>(s(v)) - mx);
    for (int v = 0; v < 50; ++v) {
      const long double want = std::exp(static_cast<long double>(s(v)) - mx) / z;
      CHECK(std::abs(static_cast<long double>(p(v)) - want) <= 1e-15L);
    }
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("math helpers") {
  Vector x(3);
  x << 1000, 1000, 1000;
  CHECK(log_sum_exp(x) == doctest::Approx(1000 + std::log(3.0)));
  VectorX<float> xf(2);
  xf << 0.0f, 0.0f;
  CHECK(stable_softmax(xf)(0) == doctest::Approx(0.5f));
  const std::vector<ItemIndex> top = top_k_indices(Vector(x), 2, {});
  CHECK(top == std::vector<ItemIndex>{0, 1});
}

TEST_CASE("checkpoint round trip") {
  const auto dir = testing::temp_dir("ckpt");
  for (auto kind : {EncoderKind::kMeanPool, EncoderKind::kGru, EncoderKind::kMultiHead}) {
    const auto m = SequenceModel::random({13, 5, kind, 3}, 21);
    save_checkpoint(dir / "m.ckpt", m);
    const auto back = load_checkpoint(dir / "m.ckpt");
    CHECK(back == m);
    CHECK(back.shape() == m.shape());
    CHECK_NOTHROW(bind_to_corpus(back, 13));
    CHECK_THROWS_AS(bind_to_corpus(back, 12), DimensionError);
  }
}

TEST_CASE("damaged checkpoints are rejected") {
  const auto dir = testing::temp_dir("ckpt_bad");
  const auto m = SequenceModel::random({13, 5, EncoderKind::kGru, 1}, 21);
  save_checkpoint(dir / "m.ckpt", m);
  const auto size = std::filesystem::file_size(dir / "m.ckpt");
  std::filesystem::copy_file(dir / "m.ckpt", dir / "short.ckpt");
  std::filesystem::resize_file(dir / "short.ckpt", size - 9);
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt"), Error);
  std::filesystem::resize_file(dir / "short.ckpt", 10);
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt"), Error);

  {
    std::ofstream bad(dir / "magic.ckpt", std::ios::binary);
    bad << "NOTACKPT and some more bytes to read";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "magic.ckpt"), Error);

  {
    // Header claiming an enormous vocabulary.
    std::ifstream in(dir / "m.ckpt", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    for (int i = 12; i < 20; ++i) bytes[i] = '\x7f';
    std::ofstream out(dir / "huge.ckpt", std::ios::binary);
    out << bytes;
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "huge.ckpt"), Error);
  CHECK_THROWS(load_checkpoint(dir / "missing.ckpt"));
}
