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

#include "wslrec/seqmodel.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "wslrec/error.hpp"
#include "wslrec/math.hpp"
#include "wslrec/random.hpp"

namespace wslrec {

std::string_view encoder_name(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::kMeanPool:
      return "meanpool";
    case EncoderKind::kGru:
      return "gru";
    case EncoderKind::kMultiHead:
      return "multihead";
  }
  return "unknown";
}

EncoderKind parse_encoder(std::string_view name) {
  if (name == "meanpool") return EncoderKind::kMeanPool;
  if (name == "gru") return EncoderKind::kGru;
  if (name == "multihead") return EncoderKind::kMultiHead;
  throw ConfigError("unknown encoder '" + std::string(name) + "'");
}

std::vector<std::string_view> SequenceModel::tensor_names(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::kMeanPool:
      return {"embeddings"};
    case EncoderKind::kGru:
      return {"embeddings", "W_z", "U_z", "b_z", "W_r",
              "U_r",        "b_r", "W_h", "U_h", "b_h"};
    case EncoderKind::kMultiHead:
      return {"embeddings", "queries"};
  }
  return {};
}

SequenceModel::SequenceModel(const ModelShape& shape) : shape_(shape) {
  if (shape_.num_items == 0 || shape_.dim == 0) {
    throw ConfigError("model needs at least one item and dimension");
  }
  if (shape_.encoder != EncoderKind::kMultiHead) shape_.heads = 1;
  if (shape_.heads == 0) throw ConfigError("model needs at least one head");
  const auto n = static_cast<Eigen::Index>(shape_.num_items);
  const auto d = static_cast<Eigen::Index>(shape_.dim);
  tensors_.push_back(Matrix::Zero(n, d));
  switch (shape_.encoder) {
    case EncoderKind::kMeanPool:
      break;
    case EncoderKind::kGru:
      for (int gate = 0; gate < 3; ++gate) {
        tensors_.push_back(Matrix::Zero(d, d));
        tensors_.push_back(Matrix::Zero(d, d));
        tensors_.push_back(Matrix::Zero(d, 1));
      }
      break;
    case EncoderKind::kMultiHead:
      tensors_.push_back(
          Matrix::Zero(static_cast<Eigen::Index>(shape_.heads), d));
      break;
  }
}

SequenceModel SequenceModel::random(const ModelShape& shape,
                                    std::uint64_t seed) {
  SequenceModel model(shape);
  Rng rng(seed);
  const Real bound = 1.0 / std::sqrt(static_cast<Real>(shape.dim));
  const auto names = tensor_names(model.shape().encoder);
  for (std::size_t i = 0; i < model.tensors_.size(); ++i) {
    if (names[i].starts_with("b_")) continue;
    Matrix& m = model.tensors_[i];
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      m.data()[k] = rng.uniform(-bound, bound);
    }
  }
  return model;
}

void SequenceModel::set_zero() {
  for (auto& t : tensors_) t.setZero();
}

bool SequenceModel::operator==(const SequenceModel& other) const {
  if (!(shape_ == other.shape_)) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i] != other.tensors_[i]) return false;
  }
  return true;
}

EncoderTape::EncoderTape(const SequenceModel& model,
                         std::span<const ItemIndex> history)
    : model_(model), history_(history.begin(), history.end()) {
  if (history_.empty()) throw Error("cannot encode an empty history");
  const auto len = static_cast<Eigen::Index>(history_.size());
  const auto d = static_cast<Eigen::Index>(model.dim());
  const Matrix& emb = model.embeddings();
  inputs_.resize(len, d);
  for (Eigen::Index i = 0; i < len; ++i) {
    const ItemIndex v = history_[i];
    if (v >= model.num_items()) {
      throw Error("history item " + std::to_string(v) + " out of range");
    }
    inputs_.row(i) = emb.row(v);
  }

  const auto p = model.tensors();
  switch (model.shape().encoder) {
    case EncoderKind::kMeanPool:
      output_ = inputs_.colwise().mean();
      break;
    case EncoderKind::kGru: {
      using T = SequenceModel;
      h_prev_.resize(len, d);
      z_.resize(len, d);
      r_.resize(len, d);
      cand_.resize(len, d);
      Vector h = Vector::Zero(d);
      for (Eigen::Index t = 0; t < len; ++t) {
        const Vector x = inputs_.row(t).transpose();
        const Vector z =
            sigmoid<Real>(p[T::kWz] * x + p[T::kUz] * h + p[T::kBz]);
        const Vector r =
            sigmoid<Real>(p[T::kWr] * x + p[T::kUr] * h + p[T::kBr]);
        const Vector c = (p[T::kWh] * x + p[T::kUh] * r.cwiseProduct(h) +
                          p[T::kBh])
                             .array()
                             .tanh()
                             .matrix();
        h_prev_.row(t) = h.transpose();
        z_.row(t) = z.transpose();
        r_.row(t) = r.transpose();
        cand_.row(t) = c.transpose();
        h = (Vector::Ones(d) - z).cwiseProduct(h) + z.cwiseProduct(c);
      }
      output_ = h.transpose();
      break;
    }
    case EncoderKind::kMultiHead: {
      const Matrix& queries = p[SequenceModel::kQueries];
      const Matrix logits = queries * inputs_.transpose();  // m x L
      attention_.resize(logits.rows(), logits.cols());
      for (Eigen::Index j = 0; j < logits.rows(); ++j) {
        attention_.row(j) =
            stable_softmax(Vector(logits.row(j).transpose())).transpose();
      }
      output_ = attention_ * inputs_;
      break;
    }
  }
}

void EncoderTape::backward(const Matrix& d_output,
                           SequenceModel& grads) const {
  const auto len = inputs_.rows();
  const auto d = inputs_.cols();
  Matrix d_inputs = Matrix::Zero(len, d);
  auto g = grads.tensors();
  const auto p = model_.tensors();

  switch (model_.shape().encoder) {
    case EncoderKind::kMeanPool:
      d_inputs.rowwise() = d_output.row(0) / static_cast<Real>(len);
      break;
    case EncoderKind::kGru: {
      using T = SequenceModel;
      Vector dh = d_output.row(0).transpose();
      for (Eigen::Index t = len - 1; t >= 0; --t) {
        const Vector x = inputs_.row(t).transpose();
        const Vector h = h_prev_.row(t).transpose();
        const Vector z = z_.row(t).transpose();
        const Vector r = r_.row(t).transpose();
        const Vector c = cand_.row(t).transpose();

        const Vector dc = dh.cwiseProduct(z);
        const Vector dz = dh.cwiseProduct(c - h);
        Vector dh_prev = dh.cwiseProduct(Vector::Ones(d) - z);

        const Vector da_h =
            dc.cwiseProduct((Vector::Ones(d) - c.cwiseAbs2()));
        const Vector rh = r.cwiseProduct(h);
        g[T::kWh].noalias() += da_h * x.transpose();
        g[T::kUh].noalias() += da_h * rh.transpose();
        g[T::kBh] += da_h;
        const Vector d_rh = p[T::kUh].transpose() * da_h;
        const Vector dr = d_rh.cwiseProduct(h);
        dh_prev += d_rh.cwiseProduct(r);
        Vector dx = p[T::kWh].transpose() * da_h;

        const Vector da_z =
            dz.cwiseProduct(z.cwiseProduct(Vector::Ones(d) - z));
        g[T::kWz].noalias() += da_z * x.transpose();
        g[T::kUz].noalias() += da_z * h.transpose();
        g[T::kBz] += da_z;
        dx.noalias() += p[T::kWz].transpose() * da_z;
        dh_prev.noalias() += p[T::kUz].transpose() * da_z;

        const Vector da_r =
            dr.cwiseProduct(r.cwiseProduct(Vector::Ones(d) - r));
        g[T::kWr].noalias() += da_r * x.transpose();
        g[T::kUr].noalias() += da_r * h.transpose();
        g[T::kBr] += da_r;
        dx.noalias() += p[T::kWr].transpose() * da_r;
        dh_prev.noalias() += p[T::kUr].transpose() * da_r;

        d_inputs.row(t) = dx.transpose();
        dh = dh_prev;
      }
      break;
    }
    case EncoderKind::kMultiHead: {
      const Matrix& queries = p[SequenceModel::kQueries];
      // output = A X, A = rowsoftmax(Q X^T).
      const Matrix d_att = d_output * inputs_.transpose();  // m x L
      const Vector row_dot = attention_.cwiseProduct(d_att).rowwise().sum();
      const Matrix d_logits =
          attention_.cwiseProduct(d_att.colwise() - row_dot);
      g[SequenceModel::kQueries].noalias() += d_logits * inputs_;
      d_inputs.noalias() += attention_.transpose() * d_output;
      d_inputs.noalias() += d_logits.transpose() * queries;
      break;
    }
  }

  Matrix& d_emb = g[0];
  for (Eigen::Index i = 0; i < len; ++i) {
    d_emb.row(history_[i]) += d_inputs.row(i);
  }
}

UserRepresentation encode(const SequenceModel& model,
                          std::span<const ItemIndex> history) {
  return EncoderTape(model, history).output();
}

std::size_t best_head(const SequenceModel& model,
                      const UserRepresentation& rep, ItemIndex item) {
  const auto e = model.embeddings().row(item);
  std::size_t best = 0;
  Real best_score = e.dot(rep.row(0));
  for (Eigen::Index j = 1; j < rep.rows(); ++j) {
    const Real s = e.dot(rep.row(j));
    if (s > best_score) {
      best_score = s;
      best = static_cast<std::size_t>(j);
    }
  }
  return best;
}

Real score(const SequenceModel& model, const UserRepresentation& rep,
           ItemIndex item) {
  if (item >= model.num_items()) {
    throw Error("item " + std::to_string(item) + " out of range");
  }
  const auto e = model.embeddings().row(item);
  Real best = e.dot(rep.row(0));
  for (Eigen::Index j = 1; j < rep.rows(); ++j) {
    best = std::max(best, e.dot(rep.row(j)));
  }
  return best;
}

Vector score_all(const SequenceModel& model, const UserRepresentation& rep) {
  const Matrix all = model.embeddings() * rep.transpose();  // |V| x m
  return all.rowwise().maxCoeff();
}

std::vector<ItemIndex> topk_items(const SequenceModel& model,
                                  std::span<const ItemIndex> history,
                                  std::size_t k, const ItemSet& exclude) {
  if (k == 0) throw Error("top-k needs k >= 1");
  return top_k_indices(score_all(model, encode(model, history)), k, exclude);
}

Vector softmax_all(const SequenceModel& model,
                   std::span<const ItemIndex> history) {
  return stable_softmax(score_all(model, encode(model, history)));
}

void bind_to_corpus(const SequenceModel& model, std::size_t num_items) {
  if (model.num_items() != num_items) {
    throw DimensionError("checkpoint has " +
                         std::to_string(model.num_items()) +
                         " items but the corpus has " +
                         std::to_string(num_items));
  }
}

namespace {

constexpr std::array<char, 8> kMagic = {'W', 'S', 'L', 'R', 'E', 'C', '1',
                                        '\0'};

template <typename UInt>
void put_le(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(UInt)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw Error(std::string("checkpoint truncated while reading ") + what);
  }
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    value |= static_cast<UInt>(bytes[i]) << (8 * i);
  }
  return value;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const SequenceModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, model.num_items());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.dim()));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(model.shape().encoder));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.heads()));
  for (const Matrix& t : model.tensors()) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(t.data()[i]));
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

SequenceModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::array<char, 8> magic;
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(path.string() + " is not a wslrec checkpoint (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version));
  }
  ModelShape shape;
  shape.num_items = get_le<std::uint64_t>(in, "item count");
  shape.dim = get_le<std::uint32_t>(in, "dimension");
  const auto tag = get_le<std::uint8_t>(in, "encoder tag");
  if (tag > static_cast<std::uint8_t>(EncoderKind::kMultiHead)) {
    throw Error("unknown encoder tag " + std::to_string(tag));
  }
  shape.encoder = static_cast<EncoderKind>(tag);
  shape.heads = get_le<std::uint32_t>(in, "head count");
  if (shape.num_items == 0 || shape.dim == 0 || shape.heads == 0 ||
      (shape.encoder != EncoderKind::kMultiHead && shape.heads != 1)) {
    throw DimensionError("checkpoint header has inconsistent dimensions");
  }
  // Size check before allocating, so a corrupt header cannot request
  // an absurd amount of memory.
  const auto body_start = in.tellg();
  in.seekg(0, std::ios::end);
  const auto remaining = static_cast<std::uint64_t>(in.tellg() - body_start);
  in.seekg(body_start);
  const long double d = static_cast<long double>(shape.dim);
  long double values = static_cast<long double>(shape.num_items) * d;
  if (shape.encoder == EncoderKind::kGru) values += 6 * d * d + 3 * d;
  if (shape.encoder == EncoderKind::kMultiHead) {
    values += static_cast<long double>(shape.heads) * d;
  }
  if (values * 8 != static_cast<long double>(remaining)) {
    throw Error("checkpoint body has " + std::to_string(remaining) +
                " bytes, which does not match its header");
  }
  SequenceModel model(shape);
  for (Matrix& t : model.tensors()) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      t.data()[i] = std::bit_cast<double>(get_le<std::uint64_t>(in, "tensor"));
    }
  }
  return model;
}

}  // namespace wslrec
