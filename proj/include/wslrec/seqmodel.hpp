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

// Trainable sequence scorer: item embeddings, a history encoder producing
// one or more user vectors, and max-over-vectors inner product scoring.

#ifndef WSLREC_SEQMODEL_HPP_
#define WSLREC_SEQMODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "wslrec/types.hpp"

namespace wslrec {

enum class EncoderKind : std::uint8_t {
  kMeanPool = 0,
  kGru = 1,
  kMultiHead = 2,
};

std::string_view encoder_name(EncoderKind kind);
// Accepts "meanpool", "gru" and "multihead".
EncoderKind parse_encoder(std::string_view name);

struct ModelShape {
  std::size_t num_items = 0;
  std::size_t dim = 0;
  EncoderKind encoder = EncoderKind::kMeanPool;
  // Number of user vectors; forced to 1 for MeanPool and GRU.
  std::size_t heads = 1;

  bool operator==(const ModelShape&) const = default;
};

// Parameters are a fixed, ordered list of dense tensors:
//   0: item embeddings, num_items x dim
//   GRU: W_z U_z b_z W_r U_r b_r W_h U_h b_h (dim x dim, biases dim x 1)
//   MultiHead: queries, heads x dim
// The same type doubles as a gradient or optimizer-moment container.
class SequenceModel {
 public:
  explicit SequenceModel(const ModelShape& shape);

  // Embeddings and weights ~ U(-1/sqrt(d), 1/sqrt(d)); GRU biases zero.
  static SequenceModel random(const ModelShape& shape, std::uint64_t seed);

  SequenceModel zeros_like() const { return SequenceModel(shape_); }
  void set_zero();

  const ModelShape& shape() const { return shape_; }
  std::size_t num_items() const { return shape_.num_items; }
  std::size_t dim() const { return shape_.dim; }
  std::size_t heads() const { return shape_.heads; }

  Matrix& embeddings() { return tensors_[0]; }
  const Matrix& embeddings() const { return tensors_[0]; }

  std::span<Matrix> tensors() { return tensors_; }
  std::span<const Matrix> tensors() const { return tensors_; }
  static std::vector<std::string_view> tensor_names(EncoderKind kind);

  // Offsets into tensors() for the GRU gates.
  enum GruTensor : std::size_t {
    kWz = 1, kUz, kBz, kWr, kUr, kBr, kWh, kUh, kBh
  };
  static constexpr std::size_t kQueries = 1;

  bool operator==(const SequenceModel& other) const;

 private:
  ModelShape shape_;
  std::vector<Matrix> tensors_;
};

// m x d matrix, one user vector per row.
using UserRepresentation = Matrix;

// Throws on an empty history or an out-of-range item.
UserRepresentation encode(const SequenceModel& model,
                          std::span<const ItemIndex> history);

// Forward pass that keeps what the backward pass needs.
class EncoderTape {
 public:
  EncoderTape(const SequenceModel& model, std::span<const ItemIndex> history);

  const UserRepresentation& output() const { return output_; }

  // Adds d(loss)/d(params) into `grads` given d(loss)/d(output).
  void backward(const Matrix& d_output, SequenceModel& grads) const;

 private:
  const SequenceModel& model_;
  std::vector<ItemIndex> history_;
  Matrix inputs_;     // L x d embedded history
  Matrix attention_;  // MultiHead: m x L
  // GRU per-step states, one row per step.
  Matrix h_prev_, z_, r_, cand_;
  UserRepresentation output_;
};

// max_j dot(E_item, h_j).
Real score(const SequenceModel& model, const UserRepresentation& rep,
           ItemIndex item);

// Index of the user vector attaining score(); the smallest on ties.
std::size_t best_head(const SequenceModel& model,
                      const UserRepresentation& rep, ItemIndex item);

// Scores of every item.
Vector score_all(const SequenceModel& model, const UserRepresentation& rep);

// Exact top-k by full scan, descending, ties by ascending item index.
// Returns fewer than k items when the exclusion leaves fewer.
std::vector<ItemIndex> topk_items(const SequenceModel& model,
                                  std::span<const ItemIndex> history,
                                  std::size_t k, const ItemSet& exclude = {});

// Full softmax over all items. Dense; meant for small vocabularies.
Vector softmax_all(const SequenceModel& model,
                   std::span<const ItemIndex> history);

// Binary checkpoint: "WSLREC1\0", u32 version, u64 |V|, u32 d, u8 encoder,
// u32 m, then every tensor in tensors() order as row-major little-endian
// f64.
void save_checkpoint(const std::filesystem::path& path,
                     const SequenceModel& model);
SequenceModel load_checkpoint(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Throws DimensionError unless the model covers exactly num_items items.
void bind_to_corpus(const SequenceModel& model, std::size_t num_items);

}  // namespace wslrec

#endif  // WSLREC_SEQMODEL_HPP_
