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

#ifndef WSLREC_MATH_HPP_
#define WSLREC_MATH_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "wslrec/types.hpp"

namespace wslrec {

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return -std::numeric_limits<Scalar>::infinity();
  const Scalar m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

// Max-shifted softmax of a score vector.
template <typename Derived>
VectorX<typename Derived::Scalar> stable_softmax(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  VectorX<Scalar> p = (x.array() - x.maxCoeff()).exp().matrix();
  return p / p.sum();
}

template <typename Scalar>
VectorX<Scalar> sigmoid(const VectorX<Scalar>& x) {
  return (Scalar(1) + (-x.array()).exp()).inverse().matrix();
}

// Indices of the k largest scores in descending order; ties go to the
// smaller index and members of `exclude` (sorted) are skipped.
template <typename Derived>
std::vector<ItemIndex> top_k_indices(const Eigen::MatrixBase<Derived>& scores,
                                     std::size_t k,
                                     const ItemSet& exclude = {}) {
  std::vector<ItemIndex> idx;
  idx.reserve(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (!contains(exclude, static_cast<ItemIndex>(i))) {
      idx.push_back(static_cast<ItemIndex>(i));
    }
  }
  const std::size_t take = std::min(k, idx.size());
  auto better = [&](ItemIndex a, ItemIndex b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  };
  if (take < idx.size()) {
    std::nth_element(idx.begin(), idx.begin() + take, idx.end(), better);
    idx.resize(take);
  }
  std::sort(idx.begin(), idx.end(), better);
  return idx;
}

}  // namespace wslrec

#endif  // WSLREC_MATH_HPP_
