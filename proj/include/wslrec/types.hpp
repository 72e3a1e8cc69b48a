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

#ifndef WSLREC_TYPES_HPP_
#define WSLREC_TYPES_HPP_

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace wslrec {

using ItemIndex = std::uint32_t;
using UserIndex = std::uint32_t;

using Real = double;

// Row-major so that row(v) of an embedding matrix is contiguous.
template <typename Scalar>
using MatrixX =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<Real>;
using Vector = VectorX<Real>;

// An item set is kept as a sorted, duplicate-free vector.
using ItemSet = std::vector<ItemIndex>;

inline ItemSet make_item_set(std::span<const ItemIndex> items) {
  ItemSet s(items.begin(), items.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

inline bool contains(const ItemSet& s, ItemIndex v) {
  return std::binary_search(s.begin(), s.end(), v);
}

inline ItemSet set_union(const ItemSet& a, const ItemSet& b) {
  ItemSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                 std::back_inserter(out));
  return out;
}

inline ItemSet set_intersection(const ItemSet& a, const ItemSet& b) {
  ItemSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

}  // namespace wslrec

#endif  // WSLREC_TYPES_HPP_
