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

// Planted-cluster synthetic interaction logs.

#ifndef WSLREC_SYNTH_HPP_
#define WSLREC_SYNTH_HPP_

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "wslrec/corpus.hpp"

namespace wslrec {

struct SynthConfig {
  std::size_t n_users = 1000;
  std::size_t n_items = 500;
  std::size_t n_clusters = 10;
  // Probability that a fresh item comes from the user's current cluster.
  double p_in = 0.8;
  // Probability of re-consuming one of the last 5 items.
  double repeat_prob = 0.3;
  std::size_t min_len = 10;
  std::size_t max_len = 50;
  std::uint64_t seed = 0;
};

// Throws ConfigError unless n_items is a positive multiple of n_clusters,
// 1/n_clusters < p_in < 1 (any p_in when n_clusters == 1),
// 0 <= repeat_prob < 1 and 1 <= min_len <= max_len.
void validate(const SynthConfig& config);

inline constexpr std::size_t kRepeatWindow = 5;

// Users "u<i>", items "i<j>" where item j belongs to cluster
// j / (n_items / n_clusters). Each user walks: with repeat_prob re-emit a
// uniform pick of the last 5 items, otherwise keep the current cluster with
// probability p_in or jump to a uniformly chosen other cluster, then emit a
// uniform item of that cluster. Timestamps increase by one per event.
std::vector<InteractionEvent> generate(const SynthConfig& config);

// TSV in the ingest format.
void write_events(std::ostream& out, const std::vector<InteractionEvent>& events);

}  // namespace wslrec

#endif  // WSLREC_SYNTH_HPP_
