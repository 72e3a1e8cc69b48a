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

#include "wslrec/synth.hpp"

#include <ostream>

#include "wslrec/error.hpp"
#include "wslrec/random.hpp"

namespace wslrec {

void validate(const SynthConfig& c) {
  if (c.n_users == 0) throw ConfigError("synth: n_users must be positive");
  if (c.n_clusters == 0 || c.n_items == 0 || c.n_items % c.n_clusters != 0) {
    throw ConfigError("synth: n_items must be a positive multiple of n_clusters");
  }
  if (c.n_clusters > 1 &&
      !(c.p_in > 1.0 / static_cast<double>(c.n_clusters) && c.p_in < 1.0)) {
    throw ConfigError("synth: p_in must lie in (1/n_clusters, 1)");
  }
  if (!(c.repeat_prob >= 0.0 && c.repeat_prob < 1.0)) {
    throw ConfigError("synth: repeat_prob must lie in [0, 1)");
  }
  if (c.min_len == 0 || c.min_len > c.max_len) {
    throw ConfigError("synth: need 1 <= min_len <= max_len");
  }
}

std::vector<InteractionEvent> generate(const SynthConfig& c) {
  validate(c);
  Rng rng(c.seed);
  const std::size_t per_cluster = c.n_items / c.n_clusters;
  std::vector<InteractionEvent> events;
  std::int64_t clock = 0;
  std::vector<std::size_t> seq;
  for (std::size_t u = 0; u < c.n_users; ++u) {
    const std::string user = "u" + std::to_string(u);
    const std::size_t len =
        c.min_len + rng.uniform_index(c.max_len - c.min_len + 1);
    std::size_t cluster = rng.uniform_index(c.n_clusters);
    seq.clear();
    for (std::size_t step = 0; step < len; ++step) {
      std::size_t item;
      if (!seq.empty() && rng.bernoulli(c.repeat_prob)) {
        const std::size_t window = std::min(kRepeatWindow, seq.size());
        item = seq[seq.size() - window + rng.uniform_index(window)];
      } else {
        if (c.n_clusters > 1 && !rng.bernoulli(c.p_in)) {
          // Uniform over the other clusters.
          const std::size_t other = rng.uniform_index(c.n_clusters - 1);
          cluster = other >= cluster ? other + 1 : other;
        }
        item = cluster * per_cluster + rng.uniform_index(per_cluster);
      }
      seq.push_back(item);
      events.push_back({user, "i" + std::to_string(item), ++clock});
    }
  }
  return events;
}

void write_events(std::ostream& out,
                  const std::vector<InteractionEvent>& events) {
  for (const auto& e : events) {
    out << e.user << '\t' << e.item << '\t' << e.timestamp << '\n';
  }
}

}  // namespace wslrec
