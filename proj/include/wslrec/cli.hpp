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

// Command-line front end. Every stage is a subcommand; artifacts travel
// through files named by explicit flags.

#ifndef WSLREC_CLI_HPP_
#define WSLREC_CLI_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>

namespace wslrec {

// Flat run configuration. A JSON config file may set any of these keys
// (unknown keys are rejected); flags given on the command line win.
struct RunConfig {
  // Paths.
  std::string input;
  std::string corpus;
  std::string out;
  std::string itemcf;    // similarity table
  std::string original;  // checkpoint for the Original weak source
  std::string ckpt;
  std::string mined;
  std::string log;

  // Preprocessing and similarity.
  std::size_t min_user = 5;
  std::size_t min_item = 5;
  std::size_t prune = 200;
  bool itemcf_include_history = false;

  // Model.
  std::string encoder = "gru";
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t max_history = 20;

  // Training.
  std::string strategy = "next1";
  std::size_t batch_size = 256;
  std::size_t negatives = 10;
  std::string negative_pool = "instance";
  double learning_rate = 0.001;
  std::size_t max_iterations = 1'000'000;
  std::size_t finetune_iterations = 0;  // 0: same as max_iterations
  std::size_t eval_interval = 1000;
  std::size_t patience = 5;
  bool proposal_correction = true;

  // Weak supervision.
  std::string weak = "br,itemcf";
  std::size_t kws = 20;
  std::size_t mine_k = 50;

  // Synthetic corpus.
  std::size_t users = 1000;
  std::size_t items = 500;
  std::size_t clusters = 10;
  double p_in = 0.8;
  double repeat = 0.3;
  std::size_t min_len = 10;
  std::size_t max_len = 50;

  // Evaluation.
  std::string k = "20,50";
  std::string split = "test";
  std::string rec;
  std::string rec_a;
  std::string rec_b;
  std::size_t step = 0;
  bool ndcg_normalized = false;

  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// Runs the CLI. Returns 0 on success, 1 on a runtime failure and 2 on a
// usage error. Results go to `out`, diagnostics and the resolved config to
// `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace wslrec

#endif  // WSLREC_CLI_HPP_
