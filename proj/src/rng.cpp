// Copyright 2026 The sacdesk Authors.
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

#include "sacd/rng.hpp"

#include <sstream>
#include <stdexcept>

namespace sacd {

double Rng::normal() {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index: empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

std::vector<std::uint64_t> Rng::state() const {
  std::stringstream ss;
  ss << engine_;
  std::vector<std::uint64_t> words;
  std::uint64_t w = 0;
  while (ss >> w) words.push_back(w);
  return words;
}

void Rng::set_state(const std::vector<std::uint64_t>& words) {
  if (words.size() != std::mt19937_64::state_size + 1) {
    throw std::invalid_argument("Rng::set_state: expected " +
                                std::to_string(std::mt19937_64::state_size + 1) + " words, got " +
                                std::to_string(words.size()));
  }
  std::stringstream ss;
  for (std::uint64_t w : words) ss << w << ' ';
  ss >> engine_;
  if (ss.fail()) throw std::invalid_argument("Rng::set_state: unparsable state");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace sacd
