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

#include <doctest.h>

#include <cmath>

#include "sacd/net.hpp"
#include "sacd/rng.hpp"
#include "support/oracles.hpp"

using sacd::Matrix;
using sacd::NetworkParams;

namespace {

std::vector<double> random_vector(std::size_t n, sacd::Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

Matrix random_matrix(std::size_t r, std::size_t c, sacd::Rng& rng) {
  Matrix m(r, c);
  for (double& x : m.values()) x = rng.uniform(-1.0, 1.0);
  return m;
}

NetworkParams identity_layer(std::size_t n) {
  NetworkParams net;
  sacd::DenseLayer layer;
  layer.weight = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) layer.weight(i, i) = 1.0;
  layer.bias.assign(n, 0.0);
  net.layers.push_back(layer);
  return net;
}

// sum over rows of output . g
double contracted_output(const NetworkParams& net, const Matrix& x, const Matrix& g) {
  const auto out = sacd::forward(net, x).output();
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out.values()[i] * g.values()[i];
  return s;
}

}  // namespace

TEST_SUITE("net-core") {
  TEST_CASE("init zeroes biases and is deterministic") {
    const auto net = sacd::init_network({2, 1}, 123);
    CHECK(net.layers[0].bias == std::vector<double>{0.0});
    CHECK(sacd::init_network({3, 8, 2}, 5) == sacd::init_network({3, 8, 2}, 5));
    CHECK_FALSE(sacd::init_network({3, 8, 2}, 5) == sacd::init_network({3, 8, 2}, 6));
  }

  TEST_CASE("init weight spread follows fan-in") {
    const auto net = sacd::init_network({3, 256, 256, 2}, 7);
    for (const auto& layer : net.layers) {
      double mean = 0.0, sq = 0.0;
      for (double w : layer.weight.values()) mean += w;
      mean /= static_cast<double>(layer.weight.size());
      for (double w : layer.weight.values()) sq += (w - mean) * (w - mean);
      const double std = std::sqrt(sq / static_cast<double>(layer.weight.size()));
      const double scale = 1.0 / std::sqrt(static_cast<double>(layer.in_dim()));
      CHECK(std < 3.0 * scale);
      CHECK(std > scale / 3.0);
      for (double w : layer.weight.values()) CHECK(std::abs(w) <= scale);
    }
    CHECK(net.layers[0].activation == sacd::Activation::kRelu);
    CHECK(net.layers[2].activation == sacd::Activation::kIdentity);
  }

  TEST_CASE("init rejects bad dims") {
    CHECK_THROWS_AS(sacd::init_network({3}, 0), std::invalid_argument);
    CHECK_THROWS_AS(sacd::init_network({3, 0, 2}, 0), std::invalid_argument);
    CHECK_THROWS_AS(sacd::init_network(std::vector<std::size_t>{}, 0), std::invalid_argument);
  }

  TEST_CASE("forward closed cases") {
    auto net = sacd::init_network({4, 6, 3}, 1);
    for (auto& l : net.layers) l.weight.fill(0.0);
    CHECK(sacd::forward(net, std::vector<double>{1, -2, 3, 4}) == std::vector<double>(3, 0.0));
    const std::vector<double> x{0.5, -1.5, 2.25};
    CHECK(sacd::forward(identity_layer(3), x) == x);
    CHECK_THROWS_AS(sacd::forward(net, std::vector<double>{1, 2}), std::invalid_argument);
  }

  TEST_CASE("forward matches an independent matrix-vector chain and is pure") {
    sacd::Rng rng(42);
    for (int seed = 0; seed < 10; ++seed) {
      const auto net = sacd::init_network({5, 32, 17, 3}, static_cast<std::uint64_t>(seed));
      const auto x = random_vector(5, rng);
      const auto got = sacd::forward(net, x);
      const auto want = oracles::naive_forward(net, x);
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
      CHECK(sacd::forward(net, x) == got);
    }
  }

  TEST_CASE("backward: zero output gradient gives zero gradients") {
    sacd::Rng rng(1);
    const auto net = sacd::init_network({3, 8, 2}, 2);
    const auto x = random_matrix(4, 3, rng);
    const auto g = sacd::backward(net, sacd::forward(net, x), Matrix(4, 2));
    for (double v : g.flatten()) CHECK(v == 0.0);
    for (double v : g.input.values()) CHECK(v == 0.0);
  }

  TEST_CASE("backward: linear layer weight gradient is an outer product") {
    sacd::Rng rng(2);
    auto net = sacd::init_network({3, 2}, 9);
    const Matrix x(1, 3, std::vector<double>{0.5, -1.0, 2.0});
    const Matrix go(1, 2, std::vector<double>{3.0, -0.25});
    const auto g = sacd::backward(net, sacd::forward(net, x), go);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(g.layers[0].weight(i, j) == go(0, i) * x(0, j));
    CHECK(g.layers[0].bias == std::vector<double>{3.0, -0.25});
  }

  TEST_CASE("backward matches central finite differences over 20 seeds") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      sacd::Rng rng(seed + 100);
      auto net = sacd::init_network({4, 16, 16, 3}, seed);
      const auto x = random_matrix(5, 4, rng);
      const auto go = random_matrix(5, 3, rng);
      const auto g = sacd::backward(net, sacd::forward(net, x), go);
      const auto fd = oracles::fd_network_gradient(net, [&] { return contracted_output(net, x, go); });
      CHECK(oracles::relative_error(g.flatten(), fd) < 1e-4);

      Matrix xm = x;
      std::vector<double> fd_in;
      for (double& v : xm.values()) {
        fd_in.push_back(oracles::central_difference([&] { return contracted_output(net, xm, go); }, v, 1e-5));
      }
      CHECK(oracles::relative_error(g.input.values(), fd_in) < 1e-4);
    }
  }

  TEST_CASE("backward modes agree with the full pass") {
    sacd::Rng rng(4);
    const auto net = sacd::init_network({3, 8, 2}, 4);
    const auto x = random_matrix(6, 3, rng);
    const auto go = random_matrix(6, 2, rng);
    const auto cache = sacd::forward(net, x);
    const auto full = sacd::backward(net, cache, go);
    CHECK(sacd::backward(net, cache, go, sacd::BackwardMode::kInputOnly).input == full.input);
    CHECK(sacd::backward(net, cache, go, sacd::BackwardMode::kParametersOnly).flatten() == full.flatten());
  }

  TEST_CASE("adam: zero gradient leaves parameters unchanged and decays moments") {
    auto net = sacd::init_network({2, 4, 1}, 3);
    const auto before = net;
    auto state = sacd::make_adam(net);
    for (int i = 0; i < 3; ++i) sacd::adam_step(net, state, sacd::GradientBundle::zeros_like(net));
    CHECK(net == before);
    CHECK(state.step == 3);

    std::vector<double> p{1.0};
    auto warm = sacd::make_adam(1);
    warm.first_moment = {0.5};
    warm.second_moment = {0.25};
    sacd::adam_update(p, std::vector<double>{0.0}, warm);
    CHECK(warm.first_moment[0] == doctest::Approx(0.45));
    CHECK(warm.second_moment[0] == doctest::Approx(0.25 * 0.999));
  }

  TEST_CASE("adam: first step moves each parameter by about -lr * sign(g)") {
    std::vector<double> p{1.0, -2.0, 0.5};
    const std::vector<double> g{0.3, -4.0, 1e-3};
    auto state = sacd::make_adam(3, {.learning_rate = 0.01});
    sacd::adam_update(p, g, state);
    CHECK(p[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-6));
    CHECK(p[2] == doctest::Approx(0.5 - 0.01).epsilon(1e-4));
  }

  TEST_CASE("adam minimises w^2 from w = 1") {
    std::vector<double> w{1.0};
    auto state = sacd::make_adam(1, {.learning_rate = 0.1});
    for (int i = 0; i < 100; ++i) {
      const std::vector<double> g{2.0 * w[0]};
      sacd::adam_update(w, g, state);
    }
    CHECK(std::abs(w[0]) < 0.05);
  }

  TEST_CASE("adam rejects bad gradients without touching state") {
    std::vector<double> p{1.0, 2.0};
    auto state = sacd::make_adam(2);
    const auto saved = state;
    CHECK_THROWS_AS(sacd::adam_update(p, std::vector<double>{1.0, NAN}, state), std::invalid_argument);
    CHECK_THROWS_AS(sacd::adam_update(p, std::vector<double>{1.0}, state), std::invalid_argument);
    CHECK(state == saved);
    CHECK(p == std::vector<double>{1.0, 2.0});
  }

  TEST_CASE("polyak averaging") {
    auto target = sacd::init_network({2, 3}, 1);
    auto source = target;
    for (auto& l : target.layers) {
      l.weight.fill(0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    for (auto& l : source.layers) {
      l.weight.fill(1.0);
      std::fill(l.bias.begin(), l.bias.end(), 1.0);
    }
    sacd::polyak_average(target, source, 0.005);
    CHECK(target.layers[0].weight(1, 1) == doctest::Approx(0.005));
    sacd::polyak_average(target, source, 1.0);
    CHECK(target == source);
  }

  TEST_CASE("flatten and unflatten are inverse") {
    auto net = sacd::init_network({3, 5, 2}, 8);
    const auto flat = sacd::flatten(net);
    CHECK(flat.size() == net.parameter_count());
    auto other = sacd::init_network({3, 5, 2}, 9);
    sacd::unflatten(flat, other);
    CHECK(other == net);
  }

  TEST_CASE("network and adam fragments round-trip") {
    const auto net = sacd::init_network({3, 5, 2}, 8);
    auto adam = sacd::make_adam(net);
    adam.step = 7;
    adam.first_moment[2] = 0.125;
    sacd::ByteWriter w;
    sacd::write_network(w, net);
    sacd::write_adam(w, adam);
    const auto bytes = w.take();
    sacd::ByteReader r(bytes);
    CHECK(sacd::read_network(r) == net);
    CHECK(sacd::read_adam(r) == adam);
    CHECK(r.at_end());
  }
}
