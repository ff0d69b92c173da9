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
#include <numbers>

#include "sacd/policy.hpp"
#include "sacd/rng.hpp"
#include "support/oracles.hpp"

using sacd::Matrix;

namespace {

sacd::PolicyHead zero_head(std::size_t obs_dim, std::size_t action_dim) {
  const std::size_t hidden[] = {8};
  auto head = sacd::make_policy(obs_dim, action_dim, hidden, 1);
  for (auto& l : head.net.layers) l.weight.fill(0.0);
  return head;
}

double squashed_mass(double mean, double std) {
  const std::vector<double> m{mean}, s{std};
  auto integrand = [&](double u) {
    const std::vector<double> uv{u};
    return std::exp(sacd::log_prob(m, s, uv)) * std::exp(static_cast<double>(oracles::log_sech_sq(u)));
  };
  return oracles::simpson(integrand, mean - 12.0 * std, mean + 12.0 * std, 4000);
}

}  // namespace

TEST_SUITE("policy") {
  TEST_CASE("zero head gives mean 0 and std 1") {
    const auto head = zero_head(3, 2);
    const auto d = sacd::policy_distribution(head, std::vector<double>{0.3, -1.0, 2.0});
    CHECK(d.mean == std::vector<double>{0.0, 0.0});
    CHECK(d.std == std::vector<double>{1.0, 1.0});
    CHECK(sacd::deterministic_action(head, std::vector<double>{1, 2, 3}) == std::vector<double>{0.0, 0.0});
  }

  TEST_CASE("log std is clamped") {
    auto head = zero_head(1, 1);
    head.net.layers.back().bias[1] = 50.0;
    CHECK(sacd::policy_distribution(head, std::vector<double>{0.0}).std[0] == std::exp(2.0));
    head.net.layers.back().bias[1] = -50.0;
    CHECK(sacd::policy_distribution(head, std::vector<double>{0.0}).std[0] == std::exp(-20.0));
  }

  TEST_CASE("distribution is the network output split in halves") {
    const std::size_t hidden[] = {16, 16};
    const auto head = sacd::make_policy(4, 3, hidden, 5);
    const std::vector<double> obs{0.1, -0.7, 1.3, 0.0};
    const auto out = oracles::naive_forward(head.net, obs);
    const auto d = sacd::policy_distribution(head, obs);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(d.mean[i] == doctest::Approx(out[i]).epsilon(1e-12));
      CHECK(d.std[i] == doctest::Approx(std::exp(std::clamp(out[3 + i], -20.0, 2.0))).epsilon(1e-12));
    }
    CHECK_THROWS_AS(sacd::policy_distribution(head, std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(sacd::policy_distribution(head, std::vector<double>{NAN, 0, 0, 0}), std::invalid_argument);
  }

  TEST_CASE("sample at zero noise") {
    const std::vector<double> m{0.4, -1.1}, s{0.5, 2.0}, e{0.0, 0.0};
    const auto a = sacd::sample_action(m, s, e);
    CHECK(a.action == std::vector<double>{std::tanh(0.4), std::tanh(-1.1)});
    const std::vector<double> m1{0.0}, s1{1.0}, e1{0.0};
    CHECK(sacd::sample_action(m1, s1, e1).log_prob == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
    CHECK(sacd::log_prob(m1, s1, e1) == doctest::Approx(-0.918938533204673).epsilon(1e-12));
  }

  TEST_CASE("deterministic action equals sampling with zero noise") {
    const std::size_t hidden[] = {8};
    const auto head = sacd::make_policy(2, 2, hidden, 3);
    const std::vector<double> obs{0.2, 0.9};
    const auto d = sacd::policy_distribution(head, obs);
    const std::vector<double> zero{0.0, 0.0};
    CHECK(sacd::deterministic_action(head, obs) == sacd::sample_action(d.mean, d.std, zero).action);
  }

  TEST_CASE("tanh correction is stable for large |u|") {
    for (double u : {20.0, -20.0, 40.0, -40.0}) {
      const double c = sacd::log1m_tanh_sq(u);
      CHECK(std::isfinite(c));
      CHECK(c == doctest::Approx(std::log(4.0) - 2.0 * std::abs(u)).epsilon(1e-12));
    }
    const std::vector<double> m{0.0}, s{1.0}, u{40.0};
    CHECK(std::isfinite(sacd::log_prob(m, s, u)));
  }

  TEST_CASE("log prob matches long double evaluation") {
    sacd::Rng rng(17);
    for (int i = 0; i < 500; ++i) {
      const std::size_t d = 1 + rng.index(4);
      std::vector<double> m(d), s(d), u(d);
      for (std::size_t j = 0; j < d; ++j) {
        m[j] = rng.uniform(-3, 3);
        s[j] = std::exp(rng.uniform(-4, 1.5));
        u[j] = rng.uniform(-30, 30);
      }
      const double want = static_cast<double>(oracles::squashed_log_density(m, s, u));
      CHECK(sacd::log_prob(m, s, u) == doctest::Approx(want).epsilon(1e-9));
    }
  }

  TEST_CASE("squash is monotone") {
    const std::vector<double> m{0.0}, s{1.0};
    double prev = -2.0;
    for (double e = -8.0; e <= 8.0; e += 0.01) {
      const std::vector<double> ev{e};
      const double a = sacd::sample_action(m, s, ev).action[0];
      CHECK(a > prev);
      CHECK(std::abs(a) <= 1.0);
      prev = a;
    }
  }

  TEST_CASE("density normalises over the squashed interval") {
    sacd::Rng rng(23);
    for (int i = 0; i < 20; ++i) {
      const double mass = squashed_mass(rng.uniform(-2, 2), std::exp(rng.uniform(-2, 1)));
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
    }
  }

  TEST_CASE("entropy estimate agrees with quadrature") {
    const std::vector<double> m{0.0}, s{1.0};
    auto integrand = [&](double u) {
      const double z = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
      const std::vector<double> uv{u};
      return -z * sacd::log_prob(m, s, uv);
    };
    const double truth = oracles::simpson(integrand, -12.0, 12.0, 4000);
    sacd::Rng rng(8);
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const std::vector<double> e{rng.normal()};
      acc -= sacd::sample_action(m, s, e).log_prob;
    }
    CHECK(std::abs(acc / n - truth) < 0.02);
  }

  TEST_CASE("batched sampling matches the per-sample path") {
    const std::size_t hidden[] = {16};
    const auto head = sacd::make_policy(3, 2, hidden, 4);
    sacd::Rng rng(6);
    Matrix obs(7, 3), noise(7, 2);
    for (double& x : obs.values()) x = rng.uniform(-1, 1);
    for (double& x : noise.values()) x = rng.normal();
    const auto pb = sacd::sample_batch(head, obs, noise);
    for (std::size_t b = 0; b < 7; ++b) {
      const auto d = sacd::policy_distribution(head, obs.row(b));
      const auto s = sacd::sample_action(d.mean, d.std, noise.row(b));
      CHECK(pb.log_prob[b] == doctest::Approx(s.log_prob).epsilon(1e-12));
      for (std::size_t i = 0; i < 2; ++i) CHECK(pb.action(b, i) == doctest::Approx(s.action[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("reparameterised gradient matches finite differences over a fixed noise batch") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const std::size_t hidden[] = {12, 12};
      auto head = sacd::make_policy(3, 2, hidden, seed);
      sacd::Rng rng(seed + 50);
      Matrix obs(6, 3), noise(6, 2), da(6, 2);
      std::vector<double> dlogp(6);
      for (double& x : obs.values()) x = rng.uniform(-1, 1);
      for (double& x : noise.values()) x = rng.normal();
      for (double& x : da.values()) x = rng.uniform(-1, 1);
      for (double& x : dlogp) x = rng.uniform(-1, 1);
      auto objective = [&] {
        const auto pb = sacd::sample_batch(head, obs, noise);
        double s = 0.0;
        for (std::size_t b = 0; b < 6; ++b) {
          s += dlogp[b] * pb.log_prob[b];
          for (std::size_t i = 0; i < 2; ++i) s += da(b, i) * pb.action(b, i);
        }
        return s;
      };
      const auto pb = sacd::sample_batch(head, obs, noise);
      const auto g = sacd::policy_backward(head, pb, dlogp, da).flatten();
      const auto fd = oracles::fd_network_gradient(head.net, objective);
      CHECK(oracles::relative_error(g, fd) < 1e-3);
    }
  }
}
