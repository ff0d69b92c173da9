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

#include "sacd/critic.hpp"
#include "sacd/policy.hpp"
#include "sacd/rng.hpp"
#include "support/oracles.hpp"

using sacd::Matrix;

namespace {

const std::size_t kHidden[] = {12, 12};

void zero_weights(sacd::NetworkParams& net, double out_bias = 0.0) {
  for (auto& l : net.layers) {
    l.weight.fill(0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  net.layers.back().bias[0] = out_bias;
}

sacd::Minibatch random_batch(std::size_t n, std::size_t ds, std::size_t da, sacd::Rng& rng) {
  sacd::Minibatch b;
  b.obs = Matrix(n, ds);
  b.next_obs = Matrix(n, ds);
  b.action = Matrix(n, da);
  for (double& x : b.obs.values()) x = rng.uniform(-1, 1);
  for (double& x : b.next_obs.values()) x = rng.uniform(-1, 1);
  for (double& x : b.action.values()) x = rng.uniform(-1, 1);
  for (std::size_t i = 0; i < n; ++i) {
    b.reward.push_back(rng.uniform(-1, 1));
    b.done.push_back(rng.index(4) == 0);
  }
  return b;
}

Matrix normal_matrix(std::size_t r, std::size_t c, sacd::Rng& rng) {
  Matrix m(r, c);
  for (double& x : m.values()) x = rng.normal();
  return m;
}

// Critics that differ from each other and from their targets.
sacd::CriticPair distinct_critics(std::size_t ds, std::size_t da, std::uint64_t seed) {
  auto c = sacd::make_critics(ds, da, kHidden, seed);
  c.target1 = sacd::init_network({ds + da, 12, 12, 1}, seed + 1000);
  c.target2 = sacd::init_network({ds + da, 12, 12, 1}, seed + 2000);
  return c;
}

}  // namespace

TEST_SUITE("critic") {
  TEST_CASE("q value of a zero critic is zero and matches forward on the concatenation") {
    auto c = sacd::make_critics(3, 2, kHidden, 1);
    const std::vector<double> s{0.1, 0.2, 0.3}, a{-0.5, 0.5};
    const std::vector<double> sa{0.1, 0.2, 0.3, -0.5, 0.5};
    CHECK(sacd::q_value(c.q1, s, a) == doctest::Approx(oracles::naive_forward(c.q1, sa)[0]).epsilon(1e-12));
    zero_weights(c.q1);
    CHECK(sacd::q_value(c.q1, s, a) == 0.0);
  }

  TEST_CASE("one-hot critic reproduces a Q table") {
    const std::size_t S = 3, A = 2;
    const double table[S][A] = {{1.5, -2.0}, {0.25, 4.0}, {-1.0, 0.0}};
    sacd::NetworkParams net;
    sacd::DenseLayer h{Matrix(S * A, S + A), std::vector<double>(S * A, -1.0), sacd::Activation::kRelu};
    sacd::DenseLayer o{Matrix(1, S * A), {0.0}, sacd::Activation::kIdentity};
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        h.weight(s * A + a, s) = 1.0;
        h.weight(s * A + a, S + a) = 1.0;
        o.weight(0, s * A + a) = table[s][a];
      }
    net.layers = {h, o};
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        std::vector<double> sv(S, 0.0), av(A, 0.0);
        sv[s] = 1.0;
        av[a] = 1.0;
        CHECK(sacd::q_value(net, sv, av) == table[s][a]);
      }
  }

  TEST_CASE("soft state value closed cases") {
    auto c = distinct_critics(2, 1, 3);
    const std::size_t hidden[] = {8};
    const auto pol = sacd::make_policy(2, 1, hidden, 3);
    const std::vector<double> s{0.3, -0.4}, e{0.7};
    const auto d = sacd::policy_distribution(pol, s);
    const auto smp = sacd::sample_action(d.mean, d.std, e);
    const double q1 = sacd::q_value(c.target1, s, smp.action);
    const double q2 = sacd::q_value(c.target2, s, smp.action);
    CHECK(sacd::soft_state_value(c, pol, 0.0, s, e) == std::min(q1, q2));
    CHECK(sacd::soft_state_value(c, pol, 0.5, s, e) == doctest::Approx(std::min(q1, q2) - 0.5 * smp.log_prob));
    c.target2 = c.target1;
    CHECK(sacd::soft_state_value(c, pol, 0.0, s, e) == q1);
  }

  TEST_CASE("soft state value expectation matches quadrature on a 1-D toy") {
    const auto c = distinct_critics(1, 1, 5);
    const std::size_t hidden[] = {8};
    const auto pol = sacd::make_policy(1, 1, hidden, 5);
    const std::vector<double> s{0.2};
    const double alpha = 0.3;
    const auto d = sacd::policy_distribution(pol, s);
    sacd::Rng rng(2);
    double mc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const std::vector<double> e{rng.normal()};
      mc += sacd::soft_state_value(c, pol, alpha, s, e);
    }
    mc /= n;
    auto integrand = [&](double u) {
      const double mu = d.mean[0], sd = d.std[0];
      const double z = (u - mu) / sd;
      const double pdf_u = std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
      const std::vector<double> uv{u}, a{std::tanh(u)};
      const double logp = static_cast<double>(oracles::squashed_log_density(d.mean, d.std, uv));
      const double q = std::min(oracles::naive_forward(c.target1, {s[0], a[0]})[0],
                                oracles::naive_forward(c.target2, {s[0], a[0]})[0]);
      return pdf_u * (q - alpha * logp);
    };
    const double quad = oracles::simpson(integrand, d.mean[0] - 10 * d.std[0], d.mean[0] + 10 * d.std[0], 4000);
    CHECK(std::abs(mc - quad) < 1e-2);
  }

  TEST_CASE("q loss vanishes when Q equals the target, and done cuts the bootstrap") {
    auto c = sacd::make_critics(2, 1, kHidden, 2);
    zero_weights(c.q1, 0.75);
    zero_weights(c.q2, 0.75);
    const std::size_t hidden[] = {8};
    const auto pol = sacd::make_policy(2, 1, hidden, 2);
    sacd::Rng rng(1);
    auto b = random_batch(5, 2, 1, rng);
    std::fill(b.reward.begin(), b.reward.end(), 0.75);
    const auto noise = normal_matrix(5, 1, rng);
    const auto r = sacd::q_loss_and_grads(c, pol, 0.2, b, 0.0, noise);
    CHECK(r.loss1 == 0.0);
    CHECK(r.loss2 == 0.0);
    for (double g : r.grad1.flatten()) CHECK(g == 0.0);

    auto b2 = random_batch(5, 2, 1, rng);
    std::fill(b2.done.begin(), b2.done.end(), 1);
    const auto r2 = sacd::q_loss_and_grads(distinct_critics(2, 1, 9), pol, 0.2, b2, 0.99, noise);
    CHECK(r2.targets == b2.reward);
    CHECK_THROWS_AS(sacd::q_loss_and_grads(c, pol, 0.2, b, 1.0, noise), std::invalid_argument);
  }

  TEST_CASE("q loss rejects a non-finite target") {
    const auto c = sacd::make_critics(2, 1, kHidden, 2);
    const std::size_t hidden[] = {8};
    const auto pol = sacd::make_policy(2, 1, hidden, 2);
    sacd::Rng rng(3);
    auto b = random_batch(3, 2, 1, rng);
    b.reward[1] = INFINITY;
    CHECK_THROWS_AS(sacd::q_loss_and_grads(c, pol, 0.2, b, 0.9, normal_matrix(3, 1, rng)), sacd::NonFiniteError);
  }

  TEST_CASE("q loss gradients match finite differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      sacd::Rng rng(seed);
      auto c = distinct_critics(3, 2, seed);
      const std::size_t hidden[] = {8};
      const auto pol = sacd::make_policy(3, 2, hidden, seed);
      const auto b = random_batch(6, 3, 2, rng);
      const auto noise = normal_matrix(6, 2, rng);
      const auto r = sacd::q_loss_and_grads(c, pol, 0.3, b, 0.9, noise);
      const auto fd1 = oracles::fd_network_gradient(
          c.q1, [&] { return sacd::q_loss_and_grads(c, pol, 0.3, b, 0.9, noise).loss1; });
      const auto fd2 = oracles::fd_network_gradient(
          c.q2, [&] { return sacd::q_loss_and_grads(c, pol, 0.3, b, 0.9, noise).loss2; });
      CHECK(oracles::relative_error(r.grad1.flatten(), fd1) < 1e-4);
      CHECK(oracles::relative_error(r.grad2.flatten(), fd2) < 1e-4);
    }
  }

  TEST_CASE("policy loss: no signal from constant critics at alpha 0") {
    auto c = sacd::make_critics(2, 1, kHidden, 4);
    zero_weights(c.q1, 1.0);
    zero_weights(c.q2, 2.0);
    const std::size_t hidden[] = {8};
    const auto pol = sacd::make_policy(2, 1, hidden, 4);
    sacd::Rng rng(4);
    Matrix obs(5, 2);
    for (double& x : obs.values()) x = rng.uniform(-1, 1);
    const auto r = sacd::policy_loss_and_grads(c, pol, 0.0, obs, normal_matrix(5, 1, rng));
    CHECK(r.loss == doctest::Approx(-1.0));
    for (double g : r.grad.flatten()) CHECK(g == 0.0);
  }

  TEST_CASE("policy loss pushes the action toward the critic's peak") {
    // Q(s, a) = -|a| built from two rectifiers.
    sacd::NetworkParams q;
    sacd::DenseLayer h{Matrix(2, 2), {0.0, 0.0}, sacd::Activation::kRelu};
    h.weight(0, 1) = 1.0;
    h.weight(1, 1) = -1.0;
    sacd::DenseLayer o{Matrix(1, 2, std::vector<double>{-1.0, -1.0}), {0.0}, sacd::Activation::kIdentity};
    q.layers = {h, o};
    sacd::CriticPair c{q, q, q, q, 0.005};
    for (double mu : {0.6, -0.4}) {
      const std::size_t hidden[] = {4};
      auto pol = sacd::make_policy(1, 1, hidden, 1);
      zero_weights(pol.net);
      pol.net.layers.back().bias = {mu, -20.0};
      const Matrix obs(3, 1, std::vector<double>{0.1, 0.5, -0.3});
      const auto r = sacd::policy_loss_and_grads(c, pol, 0.0, obs, Matrix(3, 1));
      const double g_mu = r.grad.layers.back().bias[0];
      // Descent moves the mean toward zero.
      CHECK(g_mu * mu > 0.0);
    }
  }

  TEST_CASE("policy loss gradients match finite differences over a fixed noise batch") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      sacd::Rng rng(seed + 7);
      const auto c = distinct_critics(3, 2, seed);
      const std::size_t hidden[] = {10, 10};
      auto pol = sacd::make_policy(3, 2, hidden, seed);
      Matrix obs(6, 3);
      for (double& x : obs.values()) x = rng.uniform(-1, 1);
      const auto noise = normal_matrix(6, 2, rng);
      const auto r = sacd::policy_loss_and_grads(c, pol, 0.4, obs, noise);
      const auto fd = oracles::fd_network_gradient(
          pol.net, [&] { return sacd::policy_loss_and_grads(c, pol, 0.4, obs, noise).loss; });
      CHECK(oracles::relative_error(r.grad.flatten(), fd) < 1e-3);
    }
  }

  TEST_CASE("twin symmetry") {
    sacd::Rng rng(12);
    const auto c = distinct_critics(2, 1, 12);
    sacd::CriticPair swapped{c.q2, c.q1, c.target2, c.target1, c.tau};
    const std::size_t hidden[] = {8};
    const auto pol = sacd::make_policy(2, 1, hidden, 12);
    const auto b = random_batch(8, 2, 1, rng);
    const auto noise = normal_matrix(8, 1, rng);
    const auto a = sacd::q_loss_and_grads(c, pol, 0.2, b, 0.9, noise);
    const auto s = sacd::q_loss_and_grads(swapped, pol, 0.2, b, 0.9, noise);
    CHECK(a.loss1 == s.loss2);
    CHECK(a.loss2 == s.loss1);
    CHECK(a.targets == s.targets);
    CHECK(sacd::policy_loss_and_grads(c, pol, 0.2, b.obs, noise).loss ==
          sacd::policy_loss_and_grads(swapped, pol, 0.2, b.obs, noise).loss);
  }

  TEST_CASE("gradient flow isolation") {
    sacd::Rng rng(13);
    const auto c = distinct_critics(2, 1, 13);
    const std::size_t hidden[] = {8};
    const auto pol = sacd::make_policy(2, 1, hidden, 13);
    const auto b = random_batch(8, 2, 1, rng);
    const auto noise = normal_matrix(8, 1, rng);
    // Policy-loss gradients live on the policy only; q-loss gradients on the
    // critics only.
    const auto pr = sacd::policy_loss_and_grads(c, pol, 0.2, b.obs, noise);
    CHECK(pr.grad.flatten().size() == pol.net.parameter_count());
    const auto qr = sacd::q_loss_and_grads(c, pol, 0.2, b, 0.9, noise);
    CHECK(qr.grad1.flatten().size() == c.q1.parameter_count());
    // The q-loss gradient treats the bootstrap target as a constant: another
    // policy that yields the same targets yields the same gradient.
    auto pol2 = pol;
    pol2.net.layers[0].weight(0, 0) += 0.5;
    const auto qr2 = sacd::q_loss_and_grads(c, pol2, 0.2, b, 0.0, noise);
    const auto qr3 = sacd::q_loss_and_grads(c, pol, 0.2, b, 0.0, noise);
    CHECK(qr2.grad1.flatten() == qr3.grad1.flatten());
  }

  TEST_CASE("target updates") {
    auto c = sacd::make_critics(2, 1, kHidden, 1);
    zero_weights(c.target1);
    zero_weights(c.target2);
    for (auto* n : {&c.q1, &c.q2}) {
      for (auto& l : n->layers) {
        l.weight.fill(1.0);
        std::fill(l.bias.begin(), l.bias.end(), 1.0);
      }
    }
    sacd::target_update(c, 0.005);
    CHECK(c.target1.layers[1].weight(3, 4) == doctest::Approx(0.005));
    for (int k = 1; k < 200; ++k) sacd::target_update(c, 0.005);
    CHECK(1.0 - c.target2.layers[0].bias[2] == doctest::Approx(std::pow(0.995, 200)).epsilon(1e-10));
    sacd::target_update(c, 1.0);
    CHECK(c.target1 == c.q1);
    CHECK(c.target2 == c.q2);
  }

  TEST_CASE("bootstrap regression converges to the soft fixed point") {
    const double r = 0.5, gamma = 0.9, alpha = 0.4, mu = 0.3, log_std = -0.5;
    auto c = sacd::make_critics(1, 1, kHidden, 1);
    for (auto* n : {&c.q1, &c.q2, &c.target1, &c.target2}) zero_weights(*n);
    const std::size_t hidden[] = {4};
    auto pol = sacd::make_policy(1, 1, hidden, 1);
    zero_weights(pol.net);
    pol.net.layers.back().bias = {mu, log_std};

    // Policy entropy by quadrature.
    const std::vector<double> m{mu}, s{std::exp(log_std)};
    auto integrand = [&](double u) {
      const double z = (u - mu) / s[0];
      const double pdf = std::exp(-0.5 * z * z) / (s[0] * std::sqrt(2.0 * std::numbers::pi));
      const std::vector<double> uv{u};
      return -pdf * static_cast<double>(oracles::squashed_log_density(m, s, uv));
    };
    const double entropy = oracles::simpson(integrand, mu - 12 * s[0], mu + 12 * s[0], 4000);
    const double want = (r + gamma * alpha * entropy) / (1.0 - gamma);

    const std::size_t n = 4096;
    sacd::Minibatch b;
    b.obs = Matrix(n, 1);
    b.next_obs = Matrix(n, 1);
    b.action = Matrix(n, 1);
    b.reward.assign(n, r);
    b.done.assign(n, 0);
    sacd::Rng rng(31);
    double q = 0.0;
    for (int it = 0; it < 400; ++it) {
      const auto res = sacd::q_loss_and_grads(c, pol, alpha, b, gamma, normal_matrix(n, 1, rng));
      // Exact least-squares step for a bias-only critic.
      c.q1.layers.back().bias[0] -= 0.5 * res.grad1.layers.back().bias[0];
      c.q2.layers.back().bias[0] -= 0.5 * res.grad2.layers.back().bias[0];
      sacd::target_update(c, 1.0);
      q = c.q1.layers.back().bias[0];
    }
    CHECK(q == doctest::Approx(want).epsilon(1e-2));
  }
}
