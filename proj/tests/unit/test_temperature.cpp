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

#include "sacd/rng.hpp"
#include "sacd/temperature.hpp"
#include "support/oracles.hpp"

TEST_SUITE("temperature") {
  TEST_CASE("alpha is exp of log alpha") {
    sacd::TemperatureState s;
    CHECK(sacd::alpha(s) == 1.0);
    s.log_alpha = std::log(0.2);
    CHECK(sacd::alpha(s) == doctest::Approx(0.2).epsilon(1e-15));
    for (double b = -30.0; b <= 5.0; b += 0.5) {
      s.log_alpha = b;
      CHECK(sacd::alpha(s) > 0.0);
    }
  }

  TEST_CASE("loss and gradient arithmetic") {
    auto s = sacd::make_temperature(-1.0, 3e-4);
    const std::vector<double> lp{-2.0, -2.0};
    const auto l = sacd::temperature_loss_and_grad(s, lp);
    CHECK(l.entropy_estimate == 2.0);
    CHECK(l.grad_alpha == 3.0);
    CHECK(l.grad_log_alpha == 3.0);
    CHECK(l.loss == doctest::Approx(-1.0 * (-2.0) - 1.0 * (-1.0)));
    const std::vector<double> at_target{1.0, 1.0};
    CHECK(sacd::temperature_loss_and_grad(s, at_target).grad_log_alpha == 0.0);
    CHECK_THROWS_AS(sacd::temperature_loss_and_grad(s, std::vector<double>{}), std::invalid_argument);
  }

  TEST_CASE("gradient matches finite differences in log alpha") {
    sacd::Rng rng(3);
    for (int i = 0; i < 50; ++i) {
      auto s = sacd::make_temperature(rng.uniform(-3, 1), 3e-4, sacd::TemperatureMode::kAdam, rng.uniform(-3, 2));
      std::vector<double> lp(16);
      for (double& x : lp) x = rng.uniform(-4, 3);
      const double g = sacd::temperature_loss_and_grad(s, lp).grad_log_alpha;
      const double fd = oracles::central_difference([&] { return sacd::temperature_loss_and_grad(s, lp).loss; },
                                                    s.log_alpha, 1e-6);
      CHECK(std::abs(g - fd) <= 1e-6 * std::max(std::abs(g), 1e-3));
    }
  }

  TEST_CASE("zero gradient leaves log alpha unchanged in both modes") {
    for (auto mode : {sacd::TemperatureMode::kAdam, sacd::TemperatureMode::kPlainGradient}) {
      auto s = sacd::make_temperature(-1.0, 3e-4, mode, 0.3);
      sacd::temperature_update(s, 0.0);
      CHECK(s.log_alpha == 0.3);
    }
  }

  TEST_CASE("non-finite gradient is rejected") {
    auto s = sacd::make_temperature(-1.0, 3e-4, sacd::TemperatureMode::kPlainGradient);
    CHECK_THROWS(sacd::temperature_update(s, NAN));
    CHECK(s.log_alpha == 0.0);
  }

  TEST_CASE("sign property: plain mode on every update, Adam on the first") {
    sacd::Rng rng(5);
    auto plain = sacd::make_temperature(-1.0, 1e-2, sacd::TemperatureMode::kPlainGradient);
    for (int i = 0; i < 2000; ++i) {
      std::vector<double> lp(8);
      for (double& x : lp) x = rng.uniform(-3, 3);
      const auto l = sacd::temperature_loss_and_grad(plain, lp);
      const double before = plain.log_alpha;
      sacd::temperature_update(plain, l.grad_log_alpha);
      if (l.entropy_estimate > plain.target_entropy) CHECK(plain.log_alpha < before);
      if (l.entropy_estimate < plain.target_entropy) CHECK(plain.log_alpha > before);
    }
    for (double h : {-3.0, 3.0}) {
      auto adam = sacd::make_temperature(0.0, 3e-4);
      const std::vector<double> lp{-h};
      const auto l = sacd::temperature_loss_and_grad(adam, lp);
      sacd::temperature_update(adam, l.grad_log_alpha);
      CHECK((h > 0.0 ? adam.log_alpha < 0.0 : adam.log_alpha > 0.0));
    }
  }

  TEST_CASE("persistent excess entropy lowers log alpha on every Adam step") {
    auto s = sacd::make_temperature(-1.0, 3e-4);
    const std::vector<double> lp{0.5, 0.2};
    double prev = s.log_alpha;
    for (int i = 0; i < 100; ++i) {
      sacd::temperature_update(s, sacd::temperature_loss_and_grad(s, lp).grad_log_alpha);
      CHECK(s.log_alpha < prev);
      prev = s.log_alpha;
    }
  }

  TEST_CASE("closed loop drives entropy to the target") {
    // A toy policy whose entropy rises with alpha: H(alpha) = log(alpha) + 0.3,
    // observed through noisy log-prob samples.
    const double target = -1.0;
    auto s = sacd::make_temperature(target, 1e-2);
    sacd::Rng rng(9);
    double h = 0.0;
    for (int i = 0; i < 5000; ++i) {
      const double true_h = std::log(sacd::alpha(s)) + 0.3;
      std::vector<double> lp(64);
      for (double& x : lp) x = -true_h + 0.5 * rng.normal();
      sacd::temperature_update(s, sacd::temperature_loss_and_grad(s, lp).grad_log_alpha);
      h = std::log(sacd::alpha(s)) + 0.3;
    }
    CHECK(std::abs(h - target) < 0.05);
  }

  TEST_CASE("default target entropy") {
    CHECK(sacd::default_target_entropy(6) == -6.0);
    CHECK(sacd::default_target_entropy(17) == -17.0);
    CHECK(sacd::default_target_entropy(1) == -1.0);
  }
}
