// Copyright 2026 The MTDA Authors.
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

#include <cmath>

#include "doctest.h"
#include "gen.hpp"
#include "mtda/adversarial.hpp"

using mtda::nn::Matrix;
using mtda::nn::Vector;
using mtda::testing::Gen;

TEST_SUITE("adversarial") {
  TEST_CASE("reversal backward is -lambda times the true gradient (finite differences)") {
    Gen g(21);
    mtda::Discriminator<double> disc(2);
    disc.reset(g.rng());
    // Two-parameter probe: features = x * theta for a fixed 3x1 input.
    Matrix<double> theta(1, 2);
    theta << 0.7, -0.4;
    const Matrix<double> x = g.matrix(3, 1);
    const std::vector<int> flags{0, 1, 1};
    auto loss = [&] { return mtda::adversarial_loss<double>(disc.forward(x * theta), flags).value; };
    for (double lambda : {0.0, 0.5, 1.0, 2.0}) {
      const mtda::GradientReversal<double> grl{lambda};
      const Matrix<double> feats = x * theta;
      const auto adv = mtda::adversarial_loss<double>(disc.forward(grl.forward(feats)), flags);
      const Matrix<double> dfeats = grl.backward(disc.backward(adv.grad.col(0)));
      const Matrix<double> dtheta = x.transpose() * dfeats;
      for (Eigen::Index j = 0; j < 2; ++j) {
        const double fd = mtda::testing::central_difference(theta, 0, j, loss);
        if (lambda == 0.0) {
          CHECK(dtheta(0, j) == 0.0);
        } else {
          CHECK(mtda::testing::rel_err(dtheta(0, j), -lambda * fd) <= 1e-3);
        }
      }
    }
  }

  TEST_CASE("reversal forward is the identity") {
    Gen g(22);
    const Matrix<double> x = g.matrix(4, 5);
    const mtda::GradientReversal<double> grl{0.3};
    CHECK(grl.forward(x) == x);
    CHECK(mtda::GradientReversal<double>{1.0}.backward(x) == -x);
  }

  TEST_CASE("discriminator shape, permutation and zero output layer") {
    Gen g(23);
    mtda::Discriminator<double> disc(256);
    disc.reset(g.rng());
    Matrix<double> feats = g.matrix(64, 256);
    const Vector<double> a = disc.forward(feats);
    CHECK(a.size() == 64);
    feats.row(2).swap(feats.row(40));
    const Vector<double> b = disc.forward(feats);
    CHECK(a(2) == b(40));
    CHECK(a(40) == b(2));
    disc.output_layer().weight().value.setZero();
    disc.output_layer().bias().value.setZero();
    CHECK(disc.forward(feats).isApproxToConstant(0.5, 0.0));
  }

  TEST_CASE("adversarial loss hand values") {
    Vector<double> s(2);
    s << 0.8, 0.3;
    CHECK(mtda::adversarial_loss<double>(s, {1, 0}).value == doctest::Approx(-(std::log(0.8) + std::log(0.7)) / 2));
    CHECK(mtda::adversarial_loss<double>(s, {1, 0}).value == doctest::Approx(0.2899).epsilon(1e-3));
    CHECK(mtda::adversarial_loss<double>(Vector<double>::Constant(6, 0.5), {0, 0, 0, 1, 1, 1}).value ==
          doctest::Approx(std::log(2.0)));
    Vector<double> perfect(2);
    perfect << 0.0, 1.0;
    CHECK(mtda::adversarial_loss<double>(perfect, {0, 1}).value ==
          doctest::Approx(-std::log(1.0 - mtda::kProbabilityEpsilon)).epsilon(1e-9));
    CHECK_THROWS_AS(mtda::adversarial_loss<double>(Vector<double>(0), {}), mtda::ContractViolation);
  }

  TEST_CASE("adversarial weight schedule") {
    const mtda::AdversarialSchedule ramp{mtda::AdversarialSchedule::Mode::kRamp, 1.0};
    CHECK(ramp.weight(0.0) == 0.0);
    CHECK(ramp.weight(1.0) == doctest::Approx(2.0 / (1.0 + std::exp(-10.0)) - 1.0));
    double prev = -1.0;
    for (int k = 0; k <= 20; ++k) {
      const double w = ramp.weight(k / 20.0);
      CHECK(w > prev);
      CHECK(w <= 1.0);
      prev = w;
    }
    const mtda::AdversarialSchedule capped{mtda::AdversarialSchedule::Mode::kRamp, 0.25};
    CHECK(capped.weight(0.5) == doctest::Approx(0.25 * ramp.weight(0.5)));
    const mtda::AdversarialSchedule fixed{mtda::AdversarialSchedule::Mode::kFixed, 0.6};
    CHECK(fixed.weight(0.0) == 0.6);
    CHECK(fixed.weight(0.9) == 0.6);
  }
}
