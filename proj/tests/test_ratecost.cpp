#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"

using namespace ctrlpower;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

LoopConstants unit_constants() {
  LoopConstants c;
  c.state_dim = 1;
  c.h_bits = 1.0;
  c.entropy_power = std::numbers::e;
  c.log_det_M_abs = 0.0;
  c.cost_floor = 0.0;
  c.gain = 1.0;
  c.noise_power_w = 1.0;
  c.bandwidth_hz = 1.0;
  c.cycle_s = 1.0;
  return c;
}

// Channel and noise of a robot directly beneath the platform.
LoopConstants beneath_platform(double h_bits) {
  LoopConstants c;
  c.state_dim = 100;
  c.h_bits = h_bits;
  c.entropy_power = 0.01 * std::numbers::e;
  c.log_det_M_abs = 0.0;
  c.cost_floor = 1.0;
  c.gain = 1e-12;
  c.noise_power_w = 1e-14;
  c.bandwidth_hz = 5000.0;
  c.cycle_s = 0.01;
  return c;
}

}  // namespace

TEST_CASE("rate per cycle", "[ratecost]") {
  const LoopCurve unit(unit_constants());
  CHECK(rate_per_cycle(unit, 0.0) == 0.0);
  CHECK_THAT(rate_per_cycle(unit, 1.0), WithinAbs(1.0, 1e-15));
  const LoopCurve field(beneath_platform(5.0));
  CHECK_THAT(rate_per_cycle(field, 1.0), WithinRel(50.0 * std::log2(101.0), 1e-13));
  CHECK_THAT(rate_per_cycle(field, 1.0), WithinAbs(332.9, 0.05));
}

TEST_CASE("minimum stabilizing power", "[ratecost]") {
  auto c = unit_constants();
  c.h_bits = 0.0;
  CHECK(min_stabilizing_power(LoopCurve(c)) == 0.0);
  CHECK_THAT(min_stabilizing_power(LoopCurve(unit_constants())), WithinRel(1.0, 1e-15));
  const LoopCurve field(beneath_platform(100.0));
  CHECK_THAT(field.p_min_w(), WithinRel(0.03, 1e-13));
  CHECK_THAT(field.rate_per_cycle(field.p_min_w()), WithinRel(100.0, 1e-12));

  auto extreme = unit_constants();
  extreme.h_bits = 2000.0;
  try {
    LoopCurve curve(extreme);
    FAIL("expected StabilityUnattainable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StabilityUnattainable);
  }
}

TEST_CASE("LQR cost curve", "[ratecost]") {
  SECTION("hand-evaluated point") {
    // n = 1, h = 1: numerator 1 * 2^2 * e * 1 = 4e, denominator (1 + 3)^2 - 4 = 12.
    auto c = unit_constants();
    c.cost_floor = 0.25;
    const LoopCurve curve(c);
    CHECK_THAT(lqr_cost(curve, 3.0), WithinRel(4.0 * std::numbers::e / 12.0 + 0.25, 1e-14));
    CHECK_THAT(curve.numerator_const(), WithinRel(4.0 * std::numbers::e, 1e-14));
    CHECK_THAT(curve.gamma(), WithinRel(4.0, 1e-15));
    CHECK(curve.exponent() == 2.0);
  }

  SECTION("asymptote is the floor") {
    const LoopCurve field(beneath_platform(50.0));
    const double p = 1e6 * field.p_min_w();
    CHECK_THAT(lqr_cost(field, p), WithinRel(field.floor(), 1e-3));
  }

  SECTION("pole at the threshold") {
    for (double h : {1.0, 5.0, 50.0, 100.0}) {
      const LoopCurve field(beneath_platform(h));
      CHECK(field.lqr_cost_or_inf(field.p_min_w() * (1.0 + 1e-12)) > 1e10 * field.floor());
    }
  }

  SECTION("below threshold is an error") {
    const LoopCurve curve(unit_constants());
    try {
      lqr_cost(curve, 0.5);
      FAIL("expected BelowStabilityThreshold");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BelowStabilityThreshold);
    }
    CHECK_THROWS_AS(lqr_cost(curve, 1.0), Error);
    CHECK_THROWS_AS(marginal_cost(curve, 1.0), Error);
  }

  SECTION("agrees with the direct pow evaluation") {
    testsupport::InstanceGen gen(5);
    for (int i = 0; i < 200; ++i) {
      const auto loop = testsupport::make_loop(gen.draw());
      const double p = loop.p_min_w() + gen.uniform(0.01, 10.0);
      REQUIRE_THAT(loop.curve().lqr_cost(p), WithinRel(testsupport::naive_cost(loop, p), 1e-10));
    }
  }

  SECTION("wide exponents stay finite") {
    auto c = unit_constants();
    c.bandwidth_hz = 5000.0;
    c.cycle_s = 0.01;
    c.h_bits = 100.0;
    const LoopCurve curve(c);  // exponent 100, (1 + p)^100 overflows for p ~ 1e4
    const double p = 1e5;
    CHECK(std::isfinite(curve.lqr_cost(p)));
    CHECK(curve.lqr_cost(p) >= curve.floor());
    CHECK(std::isfinite(curve.marginal_cost(p)));
  }
}

TEST_CASE("marginal cost", "[ratecost]") {
  testsupport::InstanceGen gen(17);
  SECTION("matches central finite differences") {
    for (int i = 0; i < 200; ++i) {
      const auto loop = testsupport::make_loop(gen.draw());
      const auto& c = loop.curve();
      const double p = c.p_min_w() * (1.0 + gen.uniform(0.05, 3.0)) + gen.uniform(0.01, 1.0);
      const double delta = 1e-4 * (p - c.p_min_w());
      const double fd = -(c.lqr_cost(p + delta) - c.lqr_cost(p - delta)) / (2.0 * delta);
      INFO("p=" << p << " p_min=" << c.p_min_w());
      REQUIRE_THAT(c.marginal_cost(p), WithinRel(fd, 1e-6));
    }
  }

  SECTION("decreasing in power") {
    for (int i = 0; i < 100; ++i) {
      const auto loop = testsupport::make_loop(gen.draw());
      const auto& c = loop.curve();
      const double p1 = c.p_min_w() + gen.uniform(1e-3, 2.0);
      const double p2 = p1 + gen.uniform(1e-3, 2.0);
      REQUIRE(c.marginal_cost(p1) > c.marginal_cost(p2));
    }
  }

  SECTION("increasing in entropy rate at fixed power") {
    for (int i = 0; i < 100; ++i) {
      const double h1 = gen.uniform(0.0, 60.0);
      const double h2 = h1 + gen.uniform(0.1, 20.0);
      const LoopCurve lo(beneath_platform(h1)), hi(beneath_platform(h2));
      const double p = hi.p_min_w() + gen.uniform(0.001, 1.0);
      REQUIRE(hi.marginal_cost(p) > lo.marginal_cost(p));
    }
  }
}

TEST_CASE("marginal cost inversion", "[ratecost]") {
  testsupport::InstanceGen gen(23);
  for (int i = 0; i < 200; ++i) {
    const auto loop = testsupport::make_loop(gen.draw());
    const auto& c = loop.curve();
    const double p = c.p_min_w() + gen.uniform(1e-4, 20.0);
    REQUIRE_THAT(invert_marginal(c, c.marginal_cost(p)), WithinRel(p, 1e-9));
  }

  const LoopCurve field(beneath_platform(60.0));
  const double near = invert_marginal(field, 1e30);
  CHECK(near > field.p_min_w());
  CHECK_THAT(near, WithinRel(field.p_min_w(), 1e-6));
  CHECK(invert_marginal(field, 1e-12) > 100.0 * field.p_min_w());

  // Loops differing only in h: more power for the larger h at equal lambda.
  const LoopCurve lo(beneath_platform(10.0)), hi(beneath_platform(40.0));
  for (double lambda : {1e-3, 1e-1, 1.0, 10.0, 1e3}) {
    const double p_lo = invert_marginal(lo, lambda);
    const double p_hi = invert_marginal(hi, lambda);
    CHECK(p_hi > p_lo);
    CHECK_THAT(lo.marginal_cost(p_lo), WithinRel(lambda, 1e-9));
    CHECK_THAT(hi.marginal_cost(p_hi), WithinRel(lambda, 1e-9));
  }
  CHECK_THROWS_AS(invert_marginal(lo, 0.0), Error);
}

TEST_CASE("cost curve shape", "[ratecost][property]") {
  testsupport::InstanceGen gen(31);
  for (int i = 0; i < 300; ++i) {
    const auto loop = testsupport::make_loop(gen.draw());
    const auto& c = loop.curve();
    const double p = c.p_min_w() * (1.0 + gen.uniform(0.01, 2.0)) + gen.uniform(0.01, 2.0);
    const double d = 1e-3 * (p - c.p_min_w());
    const double lm = c.lqr_cost(p - d), l0 = c.lqr_cost(p), lp = c.lqr_cost(p + d);
    REQUIRE(lp - 2.0 * l0 + lm > 0.0);  // convex
    REQUIRE(lp < l0);                    // decreasing
    REQUIRE(l0 > c.floor());

    // Plugging l(p) into the rate needed for that cost gives back rate(p).
    const double n = c.state_dim();
    const double k0 = n * c.entropy_power() * std::exp(c.log_det_M_abs() / n);
    const double needed = c.h_bits() + n / 2.0 * std::log2(1.0 + k0 / (l0 - c.floor()));
    REQUIRE_THAT(needed, WithinRel(c.rate_per_cycle(p), 1e-9));
  }
}
