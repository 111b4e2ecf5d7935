#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <bit>
#include <cmath>
#include <cstdint>

#include "doctest.h"
#include "sforge/error.hpp"
#include "sforge/oracles.hpp"
#include "sforge/rng.hpp"

using namespace sforge;

static bool same_bits(double a, double b) {
  return std::bit_cast<uint64_t>(a) == std::bit_cast<uint64_t>(b);
}

// Independent re-derivations of the closed forms, written with separate
// accumulation so a transcription slip in either copy shows up.
static double ref_airplane(const Vec& z) {
  const double release = std::exp(-std::pow(z[4] - 0.60, 2) / 0.08);
  const double asym =
      std::exp(-(std::pow(z[0] - z[2] - 0.03, 2) + std::pow(z[1] - z[3] - 0.03, 2)) / 0.05);
  const double fold =
      0.30 + 0.70 * std::exp(-(std::pow(z[0] - 0.45, 2) + std::pow(z[1] - 0.70, 2)) / 0.06);
  return 9.0 * release * asym * fold;
}

static double ref_gripper(const Vec& z, double size) {
  const double t = 0.04 * (size - 5.0);
  const double c[4] = {0.50 + t, 0.35 - t, 0.65 + t, 0.50 + t};
  double d1 = 0.0, d2 = 0.0;
  for (int k = 0; k < 4; ++k) {
    d1 += std::pow(z[k] - c[k], 2);
    d2 += std::pow(z[k] - c[k] - (k == 0 ? 0.25 : 0.0), 2);
  }
  return 0.93 * std::exp(-d1 / 0.10) + 0.15 * std::exp(-d2 / 0.02);
}

TEST_CASE("airplane peak is exactly 9 at the known fold") {
  Rng rng(1);
  const Vec peak = {0.45, 0.70, 0.42, 0.67, 0.60};
  CHECK(eval_airplane(peak, 0.0, rng) == 9.0);
  // Any perturbation loses reward.
  CHECK(eval_airplane({0.45, 0.70, 0.42, 0.67, 0.55}, 0.0, rng) < 9.0);
  CHECK(eval_airplane({0.50, 0.70, 0.42, 0.67, 0.60}, 0.0, rng) < 9.0);
  // Random probes never beat the peak.
  Rng probe(2);
  for (int it = 0; it < 2000; ++it) {
    Vec z(5);
    for (double& c : z) c = probe.uniform();
    CHECK(eval_airplane(z, 0.0, rng) <= 9.0);
  }
  // Axis-aligned scans through the peak are maximized at the peak coordinate.
  for (int axis = 0; axis < 5; ++axis) {
    const double best = eval_airplane(peak, 0.0, rng);
    for (int s = 0; s <= 20; ++s) {
      Vec z = peak;
      z[axis] = s * 0.05;
      CHECK(eval_airplane(z, 0.0, rng) <= best);
    }
  }
  CHECK_THROWS_AS(eval_airplane({0.1, 0.2, 0.3}, 0.0, rng), OracleError);
}

TEST_CASE("airplane formula matches the independent re-derivation") {
  Rng rng(3), noise(4);
  for (int it = 0; it < 500; ++it) {
    Vec z(5);
    for (double& c : z) c = rng.uniform();
    CHECK(eval_airplane(z, 0.0, noise) == doctest::Approx(ref_airplane(z)).epsilon(1e-12));
  }
}

TEST_CASE("symmetric airplane mirrors the left fold and caps the ceiling") {
  Rng rng(5);
  for (int it = 0; it < 200; ++it) {
    Vec z = {rng.uniform(), rng.uniform(), rng.uniform()};
    const double sym = eval_airplane_symmetric(z, 0.0, rng);
    const double full = eval_airplane({z[0], z[1], z[0], z[1], z[2]}, 0.0, rng);
    CHECK(same_bits(sym, full));
  }
  // The asymmetry factor is pinned at exp(-0.036) whenever both folds match,
  // so the best symmetric plane flies 9*exp(-0.036).
  const double ceiling = 9.0 * std::exp(-0.036);
  CHECK(eval_airplane_symmetric({0.45, 0.70, 0.60}, 0.0, rng) ==
        doctest::Approx(ceiling).epsilon(1e-12));

  // Brute scan on a lattice that contains the optimum.
  double best = -1.0;
  Vec argbest;
  for (int a = 0; a <= 20; ++a)
    for (int b = 0; b <= 20; ++b)
      for (int c = 0; c <= 20; ++c) {
        const Vec z = {a * 0.05, b * 0.05, c * 0.05};
        const double v = eval_airplane_symmetric(z, 0.0, rng);
        if (v > best) {
          best = v;
          argbest = z;
        }
      }
  CHECK(best == doctest::Approx(ceiling).epsilon(1e-12));
  CHECK(argbest[0] == doctest::Approx(0.45));
  CHECK(argbest[1] == doctest::Approx(0.70));
  CHECK(argbest[2] == doctest::Approx(0.60));
  CHECK_THROWS_AS(eval_airplane_symmetric({0.1, 0.2, 0.3, 0.4, 0.5}, 0.0, rng), OracleError);
}

TEST_CASE("gripper center tracks object size") {
  const Vec c5 = gripper_center(5.0);
  CHECK(c5 == Vec{0.50, 0.35, 0.65, 0.50});
  const Vec c8 = gripper_center(8.0);
  CHECK(c8[0] == doctest::Approx(0.62).epsilon(1e-15));
  CHECK(c8[1] == doctest::Approx(0.23).epsilon(1e-15));
  CHECK(c8[2] == doctest::Approx(0.77).epsilon(1e-15));
  CHECK(c8[3] == doctest::Approx(0.62).epsilon(1e-15));

  // The shifted centers stay feasible for mid-to-large objects; small ones
  // push the second finger pair across its margin, where the closed-form
  // optimum value is only an upper bound on what a feasible design reaches.
  const DesignSpace space = gripper_space();
  CHECK(is_feasible(space, c5));
  CHECK(is_feasible(space, c8));
  CHECK_FALSE(is_feasible(space, gripper_center(1.5)));
}

TEST_CASE("gripper formula matches the independent re-derivation") {
  Rng rng(6), noise(7);
  const DesignSpace space = gripper_space();
  for (double size : {1.5, 5.0, 8.0}) {
    for (int it = 0; it < 300; ++it) {
      Vec z(4);
      for (double& c : z) c = rng.uniform();
      CHECK(gripper_force_raw(z, size) == doctest::Approx(ref_gripper(z, size)).epsilon(1e-12));
    }
  }
  // Guarded evaluation agrees with the raw formula on feasible designs.
  Rng s(8);
  for (int it = 0; it < 200; ++it) {
    const Vec z = sample_uniform(space, s);
    GripperContext ctx;
    CHECK(eval_gripper(z, ctx, 0.0, noise) ==
          doctest::Approx(ref_gripper(z, 5.0)).epsilon(1e-12));
  }
}

TEST_CASE("gripper rejects infeasible designs and bad sizes") {
  Rng rng(9);
  GripperContext ctx;
  // Margin violated: first finger pair crosses.
  CHECK_THROWS_AS(eval_gripper({0.60, 0.30, 0.65, 0.50}, ctx, 0.0, rng), OracleError);
  // Box violated.
  CHECK_THROWS_AS(eval_gripper({1.2, 0.3, 0.65, 0.5}, ctx, 0.0, rng), OracleError);
  // Wrong width.
  CHECK_THROWS_AS(eval_gripper({0.5, 0.35, 0.65}, ctx, 0.0, rng), OracleError);
  // Size outside the supported range.
  ctx.object_size_cm = 1.0;
  CHECK_THROWS_AS(eval_gripper({0.5, 0.35, 0.65, 0.5}, ctx, 0.0, rng), OracleError);
  ctx.object_size_cm = 8.5;
  CHECK_THROWS_AS(eval_gripper({0.5, 0.35, 0.65, 0.5}, ctx, 0.0, rng), OracleError);
  // Infeasible optimum center for a small object is itself rejected.
  ctx.object_size_cm = 1.5;
  CHECK_THROWS_AS(eval_gripper(gripper_center(1.5), ctx, 0.0, rng), OracleError);
  CHECK(gripper_force_raw(gripper_center(1.5), 1.5) > 0.9);
}

TEST_CASE("gripper optimum is attained at the center on a covering lattice") {
  const DesignSpace space = gripper_space();
  for (double size : {5.0, 8.0}) {
    OracleSpec spec = parse_oracle("gripper?size=" + std::to_string(size));
    const double opt = oracle_optimum(spec);
    Rng rng(10);
    CHECK(eval_gripper(gripper_center(size), spec.gripper, 0.0, rng) ==
          doctest::Approx(opt).epsilon(1e-15));
    double best = -1.0;
    for (int a = 0; a <= 20; ++a)
      for (int b = 0; b <= 20; ++b)
        for (int c = 0; c <= 20; ++c)
          for (int d = 0; d <= 20; ++d) {
            const Vec z = {a * 0.05, b * 0.05, c * 0.05, d * 0.05};
            if (!is_feasible(space, z)) continue;
            best = std::max(best, gripper_force_raw(z, size));
          }
    // size 8 center (0.62, ...) is off-lattice, so allow the grid gap.
    CHECK(best <= opt + 1e-12);
    CHECK(best > opt - 0.05);
  }
}

TEST_CASE("gripper hides a secondary bump along the first axis") {
  const Vec c = gripper_center(5.0);
  Vec bump = c;
  bump[0] += 0.25;
  const double at_bump = gripper_force_raw(bump, 5.0);
  // Replicate: main lobe at squared distance 0.0625, secondary at 0.
  const double expect = 0.93 * std::exp(-0.0625 / 0.10) + 0.15;
  CHECK(at_bump == doctest::Approx(expect).epsilon(1e-12));
  // It is a genuine local bump: poking further along the axis loses force.
  Vec past = c;
  past[0] += 0.35;
  CHECK(gripper_force_raw(past, 5.0) < at_bump);
  Vec before = c;
  before[0] += 0.15;
  CHECK(gripper_force_raw(before, 5.0) < std::max(at_bump, gripper_force_raw(c, 5.0)));
}

TEST_CASE("sphere and twobumps closed forms") {
  Rng rng(11);
  CHECK(eval_testfn(OracleKind::Sphere, {0.5, 0.5, 0.5}, 0.0, rng) == 0.0);
  for (int it = 0; it < 200; ++it) {
    Vec z = {rng.uniform(), rng.uniform(), rng.uniform()};
    double want = 0.0;
    for (double c : z) want -= std::pow(c - 0.5, 2);
    CHECK(eval_testfn(OracleKind::Sphere, z, 0.0, rng) ==
          doctest::Approx(want).epsilon(1e-12));
  }
  for (int it = 0; it < 200; ++it) {
    Vec z = {rng.uniform(), rng.uniform()};
    double da = 0.0, db = 0.0;
    for (double c : z) {
      da += std::pow(c - 0.25, 2);
      db += std::pow(c - 0.75, 2);
    }
    const double want = std::exp(-da / 0.02) + 0.6 * std::exp(-db / 0.02);
    CHECK(eval_testfn(OracleKind::TwoBumps, z, 0.0, rng) ==
          doctest::Approx(want).epsilon(1e-12));
  }
  CHECK_THROWS_AS(eval_testfn(OracleKind::Sphere, {}, 0.0, rng), OracleError);
  CHECK_THROWS_AS(eval_testfn(OracleKind::AirplaneSim, {0.5}, 0.0, rng), OracleError);
}

TEST_CASE("twobumps optimum sits on the tall bump") {
  OracleSpec spec = parse_oracle("twobumps?dim=2");
  const double opt = oracle_optimum(spec);
  Rng rng(12);
  CHECK(same_bits(opt, eval_testfn(OracleKind::TwoBumps, {0.25, 0.25}, 0.0, rng)));
  CHECK(opt > 1.0);  // main bump plus a sliver of the far one
  CHECK(eval_testfn(OracleKind::TwoBumps, {0.75, 0.75}, 0.0, rng) < opt);
  double best = -1.0;
  Vec argbest;
  for (int a = 0; a <= 20; ++a)
    for (int b = 0; b <= 20; ++b) {
      const Vec z = {a * 0.05, b * 0.05};
      const double v = eval_testfn(OracleKind::TwoBumps, z, 0.0, rng);
      if (v > best) {
        best = v;
        argbest = z;
      }
    }
  CHECK(same_bits(best, opt));
  CHECK(argbest == Vec{0.25, 0.25});
}

TEST_CASE("noise is seed-deterministic and zero-noise leaves the rng alone") {
  const Vec z = {0.4, 0.6, 0.5, 0.55, 0.62};
  Rng a(100), b(100), c(101);
  const double va = eval_airplane(z, 0.05, a);
  const double vb = eval_airplane(z, 0.05, b);
  CHECK(same_bits(va, vb));
  CHECK_FALSE(same_bits(va, eval_airplane(z, 0.05, c)));

  // Replicate the draw: base + std * normal.
  Rng d(100), probe(100);
  const double base = eval_airplane(z, 0.0, d);
  const double want = std::max(0.0, base + 0.05 * probe.normal());
  Rng e(100);
  CHECK(same_bits(eval_airplane(z, 0.05, e), want));

  // Noise-free evaluation must not consume randomness.
  Rng f(200), g(200);
  eval_airplane(z, 0.0, f);
  eval_airplane(z, 0.0, f);
  CHECK(f.next_u64() == g.next_u64());
}

TEST_CASE("noisy rewards clamp at zero for the physical oracles") {
  // Far corner: base is essentially zero, so negative draws must clamp.
  const Vec corner = {1.0, 0.0, 0.0, 1.0, 0.0};
  int clamped = 0;
  for (uint64_t seed = 0; seed < 64; ++seed) {
    Rng rng(seed), probe(seed);
    const double v = eval_airplane(corner, 0.5, rng);
    CHECK(v >= 0.0);
    Rng base_rng(0);
    const double raw = eval_airplane(corner, 0.0, base_rng) + 0.5 * probe.normal();
    if (raw < 0.0) {
      CHECK(v == 0.0);
      ++clamped;
    }
  }
  CHECK(clamped > 10);

  // The unbounded test functions do not clamp.
  Rng rng(7);
  bool saw_negative = false;
  for (int it = 0; it < 50; ++it)
    saw_negative = saw_negative || eval_testfn(OracleKind::Sphere, {0.5}, 0.3, rng) < 0.0;
  CHECK(saw_negative);
}

TEST_CASE("parse_oracle grammar") {
  OracleSpec a5 = parse_oracle("airplane5");
  CHECK(a5.kind == OracleKind::AirplaneSim);
  CHECK(a5.dim == 5);
  CHECK(a5.space.dim == 5);
  CHECK(a5.noise_std == 0.0);
  CHECK(a5.name == "airplane5");

  OracleSpec a5n = parse_oracle("airplane5?noise=0.05");
  CHECK(a5n.noise_std == 0.05);
  CHECK(a5n.name == "airplane5?noise=0.05");

  OracleSpec a3 = parse_oracle("airplane3");
  CHECK(a3.kind == OracleKind::AirplaneSim);
  CHECK(a3.dim == 3);

  OracleSpec gr = parse_oracle("gripper?size=8&noise=0.05");
  CHECK(gr.kind == OracleKind::GripperSim);
  CHECK(gr.dim == 4);
  CHECK(gr.gripper.object_size_cm == 8.0);
  CHECK(gr.noise_std == 0.05);
  CHECK(gr.space.margins.size() == 2);

  OracleSpec sp = parse_oracle("sphere");
  CHECK(sp.kind == OracleKind::Sphere);
  CHECK(sp.dim == 3);
  OracleSpec sp7 = parse_oracle("sphere?dim=7");
  CHECK(sp7.dim == 7);
  CHECK(sp7.space.dim == 7);
  OracleSpec tb = parse_oracle("twobumps");
  CHECK(tb.kind == OracleKind::TwoBumps);
  CHECK(tb.dim == 3);

  CHECK_THROWS_AS(parse_oracle("frisbee"), ConfigError);
  CHECK_THROWS_AS(parse_oracle("sphere?noise=-0.1"), ConfigError);
  CHECK_THROWS_AS(parse_oracle("gripper?size=9"), ConfigError);
  CHECK_THROWS_AS(parse_oracle("gripper?size=1"), ConfigError);
  CHECK_THROWS_AS(parse_oracle("airplane5?dim=5"), ConfigError);
  CHECK_THROWS_AS(parse_oracle("sphere?dim=0"), ConfigError);
  CHECK_THROWS_AS(parse_oracle("sphere?dim"), ConfigError);
  CHECK_THROWS_AS(parse_oracle("sphere?tilt=3"), ConfigError);
}

TEST_CASE("oracle_eval dispatches on the parsed spec") {
  Rng rng(13);
  OracleSpec a5 = parse_oracle("airplane5");
  CHECK(oracle_eval(a5, {0.45, 0.70, 0.42, 0.67, 0.60}, rng) == 9.0);
  OracleSpec a3 = parse_oracle("airplane3");
  CHECK(oracle_eval(a3, {0.45, 0.70, 0.60}, rng) ==
        doctest::Approx(9.0 * std::exp(-0.036)).epsilon(1e-12));
  OracleSpec gr = parse_oracle("gripper");
  CHECK(oracle_eval(gr, gripper_center(5.0), rng) ==
        doctest::Approx(oracle_optimum(gr)).epsilon(1e-15));
  CHECK_THROWS_AS(oracle_eval(gr, {0.60, 0.30, 0.65, 0.50}, rng), OracleError);
  OracleSpec sp = parse_oracle("sphere?dim=2");
  CHECK(oracle_eval(sp, {0.5, 0.5}, rng) == 0.0);
}

TEST_CASE("oracle_optimum values") {
  CHECK(oracle_optimum(parse_oracle("airplane5")) == 9.0);
  CHECK(oracle_optimum(parse_oracle("airplane3")) ==
        doctest::Approx(9.0 * std::exp(-0.036)).epsilon(1e-12));
  CHECK(oracle_optimum(parse_oracle("sphere?dim=4")) == 0.0);
  CHECK(oracle_optimum(parse_oracle("twobumps?dim=3")) == doctest::Approx(1.0).epsilon(1e-10));
  // Noise does not change the noise-free optimum.
  CHECK(oracle_optimum(parse_oracle("airplane5?noise=0.3")) == 9.0);
}

TEST_CASE("preset spaces") {
  CHECK(airplane5_space().dim == 5);
  CHECK(airplane3_space().dim == 3);
  const DesignSpace g = gripper_space();
  CHECK(g.dim == 4);
  REQUIRE(g.margins.size() == 2);
  CHECK(g.margins[0].i == 0);
  CHECK(g.margins[0].j == 2);
  CHECK(g.margins[0].m == 0.1);
  CHECK(g.margins[1].i == 1);
  CHECK(g.margins[1].j == 3);
  CHECK(g.margins[1].m == 0.1);
  CHECK(unit_box(6).dim == 6);
  CHECK_THROWS_AS(unit_box(0), ConfigError);
}
