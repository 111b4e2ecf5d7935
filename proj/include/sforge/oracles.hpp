#pragma once

#include <string>

#include "sforge/design_space.hpp"
#include "sforge/rng.hpp"

namespace sforge {

// Synthetic reward landscapes with known closed-form optima.  Shapes are
// calibrated stand-ins for the physical tasks: a plane whose throw angle
// dominates and whose best fold is slightly asymmetric, and a gripper whose
// optimum shifts with object size and hides a secondary local bump.
enum class OracleKind { AirplaneSim, GripperSim, Sphere, TwoBumps };

struct GripperContext {
  double object_size_cm = 5.0;  // valid range [1.5, 8.0]
};

struct OracleSpec {
  std::string name;  // selector string, e.g. "gripper?size=8&noise=0.05"
  OracleKind kind = OracleKind::Sphere;
  int dim = 3;
  DesignSpace space;
  double noise_std = 0.0;
  GripperContext gripper;
};

// z = (left fold pos, left fold angle, right fold pos, right fold angle,
// throw release), all normalized to [0,1].  Peak of exactly 9.0 at
// (0.45, 0.70, 0.42, 0.67, 0.60).
double eval_airplane(const Vec& z, double noise_std, Rng& rng);

// Mirrors the right fold from the left: evaluates (z1, z2, z1, z2, z3).
// Forcing symmetry caps the reward at 9*exp(-0.036) ~ 8.6818.
double eval_airplane_symmetric(const Vec& z, double noise_std, Rng& rng);

// Feasible gripper designs only (margins below); infeasible input is an
// OracleError so optimizers must handle constraints explicitly.
double eval_gripper(const Vec& z, const GripperContext& ctx, double noise_std, Rng& rng);

// The gripper formula without the feasibility guard (used by tests probing
// points like the secondary bump center, which is itself infeasible).
double gripper_force_raw(const Vec& z, double object_size_cm);

// Optimum center as a function of object size.
Vec gripper_center(double object_size_cm);

double eval_testfn(OracleKind kind, const Vec& z, double noise_std, Rng& rng);

// Preset spaces.
DesignSpace airplane5_space();
DesignSpace airplane3_space();
DesignSpace gripper_space();
DesignSpace unit_box(int dim);

// Selector grammar: name[?key=value[&key=value...]].  Names: airplane5,
// airplane3, gripper, sphere, twobumps.  Keys: noise (all), size (gripper),
// dim (sphere/twobumps, default 3).
OracleSpec parse_oracle(const std::string& selector);

// Evaluates spec's oracle at z; noise (if any) is drawn from rng.
double oracle_eval(const OracleSpec& spec, const Vec& z, Rng& rng);

// True global maximum value of the noise-free oracle.
double oracle_optimum(const OracleSpec& spec);

}  // namespace sforge
