#include "sforge/oracles.hpp"

#include <cmath>

#include "sforge/error.hpp"
#include "sforge/text.hpp"

namespace sforge {

namespace {

void need_dim(const Vec& z, int dim, const char* what) {
  if (static_cast<int>(z.size()) != dim)
    throw OracleError(std::string(what) + ": expected dimension " + std::to_string(dim) +
                      ", got " + std::to_string(z.size()));
}

double add_noise(double base, double noise_std, Rng& rng) {
  if (noise_std <= 0.0) return base;
  return base + noise_std * rng.normal();
}

double airplane_raw(const Vec& z) {
  const double a = std::exp(-(z[4] - 0.60) * (z[4] - 0.60) / 0.08);
  const double dx = z[0] - z[2] - 0.03;
  const double dy = z[1] - z[3] - 0.03;
  const double s = std::exp(-(dx * dx + dy * dy) / 0.05);
  const double qx = z[0] - 0.45, qy = z[1] - 0.70;
  const double q = 0.30 + 0.70 * std::exp(-(qx * qx + qy * qy) / 0.06);
  return 9.0 * a * s * q;
}

}  // namespace

double eval_airplane(const Vec& z, double noise_std, Rng& rng) {
  need_dim(z, 5, "airplane5");
  return std::max(0.0, add_noise(airplane_raw(z), noise_std, rng));
}

double eval_airplane_symmetric(const Vec& z, double noise_std, Rng& rng) {
  need_dim(z, 3, "airplane3");
  return eval_airplane({z[0], z[1], z[0], z[1], z[2]}, noise_std, rng);
}

Vec gripper_center(double object_size_cm) {
  const double t = 0.04 * (object_size_cm - 5.0);
  return {0.50 + t, 0.35 - t, 0.65 + t, 0.50 + t};
}

double gripper_force_raw(const Vec& z, double object_size_cm) {
  const Vec c = gripper_center(object_size_cm);
  double d1 = 0.0, d2 = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double off = k == 0 ? 0.25 : 0.0;
    d1 += (z[k] - c[k]) * (z[k] - c[k]);
    d2 += (z[k] - c[k] - off) * (z[k] - c[k] - off);
  }
  return 0.93 * std::exp(-d1 / 0.10) + 0.15 * std::exp(-d2 / 0.02);
}

double eval_gripper(const Vec& z, const GripperContext& ctx, double noise_std, Rng& rng) {
  need_dim(z, 4, "gripper");
  if (ctx.object_size_cm < 1.5 || ctx.object_size_cm > 8.0)
    throw OracleError("gripper object size out of range [1.5, 8.0]");
  static const DesignSpace space = gripper_space();
  if (!is_feasible(space, z))
    throw OracleError("infeasible gripper design: " + join_fmt17(z, ','));
  return std::max(0.0, add_noise(gripper_force_raw(z, ctx.object_size_cm), noise_std, rng));
}

double eval_testfn(OracleKind kind, const Vec& z, double noise_std, Rng& rng) {
  const int d = static_cast<int>(z.size());
  if (d < 1) throw OracleError("empty design");
  double v = 0.0;
  if (kind == OracleKind::Sphere) {
    for (double c : z) v -= (c - 0.5) * (c - 0.5);
  } else if (kind == OracleKind::TwoBumps) {
    double da = 0.0, db = 0.0;
    for (double c : z) {
      da += (c - 0.25) * (c - 0.25);
      db += (c - 0.75) * (c - 0.75);
    }
    v = std::exp(-da / 0.02) + 0.6 * std::exp(-db / 0.02);
  } else {
    throw OracleError("eval_testfn only handles sphere and twobumps");
  }
  return add_noise(v, noise_std, rng);
}

DesignSpace airplane5_space() {
  return make_space(Vec(5, 0.0), Vec(5, 1.0));
}

DesignSpace airplane3_space() {
  return make_space(Vec(3, 0.0), Vec(3, 1.0));
}

DesignSpace gripper_space() {
  return make_space(Vec(4, 0.0), Vec(4, 1.0), {{0, 2, 0.1}, {1, 3, 0.1}});
}

DesignSpace unit_box(int dim) {
  if (dim < 1) throw ConfigError("dimension must be positive");
  return make_space(Vec(dim, 0.0), Vec(dim, 1.0));
}

OracleSpec parse_oracle(const std::string& selector) {
  OracleSpec spec;
  spec.name = selector;
  std::string base = selector;
  std::string params;
  if (auto q = selector.find('?'); q != std::string::npos) {
    base = selector.substr(0, q);
    params = selector.substr(q + 1);
  }

  int dim = 3;
  bool dim_given = false;
  double size = 5.0, noise = 0.0;
  std::string rest = params;
  while (!rest.empty()) {
    std::string kv = rest;
    if (auto amp = rest.find('&'); amp != std::string::npos) {
      kv = rest.substr(0, amp);
      rest = rest.substr(amp + 1);
    } else {
      rest.clear();
    }
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("oracle parameter needs key=value: " + kv);
    const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    if (key == "noise") {
      noise = parse_double(val);
      if (noise < 0.0) throw ConfigError("noise must be >= 0");
    } else if (key == "size") {
      size = parse_double(val);
    } else if (key == "dim") {
      dim = static_cast<int>(parse_double(val));
      dim_given = true;
      if (dim < 1) throw ConfigError("dim must be >= 1");
    } else {
      throw ConfigError("unknown oracle parameter: " + key);
    }
  }

  spec.noise_std = noise;
  if (base == "airplane5") {
    spec.kind = OracleKind::AirplaneSim;
    spec.dim = 5;
    spec.space = airplane5_space();
  } else if (base == "airplane3") {
    spec.kind = OracleKind::AirplaneSim;
    spec.dim = 3;
    spec.space = airplane3_space();
  } else if (base == "gripper") {
    spec.kind = OracleKind::GripperSim;
    spec.dim = 4;
    spec.space = gripper_space();
    spec.gripper.object_size_cm = size;
    if (size < 1.5 || size > 8.0)
      throw ConfigError("gripper size must be in [1.5, 8.0]");
  } else if (base == "sphere" || base == "twobumps") {
    spec.kind = base == "sphere" ? OracleKind::Sphere : OracleKind::TwoBumps;
    spec.dim = dim;
    spec.space = unit_box(dim);
  } else {
    throw ConfigError("unknown oracle: " + base);
  }
  if (dim_given && spec.kind != OracleKind::Sphere && spec.kind != OracleKind::TwoBumps)
    throw ConfigError("dim parameter only applies to sphere/twobumps");
  return spec;
}

double oracle_eval(const OracleSpec& spec, const Vec& z, Rng& rng) {
  switch (spec.kind) {
    case OracleKind::AirplaneSim:
      return spec.dim == 5 ? eval_airplane(z, spec.noise_std, rng)
                           : eval_airplane_symmetric(z, spec.noise_std, rng);
    case OracleKind::GripperSim:
      return eval_gripper(z, spec.gripper, spec.noise_std, rng);
    case OracleKind::Sphere:
    case OracleKind::TwoBumps:
      return eval_testfn(spec.kind, z, spec.noise_std, rng);
  }
  throw OracleError("unhandled oracle kind");
}

double oracle_optimum(const OracleSpec& spec) {
  Rng dummy(0);
  switch (spec.kind) {
    case OracleKind::AirplaneSim:
      if (spec.dim == 5) return 9.0;
      return eval_airplane_symmetric({0.45, 0.70, 0.60}, 0.0, dummy);
    case OracleKind::GripperSim:
      return gripper_force_raw(gripper_center(spec.gripper.object_size_cm),
                               spec.gripper.object_size_cm);
    case OracleKind::Sphere:
      return 0.0;
    case OracleKind::TwoBumps:
      return eval_testfn(OracleKind::TwoBumps, Vec(spec.dim, 0.25), 0.0, dummy);
  }
  throw OracleError("unhandled oracle kind");
}

}  // namespace sforge
