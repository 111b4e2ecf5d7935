#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#include "doctest.h"
#include "sforge/campaign.hpp"
#include "sforge/error.hpp"
#include "sforge/oracles.hpp"
#include "sforge/snes.hpp"

using namespace sforge;

static bool same_bits(double a, double b) {
  return std::bit_cast<uint64_t>(a) == std::bit_cast<uint64_t>(b);
}

static bool same_vec(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!same_bits(a[i], b[i])) return false;
  return true;
}

TEST_CASE("snes state starts at the box midpoint with quarter-span sigma") {
  const DesignSpace space = gripper_space();
  SnesState st = make_snes_state(space);
  CHECK(same_vec(st.mu, midpoint(space)));
  REQUIRE(st.sigma.size() == size_t(space.dim));
  for (int i = 0; i < space.dim; ++i)
    CHECK(same_bits(st.sigma[i], (space.upper[i] - space.lower[i]) / 4.0));
  CHECK(st.eta_mu == 1.0);
  const double d = 4.0;
  CHECK(same_bits(st.eta_sigma, (3.0 + std::log(d)) / (5.0 * std::sqrt(d))));
  CHECK(st.generation == 0);

  // a frozen axis must keep sigma positive
  DesignSpace flat = make_space({0.0, 0.3}, {1.0, 0.3});
  SnesState fst = make_snes_state(flat);
  CHECK(fst.sigma[1] == 1e-12);
}

TEST_CASE("snes utilities follow the shifted log-rank formula") {
  const std::vector<double> u = snes_utilities({3.0, 1.0, 2.0});
  REQUIRE(u.size() == 3);
  // descending ranks: reward 3.0 -> 1, 2.0 -> 2, 1.0 -> 3
  const double off = std::log(3 / 2.0 + 1.0);
  double raw[3] = {std::max(0.0, off - std::log(1.0)), std::max(0.0, off - std::log(3.0)),
                   std::max(0.0, off - std::log(2.0))};
  const double total = raw[0] + raw[1] + raw[2];
  for (int i = 0; i < 3; ++i) CHECK(same_bits(u[i], raw[i] / total - 1.0 / 3));
  CHECK(std::abs(u[0] + u[1] + u[2]) < 1e-15);

  // ties share an averaged rank
  const std::vector<double> t = snes_utilities({2.0, 2.0, 1.0});
  CHECK(same_bits(t[0], t[1]));
  const double raw15 = std::max(0.0, off - std::log(1.5));
  CHECK(same_bits(t[0], raw15 / (raw15 + raw15) - 1.0 / 3));
  CHECK(t[2] < t[0]);

  // one tie group spanning everything produces exactly zero utilities
  for (double v : snes_utilities({7.5, 7.5, 7.5, 7.5})) CHECK(same_bits(v, 0.0));

  CHECK_THROWS_AS(snes_utilities({}), ConfigError);
  CHECK_THROWS_AS(snes_utilities({1.0}), ConfigError);
  CHECK_THROWS_AS(snes_utilities({1.0, std::numeric_limits<double>::quiet_NaN()}),
                  ConfigError);
  CHECK_THROWS_AS(snes_utilities({1.0, std::numeric_limits<double>::infinity()}),
                  ConfigError);
}

TEST_CASE("snes ask returns projected candidates and their raw draws") {
  const DesignSpace space = gripper_space();
  SnesState st = make_snes_state(space);
  Rng rng(90), replay(90);
  SnesSample smp = snes_ask(st, space, 6, rng);
  REQUIRE(smp.z.size() == 6);
  REQUIRE(smp.s.size() == 6);
  for (int i = 0; i < 6; ++i) {
    Vec s(space.dim), raw(space.dim);
    for (int j = 0; j < space.dim; ++j) {
      s[j] = replay.normal();
      raw[j] = st.mu[j] + st.sigma[j] * s[j];
    }
    CHECK(same_vec(smp.s[i], s));
    CHECK(same_vec(smp.z[i], project(space, raw)));
    CHECK(is_feasible(space, smp.z[i]));
  }

  Rng r2(91);
  CHECK_THROWS_AS(snes_ask(st, space, 1, r2), ConfigError);
  SnesState narrow = make_snes_state(unit_box(3));
  CHECK_THROWS_AS(snes_ask(narrow, space, 4, r2), DimensionError);
}

TEST_CASE("snes tell applies the natural-gradient update") {
  const DesignSpace space = make_space({0.0, 0.0}, {1.0, 1.0});
  SnesState st = make_snes_state(space);
  const std::vector<Vec> s = {{0.5, -1.0}, {2.0, 0.25}, {-0.75, 1.5}};
  const std::vector<double> rewards = {1.0, 3.0, 2.0};

  SnesState want = st;
  const std::vector<double> u = snes_utilities(rewards);
  for (int j = 0; j < 2; ++j) {
    double gm = 0.0, gs = 0.0;
    for (int i = 0; i < 3; ++i) {
      gm += u[i] * s[i][j];
      gs += u[i] * (s[i][j] * s[i][j] - 1.0);
    }
    want.mu[j] += want.eta_mu * want.sigma[j] * gm;
    want.sigma[j] *= std::exp(0.5 * want.eta_sigma * gs);
  }

  snes_tell(st, s, rewards);
  CHECK(same_vec(st.mu, want.mu));
  CHECK(same_vec(st.sigma, want.sigma));
  CHECK(st.generation == 1);

  CHECK_THROWS_AS(snes_tell(st, s, {1.0, 2.0}), ConfigError);
  const std::vector<Vec> thin = {{0.5}, {2.0}, {-0.75}};
  CHECK_THROWS_AS(snes_tell(st, thin, rewards), DimensionError);
}

TEST_CASE("snes updates see only reward ranks") {
  const DesignSpace space = unit_box(3);
  Rng rng(92);
  SnesState a = make_snes_state(space);
  SnesSample smp = snes_ask(a, space, 5, rng);
  SnesState b = a, c = a;

  const std::vector<double> r = {0.7, -1.2, 0.3, 2.4, -0.6};
  std::vector<double> affine(5), expo(5);
  for (int i = 0; i < 5; ++i) {
    affine[i] = 2.0 * r[i] + 3.0;
    expo[i] = std::exp(r[i]);
  }
  CHECK(snes_utilities(r) == snes_utilities(affine));
  CHECK(snes_utilities(r) == snes_utilities(expo));

  snes_tell(a, smp.s, r);
  snes_tell(b, smp.s, affine);
  snes_tell(c, smp.s, expo);
  CHECK(same_vec(a.mu, b.mu));
  CHECK(same_vec(a.sigma, b.sigma));
  CHECK(same_vec(a.mu, c.mu));
  CHECK(same_vec(a.sigma, c.sigma));

  // all-equal rewards: zero utilities, state bits untouched
  SnesState d = a;
  snes_tell(d, smp.s, {4.0, 4.0, 4.0, 4.0, 4.0});
  CHECK(same_vec(d.mu, a.mu));
  CHECK(same_vec(d.sigma, a.sigma));
  CHECK(d.generation == a.generation + 1);
}

TEST_CASE("snes walks to an off-center 1-d optimum") {
  const DesignSpace space = unit_box(1);
  SnesState st = make_snes_state(space);
  const double sigma0 = st.sigma[0];
  Rng rng(7);
  for (int g = 0; g < 40; ++g) {
    SnesSample smp = snes_ask(st, space, 6, rng);
    std::vector<double> rewards(6);
    for (int i = 0; i < 6; ++i)
      rewards[i] = -(smp.z[i][0] - 0.8) * (smp.z[i][0] - 0.8);
    snes_tell(st, smp.s, rewards);
  }
  CHECK(std::abs(st.mu[0] - 0.8) < 0.05);
  CHECK(st.sigma[0] < sigma0);
  CHECK(st.generation == 40);
}

TEST_CASE("default grid shapes match the published setups") {
  CHECK(default_grid_shape(3, 100) == std::vector<int>{5, 5, 4});
  CHECK(default_grid_shape(4, 100) == std::vector<int>{3, 3, 3, 4});
  CHECK(default_grid_shape(5, 100) == std::vector<int>{3, 3, 3, 2, 2});
  CHECK(default_grid_shape(2, 100) == std::vector<int>{10, 10});
  CHECK(default_grid_shape(1, 100) == std::vector<int>{100});
  CHECK(default_grid_shape(6, 100) == std::vector<int>(6, 3));
}

TEST_CASE("effective budget counts what each method will spend") {
  CampaignConfig cfg;
  cfg.budget = 100;
  cfg.method = Method::Snes;
  cfg.snes_pop = 5;
  cfg.snes_gens = 20;
  CHECK(effective_budget(cfg, 3) == 100);
  cfg.snes_gens = 7;
  CHECK(effective_budget(cfg, 3) == 35);

  cfg.method = Method::Grid;
  CHECK(effective_budget(cfg, 4) == 100);  // 3*3*3*4 = 108, capped
  cfg.grid_shape = {2, 2};
  CHECK(effective_budget(cfg, 2) == 4);

  cfg.method = Method::Random;
  CHECK(effective_budget(cfg, 2) == 100);
  cfg.method = Method::EpsGreedy;
  cfg.budget = 17;
  CHECK(effective_budget(cfg, 2) == 17);
}

TEST_CASE("grid points enumerate the last axis fastest with exact endpoints") {
  const DesignSpace box = make_space({0.0, 0.0}, {1.0, 1.0});
  const std::vector<Vec> pts = grid_points(box, {3, 2}, 100);
  REQUIRE(pts.size() == 6);
  const Vec want[6] = {{0.0, 0.0}, {0.0, 1.0}, {0.5, 0.0},
                       {0.5, 1.0}, {1.0, 0.0}, {1.0, 1.0}};
  for (int i = 0; i < 6; ++i) CHECK(same_vec(pts[i], want[i]));

  // interior points interpolate, the last index lands on the bound literally
  const DesignSpace epsbox = make_space({0.0}, {0.3});
  const std::vector<Vec> line = grid_points(epsbox, {4}, 100);
  REQUIRE(line.size() == 4);
  CHECK(same_bits(line[0][0], 0.0));
  CHECK(same_bits(line[1][0], 0.3 * (1.0 / 3)));
  CHECK(same_bits(line[2][0], 0.3 * (2.0 / 3)));
  CHECK(same_bits(line[3][0], 0.3));

  // a size-1 axis sits at the midpoint
  const DesignSpace rect = make_space({0.0, 2.0}, {1.0, 6.0});
  const std::vector<Vec> mid = grid_points(rect, {1, 2}, 100);
  REQUIRE(mid.size() == 2);
  CHECK(same_vec(mid[0], {0.5, 2.0}));
  CHECK(same_vec(mid[1], {0.5, 6.0}));

  // truncation keeps the enumeration prefix
  const std::vector<Vec> cut = grid_points(box, {3, 2}, 3);
  REQUIRE(cut.size() == 3);
  CHECK(same_vec(cut[2], {0.5, 0.0}));

  // constrained spaces get projected lattice points
  for (const Vec& z : grid_points(gripper_space(), {2, 2, 2, 2}, 16))
    CHECK(is_feasible(gripper_space(), z));

  CHECK_THROWS_AS(grid_points(box, {3}, 100), ConfigError);
}

TEST_CASE("validate_config rejects out-of-range settings") {
  CampaignConfig ok;
  validate_config(ok, 3);

  auto bad = [&](auto&& tweak) {
    CampaignConfig c;
    tweak(c);
    CHECK_THROWS_AS(validate_config(c, 3), ConfigError);
  };
  bad([](CampaignConfig& c) { c.budget = 0; });
  bad([](CampaignConfig& c) { c.epsilon = -0.1; });
  bad([](CampaignConfig& c) { c.epsilon = 1.5; });
  bad([](CampaignConfig& c) { c.epsilon = std::numeric_limits<double>::quiet_NaN(); });
  bad([](CampaignConfig& c) { c.snes_pop = 1; });
  bad([](CampaignConfig& c) { c.snes_gens = 0; });
  bad([](CampaignConfig& c) { c.train_cfg.iters = -1; });
  bad([](CampaignConfig& c) { c.train_cfg.batch = 0; });
  bad([](CampaignConfig& c) { c.train_cfg.lr = 0.0; });
  bad([](CampaignConfig& c) { c.train_cfg.weight_decay = -0.5; });
  bad([](CampaignConfig& c) { c.train_cfg.huber_delta = 0.0; });
  bad([](CampaignConfig& c) { c.inv_cfg.restarts = 0; });
  bad([](CampaignConfig& c) { c.inv_cfg.steps = -1; });
  bad([](CampaignConfig& c) { c.inv_cfg.step_size = 0.0; });
  bad([](CampaignConfig& c) { c.grid_shape = {5, 5}; });
  bad([](CampaignConfig& c) { c.grid_shape = {5, 5, 0}; });
}

TEST_CASE("random campaigns replay bitwise from their logged seeds") {
  OracleSpec spec = parse_oracle("sphere?dim=2&noise=0.1");
  CampaignConfig cfg;
  cfg.method = Method::Random;
  cfg.budget = 12;
  cfg.master_seed = 5;
  TrialLog log = run_campaign(spec, cfg);
  CHECK(log.oracle_name == "sphere?dim=2&noise=0.1");
  CHECK(log.method == "random");
  CHECK(log.master_seed == 5);
  REQUIRE(log.trials.size() == 12);
  for (int t = 1; t <= 12; ++t) {
    const Trial& tr = log.trials[t - 1];
    CHECK(tr.index == t);
    CHECK(tr.source == TrialSource::Random);
    CHECK(tr.wall_ms == 0);
    CHECK(is_feasible(log.space, tr.design));
    CHECK(tr.rng_seed == derive_seed(5, kStreamTrial, t));
    Rng rng(tr.rng_seed);
    Vec z = sample_uniform(log.space, rng);
    CHECK(same_vec(tr.design, z));
    CHECK(same_bits(tr.reward, oracle_eval(spec, z, rng)));
  }
  validate(log);
}

TEST_CASE("grid campaigns evaluate the lattice in enumeration order") {
  OracleSpec spec = parse_oracle("airplane3");
  CampaignConfig cfg;
  cfg.method = Method::Grid;
  cfg.master_seed = 3;
  TrialLog log = run_campaign(spec, cfg);
  const std::vector<Vec> pts = grid_points(spec.space, {5, 5, 4}, 100);
  REQUIRE(log.trials.size() == pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    CHECK(same_vec(log.trials[i].design, pts[i]));
    CHECK(log.trials[i].source == TrialSource::Grid);
    Rng rng(log.trials[i].rng_seed);
    CHECK(same_bits(log.trials[i].reward, oracle_eval(spec, pts[i], rng)));
  }
}

TEST_CASE("snes campaigns match a manual ask/eval/tell replay") {
  OracleSpec spec = parse_oracle("sphere?dim=3&noise=0.05");
  CampaignConfig cfg;
  cfg.method = Method::Snes;
  cfg.snes_pop = 4;
  cfg.snes_gens = 3;
  cfg.master_seed = 9;
  TrialLog log = run_campaign(spec, cfg);
  REQUIRE(log.trials.size() == 12);

  SnesState st = make_snes_state(spec.space);
  int t = 0;
  for (int g = 0; g < 3; ++g) {
    Rng grng(derive_seed(9, kStreamSnesGen, g));
    SnesSample smp = snes_ask(st, spec.space, 4, grng);
    std::vector<double> rewards(4);
    for (int i = 0; i < 4; ++i, ++t) {
      Rng rng(derive_seed(9, kStreamTrial, t + 1));
      rewards[i] = oracle_eval(spec, smp.z[i], rng);
      CHECK(same_vec(log.trials[t].design, smp.z[i]));
      CHECK(same_bits(log.trials[t].reward, rewards[i]));
      CHECK(log.trials[t].source == TrialSource::Snes);
    }
    snes_tell(st, smp.s, rewards);
  }
}

TEST_CASE("eps-greedy campaigns tag trials and replay per-trial proposals") {
  OracleSpec spec = parse_oracle("sphere?dim=2&noise=0.05");
  CampaignConfig cfg;
  cfg.budget = 5;
  cfg.epsilon = 0.6;
  cfg.master_seed = 11;
  cfg.train_cfg.iters = 20;
  cfg.inv_cfg.restarts = 2;
  cfg.inv_cfg.steps = 5;
  TrialLog log = run_campaign(spec, cfg);
  REQUIRE(log.trials.size() == 5);
  CHECK(log.trials[0].source == TrialSource::Explore);  // empty history

  int exploits = 0;
  for (int t = 1; t <= 5; ++t) {
    const Trial& tr = log.trials[t - 1];
    CHECK(tr.rng_seed == derive_seed(11, kStreamTrial, t));
    TrialLog prefix = log;
    prefix.trials.assign(log.trials.begin(), log.trials.begin() + (t - 1));
    Rng rng(tr.rng_seed);
    auto [z, src] = propose_next(prefix, log.space, cfg.train_cfg, cfg.inv_cfg,
                                 cfg.epsilon, rng);
    CHECK(same_vec(tr.design, z));
    CHECK(tr.source == src);
    CHECK(same_bits(tr.reward, oracle_eval(spec, z, rng)));
    exploits += src == TrialSource::Exploit ? 1 : 0;
  }
  CHECK(exploits >= 1);  // seed 11 must exercise the exploit path
}

TEST_CASE("an interrupted campaign continues bitwise identically") {
  struct Case {
    const char* oracle;
    Method method;
    int cut;
  };
  const Case cases[] = {
      {"sphere?dim=2&noise=0.1", Method::Random, 4},
      {"sphere?dim=3", Method::Grid, 7},
      {"sphere?dim=2&noise=0.05", Method::Snes, 7},  // mid-generation
      {"sphere?dim=2", Method::EpsGreedy, 3},
  };
  for (const Case& c : cases) {
    CAPTURE(c.oracle);
    OracleSpec spec = parse_oracle(c.oracle);
    CampaignConfig cfg;
    cfg.method = c.method;
    cfg.master_seed = 21;
    cfg.budget = 10;
    cfg.grid_shape = spec.space.dim == 3 ? std::vector<int>{3, 3, 2} : std::vector<int>{};
    cfg.snes_pop = 3;
    cfg.snes_gens = 4;
    cfg.epsilon = 0.5;
    cfg.train_cfg.iters = 15;
    cfg.inv_cfg.restarts = 2;
    cfg.inv_cfg.steps = 4;

    TrialLog full = run_campaign(spec, cfg);
    TrialLog cut = full;
    cut.trials.resize(c.cut);
    continue_campaign(cut, spec, cfg);

    REQUIRE(cut.trials.size() == full.trials.size());
    for (size_t i = 0; i < full.trials.size(); ++i) {
      CHECK(cut.trials[i].index == full.trials[i].index);
      CHECK(same_vec(cut.trials[i].design, full.trials[i].design));
      CHECK(same_bits(cut.trials[i].reward, full.trials[i].reward));
      CHECK(cut.trials[i].source == full.trials[i].source);
      CHECK(cut.trials[i].rng_seed == full.trials[i].rng_seed);
    }
  }
}

TEST_CASE("a failing oracle surfaces after the flushed prefix") {
  // A gripper oracle over the raw unit box skips the preset's margin-aware
  // space, so uniform draws eventually violate the cut-margin constraints.
  OracleSpec spec;
  spec.name = "gripper-unboxed";
  spec.kind = OracleKind::GripperSim;
  spec.dim = 4;
  spec.space = unit_box(4);
  CampaignConfig cfg;
  cfg.method = Method::Random;
  cfg.budget = 10;
  cfg.master_seed = 3;  // first draw feasible, a later one is not

  TrialLog log;
  log.space = spec.space;
  log.oracle_name = spec.name;
  log.method = to_string(cfg.method);
  log.master_seed = cfg.master_seed;
  size_t flushed = 0;
  CHECK_THROWS_AS(
      continue_campaign(log, spec, cfg, [&](const Trial&) { ++flushed; }),
      OracleError);
  CHECK(flushed == log.trials.size());
  CHECK(flushed >= 1);
  CHECK(flushed < 10);
  validate(log);  // the prefix is still a coherent log
}
