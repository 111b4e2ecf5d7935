#include "sforge/snes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sforge/error.hpp"

namespace sforge {

SnesState make_snes_state(const DesignSpace& space) {
  SnesState st;
  st.mu = midpoint(space);
  st.sigma.resize(space.dim);
  for (int i = 0; i < space.dim; ++i)
    st.sigma[i] = std::max((space.upper[i] - space.lower[i]) / 4.0, 1e-12);
  st.eta_mu = 1.0;
  const double d = static_cast<double>(space.dim);
  st.eta_sigma = (3.0 + std::log(d)) / (5.0 * std::sqrt(d));
  return st;
}

SnesSample snes_ask(const SnesState& st, const DesignSpace& space, int pop, Rng& rng) {
  if (pop < 2) throw ConfigError("snes population must be at least 2");
  const int d = static_cast<int>(st.mu.size());
  if (d != space.dim) throw DimensionError("snes state width does not match the space");
  SnesSample out;
  out.z.reserve(pop);
  out.s.reserve(pop);
  for (int i = 0; i < pop; ++i) {
    Vec s(d), z(d);
    for (int j = 0; j < d; ++j) {
      s[j] = rng.normal();
      z[j] = st.mu[j] + st.sigma[j] * s[j];
    }
    out.z.push_back(project(space, z));
    out.s.push_back(std::move(s));
  }
  return out;
}

std::vector<double> snes_utilities(const std::vector<double>& rewards) {
  const int p = static_cast<int>(rewards.size());
  if (p < 2) throw ConfigError("snes needs at least 2 rewards");
  for (double r : rewards)
    if (!std::isfinite(r)) throw ConfigError("snes reward is not finite");

  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return rewards[a] > rewards[b]; });

  std::vector<double> rank(p);  // 1-based, ties averaged
  int a = 0;
  while (a < p) {
    int b = a + 1;
    while (b < p && rewards[order[b]] == rewards[order[a]]) ++b;
    // One tie group spanning the population normalizes to exactly 1/p per
    // member, so the shifted utilities vanish.
    if (b - a == p) return std::vector<double>(p, 0.0);
    const double avg = 0.5 * ((a + 1) + b);
    for (int k = a; k < b; ++k) rank[order[k]] = avg;
    a = b;
  }

  const double off = std::log(p / 2.0 + 1.0);
  std::vector<double> u(p);
  double total = 0.0;
  for (int i = 0; i < p; ++i) {
    u[i] = std::max(0.0, off - std::log(rank[i]));
    total += u[i];
  }
  for (int i = 0; i < p; ++i) u[i] = u[i] / total - 1.0 / p;
  return u;
}

void snes_tell(SnesState& st, const std::vector<Vec>& s, const std::vector<double>& rewards) {
  const int p = static_cast<int>(s.size());
  if (static_cast<int>(rewards.size()) != p)
    throw ConfigError("snes rewards/samples length mismatch");
  const int d = static_cast<int>(st.mu.size());
  for (const Vec& si : s)
    if (static_cast<int>(si.size()) != d)
      throw DimensionError("snes sample width does not match the state");

  const std::vector<double> u = snes_utilities(rewards);
  for (int j = 0; j < d; ++j) {
    double gm = 0.0, gs = 0.0;
    for (int i = 0; i < p; ++i) {
      gm += u[i] * s[i][j];
      gs += u[i] * (s[i][j] * s[i][j] - 1.0);
    }
    st.mu[j] += st.eta_mu * st.sigma[j] * gm;
    st.sigma[j] *= std::exp(0.5 * st.eta_sigma * gs);
  }
  st.generation += 1;
}

}  // namespace sforge
