#include "slowvar/slowchain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "slowvar/errors.hpp"
#include "slowvar/parallel.hpp"
#include "slowvar/simulate.hpp"

namespace slowvar {

AggregatedRates aggregate_rates(const ReactionNetwork& net, const LatticeDomain& domain, const Partition& p,
                                std::span<const ConditionalDistribution> conditionals) {
  const std::size_t k = p.bins.size();
  if (conditionals.size() != k) throw ConfigError("aggregate_rates: one conditional per bin required");
  const auto lab = p.labels(domain.size());
  AggregatedRates r;
  r.up.assign(k, 0.0);
  r.down.assign(k, 0.0);
  State x(domain.dim()), y(domain.dim());
  std::vector<double> alpha(net.reaction_count());
  for (std::size_t q = 0; q < k; ++q) {
    const auto& c = conditionals[q];
    if (c.states.size() != c.probs.size()) throw ConfigError("aggregate_rates: conditional lacks state support");
    double stray = 0.0;
    for (std::size_t t = 0; t < c.states.size(); ++t) {
      const double pr = c.probs[t];
      if (pr == 0.0) continue;
      if (lab[c.states[t]] != int(q)) throw ConfigError("aggregate_rates: conditional support outside its bin");
      domain.state(c.states[t], x);
      propensities(net, x, alpha);
      for (std::size_t j = 0; j < alpha.size(); ++j) {
        if (alpha[j] == 0.0) continue;
        const auto& nu = net.reaction(j).stoich;
        for (std::size_t d = 0; d < x.size(); ++d) y[d] = x[d] + nu[d];
        if (!domain.contains(y)) continue;
        const int ly = lab[domain.index(y)];
        if (ly < 0 || ly == int(q)) continue;
        if (ly == int(q) + 1)
          r.up[q] += pr * alpha[j];
        else if (ly == int(q) - 1)
          r.down[q] += pr * alpha[j];
        else
          stray += pr * alpha[j];
      }
    }
    if (stray > 1e-12) {
      std::ostringstream msg;
      msg << "bin " << q << " has rate " << stray << " to non-adjacent bins; the slow chain is not birth-death";
      throw NumericalError(msg.str());
    }
  }
  return r;
}

std::vector<double> stationary_distribution(std::span<const double> up, std::span<const double> down) {
  const std::size_t k = up.size();
  if (k == 0 || down.size() != k) throw ConfigError("stationary_distribution: rate vectors must match and be non-empty");
  for (std::size_t t = 0; t < k; ++t)
    if (!(up[t] >= 0.0) || !(down[t] >= 0.0)) throw DomainError("rates must be non-negative");
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> lp(k, neg_inf);
  lp[0] = 0.0;
  for (std::size_t t = 0; t + 1 < k; ++t) {
    if (lp[t] == neg_inf || up[t] == 0.0) continue;
    if (down[t + 1] == 0.0) {
      std::ostringstream msg;
      msg << "slow chain decomposes: zero down-rate at bin " << t + 1 << " reachable from below";
      throw NumericalError(msg.str());
    }
    lp[t + 1] = lp[t] + std::log(up[t]) - std::log(down[t + 1]);
  }
  const double top = *std::max_element(lp.begin(), lp.end());
  std::vector<double> pi(k);
  double total = 0.0;
  for (std::size_t t = 0; t < k; ++t) total += (pi[t] = std::exp(lp[t] - top));
  for (double& v : pi) v /= total;
  return pi;
}

std::vector<double> balance_residuals(std::span<const double> up, std::span<const double> down,
                                      std::span<const double> pi) {
  const std::size_t k = pi.size();
  std::vector<double> res(k, 0.0);
  for (std::size_t s = 0; s < k; ++s) {
    const double out_up = s + 1 < k ? up[s] : 0.0;
    const double out_down = s > 0 ? down[s] : 0.0;
    double inflow = 0.0;
    if (s > 0) inflow += up[s - 1] * pi[s - 1];
    if (s + 1 < k) inflow += down[s + 1] * pi[s + 1];
    const double outflow = (out_up + out_down) * pi[s];
    const double scale = (up[s] + down[s]) * pi[s];
    res[s] = scale > 0.0 ? std::abs(inflow - outflow) / scale : std::abs(inflow - outflow);
  }
  return res;
}

std::vector<double> fokker_planck_stationary(std::span<const double> up, std::span<const double> down) {
  const std::size_t k = up.size();
  if (k == 0 || down.size() != k) throw ConfigError("fokker_planck_stationary: rate vectors must match");
  std::vector<double> g(k), D(k);
  for (std::size_t s = 0; s < k; ++s) {
    D[s] = up[s] + down[s];
    if (!(D[s] > 0.0)) {
      std::ostringstream msg;
      msg << "zero diffusion coefficient at level " << s;
      throw NumericalError(msg.str());
    }
    g[s] = 2.0 * (up[s] - down[s]) / D[s];
  }
  std::vector<double> lp(k);
  double G = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    if (s > 0) G += 0.5 * (g[s - 1] + g[s]);
    lp[s] = G - std::log(D[s]);
  }
  const double top = *std::max_element(lp.begin(), lp.end());
  std::vector<double> pi(k);
  double total = 0.0;
  for (std::size_t s = 0; s < k; ++s) total += (pi[s] = std::exp(lp[s] - top));
  for (double& v : pi) v /= total;
  return pi;
}

CmaResult cma_baseline(const ReactionNetwork& net, const LatticeDomain& domain, const Partition& levels,
                       std::uint64_t lc, std::uint64_t seed, std::uint64_t stream_base, int workers) {
  if (lc < 1) throw ConfigError("L_c must be at least 1");
  const std::size_t k = levels.bins.size();
  const LabelSlowCoordinate coord(domain, levels.labels(domain.size()));
  CmaResult r;
  r.up.assign(k, 0.0);
  r.down.assign(k, 0.0);
  r.time.assign(k, 0.0);
  parallel_for(k, workers, [&](std::size_t q) {
    RngStream rng(seed, stream_base + q);
    const State x0 = representative_state(domain, levels.bins[q]);
    const CssaStats st = cssa_run(net, domain, coord, x0, lc, rng, false);
    r.up[q] = double(st.up) / st.time;
    r.down[q] = double(st.down) / st.time;
    r.time[q] = st.time;
  });
  r.pi = fokker_planck_stationary(r.up, r.down);
  return r;
}

double silverman_bandwidth(std::span<const double> x, std::span<const double> w) {
  double total = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    total += w[i];
    mean += w[i] * x[i];
  }
  if (!(total > 0.0)) throw DomainError("silverman_bandwidth: zero total weight");
  mean /= total;
  double var = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) var += w[i] * (x[i] - mean) * (x[i] - mean);
  var /= total;
  return 1.06 * std::sqrt(var) * std::pow(double(x.size()), -0.2);
}

std::vector<double> kde_smooth(std::span<const double> x, std::span<const double> w, double h) {
  if (!(h > 0.0)) throw DomainError("kde_smooth: bandwidth must be positive");
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double z = (x[i] - x[j]) / h;
      out[i] += w[j] * std::exp(-0.5 * z * z);
    }
  double total = 0.0;
  for (double v : out) total += v;
  for (double& v : out) v /= total;
  return out;
}

void write_rates_csv(std::ostream& out, std::span<const double> s, std::span<const double> up,
                     std::span<const double> down) {
  out << "s,theta1,theta2,theta1_minus_theta2\n";
  out.precision(17);
  for (std::size_t i = 0; i < up.size(); ++i)
    out << s[i] << "," << up[i] << "," << down[i] << "," << up[i] - down[i] << "\n";
}

void write_pi_csv(std::ostream& out, std::span<const double> s, std::span<const double> pi) {
  out << "s,pi\n";
  out.precision(17);
  for (std::size_t i = 0; i < pi.size(); ++i) out << s[i] << "," << pi[i] << "\n";
}

}  // namespace slowvar
