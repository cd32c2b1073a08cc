#include "slowvar/binning.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "slowvar/errors.hpp"

namespace slowvar {

std::string to_string(PartitionSource s) {
  switch (s) {
    case PartitionSource::ground_truth:
      return "ground-truth";
    case PartitionSource::eigenvector:
      return "eigenvector";
    case PartitionSource::denoised:
      return "denoised";
    case PartitionSource::truncated:
      return "truncated";
  }
  return "?";
}

std::vector<std::size_t> Partition::cardinalities() const {
  std::vector<std::size_t> c;
  c.reserve(bins.size());
  for (const auto& b : bins) c.push_back(b.size());
  return c;
}

std::vector<int> Partition::labels(std::size_t n_states) const {
  std::vector<int> lab(n_states, -1);
  for (std::size_t q = 0; q < bins.size(); ++q)
    for (std::size_t i : bins[q]) {
      if (i >= n_states) throw DomainError("partition refers to a state outside the domain");
      if (lab[i] >= 0) throw DomainError("partition bins overlap");
      lab[i] = int(q);
    }
  return lab;
}

double theta_score(std::span<const std::size_t> c) {
  double t = 0.0;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    const double d = double(c[i]) - double(c[i + 1]);
    t += d * d;
  }
  return t;
}

double theta_score(const Partition& p) {
  const auto c = p.cardinalities();
  return theta_score(c);
}

SortedIncrements sort_and_increments(std::span<const double> phi) {
  if (phi.size() < 2) throw DomainError("sort_and_increments: need at least two values");
  SortedIncrements s;
  s.order.resize(phi.size());
  std::iota(s.order.begin(), s.order.end(), std::size_t{0});
  std::stable_sort(s.order.begin(), s.order.end(), [&](std::size_t a, std::size_t b) { return phi[a] > phi[b]; });
  s.sorted.resize(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) s.sorted[i] = phi[s.order[i]];
  s.delta.resize(phi.size() - 1);
  for (std::size_t i = 0; i + 1 < phi.size(); ++i) s.delta[i] = s.sorted[i] - s.sorted[i + 1];
  return s;
}

std::size_t select_k(std::span<const double> d, std::optional<std::size_t> override_k, std::size_t k_min) {
  if (override_k) {
    if (*override_k < 1) throw ConfigError("k must be at least 1");
    return *override_k;
  }
  const std::size_t n = d.size() + 1;  // number of states
  if (d.empty() || !(d[0] > 0.0)) return 1;
  std::size_t best_t = 0;
  double best = -1.0;
  // 1-based t in [k_min, n/2]: ratio d_t / d_{t+1}.
  for (std::size_t t = k_min; t <= n / 2 && t < d.size(); ++t) {
    const double num = d[t - 1], den = d[t];
    if (!(num > 0.0)) break;
    const double ratio = den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
    if (ratio > best) {
      best = ratio;
      best_t = t;
    }
    if (std::isinf(ratio)) break;
  }
  if (best_t == 0) return 1;
  return best_t + 1;
}

std::size_t select_k_from_increments(std::span<const double> delta, std::optional<std::size_t> override_k) {
  std::vector<double> d(delta.begin(), delta.end());
  std::sort(d.begin(), d.end(), std::greater<>());
  return select_k(d, override_k);
}

Partition partition_from_delimiters(const SortedIncrements& inc, std::size_t k) {
  const std::size_t n = inc.order.size();
  if (k < 1 || k > n) throw DomainError("partition_from_delimiters: need 1 <= k <= N");
  std::vector<std::size_t> pos(inc.delta.size());
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  std::stable_sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) { return inc.delta[a] > inc.delta[b]; });
  std::vector<std::size_t> cuts(pos.begin(), pos.begin() + std::ptrdiff_t(k - 1));
  std::sort(cuts.begin(), cuts.end());
  Partition p;
  p.source = PartitionSource::eigenvector;
  std::size_t start = 0;
  for (std::size_t c = 0; c <= cuts.size(); ++c) {
    const std::size_t stop = c < cuts.size() ? cuts[c] + 1 : n;
    std::vector<std::size_t> bin(inc.order.begin() + std::ptrdiff_t(start), inc.order.begin() + std::ptrdiff_t(stop));
    std::sort(bin.begin(), bin.end());
    p.bins.push_back(std::move(bin));
    start = stop;
  }
  p.theta = theta_score(p);
  return p;
}

Partition partition_from_delimiters(std::span<const double> phi, std::size_t k) {
  return partition_from_delimiters(sort_and_increments(phi), k);
}

Partition denoise(const Partition& in) {
  if (in.bins.size() < 2) throw DomainError("denoise: need at least two bins");
  Partition p = in;
  std::vector<std::size_t> c = p.cardinalities();
  double theta = theta_score(c);
  auto sq = [](double v) { return v * v; };
  for (;;) {
    const std::size_t k = c.size();
    if (k < 2) break;
    // Theta after merging i and i+1 differs from theta only in the terms touching them.
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      const double a = double(c[i]), b = double(c[i + 1]), m = a + b;
      double change = -sq(a - b);
      if (i > 0) change += sq(double(c[i - 1]) - m) - sq(double(c[i - 1]) - a);
      if (i + 2 < k) change += sq(m - double(c[i + 2])) - sq(b - double(c[i + 2]));
      const double alpha = theta + change;
      if (alpha < best) {
        best = alpha;
        arg = i;
      }
    }
    if (!(best < theta)) break;
    auto& into = p.bins[arg];
    into.insert(into.end(), p.bins[arg + 1].begin(), p.bins[arg + 1].end());
    std::sort(into.begin(), into.end());
    p.bins.erase(p.bins.begin() + std::ptrdiff_t(arg + 1));
    c[arg] += c[arg + 1];
    c.erase(c.begin() + std::ptrdiff_t(arg + 1));
    theta = theta_score(c);
  }
  p.theta = theta;
  p.source = PartitionSource::denoised;
  return p;
}

Partition truncate_boundary(const Partition& in, const LatticeDomain& domain, int w) {
  if (w < 0) throw ConfigError("truncation band must be non-negative");
  Partition p;
  p.source = in.source == PartitionSource::ground_truth ? PartitionSource::ground_truth : PartitionSource::truncated;
  State x(domain.dim());
  for (const auto& bin : in.bins) {
    bool keep = false;
    for (std::size_t i : bin) {
      domain.state(i, x);
      if (domain.boundary_distance(x) >= w) {
        keep = true;
        break;
      }
    }
    if (keep) p.bins.push_back(bin);
  }
  if (p.bins.empty()) throw NumericalError("boundary truncation removed every bin");
  p.theta = theta_score(p);
  return p;
}

LevelSets level_sets(const LatticeDomain& domain, std::span<const double> weights) {
  if (weights.size() != domain.dim()) throw ConfigError("slow weights do not match the domain dimension");
  // Group by exact value; weights like 1/2 or integers give exact sums.
  std::map<double, std::vector<std::size_t>> groups;
  State x(domain.dim());
  for (std::size_t i = 0; i < domain.size(); ++i) {
    domain.state(i, x);
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += weights[k] * x[k];
    groups[s].push_back(i);
  }
  LevelSets out;
  out.partition.source = PartitionSource::ground_truth;
  for (auto& [s, members] : groups) {
    out.values.push_back(s);
    out.partition.bins.push_back(std::move(members));
  }
  out.partition.theta = theta_score(out.partition);
  return out;
}

void write_partition_csv(std::ostream& out, const Partition& p, const LatticeDomain& domain) {
  out << "state_index";
  for (std::size_t k = 0; k < domain.dim(); ++k) out << ",x" << k + 1;
  out << ",bin_id\n";
  const auto lab = p.labels(domain.size());
  for (std::size_t i = 0; i < lab.size(); ++i) {
    if (lab[i] < 0) continue;
    out << i;
    for (int v : domain.state(i)) out << "," << v;
    out << "," << lab[i] << "\n";
  }
}

Partition read_partition_csv(std::istream& in, std::size_t n_states) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty partition file");
  std::vector<std::vector<std::size_t>> bins;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto first = line.find(',');
    const auto last = line.rfind(',');
    if (first == std::string::npos) throw ConfigError("malformed partition row: " + line);
    const std::size_t idx = std::stoul(line.substr(0, first));
    const long bin = std::stol(line.substr(last + 1));
    if (idx >= n_states || bin < 0) throw ConfigError("partition row out of range: " + line);
    if (std::size_t(bin) >= bins.size()) bins.resize(std::size_t(bin) + 1);
    bins[std::size_t(bin)].push_back(idx);
  }
  Partition p;
  for (auto& b : bins) {
    if (b.empty()) throw ConfigError("partition file has an empty bin");
    std::sort(b.begin(), b.end());
  }
  p.bins = std::move(bins);
  p.theta = theta_score(p);
  p.source = PartitionSource::truncated;
  return p;
}

void write_cardinality_csv(std::ostream& out, const Partition& p) {
  out << "bin_id,cardinality\n";
  for (std::size_t q = 0; q < p.bins.size(); ++q) out << q << "," << p.bins[q].size() << "\n";
}

}  // namespace slowvar
