#include "slowvar/network_file.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "slowvar/errors.hpp"

namespace slowvar {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Parses "2 X1 + X2" into coefficients per species. "0" or "" is the empty side.
std::vector<int> parse_side(const std::string& side, const std::vector<std::string>& species, int line) {
  std::vector<int> coeff(species.size(), 0);
  std::string s = trim(side);
  if (s.empty() || s == "0" || s == "∅") return coeff;
  std::stringstream ss(s);
  std::string term;
  while (std::getline(ss, term, '+')) {
    term = trim(term);
    if (term.empty()) throw ConfigError("line " + std::to_string(line) + ": empty term in reaction");
    int mult = 1;
    std::istringstream ts(term);
    std::string first, second;
    ts >> first >> second;
    std::string name = first;
    if (!second.empty()) {
      try {
        mult = std::stoi(first);
      } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": bad coefficient '" + first + "'");
      }
      name = second;
    }
    auto it = std::find(species.begin(), species.end(), name);
    if (it == species.end()) throw ConfigError("line " + std::to_string(line) + ": unknown species '" + name + "'");
    coeff[std::size_t(it - species.begin())] += mult;
  }
  return coeff;
}

}  // namespace

Model parse_network(std::istream& in, const std::string& name, const VolumeScaling* override_scaling) {
  std::vector<std::string> species;
  double volume = 1.0;
  VolumeScaling scaling = VolumeScaling::stated;
  std::optional<std::vector<double>> weights;
  std::vector<int> lo, hi;
  struct RawReaction {
    std::string text;
    int line;
  };
  std::vector<RawReaction> raw;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    // Lists may be separated by commas or blanks.
    std::string listed = value;
    if (key != "reaction") std::replace(listed.begin(), listed.end(), ',', ' ');
    std::istringstream vs(listed);
    auto finish = [&] {
      if (!vs.eof()) throw ConfigError("line " + std::to_string(lineno) + ": cannot parse value of '" + key + "'");
    };
    if (key == "species") {
      std::string sp;
      while (vs >> sp) species.push_back(sp);
      finish();
    } else if (key == "volume") {
      vs >> volume >> std::ws;
      finish();
    } else if (key == "convention") {
      scaling = volume_scaling_from_string(value);
    } else if (key == "slow_weights") {
      weights.emplace();
      double w;
      while (vs >> w) weights->push_back(w);
      finish();
    } else if (key == "domain_lo") {
      int v;
      while (vs >> v) lo.push_back(v);
      finish();
    } else if (key == "domain_hi") {
      int v;
      while (vs >> v) hi.push_back(v);
      finish();
    } else if (key == "reaction") {
      raw.push_back({value, lineno});
    } else {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (override_scaling) scaling = *override_scaling;
  if (species.empty()) throw ConfigError("network file: missing species");
  if (lo.empty() || hi.empty()) throw ConfigError("network file: missing domain_lo / domain_hi");

  std::vector<Reaction> reactions;
  for (const auto& rr : raw) {
    const auto arrow = rr.text.find("->");
    const auto at = rr.text.find('@');
    if (arrow == std::string::npos || at == std::string::npos || at < arrow)
      throw ConfigError("line " + std::to_string(rr.line) + ": reaction must read 'reactants -> products @ rate'");
    const auto reac = parse_side(rr.text.substr(0, arrow), species, rr.line);
    const auto prod = parse_side(rr.text.substr(arrow + 2, at - arrow - 2), species, rr.line);

    std::istringstream rs(rr.text.substr(at + 1));
    double k = 0.0;
    if (!(rs >> k)) throw ConfigError("line " + std::to_string(rr.line) + ": missing rate");
    int vpow = 0;
    std::string vtok;
    if (rs >> vtok) {
      if (vtok.rfind("V^", 0) != 0) throw ConfigError("line " + std::to_string(rr.line) + ": expected V^p after rate");
      vpow = std::stoi(vtok.substr(2));
    }

    Reaction r;
    r.stoich.resize(species.size());
    for (std::size_t s = 0; s < species.size(); ++s) r.stoich[s] = prod[s] - reac[s];
    r.rate = scaling == VolumeScaling::stated ? k * std::pow(volume, vpow) : k;
    r.label = "R" + std::to_string(reactions.size() + 1);

    std::vector<std::size_t> ops;
    int order = 0;
    for (std::size_t s = 0; s < species.size(); ++s) {
      if (reac[s] < 0) throw ConfigError("line " + std::to_string(rr.line) + ": negative coefficient");
      order += reac[s];
      if (reac[s] > 0) ops.push_back(s);
    }
    if (order == 0) {
      r.law = RateLaw::constant;
    } else if (order == 1) {
      r.law = RateLaw::linear;
      r.i = ops[0];
    } else if (order == 2 && ops.size() == 2) {
      r.law = RateLaw::bilinear;
      r.i = ops[0];
      r.j = ops[1];
    } else if (order == 2) {
      r.law = RateLaw::pair_quadratic;
      r.i = ops[0];
    } else {
      throw ConfigError("line " + std::to_string(rr.line) + ": only reactions of order at most two are supported");
    }
    reactions.push_back(std::move(r));
  }

  ReactionNetwork net(species, std::move(reactions), volume, scaling, std::move(weights));
  LatticeDomain domain(lo, hi);
  if (domain.dim() != species.size()) throw ConfigError("network file: domain dimension does not match species");
  return Model{std::move(net), std::move(domain), name};
}

Model parse_network(std::istream& in, const std::string& name) { return parse_network(in, name, nullptr); }

Model load_network_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open network file '" + path + "'");
  return parse_network(f, path);
}

}  // namespace slowvar
