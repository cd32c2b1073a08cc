#include "slowvar/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "slowvar/admgraph.hpp"
#include "slowvar/binning.hpp"
#include "slowvar/conditional.hpp"
#include "slowvar/covariance.hpp"
#include "slowvar/errors.hpp"
#include "slowvar/evaluate.hpp"
#include "slowvar/io.hpp"
#include "slowvar/network_file.hpp"
#include "slowvar/parallel.hpp"
#include "slowvar/simulate.hpp"
#include "slowvar/slowchain.hpp"
#include "slowvar/spectral.hpp"

#ifndef SLOWVAR_VERSION
#define SLOWVAR_VERSION "dev"
#endif

namespace slowvar {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------- config

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("invalid number for " + key + ": '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer for " + key + ": '" + v + "'");
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

void apply_config_value(PipelineConfig& cfg, const std::string& key_in, const std::string& value_in) {
  std::string key = key_in;
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string v = trim(value_in);
  if (key == "system") {
    cfg.system = v;
  } else if (key == "convention") {
    cfg.convention = volume_scaling_from_string(v);
  } else if (key == "epsilon") {
    cfg.epsilon = to_double(key, v);
  } else if (key == "rho") {
    cfg.rho = to_double(key, v);
  } else if (key == "dt") {
    cfg.dt = v == "auto" ? std::nullopt : std::optional<double>(to_double(key, v));
  } else if (key == "k") {
    if (v == "auto") {
      cfg.k.reset();
    } else {
      const long long k = to_int(key, v);
      if (k < 1) throw ConfigError("k must be at least 1");
      cfg.k = std::size_t(k);
    }
  } else if (key == "band") {
    cfg.band = v == "auto" ? std::nullopt : std::optional<int>(int(to_int(key, v)));
  } else if (key == "tol") {
    cfg.tol = to_double(key, v);
  } else if (key == "max_iters") {
    cfg.max_iters = int(to_int(key, v));
  } else if (key == "eigen_count") {
    cfg.eigen_count = int(to_int(key, v));
  } else if (key == "spectrum_count") {
    cfg.spectrum_count = int(to_int(key, v));
  } else if (key == "seed") {
    const long long s = to_int(key, v);
    if (s < 0) throw ConfigError("seed must be non-negative");
    cfg.seed = std::uint64_t(s);
  } else if (key == "lc") {
    cfg.lc_list.clear();
    for (const auto& item : split_list(v)) {
      const long long l = to_int(key, item);
      if (l < 1) throw ConfigError("L_c values must be positive");
      cfg.lc_list.push_back(std::uint64_t(l));
    }
  } else if (key == "cma_seeds") {
    cfg.cma_seeds = int(to_int(key, v));
  } else if (key == "conditional") {
    if (v == "projected")
      cfg.conditional = ConditionalMethod::projected;
    else if (v == "fast")
      cfg.conditional = ConditionalMethod::fast;
    else
      throw ConfigError("conditional must be 'projected' or 'fast'");
  } else if (key == "sim_t_end") {
    cfg.sim_t_end = to_double(key, v);
  } else if (key == "sim_points") {
    const long long n = to_int(key, v);
    if (n < 0) throw ConfigError("sim_points must be non-negative");
    cfg.sim_points = std::size_t(n);
  } else if (key == "sim_x0") {
    cfg.sim_x0.clear();
    for (const auto& item : split_list(v)) cfg.sim_x0.push_back(int(to_int(key, item)));
  } else if (key == "out" || key == "out_dir") {
    cfg.out_dir = v;
  } else if (key == "workers") {
    cfg.workers = int(to_int(key, v));
  } else {
    throw ConfigError("unknown configuration key '" + key_in + "'");
  }
}

void apply_config_file(PipelineConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    apply_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void PipelineConfig::validate() const {
  if (system.empty()) throw ConfigError("system must be cs1, cs2 or a network file");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(rho > 0.0)) throw ConfigError("rho must be positive");
  if (dt && !(*dt > 0.0)) throw ConfigError("dt must be positive");
  if (band && *band < 0) throw ConfigError("band must be non-negative");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  if (max_iters < 1) throw ConfigError("max_iters must be positive");
  if (eigen_count < 1) throw ConfigError("eigen_count must be at least 1");
  if (spectrum_count < 0) throw ConfigError("spectrum_count must be non-negative");
  if (lc_list.empty()) throw ConfigError("lc list must not be empty");
  if (cma_seeds < 1) throw ConfigError("cma_seeds must be at least 1");
  if (!(sim_t_end >= 0.0)) throw ConfigError("sim_t_end must be non-negative");
  if (workers < 0) throw ConfigError("workers must be non-negative");
}

std::string PipelineConfig::canonical() const {
  std::map<std::string, std::string> kv{
      {"system", system},
      {"convention", to_string(convention)},
      {"epsilon", fmt(epsilon)},
      {"rho", fmt(rho)},
      {"dt", dt ? fmt(*dt) : "auto"},
      {"k", k ? std::to_string(*k) : "auto"},
      {"band", band ? std::to_string(*band) : "auto"},
      {"tol", fmt(tol)},
      {"max_iters", std::to_string(max_iters)},
      {"eigen_count", std::to_string(eigen_count)},
      {"spectrum_count", std::to_string(spectrum_count)},
      {"seed", std::to_string(seed)},
      {"lc", join(lc_list)},
      {"cma_seeds", std::to_string(cma_seeds)},
      {"conditional", conditional == ConditionalMethod::projected ? "projected" : "fast"},
      {"sim_t_end", fmt(sim_t_end)},
      {"sim_points", std::to_string(sim_points)},
      {"sim_x0", join(sim_x0)},
  };
  std::ostringstream s;
  for (const auto& [k_, v] : kv) s << k_ << "=" << v << "\n";
  return s.str();
}

std::string PipelineConfig::hash() const { return hex64(fnv1a(canonical())); }

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"simulate", "covariance", "graph",    "spectrum", "bin",
                                              "conditional", "stationary", "evaluate", "cma",    "all"};
  return names;
}

Model load_model(const PipelineConfig& cfg) {
  if (cfg.system == "cs1") return builtin_cs1();
  if (cfg.system == "cs2") return builtin_cs2(cfg.convention);
  std::ifstream in(cfg.system);
  if (!in) throw ConfigError("system '" + cfg.system + "' is neither cs1, cs2 nor a readable network file");
  return parse_network(in, cfg.system, &cfg.convention);
}

// ---------------------------------------------------------------- stages

namespace {

using Clock = std::chrono::steady_clock;

// Stream ids of the pseudo-random consumers.
constexpr std::uint64_t kSimulateStream = 0x51u;
constexpr std::uint64_t kCmaStreamBase = 1ull << 40;

struct Context {
  const PipelineConfig& cfg;
  Model model;
  fs::path dir;
  std::ostream& log;
  int workers;
};

fs::path art(const Context& c, const std::string& name) { return c.dir / name; }

void require(const Context& c, const std::string& name, const std::string& stage) {
  if (!fs::exists(art(c, name)))
    throw MissingPrerequisite("missing artifact " + art(c, name).string() + ": run the '" + stage + "' stage first");
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw MissingPrerequisite("cannot read " + p.string());
  return json::parse(in);
}

void write_json(const fs::path& p, const json& j) {
  write_atomic(p, [&](std::ostream& o) { o << j.dump(2) << "\n"; });
}

void record_stage(const Context& c, const std::string& stage, const std::vector<std::string>& inputs,
                  const std::vector<std::string>& outputs, double runtime) {
  const fs::path mpath = art(c, "manifest.json");
  json m = fs::exists(mpath) ? read_json(mpath) : json::object();
  m["version"] = SLOWVAR_VERSION;
  m["config_hash"] = c.cfg.hash();
  json cfg = json::object();
  std::istringstream canon(c.cfg.canonical());
  std::string line;
  while (std::getline(canon, line)) {
    const auto eq = line.find('=');
    cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }
  m["config"] = cfg;
  json entry;
  entry["config_hash"] = c.cfg.hash();
  entry["inputs"] = json::object();
  for (const auto& f : inputs) entry["inputs"][f] = hex64(fnv1a_file(art(c, f)));
  entry["outputs"] = json::object();
  for (const auto& f : outputs) entry["outputs"][f] = hex64(fnv1a_file(art(c, f)));
  entry["runtime_s"] = runtime;
  m["stages"][stage] = entry;
  write_json(mpath, m);
}

double stage_runtime(const Context& c, const std::string& stage) {
  const fs::path mpath = art(c, "manifest.json");
  if (!fs::exists(mpath)) return 0.0;
  const json m = read_json(mpath);
  if (!m.contains("stages") || !m["stages"].contains(stage)) return 0.0;
  return m["stages"][stage].value("runtime_s", 0.0);
}

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

State default_start(const LatticeDomain& d) {
  State x(d.dim());
  for (std::size_t k = 0; k < d.dim(); ++k) x[k] = (d.lo()[k] + d.hi()[k]) / 2;
  return x;
}

// Samples the piecewise-constant path on a uniform grid of n intervals.
SsaTrajectory resample(const SsaTrajectory& path, std::size_t n) {
  SsaTrajectory out;
  out.truncated = path.truncated;
  const double t_end = path.times.back();
  std::size_t j = 0;
  for (std::size_t g = 0; g <= n; ++g) {
    const double t = t_end * double(g) / double(n);
    while (j + 1 < path.times.size() && path.times[j + 1] <= t) ++j;
    out.times.push_back(t);
    out.states.push_back(path.states[j]);
  }
  return out;
}

void stage_simulate(Context& c) {
  const auto t0 = Clock::now();
  State x0 = c.cfg.sim_x0.empty() ? default_start(c.model.domain) : State(c.cfg.sim_x0);
  RngStream rng(c.cfg.seed, kSimulateStream);
  auto traj = ssa_run(c.model.network, x0, c.cfg.sim_t_end, rng, &c.model.domain);
  const std::size_t events = traj.times.size();
  if (c.cfg.sim_points > 0 && events > c.cfg.sim_points + 1) traj = resample(traj, c.cfg.sim_points);
  write_atomic(art(c, "trajectory.csv"), [&](std::ostream& o) { write_trajectory_csv(o, traj, c.model.network); });
  c.log << "simulate: " << events << " events, " << traj.times.size() << " points written" << (traj.truncated ? " (absorbed early)" : "") << "\n";
  record_stage(c, "simulate", {}, {"trajectory.csv"}, elapsed(t0));
}

double calibration_target(const PipelineConfig& cfg) { return 1.0 / (cfg.epsilon * cfg.epsilon); }

void stage_covariance(Context& c) {
  const auto t0 = Clock::now();
  const auto& net = c.model.network;
  const auto& dom = c.model.domain;
  const double med1 = median_min_eigenvalue(net, dom);
  if (!(med1 > 0.0)) throw NumericalError("covariance: median smallest eigenvalue is zero, cannot calibrate");
  const double dt = c.cfg.dt ? *c.cfg.dt : calibration_target(c.cfg) / med1;
  const auto covs = all_covariances(net, dom, dt, c.workers);
  std::size_t singular = 0;
  for (const auto& cv : covs) singular += cv.singular;
  if (singular) c.log << "warning: " << singular << " states have a singular covariance; pseudo-inverse used\n";
  write_atomic(art(c, "covariance.csv"), [&](std::ostream& o) { write_covariance_csv(o, dom, covs); });
  json j;
  j["dt"] = dt;
  j["calibrated"] = !c.cfg.dt.has_value();
  j["target_median_lambda_min"] = calibration_target(c.cfg);
  j["median_lambda_min"] = med1 * dt;
  j["singular_states"] = singular;
  write_json(art(c, "calibration.json"), j);
  c.log << "covariance: dt = " << dt << ", median lambda_min = " << med1 * dt << "\n";
  record_stage(c, "covariance", {}, {"covariance.csv", "calibration.json"}, elapsed(t0));
}

void stage_graph(Context& c) {
  const auto t0 = Clock::now();
  require(c, "calibration.json", "covariance");
  const json cal = read_json(art(c, "calibration.json"));
  const double dt = cal.at("dt").get<double>();
  const auto covs = all_covariances(c.model.network, c.model.domain, dt, c.workers);
  const auto g = build_graph(c.model.domain, covs, c.cfg.rho, c.cfg.epsilon, c.workers);
  write_atomic(art(c, "graph.bin"), [&](std::ostream& o) { write_graph_binary(o, g); }, true);
  write_atomic(art(c, "degree_histogram.csv"), [&](std::ostream& o) { write_degree_histogram_csv(o, g); });
  write_atomic(art(c, "degree_scatter.csv"), [&](std::ostream& o) { write_degree_scatter_csv(o, g, c.model.domain); });
  json j;
  j["nodes"] = g.node_count();
  j["edges"] = g.edge_count();
  j["epsilon"] = g.epsilon;
  j["rho"] = g.rho;
  j["radius"] = g.rho * g.epsilon;
  write_json(art(c, "graph.json"), j);
  c.log << "graph: " << g.node_count() << " nodes, " << g.edge_count() << " edges\n";
  record_stage(c, "graph", {"calibration.json"},
               {"graph.bin", "graph.json", "degree_histogram.csv", "degree_scatter.csv"}, elapsed(t0));
}

SparseSimilarity load_graph(const Context& c) {
  require(c, "graph.bin", "graph");
  std::ifstream in(art(c, "graph.bin"), std::ios::binary);
  return read_graph_binary(in);
}

void stage_spectrum(Context& c) {
  const auto t0 = Clock::now();
  const auto g = load_graph(c);
  EigenOptions opt;
  opt.tol = c.cfg.tol;
  opt.max_iters = c.cfg.max_iters;
  const int d = c.cfg.eigen_count;
  const EigenResult r = top_eigenpairs(g, d, opt);
  write_atomic(art(c, "eigenvectors.csv"), [&](std::ostream& o) { write_eigenvectors_csv(o, r, c.model.domain); });
  write_atomic(art(c, "eigenvalues.csv"), [&](std::ostream& o) {
    o << "k,lambda,one_minus_lambda,residual\n";
    o.precision(17);
    for (Eigen::Index k = 0; k < r.values.size(); ++k)
      o << k + 1 << "," << r.values(k) << "," << 1.0 - r.values(k) << "," << r.residuals(k) << "\n";
  });
  std::vector<std::string> outputs{"eigenvectors.csv", "eigenvalues.csv"};
  c.log << "spectrum: lambda_1 = " << r.values(0) << " (1 - lambda_1 = " << 1.0 - r.values(0) << "), "
        << r.iterations << " iterations\n";
  if (c.cfg.spectrum_count > 1) {
    // Figure data only, so a looser tolerance is enough.
    EigenOptions sopt = opt;
    sopt.tol = std::max(opt.tol, 1e-8);
    const auto k = std::min<std::size_t>(std::size_t(c.cfg.spectrum_count), g.node_count());
    const auto spec = combinatorial_spectrum(g, int(k), sopt);
    write_atomic(art(c, "spectrum.csv"), [&](std::ostream& o) {
      o << "i,one_minus_lambda\n";
      o.precision(17);
      for (std::size_t i = 0; i < spec.size(); ++i) o << i << "," << spec[i] << "\n";
    });
    outputs.push_back("spectrum.csv");
  }
  record_stage(c, "spectrum", {"graph.bin"}, outputs, elapsed(t0));
}

int default_band(const Context& c) {
  if (c.cfg.band) return *c.cfg.band;
  require(c, "calibration.json", "covariance");
  const json cal = read_json(art(c, "calibration.json"));
  const double med = cal.at("median_lambda_min").get<double>();
  return int(std::ceil(c.cfg.rho * c.cfg.epsilon * std::sqrt(med) - 1e-9));
}

Partition load_partition(const Context& c, const std::string& name = "partition.csv") {
  require(c, name, "bin");
  std::ifstream in(art(c, name));
  return read_partition_csv(in, c.model.domain.size());
}

void stage_bin(Context& c) {
  const auto t0 = Clock::now();
  require(c, "eigenvectors.csv", "spectrum");
  const auto& dom = c.model.domain;
  const CsvTable ev = read_csv(art(c, "eigenvectors.csv"));
  const std::size_t col = ev.column("phi1");
  if (ev.rows.size() != dom.size()) throw MissingPrerequisite("eigenvectors.csv does not match the domain; rerun 'spectrum'");
  std::vector<double> phi(dom.size());
  for (std::size_t i = 0; i < dom.size(); ++i) phi[i] = ev.rows[i][col];

  const SortedIncrements inc = sort_and_increments(phi);
  std::vector<double> desc = inc.delta;
  std::sort(desc.begin(), desc.end(), std::greater<>());
  const std::size_t k = select_k(desc, c.cfg.k);
  const Partition raw = partition_from_delimiters(inc, k);
  const Partition den = raw.size() >= 2 ? denoise(raw) : raw;
  const int band = default_band(c);
  const Partition fin = truncate_boundary(den, dom, band);

  write_atomic(art(c, "increments.csv"), [&](std::ostream& o) {
    o << "position,phi_sorted,delta,delta_sorted\n";
    o.precision(17);
    for (std::size_t i = 0; i < inc.delta.size(); ++i)
      o << i + 1 << "," << inc.sorted[i] << "," << inc.delta[i] << "," << desc[i] << "\n";
  });
  std::vector<std::string> outputs{"increments.csv"};
  const auto& w = c.model.network.slow_weights();
  if (w) {
    write_atomic(art(c, "eigen_vs_slow.csv"), [&](std::ostream& o) {
      o << "i,phi1,s\n";
      o.precision(17);
      for (std::size_t i = 0; i < dom.size(); ++i) o << i << "," << phi[i] << "," << *c.model.network.slow_value(dom.state(i)) << "\n";
    });
    const LevelSets truth = level_sets(dom, *w);
    write_atomic(art(c, "cardinality_truth.csv"), [&](std::ostream& o) { write_cardinality_csv(o, truth.partition); });
    outputs.insert(outputs.end(), {"eigen_vs_slow.csv", "cardinality_truth.csv"});
  }
  const std::pair<const char*, const Partition*> parts[] = {
      {"raw", &raw}, {"denoised", &den}, {"final", &fin}};
  for (const auto& [tag, p] : parts) {
    const std::string pname = std::string(tag) == "final" ? "partition.csv" : "partition_" + std::string(tag) + ".csv";
    const std::string cname = std::string(tag) == "final" ? "cardinality.csv" : "cardinality_" + std::string(tag) + ".csv";
    write_atomic(art(c, pname), [&](std::ostream& o) { write_partition_csv(o, *p, dom); });
    write_atomic(art(c, cname), [&](std::ostream& o) { write_cardinality_csv(o, *p); });
    outputs.push_back(pname);
    outputs.push_back(cname);
  }
  json j;
  j["k"] = k;
  j["k_source"] = c.cfg.k ? "override" : "largest-ratio";
  j["band"] = band;
  j["theta_raw"] = raw.theta;
  j["theta_denoised"] = den.theta;
  j["theta_final"] = fin.theta;
  j["bins_raw"] = raw.size();
  j["bins_denoised"] = den.size();
  j["bins_final"] = fin.size();
  if (w) j["theta_truth"] = level_sets(dom, *w).partition.theta;
  write_json(art(c, "binning.json"), j);
  outputs.push_back("binning.json");
  c.log << "bin: k = " << k << ", theta " << raw.theta << " -> " << den.theta << " (" << den.size()
        << " bins) -> " << fin.theta << " after band " << band << " (" << fin.size() << " bins)\n";
  record_stage(c, "bin", {"eigenvectors.csv", "calibration.json"}, outputs, elapsed(t0));
}

void stage_conditional(Context& c) {
  const auto t0 = Clock::now();
  const Partition p = load_partition(c);
  const auto& net = c.model.network;
  const auto& dom = c.model.domain;
  const ReactionClasses rc = classify_reactions(net, dom, p);
  for (std::size_t j : rc.ambiguous)
    c.log << "warning: reaction " << net.reaction(j).label << " is ambiguous (" << rc.slow_fraction[j]
          << " of moves change bin)\n";
  std::vector<ConditionalDistribution> conds(p.size());
  if (c.cfg.conditional == ConditionalMethod::projected) {
    const LabelSlowCoordinate coord(dom, p.labels(dom.size()));
    parallel_for(p.size(), c.workers, [&](std::size_t q) { conds[q] = projected_conditional(net, dom, coord, int(q)); });
  } else {
    parallel_for(p.size(), c.workers, [&](std::size_t q) {
      conds[q] = fast_subsystem_conditional(net, dom, p.bins[q], rc.fast);
      conds[q].bin = int(q);
    });
  }
  write_atomic(art(c, "conditionals.csv"), [&](std::ostream& o) {
    o << "bin_id,state_index";
    for (std::size_t k = 0; k < dom.dim(); ++k) o << ",x" << k + 1;
    o << ",prob\n";
    o.precision(17);
    for (std::size_t q = 0; q < conds.size(); ++q)
      for (std::size_t t = 0; t < conds[q].states.size(); ++t) {
        o << q << "," << conds[q].states[t];
        for (int v : dom.state(conds[q].states[t])) o << "," << v;
        o << "," << conds[q].probs[t] << "\n";
      }
  });
  json j;
  j["method"] = c.cfg.conditional == ConditionalMethod::projected ? "projected" : "fast";
  for (std::size_t r = 0; r < net.reaction_count(); ++r) {
    json e;
    e["label"] = net.reaction(r).label;
    e["slow_fraction"] = rc.slow_fraction[r];
    e["class"] = std::find(rc.slow.begin(), rc.slow.end(), r) != rc.slow.end() ? "slow" : "fast";
    e["ambiguous"] = std::find(rc.ambiguous.begin(), rc.ambiguous.end(), r) != rc.ambiguous.end();
    j["reactions"].push_back(e);
  }
  write_json(art(c, "reaction_classes.json"), j);
  c.log << "conditional: " << conds.size() << " bins (" << j["method"].get<std::string>() << ")\n";
  record_stage(c, "conditional", {"partition.csv"}, {"conditionals.csv", "reaction_classes.json"}, elapsed(t0));
}

std::vector<ConditionalDistribution> load_conditionals(const Context& c, std::size_t bins) {
  require(c, "conditionals.csv", "conditional");
  const CsvTable t = read_csv(art(c, "conditionals.csv"));
  const std::size_t cb = t.column("bin_id"), cs = t.column("state_index"), cx = t.column("x1"),
                    cp = t.column("prob");
  std::vector<ConditionalDistribution> out(bins);
  for (const auto& row : t.rows) {
    const auto q = std::size_t(row[cb]);
    if (q >= bins) throw MissingPrerequisite("conditionals.csv does not match partition.csv; rerun 'conditional'");
    out[q].bin = int(q);
    out[q].states.push_back(std::size_t(row[cs]));
    out[q].fast_values.push_back(int(row[cx]));
    out[q].probs.push_back(row[cp]);
  }
  return out;
}

void stage_stationary(Context& c) {
  const auto t0 = Clock::now();
  const Partition p = load_partition(c);
  const auto conds = load_conditionals(c, p.size());
  const AggregatedRates r = aggregate_rates(c.model.network, c.model.domain, p, conds);
  const auto pi = stationary_distribution(r.up, r.down);
  const auto res = balance_residuals(r.up, r.down, pi);
  double worst = 0.0;
  for (std::size_t s = 1; s + 1 < res.size(); ++s) worst = std::max(worst, res[s]);
  std::vector<double> ids(p.size());
  for (std::size_t q = 0; q < ids.size(); ++q) ids[q] = double(q);
  write_atomic(art(c, "rates.csv"), [&](std::ostream& o) { write_rates_csv(o, ids, r.up, r.down); });
  write_atomic(art(c, "pi.csv"), [&](std::ostream& o) { write_pi_csv(o, ids, pi); });
  json j;
  j["bins"] = p.size();
  j["max_balance_residual"] = worst;
  write_json(art(c, "stationary.json"), j);
  c.log << "stationary: " << p.size() << " bins, max balance residual " << worst << "\n";
  record_stage(c, "stationary", {"partition.csv", "conditionals.csv"}, {"rates.csv", "pi.csv", "stationary.json"},
               elapsed(t0));
}

GroundTruth ground_truth(const Context& c) {
  if (c.cfg.system == "cs1") return ground_truth_cs1(c.model);
  const auto& w = c.model.network.slow_weights();
  if (!w) throw ConfigError("evaluation needs slow_weights in the network definition");
  return full_cme_stationary(c.model.network, c.model.domain, *w);
}

void merge_report(const Context& c, const std::string& method, const std::vector<json>& records) {
  const fs::path path = art(c, "report.json");
  json all = fs::exists(path) ? read_json(path) : json::array();
  json kept = json::array();
  for (const auto& r : all)
    if (r.value("method", "") != method) kept.push_back(r);
  for (const auto& r : records) kept.push_back(r);
  // ADM-CLE first, then CMA by L_c.
  std::vector<json> sorted(kept.begin(), kept.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const json& a, const json& b) {
    const bool ac = a.value("method", "") == "CMA", bc = b.value("method", "") == "CMA";
    if (ac != bc) return !ac;
    if (!ac) return false;
    return a.value("Lc", 0) < b.value("Lc", 0);
  });
  write_json(path, json(sorted));
}

void write_ground_truth(const Context& c, const GroundTruth& gt) {
  write_atomic(art(c, "ground_truth.csv"), [&](std::ostream& o) { write_pi_csv(o, gt.levels, gt.marginal); });
}

void stage_evaluate(Context& c) {
  const auto t0 = Clock::now();
  const Partition p = load_partition(c);
  require(c, "pi.csv", "stationary");
  const CsvTable pit = read_csv(art(c, "pi.csv"));
  std::vector<double> pi;
  for (const auto& row : pit.rows) pi.push_back(row[pit.column("pi")]);
  if (pi.size() != p.size()) throw MissingPrerequisite("pi.csv does not match partition.csv; rerun 'stationary'");

  const GroundTruth gt = ground_truth(c);
  const std::size_t n = c.model.domain.size();
  const Eigen::MatrixXd J = jaccard_matrix(gt.level_sets, p, n);
  const Matching m = max_matching(J);
  const double error = aligned_l1_error(pi, gt.marginal, m, J);
  const double jmean = matched_jaccard_mean(m, J);
  double corr = 0.0;
  try {
    corr = ordering_correlation(m, J, gt.levels);
  } catch (const DomainError&) {
    corr = 0.0;
  }
  std::size_t perfect = 0, matched = 0;
  for (std::size_t i = 0; i < m.row_to_col.size(); ++i)
    if (m.row_to_col[i] >= 0) {
      ++matched;
      perfect += J(Eigen::Index(i), m.row_to_col[i]) == 1.0;
    }

  write_ground_truth(c, gt);
  write_atomic(art(c, "jaccard.csv"), [&](std::ostream& o) { write_jaccard_csv(o, J); });
  write_atomic(art(c, "matching.csv"), [&](std::ostream& o) {
    o << "truth_bin,s,estimated_bin,jaccard,pi_estimated,p_truth\n";
    o.precision(17);
    for (std::size_t q = 0; q < gt.levels.size(); ++q) {
      const int e = m.row_to_col[q];
      const double jq = e >= 0 ? J(Eigen::Index(q), e) : 0.0;
      o << q << "," << gt.levels[q] << "," << e << "," << jq << "," << (e >= 0 && jq > 0.0 ? pi[std::size_t(e)] : 0.0)
        << "," << gt.marginal[q] << "\n";
    }
  });

  double runtime = elapsed(t0);
  for (const char* s : {"covariance", "graph", "spectrum", "bin", "conditional", "stationary"})
    runtime += stage_runtime(c, s);
  json rec;
  rec["system"] = c.model.name;
  rec["method"] = "ADM-CLE";
  rec["Lc"] = nullptr;
  rec["error"] = error;
  rec["theta"] = p.theta;
  rec["bin_count"] = p.size();
  rec["jaccard_mean"] = jmean;
  rec["perfect_matches"] = perfect;
  rec["matched_bins"] = matched;
  rec["abs_order_corr"] = std::abs(corr);
  rec["order_sign"] = corr < 0.0 ? -1 : 1;
  rec["truth_boundary_mass"] = gt.boundary_mass;
  rec["runtime_s"] = runtime;
  merge_report(c, "ADM-CLE", {rec});
  c.log << "evaluate: L1 error " << error << ", matched Jaccard mean " << jmean << " (" << perfect << "/" << matched
        << " exact), |corr| " << std::abs(corr) << "\n";
  record_stage(c, "evaluate", {"partition.csv", "pi.csv"},
               {"ground_truth.csv", "jaccard.csv", "matching.csv", "report.json"}, elapsed(t0));
}

void stage_cma(Context& c) {
  const auto t0 = Clock::now();
  const GroundTruth gt = ground_truth(c);
  write_ground_truth(c, gt);
  const auto& net = c.model.network;
  const auto& dom = c.model.domain;
  std::vector<json> records;
  std::vector<std::string> outputs{"ground_truth.csv", "cma_sweep.csv"};
  std::ostringstream sweep;
  sweep << "lc,seed,error\n";
  sweep.precision(17);
  for (std::size_t li = 0; li < c.cfg.lc_list.size(); ++li) {
    const std::uint64_t lc = c.cfg.lc_list[li];
    const auto tl = Clock::now();
    std::vector<double> errors;
    for (int r = 0; r < c.cfg.cma_seeds; ++r) {
      const std::uint64_t seed = c.cfg.seed + std::uint64_t(r);
      const CmaResult res = cma_baseline(net, dom, gt.level_sets, lc, seed, kCmaStreamBase * (li + 1), c.workers);
      const double err = l1_error(res.pi, gt.marginal);
      errors.push_back(err);
      sweep << lc << "," << seed << "," << err << "\n";
      if (r == 0) {
        const double h = silverman_bandwidth(gt.levels, res.pi);
        const auto smooth = kde_smooth(gt.levels, res.pi, h);
        const std::string name = "cma_pi_lc" + std::to_string(lc) + ".csv";
        write_atomic(art(c, name), [&](std::ostream& o) {
          o << "s,pi,pi_kde,p_truth\n";
          o.precision(17);
          for (std::size_t q = 0; q < res.pi.size(); ++q)
            o << gt.levels[q] << "," << res.pi[q] << "," << smooth[q] << "," << gt.marginal[q] << "\n";
        });
        const std::string rname = "cma_rates_lc" + std::to_string(lc) + ".csv";
        write_atomic(art(c, rname), [&](std::ostream& o) { write_rates_csv(o, gt.levels, res.up, res.down); });
        outputs.push_back(name);
        outputs.push_back(rname);
      }
    }
    std::vector<double> sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t h = sorted.size();
    const double median = h % 2 ? sorted[h / 2] : 0.5 * (sorted[h / 2 - 1] + sorted[h / 2]);
    json rec;
    rec["system"] = c.model.name;
    rec["method"] = "CMA";
    rec["Lc"] = lc;
    rec["error"] = median;
    rec["errors"] = errors;
    rec["theta"] = nullptr;
    rec["bin_count"] = gt.levels.size();
    rec["jaccard_mean"] = 1.0;
    rec["abs_order_corr"] = 1.0;
    rec["runtime_s"] = elapsed(tl);
    records.push_back(rec);
    c.log << "cma: L_c = " << lc << ", median L1 error " << median << " over " << errors.size() << " seed(s)\n";
  }
  write_atomic(art(c, "cma_sweep.csv"), [&](std::ostream& o) { o << sweep.str(); });
  merge_report(c, "CMA", records);
  outputs.push_back("report.json");
  record_stage(c, "cma", {}, outputs, elapsed(t0));
}

}  // namespace

void run_stage(const std::string& stage, const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto& names = stage_names();
  if (std::find(names.begin(), names.end(), stage) == names.end())
    throw ConfigError("unknown stage '" + stage + "'");
  Context c{cfg, load_model(cfg), cfg.out_dir, log, cfg.workers > 0 ? cfg.workers : default_workers()};
  fs::create_directories(c.dir);
  if (stage == "all") {
    for (const auto& s : names)
      if (s != "all") run_stage(s, cfg, log);
    return;
  }
  if (stage == "simulate") stage_simulate(c);
  else if (stage == "covariance") stage_covariance(c);
  else if (stage == "graph") stage_graph(c);
  else if (stage == "spectrum") stage_spectrum(c);
  else if (stage == "bin") stage_bin(c);
  else if (stage == "conditional") stage_conditional(c);
  else if (stage == "stationary") stage_stationary(c);
  else if (stage == "evaluate") stage_evaluate(c);
  else if (stage == "cma") stage_cma(c);
}

}  // namespace slowvar
