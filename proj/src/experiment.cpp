// Config-driven experiment runner. JSON config in, results.csv, summary.json,
// report.txt (and an optional plot.svg) out. Config problems throw with a
// "$.field.path" diagnostic; physics assertions are recorded, not thrown.

#include "qlocal/experiment.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qlocal/algebra.hpp"
#include "qlocal/generator.hpp"
#include "qlocal/lattice.hpp"
#include "qlocal/lrbound.hpp"
#include "qlocal/models.hpp"
#include "qlocal/propagator.hpp"
#include "qlocal/thermolimit.hpp"
#include "qlocal/util.hpp"

namespace qlocal::experiment {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using algebra::LocalOperator;
using algebra::Volume;
using generator::GeneratorAction;
using generator::GeneratorSpec;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw std::runtime_error("config: " + where + ": " + what);
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- typed JSON access with field-path diagnostics ----

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& need(const json& obj, const std::string& where, const char* key) {
  const json* p = find(obj, key);
  if (!p) bad(where + "." + key, "missing required field");
  return *p;
}

void need_object(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
}

double as_num(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

long as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) bad(where, "expected an integer");
  return j.get<long>();
}

std::string as_str(const json& j, const std::string& where) {
  if (!j.is_string()) bad(where, "expected a string");
  return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) bad(where, "expected a boolean");
  return j.get<bool>();
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        ok = true;
        break;
      }
    if (!ok) bad(where + "." + item.key(), "unknown field");
  }
}

// ---- parsed config ----

struct Config {
  std::string experiment;
  std::string model;
  models::Params params;

  bool has_volume = false;
  Volume volume;  // single-volume experiments

  bool has_sequence = false;  // thermo-sweep
  int seq_count = 0;
  long seq_r0 = 1;
  long seq_step = 1;
  std::vector<Volume> seq_volumes;

  bool has_observable = false;
  LocalOperator observable;

  std::vector<double> times;
  std::vector<int> probe_sites;
  double theta = -1.0;
  double euler_t = 0.0;
  std::vector<long> euler_ns;

  double tol = 1e-10;
  int threads = 1;
  bool plot = false;
  std::string out = "qlocal-out";
  std::optional<std::uint64_t> seed;  // effective seed after the override chain

  json echo;             // config as resolved (seed folded into model params)
  std::string hash_hex;  // fnv1a of the canonical dump, keyed with the version

  std::uint64_t seed_or(std::uint64_t fallback) const {
    return seed ? *seed : fallback;
  }
};

constexpr long kDenseDimCap = 1024;  // dense evolutions: 10 qubit sites

long max_sites_for(long dim_cap) {
  long s = 0;
  while ((1L << (s + 1)) <= dim_cap) ++s;
  return s;
}

Volume build_volume(const json& jv, const std::string& where, long dim_cap) {
  need_object(jv, where);
  std::string kind = as_str(need(jv, where, "kind"), where + ".kind");
  lattice::MetricGraph g;
  if (kind == "chain") {
    reject_unknown(jv, where, {"kind", "sites"});
    long n = as_int(need(jv, where, "sites"), where + ".sites");
    if (n < 1) bad(where + ".sites", "need at least one site");
    g = lattice::MetricGraph::chain(static_cast<int>(n));
  } else if (kind == "chain-interval") {
    reject_unknown(jv, where, {"kind", "lo", "hi"});
    long lo = as_int(need(jv, where, "lo"), where + ".lo");
    long hi = as_int(need(jv, where, "hi"), where + ".hi");
    if (hi < lo) bad(where + ".hi", "hi must be >= lo");
    g = lattice::MetricGraph::chain_interval(lo, hi);
  } else if (kind == "grid") {
    reject_unknown(jv, where, {"kind", "w", "h"});
    long w = as_int(need(jv, where, "w"), where + ".w");
    long h = as_int(need(jv, where, "h"), where + ".h");
    if (w < 1 || h < 1) bad(where + ".w", "grid sides must be >= 1");
    g = lattice::MetricGraph::grid(static_cast<int>(w), static_cast<int>(h));
  } else {
    bad(where + ".kind", "unknown volume kind '" + kind +
                             "' (expected chain, chain-interval, or grid)");
  }
  long cap = std::min(dim_cap, Volume::kAbsoluteCap);
  if (g.size() > max_sites_for(cap))
    bad(where, std::to_string(g.size()) + " qubit sites give dimension 2^" +
                   std::to_string(g.size()) + ", over this experiment's cap " +
                   std::to_string(cap) + "; use at most " +
                   std::to_string(max_sites_for(cap)) + " sites");
  return Volume::qubits(g, cap);
}

LocalOperator build_observable(const json& jo, const std::string& where,
                               const Volume& v) {
  need_object(jo, where);
  reject_unknown(jo, where, {"sites", "site", "pauli", "matrix"});
  std::vector<int> sites;
  if (const json* js = find(jo, "site")) {
    sites.push_back(static_cast<int>(as_int(*js, where + ".site")));
  } else {
    const json& ja = need(jo, where, "sites");
    if (!ja.is_array() || ja.empty())
      bad(where + ".sites", "expected a nonempty array of site indices");
    for (std::size_t i = 0; i < ja.size(); ++i)
      sites.push_back(static_cast<int>(
          as_int(ja[i], where + ".sites[" + std::to_string(i) + "]")));
  }
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i] < 0 || sites[i] >= v.sites())
      bad(where, "site index " + std::to_string(sites[i]) +
                     " outside the volume (0.." + std::to_string(v.sites() - 1) +
                     ")");
    if (i > 0 && sites[i] <= sites[i - 1])
      bad(where, "site indices must be strictly increasing");
  }

  const json* jp = find(jo, "pauli");
  const json* jm = find(jo, "matrix");
  if (!!jp == !!jm)
    bad(where, "give exactly one of 'pauli' or 'matrix'");

  LocalOperator a;
  if (jp) {
    std::string s = as_str(*jp, where + ".pauli");
    if (s.size() != sites.size())
      bad(where + ".pauli", "length " + std::to_string(s.size()) +
                                " does not match " +
                                std::to_string(sites.size()) + " sites");
    try {
      a = algebra::pauli_string(s, sites);
    } catch (const std::exception& e) {
      bad(where + ".pauli", e.what());
    }
  } else {
    if (!jm->is_array() || jm->empty())
      bad(where + ".matrix", "expected a nonempty array of rows");
    long n = static_cast<long>(jm->size());
    Mat m(n, n);
    for (long r = 0; r < n; ++r) {
      const json& row = (*jm)[static_cast<std::size_t>(r)];
      std::string wr = where + ".matrix[" + std::to_string(r) + "]";
      if (!row.is_array() || static_cast<long>(row.size()) != n)
        bad(wr, "expected a row of " + std::to_string(n) + " [re, im] pairs");
      for (long c = 0; c < n; ++c) {
        const json& cell = row[static_cast<std::size_t>(c)];
        std::string wc = wr + "[" + std::to_string(c) + "]";
        if (!cell.is_array() || cell.size() != 2)
          bad(wc, "expected an [re, im] pair");
        m(r, c) = std::complex<double>(as_num(cell[0], wc),
                                       as_num(cell[1], wc));
      }
    }
    a = LocalOperator{sites, m};
  }
  try {
    algebra::validate_local(v, a);
  } catch (const std::exception& e) {
    bad(where, e.what());
  }
  return a;
}

std::vector<double> build_times(const json& jt, const std::string& where) {
  need_object(jt, where);
  std::vector<double> ts;
  if (const json* jl = find(jt, "list")) {
    reject_unknown(jt, where, {"list"});
    if (!jl->is_array() || jl->empty())
      bad(where + ".list", "expected a nonempty array of times");
    for (std::size_t i = 0; i < jl->size(); ++i)
      ts.push_back(as_num((*jl)[i], where + ".list[" + std::to_string(i) + "]"));
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (!(ts[i] >= 0.0)) bad(where + ".list", "times must be >= 0");
      if (i > 0 && ts[i] < ts[i - 1])
        bad(where + ".list", "times must be nondecreasing");
    }
  } else {
    reject_unknown(jt, where, {"start", "end", "samples"});
    double a = as_num(need(jt, where, "start"), where + ".start");
    double b = as_num(need(jt, where, "end"), where + ".end");
    long k = as_int(need(jt, where, "samples"), where + ".samples");
    if (!(a >= 0.0)) bad(where + ".start", "must be >= 0");
    if (!(b >= a)) bad(where + ".end", "must be >= start");
    if (k < 1 || k > 2000) bad(where + ".samples", "need 1..2000 samples");
    if (k == 1) {
      ts.push_back(a);
    } else {
      for (long i = 0; i < k; ++i)
        ts.push_back(a + (b - a) * static_cast<double>(i) /
                             static_cast<double>(k - 1));
    }
  }
  return ts;
}

// Seed precedence: --seed-override, then $.model.params.seed, then $.seed.
// Random models with none of the three are a config error.
void resolve_seed(Config& cfg, const json& raw, const Overrides& ov) {
  std::optional<std::uint64_t> chosen;
  if (ov.seed) {
    chosen = *ov.seed;
  } else if (auto it = cfg.params.find("seed"); it != cfg.params.end()) {
    chosen = static_cast<std::uint64_t>(it->second);
  } else if (const json* js = find(raw, "seed")) {
    long s = as_int(*js, "$.seed");
    if (s < 0) bad("$.seed", "must be >= 0");
    chosen = static_cast<std::uint64_t>(s);
  }
  if (chosen) {
    cfg.seed = chosen;
    cfg.params["seed"] = static_cast<double>(*chosen);
  } else if (cfg.model == "random-decaying") {
    bad("$.seed", "model 'random-decaying' needs a seed; set $.seed, "
                  "$.model.params.seed, or --seed-override");
  }
}

Config parse_config(const json& raw, const Overrides& ov) {
  need_object(raw, "$");
  Config cfg;
  cfg.experiment = as_str(need(raw, "$", "experiment"), "$.experiment");

  const bool is_check = cfg.experiment == "check-hypotheses";
  const bool is_euler = cfg.experiment == "euler-convergence";
  const bool is_scan = cfg.experiment == "lr-scan";
  const bool is_dom = cfg.experiment == "bound-domination";
  const bool is_thermo = cfg.experiment == "thermo-sweep";
  if (!(is_check || is_euler || is_scan || is_dom || is_thermo))
    bad("$.experiment",
        "unknown experiment '" + cfg.experiment +
            "' (expected check-hypotheses, euler-convergence, lr-scan, "
            "bound-domination, or thermo-sweep)");

  // keys relevant to the chosen experiment only; typos fail loudly
  if (is_check) {
    reject_unknown(raw, "$", {"experiment", "model", "volume", "times",
                              "tolerance", "seed", "threads", "out", "plot"});
  } else if (is_euler) {
    reject_unknown(raw, "$", {"experiment", "model", "volume", "euler",
                              "tolerance", "seed", "threads", "out", "plot"});
  } else if (is_thermo) {
    reject_unknown(raw, "$", {"experiment", "model", "sequence", "observable",
                              "times", "tolerance", "seed", "threads", "out",
                              "plot"});
  } else {
    reject_unknown(raw, "$", {"experiment", "model", "volume", "observable",
                              "times", "probe_sites", "theta", "tolerance",
                              "seed", "threads", "out", "plot"});
  }

  // model
  const json& jm = need(raw, "$", "model");
  need_object(jm, "$.model");
  reject_unknown(jm, "$.model", {"name", "params"});
  cfg.model = as_str(need(jm, "$.model", "name"), "$.model.name");
  try {
    models::card(cfg.model);
  } catch (const std::exception& e) {
    bad("$.model.name", e.what());
  }
  if (const json* jp = find(jm, "params")) {
    need_object(*jp, "$.model.params");
    for (const auto& item : jp->items())
      cfg.params[item.key()] =
          as_num(item.value(), "$.model.params." + item.key());
  }
  resolve_seed(cfg, raw, ov);

  // scalars
  if (const json* jt = find(raw, "tolerance")) {
    cfg.tol = as_num(*jt, "$.tolerance");
    if (!(cfg.tol > 0.0 && cfg.tol <= 1e-2))
      bad("$.tolerance", "need a value in (0, 1e-2]");
  }
  if (ov.threads) {
    cfg.threads = *ov.threads;
  } else if (const json* jth = find(raw, "threads")) {
    cfg.threads = static_cast<int>(as_int(*jth, "$.threads"));
  }
  if (cfg.threads < 1 || cfg.threads > 64)
    bad("$.threads", "need 1..64 threads");
  if (ov.out) {
    cfg.out = *ov.out;
  } else if (const json* jo = find(raw, "out")) {
    cfg.out = as_str(*jo, "$.out");
  }
  if (cfg.out.empty()) bad("$.out", "must be a nonempty path");
  if (const json* jp = find(raw, "plot")) cfg.plot = as_bool(*jp, "$.plot");

  // geometry
  long dim_cap = is_euler ? GeneratorAction::kSuperopDimCap : kDenseDimCap;
  if (is_thermo) {
    const json& js = need(raw, "$", "sequence");
    need_object(js, "$.sequence");
    reject_unknown(js, "$.sequence", {"kind", "count", "r0", "step"});
    std::string kind = as_str(need(js, "$.sequence", "kind"), "$.sequence.kind");
    if (kind != "centered-chain")
      bad("$.sequence.kind", "unknown sequence kind '" + kind +
                                 "' (expected centered-chain)");
    cfg.seq_count = static_cast<int>(
        as_int(need(js, "$.sequence", "count"), "$.sequence.count"));
    if (cfg.seq_count < 1 || cfg.seq_count > 64)
      bad("$.sequence.count", "need 1..64 volumes");
    if (const json* jr = find(js, "r0")) cfg.seq_r0 = as_int(*jr, "$.sequence.r0");
    if (const json* js2 = find(js, "step"))
      cfg.seq_step = as_int(*js2, "$.sequence.step");
    if (cfg.seq_r0 < 1) bad("$.sequence.r0", "must be >= 1");
    if (cfg.seq_step < 1) bad("$.sequence.step", "must be >= 1");
    long rmax = cfg.seq_r0 + static_cast<long>(cfg.seq_count - 1) * cfg.seq_step;
    long smax = 2 * rmax + 1;
    if ((smax >= 63) || ((1L << smax) > dim_cap))
      bad("$.sequence", "largest interval [-" + std::to_string(rmax) + ", " +
                            std::to_string(rmax) + "] has " +
                            std::to_string(smax) +
                            " qubit sites; keep it at or below " +
                            std::to_string(max_sites_for(dim_cap)) +
                            " (dimension cap " + std::to_string(dim_cap) + ")");
    try {
      cfg.seq_volumes =
          thermolimit::centered_chain_volumes(cfg.seq_count, cfg.seq_r0,
                                              cfg.seq_step);
    } catch (const std::exception& e) {
      bad("$.sequence", e.what());
    }
    cfg.has_sequence = true;
  } else {
    cfg.volume = build_volume(need(raw, "$", "volume"), "$.volume", dim_cap);
    cfg.has_volume = true;
  }

  // observable, against the volume its indices refer to
  if (is_scan || is_dom || is_thermo) {
    const Volume& base = is_thermo ? cfg.seq_volumes.front() : cfg.volume;
    cfg.observable =
        build_observable(need(raw, "$", "observable"), "$.observable", base);
    cfg.has_observable = true;
  }

  // times
  if (const json* jt = find(raw, "times")) {
    cfg.times = build_times(*jt, "$.times");
  } else if (is_scan || is_dom || is_thermo) {
    bad("$.times", "missing required field");
  }

  if (is_scan || is_dom) {
    if (const json* jt = find(raw, "theta")) {
      cfg.theta = as_num(*jt, "$.theta");
      if (!(cfg.theta > 0.0)) bad("$.theta", "must be > 0 when given");
    }
    if (const json* jp = find(raw, "probe_sites")) {
      if (!jp->is_array() || jp->empty())
        bad("$.probe_sites", "expected a nonempty array of site indices");
      for (std::size_t i = 0; i < jp->size(); ++i) {
        int s = static_cast<int>(
            as_int((*jp)[i], "$.probe_sites[" + std::to_string(i) + "]"));
        if (s < 0 || s >= cfg.volume.sites())
          bad("$.probe_sites[" + std::to_string(i) + "]",
              "site index outside the volume");
        cfg.probe_sites.push_back(s);
      }
    } else {
      for (int s = 0; s < cfg.volume.sites(); ++s) cfg.probe_sites.push_back(s);
    }
  }

  if (is_euler) {
    const json& je = need(raw, "$", "euler");
    need_object(je, "$.euler");
    reject_unknown(je, "$.euler", {"t", "n_list"});
    cfg.euler_t = as_num(need(je, "$.euler", "t"), "$.euler.t");
    if (!(cfg.euler_t > 0.0)) bad("$.euler.t", "must be > 0");
    const json& jn = need(je, "$.euler", "n_list");
    if (!jn.is_array() || jn.empty())
      bad("$.euler.n_list", "expected a nonempty array of step counts");
    for (std::size_t i = 0; i < jn.size(); ++i) {
      long n = as_int(jn[i], "$.euler.n_list[" + std::to_string(i) + "]");
      if (n < 1 || n > 100000)
        bad("$.euler.n_list[" + std::to_string(i) + "]", "need 1..100000 steps");
      if (!cfg.euler_ns.empty() && n <= cfg.euler_ns.back())
        bad("$.euler.n_list", "step counts must be strictly increasing");
      cfg.euler_ns.push_back(n);
    }
  }

  // the model must actually build on the (base) volume; bad parameters
  // surface here with their own message
  {
    const Volume& base = is_thermo ? cfg.seq_volumes.front() : cfg.volume;
    try {
      (void)models::build(cfg.model, cfg.params, base);
    } catch (const std::exception& e) {
      bad("$.model", e.what());
    }
  }

  // canonical echo: resolved seed folded in, nlohmann sorts object keys
  cfg.echo = raw;
  if (cfg.seed) {
    if (!cfg.echo.contains("model") || !cfg.echo["model"].is_object())
      cfg.echo["model"] = json::object();
    if (!cfg.echo["model"].contains("params"))
      cfg.echo["model"]["params"] = json::object();
    cfg.echo["model"]["params"]["seed"] = static_cast<double>(*cfg.seed);
  }
  json hashed = cfg.echo;
  hashed.erase("out");      // output location does not change the bytes
  hashed.erase("threads");  // row order is deterministic across thread counts
  cfg.hash_hex =
      hex16(fnv1a64(hashed.dump() + "|" + std::string(kVersion)));
  return cfg;
}

json load_json(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    if (byte > text.size()) byte = text.size();
    long line = 1, col = 1;
    for (std::size_t i = 0; i < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw std::runtime_error("config: " + path + ":" + std::to_string(line) +
                             ":" + std::to_string(col) + ": " + e.what());
  }
}

// ---- run products ----

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunData {
  std::string csv;
  std::vector<std::string> report;
  json extra = json::object();
  std::vector<Assertion> asserts;
  std::string svg;
};

std::string csv_row(std::initializer_list<std::string> cells) {
  std::string out;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  out += '\n';
  return out;
}

bool within(double value, double bound) {
  return value <= bound * (1.0 + 1e-9) + 1e-12;
}

json num_or_null(double x) {
  return std::isfinite(x) ? json(x) : json(nullptr);
}

json cert_json(const lrbound::LRCertificate& c, const lattice::DecayFunction& d) {
  json j = json::object();
  j["mu"] = c.mu;
  j["alpha"] = d.kind == lattice::DecayFunction::Kind::PowerLaw
                   ? json(d.alpha)
                   : json(nullptr);
  j["f_norm"] = c.f_norm;
  j["c_mu"] = c.c_mu;
  j["psi_norm"] = c.psi_norm;
  j["velocity"] = c.velocity;
  j["rigorous"] = c.rigorous;
  j["single_site_excluded"] = c.single_site_excluded;
  return j;
}

// ---- SVG (static polylines, no external assets) ----

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> pts;
};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

std::string f2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

std::string g3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

std::string svg_chart(const std::string& title, const std::string& xlabel,
                      const std::string& ylabel, std::vector<Series> series,
                      bool log_y) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  if (log_y) {
    bool any = false;
    for (auto& s : series)
      for (auto& p : s.pts)
        if (p.second > 0.0) any = true;
    if (!any) log_y = false;
  }
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (auto& s : series)
    for (auto& p : s.pts) {
      if (!std::isfinite(p.first) || !std::isfinite(p.second)) continue;
      if (log_y && !(p.second > 0.0)) continue;
      double y = log_y ? std::log10(p.second) : p.second;
      x0 = std::min(x0, p.first);
      x1 = std::max(x1, p.first);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (!std::isfinite(x0)) {
    x0 = 0;
    x1 = 1;
    y0 = 0;
    y1 = 1;
  }
  if (x1 - x0 < 1e-12) x1 = x0 + 1.0;
  if (y1 - y0 < 1e-12) y1 = y0 + 1.0;
  const double pl = 80, pr = 740, pt = 44, pb = 408;  // plot rectangle
  auto sx = [&](double x) { return pl + (pr - pl) * (x - x0) / (x1 - x0); };
  auto sy = [&](double v) {
    double y = log_y ? std::log10(v) : v;
    return pb - (pb - pt) * (y - y0) / (y1 - y0);
  };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"470\" "
       "viewBox=\"0 0 800 470\">\n";
  s += "<rect width=\"800\" height=\"470\" fill=\"white\"/>\n";
  s += "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"15\">" + xml_escape(title) + "</text>\n";
  s += "<rect x=\"" + f2(pl) + "\" y=\"" + f2(pt) + "\" width=\"" + f2(pr - pl) +
       "\" height=\"" + f2(pb - pt) +
       "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double fx = x0 + (x1 - x0) * i / 4.0;
    double px = sx(fx);
    s += "<line x1=\"" + f2(px) + "\" y1=\"" + f2(pb) + "\" x2=\"" + f2(px) +
         "\" y2=\"" + f2(pb + 5) + "\" stroke=\"#333\"/>\n";
    s += "<text x=\"" + f2(px) + "\" y=\"" + f2(pb + 20) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
         g3(fx) + "</text>\n";
    double fy = y0 + (y1 - y0) * i / 4.0;
    double vy = log_y ? std::pow(10.0, fy) : fy;
    double py = pb - (pb - pt) * i / 4.0;
    s += "<line x1=\"" + f2(pl - 5) + "\" y1=\"" + f2(py) + "\" x2=\"" + f2(pl) +
         "\" y2=\"" + f2(py) + "\" stroke=\"#333\"/>\n";
    s += "<text x=\"" + f2(pl - 8) + "\" y=\"" + f2(py + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
         g3(vy) + "</text>\n";
  }
  s += "<text x=\"" + f2((pl + pr) / 2) + "\" y=\"446\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(xlabel) +
       "</text>\n";
  s += "<text x=\"18\" y=\"" + f2((pt + pb) / 2) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
       "transform=\"rotate(-90 18 " + f2((pt + pb) / 2) + ")\">" +
       xml_escape(ylabel) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % 8];
    std::string pts;
    for (auto& p : series[k].pts) {
      if (!std::isfinite(p.first) || !std::isfinite(p.second)) continue;
      if (log_y && !(p.second > 0.0)) continue;
      pts += f2(sx(p.first)) + "," + f2(sy(p.second)) + " ";
    }
    if (!pts.empty())
      s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\"/>\n";
    double ly = pt + 16 + 16 * static_cast<double>(k);
    s += "<line x1=\"" + f2(pr - 150) + "\" y1=\"" + f2(ly - 4) + "\" x2=\"" +
         f2(pr - 130) + "\" y2=\"" + f2(ly - 4) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + f2(pr - 124) + "\" y=\"" + f2(ly) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" +
         xml_escape(series[k].label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

// ---- the five experiments ----

RunData run_check(const Config& cfg) {
  RunData rd;
  GeneratorSpec sp = models::build(cfg.model, cfg.params, cfg.volume);
  GeneratorAction gen(sp);
  double tmax = cfg.times.empty() ? 1.0 : cfg.times.back();
  auto rep = generator::check_hypotheses(gen, tmax, 11, 20, cfg.seed_or(1));

  rd.csv += csv_row({"metric", "value", "threshold", "pass"});
  auto row = [&](const char* name, double v, double thr, bool pass) {
    rd.csv += csv_row({name, fmt17(v), fmt17(thr), pass ? "1" : "0"});
  };
  bool uni = rep.unitality_defect <= 1e-10;
  bool her = rep.hermiticity_defect <= 1e-10;
  bool dis = rep.dissipativity_min >= -1e-10;
  row("unitality_defect", rep.unitality_defect, 1e-10, uni);
  row("hermiticity_defect", rep.hermiticity_defect, 1e-10, her);
  row("dissipativity_min", rep.dissipativity_min, -1e-10, dis);
  rd.csv += csv_row({"continuity_modulus", fmt17(rep.continuity_modulus), "", ""});

  rd.asserts.push_back({"unitality", uni,
                        "max ||L(1)|| = " + fmt17(rep.unitality_defect)});
  rd.asserts.push_back({"hermiticity-preservation", her,
                        "max defect = " + fmt17(rep.hermiticity_defect)});
  rd.asserts.push_back({"dissipativity", dis,
                        "min probe eigenvalue = " + fmt17(rep.dissipativity_min)});
  rd.asserts.push_back({"hypotheses-pass", rep.pass, ""});

  rd.extra["hypotheses"] = {{"unitality_defect", rep.unitality_defect},
                            {"hermiticity_defect", rep.hermiticity_defect},
                            {"dissipativity_min", rep.dissipativity_min},
                            {"continuity_modulus", rep.continuity_modulus},
                            {"continuity_exact", rep.continuity_exact},
                            {"horizon", tmax},
                            {"pass", rep.pass}};
  rd.report.push_back("hypothesis checks over [0, " + fmt17(tmax) + "]:");
  rd.report.push_back("  unitality defect      " + fmt17(rep.unitality_defect));
  rd.report.push_back("  hermiticity defect    " + fmt17(rep.hermiticity_defect));
  rd.report.push_back("  dissipativity minimum " + fmt17(rep.dissipativity_min));
  rd.report.push_back("  continuity modulus    " + fmt17(rep.continuity_modulus) +
                      (rep.continuity_exact ? " (exact)" : " (probe estimate)"));
  return rd;
}

RunData run_euler(const Config& cfg) {
  RunData rd;
  GeneratorSpec sp = models::build(cfg.model, cfg.params, cfg.volume);
  GeneratorAction gen(sp);

  rd.csv += csv_row({"n", "error", "bound", "eps_n", "m_t", "ratio", "rigorous"});
  bool all_ok = true;
  std::string first_bad;
  double m_t = 0.0;
  bool rigorous = true;
  Series err{"error", {}}, bnd{"bound", {}};
  for (long n : cfg.euler_ns) {
    auto r = propagator::euler_report(gen, n, cfg.euler_t, cfg.tol);
    double ratio = r.bound > 0.0 ? r.error / r.bound : 0.0;
    rd.csv += csv_row({std::to_string(r.n), fmt17(r.error), fmt17(r.bound),
                       fmt17(r.eps_n), fmt17(r.m_t), fmt17(ratio),
                       r.rigorous ? "1" : "0"});
    if (!within(r.error, r.bound) && all_ok) {
      all_ok = false;
      first_bad = "n = " + std::to_string(n) + ": error " + fmt17(r.error) +
                  " > bound " + fmt17(r.bound);
    }
    m_t = r.m_t;
    rigorous = rigorous && r.rigorous;
    err.pts.push_back({static_cast<double>(n), r.error});
    bnd.pts.push_back({static_cast<double>(n), r.bound});
  }
  rd.asserts.push_back(
      {"product-error-within-bound", all_ok,
       all_ok ? "all " + std::to_string(cfg.euler_ns.size()) + " step counts"
              : first_bad});
  rd.extra["euler"] = {{"t", cfg.euler_t},
                       {"m_t", m_t},
                       {"rigorous_envelope", rigorous},
                       {"step_counts", cfg.euler_ns}};
  rd.report.push_back("product approximation at t = " + fmt17(cfg.euler_t) +
                      ", generator sup-norm bound M = " + fmt17(m_t));
  rd.report.push_back(rigorous
                          ? "error <= bound is certified (exact continuity envelope)"
                          : "continuity envelope is a sampled estimate");
  if (cfg.plot)
    rd.svg = svg_chart("product approximation error vs steps", "steps n",
                       "superoperator norm", {err, bnd}, true);
  return rd;
}

RunData run_scan(const Config& cfg, bool domination) {
  RunData rd;
  GeneratorSpec sp = models::build(cfg.model, cfg.params, cfg.volume);
  GeneratorAction gen(sp);
  auto res = lrbound::lightcone_scan(gen, cfg.observable, cfg.probe_sites,
                                     cfg.times, cfg.theta, cfg.tol, cfg.threads);

  const auto& g = cfg.volume.graph;
  auto dist_to_obs = [&](int site) {
    double d = std::numeric_limits<double>::infinity();
    for (int b : cfg.observable.support) d = std::min(d, g.d(site, b));
    return d;
  };

  rd.csv += csv_row({"site", "label", "distance", "time", "empirical",
                     "bound_sum", "bound_exp", "ratio"});
  std::size_t nt = cfg.times.size();
  bool emp_ok = true, dom_ok = true;
  std::string emp_bad, dom_bad;
  long checked = 0, corners = 0;
  double max_ratio = 0.0;
  std::vector<Series> series;
  for (std::size_t i = 0; i < res.sites.size(); ++i) {
    int site = res.sites[i];
    double d = dist_to_obs(site);
    Series ser{"site " + g.labels[static_cast<std::size_t>(site)], {}};
    for (std::size_t j = 0; j < nt; ++j) {
      const auto& c = res.cells[i * nt + j];
      rd.csv += csv_row({std::to_string(c.site),
                         g.labels[static_cast<std::size_t>(c.site)], fmt17(d),
                         fmt17(c.time), fmt17(c.empirical), fmt17(c.bound_sum),
                         fmt17(c.bound_exp), fmt17(c.ratio)});
      // the closed-form bound is a theorem for disjoint supports; cells on
      // the observable's own support are informational
      bool overlap = (d == 0.0);
      if (overlap) {
        ++corners;
      } else {
        ++checked;
        max_ratio = std::max(max_ratio, c.ratio);
        if (!within(c.empirical, c.bound_sum) && emp_ok) {
          emp_ok = false;
          emp_bad = "site " + std::to_string(c.site) + ", t = " + fmt17(c.time) +
                    ": empirical " + fmt17(c.empirical) + " > bound " +
                    fmt17(c.bound_sum);
        }
      }
      if (domination && !within(c.bound_sum, c.bound_exp) && dom_ok) {
        dom_ok = false;
        dom_bad = "site " + std::to_string(c.site) + ", t = " + fmt17(c.time) +
                  ": sum form " + fmt17(c.bound_sum) + " > exponential form " +
                  fmt17(c.bound_exp);
      }
      ser.pts.push_back({c.time, c.empirical});
    }
    series.push_back(std::move(ser));
  }

  std::string emp_detail =
      emp_ok ? std::to_string(checked) + " disjoint-support cells checked, "
                   "max ratio " + g3(max_ratio) +
                   (corners ? ", " + std::to_string(corners) +
                                  " overlapping-support cells informational"
                            : "")
             : emp_bad;
  rd.asserts.push_back({"empirical-within-bound", emp_ok, emp_detail});
  if (domination)
    rd.asserts.push_back({"sum-form-below-exponential-form", dom_ok,
                          dom_ok ? "all cells" : dom_bad});

  json fronts = json::array();
  for (std::size_t i = 0; i < res.sites.size(); ++i) {
    int site = res.sites[i];
    fronts.push_back({{"site", site},
                      {"label", g.labels[static_cast<std::size_t>(site)]},
                      {"distance", dist_to_obs(site)},
                      {"time", num_or_null(res.front_time[i])}});
  }
  rd.extra["certificate"] = cert_json(res.cert, sp.decay);
  rd.extra["scan"] = {{"theta", res.theta},
                      {"v_emp", num_or_null(res.v_emp)},
                      {"front_times", fronts}};
  rd.report.push_back("light-cone scan: " + std::to_string(res.sites.size()) +
                      " sites x " + std::to_string(nt) + " times, theta = " +
                      fmt17(res.theta));
  rd.report.push_back("certificate: mu = " + fmt17(res.cert.mu) +
                      ", psi = " + fmt17(res.cert.psi_norm) +
                      ", C_mu = " + fmt17(res.cert.c_mu) +
                      ", velocity = " + fmt17(res.cert.velocity));
  rd.report.push_back("empirical front velocity: " +
                      (std::isfinite(res.v_emp) ? fmt17(res.v_emp)
                                                : std::string("undefined")));
  if (cfg.plot)
    rd.svg = svg_chart("signal strength by site over time", "time",
                       "commutator norm", series, false);
  return rd;
}

RunData run_thermo(const Config& cfg) {
  RunData rd;
  auto family = [&](const Volume& v) {
    return models::build(cfg.model, cfg.params, v);
  };
  auto seq = thermolimit::VolumeSequence::from_family(cfg.seq_volumes, family);
  double s = cfg.times.front(), t = cfg.times.back();

  thermolimit::SweepResult sw;
  bool dominated = true;
  std::string violation;
  try {
    sw = thermolimit::cauchy_sweep(seq, cfg.observable, s, t, cfg.tol,
                                   cfg.threads);
  } catch (const std::runtime_error& e) {
    dominated = false;
    violation = e.what();
    sw.cert = lrbound::build_certificate(seq.specs.back(), t);
    sw.fit_slope = std::numeric_limits<double>::quiet_NaN();
    sw.certified_tail = std::numeric_limits<double>::quiet_NaN();
  }

  rd.csv += csv_row({"n", "sites", "boundary_distance", "measured", "bound",
                     "ratio"});
  Series meas{"measured", {}}, bnd{"bound", {}};
  for (const auto& r : sw.rows) {
    rd.csv += csv_row({std::to_string(r.n), std::to_string(r.sites),
                       fmt17(r.boundary_distance), fmt17(r.measured),
                       fmt17(r.bound), fmt17(r.ratio)});
    meas.pts.push_back({r.boundary_distance, r.measured});
    bnd.pts.push_back({r.boundary_distance, r.bound});
  }

  rd.asserts.push_back({"measured-within-bound", dominated,
                        dominated ? "all " + std::to_string(sw.rows.size()) +
                                        " adjacent-volume differences"
                                  : violation});
  double mu = sw.cert.mu;
  if (sw.fit_points >= 3) {
    bool slope_ok = sw.fit_slope <= -mu / 2.0;
    rd.asserts.push_back(
        {"decay-slope", slope_ok,
         "fit slope " + fmt17(sw.fit_slope) + " vs threshold " +
             fmt17(-mu / 2.0) + " over " + std::to_string(sw.fit_points) +
             " points"});
  }

  rd.extra["certificate"] = cert_json(sw.cert, seq.specs.back().decay);
  rd.extra["thermo"] = {{"s", s},
                        {"t", t},
                        {"fit_slope", num_or_null(sw.fit_slope)},
                        {"fit_points", sw.fit_points},
                        {"certified_tail", num_or_null(sw.certified_tail)}};
  rd.report.push_back("volume sweep: " + std::to_string(cfg.seq_count) +
                      " nested intervals, window [" + fmt17(s) + ", " + fmt17(t) +
                      "]");
  rd.report.push_back(
      "decay fit: slope " +
      (std::isfinite(sw.fit_slope) ? fmt17(sw.fit_slope)
                                   : std::string("undefined")) +
      " over " + std::to_string(sw.fit_points) + " points above the noise floor");
  rd.report.push_back("certified tail beyond the largest volume: " +
                      (std::isfinite(sw.certified_tail)
                           ? fmt17(sw.certified_tail)
                           : std::string("not available for this family")));
  if (cfg.plot)
    rd.svg = svg_chart("volume-to-volume difference vs boundary distance",
                       "boundary distance", "superoperator norm", {meas, bnd},
                       true);
  return rd;
}

// ---- artifacts ----

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
}

std::string describe_geometry(const Config& cfg) {
  if (cfg.has_sequence) {
    long rmax =
        cfg.seq_r0 + static_cast<long>(cfg.seq_count - 1) * cfg.seq_step;
    return "centered chains [-r, r], r = " + std::to_string(cfg.seq_r0) +
           ".." + std::to_string(rmax);
  }
  return cfg.volume.graph.family_tag + ", " +
         std::to_string(cfg.volume.sites()) + " sites";
}

constexpr const char* kDeterminismNote =
    "identical config and seed give byte-identical results.csv on one "
    "floating-point environment; a different compiler, math library, or SIMD "
    "width can move the last bits";

Outcome emit(const Config& cfg, RunData rd) {
  bool pass = true;
  for (const auto& a : rd.asserts) pass = pass && a.pass;

  json asserts = json::array();
  for (const auto& a : rd.asserts)
    asserts.push_back(
        {{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});

  json summary = json::object();
  summary["version"] = kVersion;
  summary["experiment"] = cfg.experiment;
  summary["model"] = cfg.model;
  summary["geometry"] = describe_geometry(cfg);
  summary["config"] = cfg.echo;
  summary["config_hash"] = cfg.hash_hex;
  summary["rng"] = "gauss-bm-v1";
  summary["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  summary["threads"] = cfg.threads;
  summary["determinism"] = kDeterminismNote;
  summary["assertions"] = asserts;
  summary["pass"] = pass;
  for (const auto& item : rd.extra.items()) summary[item.key()] = item.value();

  std::string report;
  report += std::string(kVersion) + "\n";
  report += "experiment: " + cfg.experiment + "\n";
  report += "model: " + cfg.model + " on " + describe_geometry(cfg) + "\n";
  report += "config hash: " + cfg.hash_hex + "\n\n";
  for (const auto& line : rd.report) report += line + "\n";
  report += "\nassertions:\n";
  for (const auto& a : rd.asserts) {
    report += std::string("  ") + (a.pass ? "PASS" : "FAIL") + "  " + a.name;
    if (!a.detail.empty()) report += "  (" + a.detail + ")";
    report += "\n";
  }
  report += std::string("\noverall: ") + (pass ? "PASS" : "FAIL") + "\n";

  fs::path out(cfg.out);
  fs::create_directories(out);
  write_text(out / "results.csv", rd.csv);
  write_text(out / "summary.json", summary.dump(2) + "\n");
  write_text(out / "report.txt", report);
  if (!rd.svg.empty()) write_text(out / "plot.svg", rd.svg);

  Outcome oc;
  oc.ok = pass;
  oc.out_dir = out.string();
  for (const auto& a : rd.asserts)
    if (!a.pass) oc.failures.push_back(a.name + ": " + a.detail);
  return oc;
}

// ---- artifact cache, keyed by config hash ----

std::optional<fs::path> cache_dir(const Config& cfg) {
  const char* root = std::getenv("QLOCAL_CACHE_DIR");
  if (!root || !*root) return std::nullopt;
  return fs::path(root) / cfg.hash_hex;
}

const char* kArtifacts[] = {"results.csv", "summary.json", "report.txt",
                            "plot.svg"};

bool cache_load(const Config& cfg, Outcome& oc) {
  auto dir = cache_dir(cfg);
  if (!dir) return false;
  try {
    if (!fs::exists(*dir / "summary.json") || !fs::exists(*dir / "results.csv") ||
        !fs::exists(*dir / "report.txt"))
      return false;
    fs::path out(cfg.out);
    fs::create_directories(out);
    for (const char* name : kArtifacts)
      if (fs::exists(*dir / name))
        fs::copy_file(*dir / name, out / name,
                      fs::copy_options::overwrite_existing);
    std::ifstream f(out / "summary.json", std::ios::binary);
    json summary = json::parse(f);
    oc.ok = summary.at("pass").get<bool>();
    for (const auto& a : summary.at("assertions"))
      if (!a.at("pass").get<bool>())
        oc.failures.push_back(a.at("name").get<std::string>() + ": " +
                              a.at("detail").get<std::string>());
    oc.out_dir = out.string();
    oc.cache_hit = true;
    return true;
  } catch (...) {
    return false;  // an unreadable cache never fails the run
  }
}

void cache_store(const Config& cfg) {
  auto dir = cache_dir(cfg);
  if (!dir) return;
  try {
    fs::create_directories(*dir);
    fs::path out(cfg.out);
    for (const char* name : kArtifacts)
      if (fs::exists(out / name))
        fs::copy_file(out / name, *dir / name,
                      fs::copy_options::overwrite_existing);
  } catch (...) {
    // cache is best effort
  }
}

}  // namespace

Outcome validate_file(const std::string& config_path, const Overrides& ov) {
  Config cfg = parse_config(load_json(config_path), ov);
  Outcome oc;
  oc.ok = true;
  oc.out_dir = cfg.out;
  return oc;
}

Outcome run_file(const std::string& config_path, const Overrides& ov) {
  Config cfg = parse_config(load_json(config_path), ov);

  Outcome cached;
  if (cache_load(cfg, cached)) return cached;

  RunData rd;
  if (cfg.experiment == "check-hypotheses") {
    rd = run_check(cfg);
  } else if (cfg.experiment == "euler-convergence") {
    rd = run_euler(cfg);
  } else if (cfg.experiment == "lr-scan") {
    rd = run_scan(cfg, false);
  } else if (cfg.experiment == "bound-domination") {
    rd = run_scan(cfg, true);
  } else {
    rd = run_thermo(cfg);
  }
  Outcome oc = emit(cfg, std::move(rd));
  cache_store(cfg);
  return oc;
}

}  // namespace qlocal::experiment
