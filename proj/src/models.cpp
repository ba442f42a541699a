#include "qlocal/models.hpp"

#include <cmath>
#include <stdexcept>

namespace qlocal::models {

namespace {

double get(const Params& p, const std::string& key) { return p.at(key); }

Params merge(const ModelCard& c, const Params& overrides) {
  Params p;
  for (const auto& mp : c.params) p[mp.name] = mp.value;
  for (const auto& [key, value] : overrides) {
    if (!p.count(key))
      throw std::invalid_argument("model '" + c.name + "' has no parameter '" + key + "'");
    p[key] = value;
  }
  return p;
}

void require_qubits(const Volume& v, const std::string& name) {
  for (int d : v.site_dims)
    if (d != 2)
      throw std::invalid_argument("model '" + name + "' needs qubit sites");
}

lattice::DecayFunction default_decay(const Volume& v, double alpha, double mu) {
  if (mu <= 0.0) throw std::invalid_argument("mu must be positive");
  if (v.graph.family_tag == "chain-Z1") return lattice::DecayFunction::power_law(alpha, mu, 1);
  if (v.graph.family_tag == "grid-Z2") return lattice::DecayFunction::power_law(alpha, mu, 2);
  return lattice::DecayFunction::power_law_on(v.graph, alpha, mu);
}

void add_site_lindblad(GeneratorSpec& sp, int x, const Mat& l) {
  generator::InteractionTerm t;
  t.support = {x};
  t.lindblads = {l};
  sp.terms.push_back(std::move(t));
}

GeneratorSpec build_dephasing(const Params& p, const Volume& v) {
  double gamma = get(p, "gamma");
  if (gamma < 0.0) throw std::invalid_argument("gamma must be nonnegative");
  GeneratorSpec sp;
  sp.volume = v;
  sp.decay = default_decay(v, get(p, "alpha"), get(p, "mu"));
  if (gamma > 0.0)
    for (int x = 0; x < v.sites(); ++x)
      add_site_lindblad(sp, x, std::sqrt(gamma) * algebra::pauli('Z'));
  return sp;
}

GeneratorSpec build_amplitude_damping(const Params& p, const Volume& v) {
  double gamma = get(p, "gamma");
  if (gamma < 0.0) throw std::invalid_argument("gamma must be nonnegative");
  GeneratorSpec sp;
  sp.volume = v;
  sp.decay = default_decay(v, get(p, "alpha"), get(p, "mu"));
  if (gamma > 0.0)
    for (int x = 0; x < v.sites(); ++x)
      add_site_lindblad(sp, x, std::sqrt(gamma) * algebra::lower());
  return sp;
}

GeneratorSpec build_tfim_dephasing(const Params& p, const Volume& v) {
  double j = get(p, "j"), h = get(p, "h"), gamma = get(p, "gamma");
  if (gamma < 0.0) throw std::invalid_argument("gamma must be nonnegative");
  GeneratorSpec sp;
  sp.volume = v;
  sp.decay = default_decay(v, get(p, "alpha"), get(p, "mu"));
  for (int x = 0; x < v.sites(); ++x)
    for (int y = x + 1; y < v.sites(); ++y)
      if (v.graph.d(x, y) == 1.0 && j != 0.0) {
        generator::InteractionTerm t;
        t.support = {x, y};
        t.phi = j * algebra::pauli_string("ZZ", {x, y}).block;
        sp.terms.push_back(std::move(t));
      }
  for (int x = 0; x < v.sites(); ++x) {
    if (h != 0.0) {
      generator::InteractionTerm f;
      f.support = {x};
      f.phi = h * algebra::pauli('X');
      sp.terms.push_back(std::move(f));
    }
    if (gamma > 0.0) add_site_lindblad(sp, x, std::sqrt(gamma) * algebra::pauli('Z'));
  }
  return sp;
}

GeneratorSpec build_driven_xy(const Params& p, const Volume& v) {
  double j = get(p, "j"), omega = get(p, "omega"), phase = get(p, "phase");
  GeneratorSpec sp;
  sp.volume = v;
  sp.decay = default_decay(v, get(p, "alpha"), get(p, "mu"));
  for (int x = 0; x < v.sites(); ++x)
    for (int y = x + 1; y < v.sites(); ++y)
      if (v.graph.d(x, y) == 1.0 && j != 0.0) {
        generator::InteractionTerm t;
        t.support = {x, y};
        t.phi = j * (algebra::pauli_string("XX", {x, y}).block +
                     algebra::pauli_string("YY", {x, y}).block);
        t.profile = generator::TimeProfile::sinusoidal(1.0, omega, phase);
        sp.terms.push_back(std::move(t));
      }
  return sp;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

GeneratorSpec build_random_decaying(const Params& p, const Volume& v) {
  double c0 = get(p, "c0");
  if (c0 < 0.0) throw std::invalid_argument("c0 must be nonnegative");
  double seed_param = get(p, "seed");
  auto seed = std::uint64_t(seed_param);
  GeneratorSpec sp;
  sp.volume = v;
  sp.decay = default_decay(v, get(p, "alpha"), get(p, "mu"));
  if (c0 == 0.0) return sp;
  for (int x = 0; x < v.sites(); ++x) {
    for (int y = x + 1; y < v.sites(); ++y) {
      // pair identity comes from the site labels, so nested volumes draw
      // bit-identical blocks for their shared pairs
      std::uint64_t pair_seed =
          fnv1a(v.graph.labels[std::size_t(x)] + "|" + v.graph.labels[std::size_t(y)]) ^
          (0x9e3779b97f4a7c15ull * (seed + 1));
      Rng rng(pair_seed);
      Mat phi0 = rng.hermitian_gaussian(4);
      Mat l0 = rng.complex_gaussian(4, 4);
      // split the budget evenly: 2||phi|| = 2||L||^2 = target / 2, so the
      // term's cb bound equals c0 * F_mu(d) exactly
      double target = c0 * lattice::f_mu(sp.decay, v.graph.d(x, y));
      generator::InteractionTerm t;
      t.support = {x, y};
      t.phi = phi0 * ((target / 4.0) / algebra::op_norm(phi0));
      t.lindblads = {l0 * std::sqrt((target / 4.0) / (algebra::op_norm(l0) * algebra::op_norm(l0)))};
      sp.terms.push_back(std::move(t));
    }
  }
  return sp;
}

std::vector<ModelCard> make_cards() {
  std::vector<ModelCard> cs;
  cs.push_back({"dephasing",
                "independent phase damping at every site",
                {{"gamma", 0.5, "damping rate, >= 0; 0 turns the generator off"},
                 {"mu", 1.0, "exponential weight of the decay function"},
                 {"alpha", 2.0, "power of the decay function"}},
                "any qubit volume",
                "off-diagonal single-site observables shrink: sigma_x evolves to "
                "e^(-2 gamma t) sigma_x; diagonal observables are fixed",
                "purely dissipative, time-constant; unitality and complete "
                "positivity of the product construction"});
  cs.push_back({"amplitude-damping",
                "independent decay toward the +1 eigenstate of sigma_z at every site",
                {{"gamma", 0.5, "damping rate, >= 0"},
                 {"mu", 1.0, "exponential weight of the decay function"},
                 {"alpha", 2.0, "power of the decay function"}},
                "any qubit volume",
                "Heisenberg closed form: sigma_z(t) = e^(-gamma t) sigma_z + "
                "(1 - e^(-gamma t)) * identity, with L = sqrt(gamma) |0><1|",
                "non-self-adjoint Lindblad operators; sign conventions locked "
                "by a 2x2 oracle"});
  cs.push_back({"tfim-dephasing",
                "nearest-neighbor ZZ coupling, transverse X field, per-site dephasing",
                {{"j", 1.0, "ZZ coupling on unit-distance pairs"},
                 {"h", 1.0, "transverse field"},
                 {"gamma", 0.5, "dephasing rate, >= 0"},
                 {"mu", 1.0, "exponential weight of the decay function"},
                 {"alpha", 2.0, "power of the decay function"}},
                "qubit chain or grid (unit-distance pairs carry the coupling)",
                "h = 0 freezes the spread of single-site Z and X observables "
                "to nearest neighbors; h != 0 opens a genuine light cone",
                "mixed Hamiltonian plus dissipative generator; light-cone "
                "measurements and nested-volume convergence"});
  cs.push_back({"driven-xy",
                "XY exchange coupling with a sinusoidal drive",
                {{"j", 1.0, "XX + YY coupling on unit-distance pairs"},
                 {"omega", 2.0, "drive frequency"},
                 {"phase", 0.0, "drive phase"},
                 {"mu", 1.0, "exponential weight of the decay function"},
                 {"alpha", 2.0, "power of the decay function"}},
                "qubit chain or grid",
                "one fixed coupling scaled by sin(omega t + phase), so the "
                "propagator is conjugation by exp(i Theta(t) H) with Theta "
                "the running integral of the drive",
                "time-dependent, sign-changing Hamiltonian profile; drive "
                "continuity enters the product-approximation certificate"});
  cs.push_back({"random-decaying",
                "seeded Gaussian two-site terms on every pair, scaled to the decay profile",
                {{"c0", 1.0, "per-pair interaction budget"},
                 {"seed", 42.0, "draw seed; same seed, same spec"},
                 {"mu", 1.0, "exponential weight of the decay function"},
                 {"alpha", 2.0, "power of the decay function"}},
                "any qubit volume; terms on all pairs",
                "each pair's cb bound is c0 * F_mu(d(x,y)) exactly, so the "
                "interaction norm equals c0 on chains of any length",
                "generic dense interactions with controlled decay; "
                "volume-uniform interaction norm by construction"});
  return cs;
}

}  // namespace

const std::vector<ModelCard>& cards() {
  static const std::vector<ModelCard> cs = make_cards();
  return cs;
}

const ModelCard& card(const std::string& name) {
  for (const auto& c : cards())
    if (c.name == name) return c;
  throw std::invalid_argument("unknown model '" + name + "'");
}

GeneratorSpec build(const std::string& name, const Params& overrides,
                    const Volume& v) {
  const ModelCard& c = card(name);
  require_qubits(v, name);
  Params p = merge(c, overrides);
  GeneratorSpec sp;
  if (name == "dephasing") sp = build_dephasing(p, v);
  else if (name == "amplitude-damping") sp = build_amplitude_damping(p, v);
  else if (name == "tfim-dephasing") sp = build_tfim_dephasing(p, v);
  else if (name == "driven-xy") sp = build_driven_xy(p, v);
  else sp = build_random_decaying(p, v);
  sp.validate_and_normalize();
  return sp;
}

}  // namespace qlocal::models
