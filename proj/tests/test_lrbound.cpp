#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qlocal/lrbound.hpp"

using namespace qlocal;
using namespace qlocal::algebra;
using namespace qlocal::generator;
using namespace qlocal::lrbound;

namespace {

Volume qubit_chain(int n) { return Volume::qubits(lattice::MetricGraph::chain(n)); }

GeneratorSpec dephasing_spec(int n, double gamma) {
  GeneratorSpec s;
  s.volume = qubit_chain(n);
  s.decay = lattice::DecayFunction::power_law(2.0, 1.0, 1);
  for (int i = 0; i < n; ++i) {
    InteractionTerm t;
    t.support = {i};
    t.lindblads = {std::sqrt(gamma) * pauli('Z')};
    t.profile = TimeProfile::constant(1.0);
    s.terms.push_back(std::move(t));
  }
  return s;
}

GeneratorSpec heisenberg_dephasing(int n, double j, double gamma) {
  auto s = dephasing_spec(n, gamma);
  for (int i = 0; i + 1 < n; ++i) {
    InteractionTerm t;
    t.support = {i, i + 1};
    t.phi = j * (pauli_string("XX", {i, i + 1}).block +
                 pauli_string("YY", {i, i + 1}).block +
                 pauli_string("ZZ", {i, i + 1}).block);
    t.profile = TimeProfile::constant(1.0);
    s.terms.push_back(std::move(t));
  }
  return s;
}

GeneratorSpec tfim_dephasing(int n, double j, double h, double gamma) {
  auto s = dephasing_spec(n, gamma);
  for (int i = 0; i + 1 < n; ++i) {
    InteractionTerm t;
    t.support = {i, i + 1};
    t.phi = j * pauli_string("ZZ", {i, i + 1}).block;
    t.profile = TimeProfile::constant(1.0);
    s.terms.push_back(std::move(t));
  }
  for (int i = 0; i < n; ++i) {
    InteractionTerm t;
    t.support = {i};
    t.phi = h * pauli('X');
    t.profile = TimeProfile::constant(1.0);
    s.terms.push_back(std::move(t));
  }
  return s;
}

constexpr double kFNorm = 2.2898681336964528;   // chain family norm, alpha = 2
constexpr double kCConst = 9.159472534785811;   // 4 * kFNorm

}  // namespace

TEST_CASE("observation maps") {
  auto kc = LocalSuperMap::commutator({0}, 2.0 * pauli('Z'));
  CHECK(kc.cb_bound == doctest::Approx(4.0).epsilon(1e-13));
  CHECK(!kc.lindblad_form);

  auto kl = LocalSuperMap::lindblad({1}, 0.5 * pauli('X'),
                                    {std::sqrt(0.3) * pauli('Z'), lower()});
  CHECK(kl.cb_bound == doctest::Approx(1.0 + 0.6 + 2.0).epsilon(1e-12));

  // non-Hermitian block rejected in the dissipative form
  Mat bad = Mat::Zero(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS(LocalSuperMap::lindblad({0}, bad, {}));

  // both forms vanish on the identity after embedding
  Volume v = qubit_chain(2);
  Mat id = Mat::Identity(4, 4);
  CHECK(apply_supermap(kc, v, id).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(apply_supermap(kl, v, id).cwiseAbs().maxCoeff() < 1e-14);

  // commutator form on an embedded observable
  LocalOperator b{{0}, pauli('X')};
  Mat kb = apply_supermap(kc, v, embed(b, v));
  CHECK(op_norm(kb) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("certificate constants") {
  auto s = heisenberg_dephasing(6, 0.5, 0.5);
  auto cert = build_certificate(s, 1.0);
  CHECK(cert.mu == 1.0);
  CHECK(cert.f_norm == doctest::Approx(kFNorm).epsilon(1e-12));
  CHECK(cert.c_mu == doctest::Approx(kCConst).epsilon(1e-12));
  // dominant pair: exchange bond, 2 * (3 J) / F_mu(1) = 6 J * 4 e
  double psi = 6.0 * 0.5 * 4.0 * std::exp(1.0);
  CHECK(cert.psi_norm == doctest::Approx(psi).epsilon(1e-12));
  CHECK(cert.velocity ==
        doctest::Approx(psi * kCConst / 1.0).epsilon(1e-12));
  CHECK(cert.rigorous);
  CHECK(!cert.single_site_excluded);

  // dropping single-site terms removes only the on-site dephasing here
  auto cert2 = build_certificate(s, 1.0, true);
  CHECK(cert2.psi_norm == doctest::Approx(psi).epsilon(1e-12));
  CHECK(cert2.single_site_excluded);

  // undeclared envelope: sampled, flagged
  auto sr = heisenberg_dephasing(4, 0.5, 0.5);
  sr.terms[0].profile = TimeProfile::ramp(0.5, 0.25);
  CHECK(!build_certificate(sr, 1.0).rigorous);

  // finite-graph decay constants: usable but flagged
  auto sg = heisenberg_dephasing(4, 0.5, 0.5);
  sg.decay = lattice::DecayFunction::power_law_on(sg.volume.graph, 2.0, 1.0);
  auto certg = build_certificate(sg, 1.0);
  CHECK(!certg.rigorous);
  CHECK(certg.c_mu > 0.0);

  auto sm = heisenberg_dephasing(4, 0.5, 0.5);
  sm.decay.mu = 0.0;
  CHECK_THROWS(build_certificate(sm, 1.0));
}

TEST_CASE("sum-form bound arithmetic") {
  // independently recomputed alongside the implementation
  LRCertificate cert;
  cert.mu = 1.0;
  cert.psi_norm = 2.0;
  cert.c_mu = kCConst;
  cert.f_norm = kFNorm;
  cert.velocity = cert.psi_norm * cert.c_mu / cert.mu;

  auto g = lattice::MetricGraph::chain(6);
  auto decay = lattice::DecayFunction::power_law(2.0, 1.0, 1);
  auto k = LocalSuperMap::commutator({0}, pauli('Z'));
  LocalOperator b{{5}, pauli('X')};

  double dt = 0.3;
  double got = lr_bound_sum(cert, k, b, g, decay, dt);
  double fmu5 = std::exp(-5.0) / 36.0;
  double want = (2.0 * 1.0 / kCConst) * std::exp(2.0 * kCConst * 0.3) * fmu5;
  CHECK(got == doctest::Approx(want).epsilon(1e-14));

  // zero observable, zero bound
  LocalOperator zb{{5}, Mat::Zero(2, 2)};
  CHECK(lr_bound_sum(cert, k, zb, g, decay, dt) == 0.0);

  // dt = 0, overlapping singleton supports: single pair, unit exponential
  LocalOperator b0{{0}, pauli('X')};
  CHECK(lr_bound_sum(cert, k, b0, g, decay, 0.0) ==
        doctest::Approx(2.0 / kCConst).epsilon(1e-14));

  // nondecreasing in dt and in the interaction norm
  CHECK(lr_bound_sum(cert, k, b, g, decay, 0.1) <
        lr_bound_sum(cert, k, b, g, decay, 0.2));
  LRCertificate cert2 = cert;
  cert2.psi_norm = 3.0;
  cert2.velocity = cert2.psi_norm * cert2.c_mu / cert2.mu;
  CHECK(lr_bound_sum(cert, k, b, g, decay, 0.2) <
        lr_bound_sum(cert2, k, b, g, decay, 0.2));

  CHECK_THROWS(lr_bound_sum(cert, k, b, g, decay, -0.1));
}

TEST_CASE("exponential-form bound") {
  LRCertificate cert;
  cert.mu = 1.0;
  cert.psi_norm = 2.0;
  cert.c_mu = kCConst;
  cert.f_norm = kFNorm;
  cert.velocity = cert.psi_norm * cert.c_mu / cert.mu;

  auto g = lattice::MetricGraph::chain(8);
  auto k = LocalSuperMap::commutator({0, 1}, pauli_string("ZZ", {0, 1}).block);
  LocalOperator b{{5, 6, 7}, pauli_string("ZXZ", {5, 6, 7}).block};

  // on the light cone the exponent vanishes and the prefactor remains
  double d = 4.0;  // d({0,1},{5,6,7}) on the chain
  double dt = d / cert.velocity;
  double bn = op_norm(b.block);
  double want = (k.cb_bound * bn / cert.c_mu) * cert.f_norm * 2.0;
  CHECK(lr_bound_exponential(cert, k, b, g, dt) ==
        doctest::Approx(want).epsilon(1e-12));

  // doubling mu at fixed psi and C multiplies the bound by e^(-mu d):
  // the velocity halves, so the time term in the exponent is unchanged
  LRCertificate cert2 = cert;
  cert2.mu = 2.0;
  cert2.velocity = cert2.psi_norm * cert2.c_mu / cert2.mu;
  double b1 = lr_bound_exponential(cert, k, b, g, 0.17);
  double b2 = lr_bound_exponential(cert2, k, b, g, 0.17);
  CHECK(b2 / b1 == doctest::Approx(std::exp(-1.0 * d)).epsilon(1e-12));
}

TEST_CASE("sum form is dominated by the exponential form") {
  auto g = lattice::MetricGraph::chain(12);
  auto decay = lattice::DecayFunction::power_law(2.0, 1.0, 1);
  LRCertificate cert;
  cert.mu = 1.0;
  cert.psi_norm = 1.5;
  cert.c_mu = kCConst;
  cert.f_norm = kFNorm;
  cert.velocity = cert.psi_norm * cert.c_mu / cert.mu;

  for (double dt : {0.0, 0.4, 1.1}) {
    for (int i = 0; i < 12; ++i) {
      auto k = LocalSuperMap::commutator({i}, pauli('Z'));
      for (int j = 0; j < 12; ++j) {
        LocalOperator b{{j}, pauli('X')};
        double s = lr_bound_sum(cert, k, b, g, decay, dt);
        double e = lr_bound_exponential(cert, k, b, g, dt);
        CHECK(s <= e * (1.0 + 1e-12));
      }
    }
    auto km = LocalSuperMap::commutator({0, 1, 2},
                                        pauli_string("ZZZ", {0, 1, 2}).block);
    LocalOperator bm{{7, 11}, pauli_string("XX", {7, 11}).block};
    CHECK(lr_bound_sum(cert, km, bm, g, decay, dt) <=
          lr_bound_exponential(cert, km, bm, g, dt) * (1.0 + 1e-12));
  }
}

TEST_CASE("empirical propagation") {
  // dephasing closed form: ||[sigma_z, e^{-1} sigma_x]|| = 2/e
  GeneratorAction dp(dephasing_spec(1, 0.5));
  auto k = LocalSuperMap::commutator({0}, pauli('Z'));
  LocalOperator b{{0}, pauli('X')};
  double got = empirical_lr(dp, k, b, 0.0, 1.0);
  CHECK(got == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-9));

  // disjoint supports at t = s: exactly zero
  GeneratorAction gen(heisenberg_dephasing(4, 0.5, 0.5));
  auto k0 = LocalSuperMap::commutator({0}, pauli('Z'));
  LocalOperator b3{{3}, pauli('X')};
  CHECK(empirical_lr(gen, k0, b3, 0.0, 0.0) == 0.0);

  // bound domination along a trajectory, disjoint supports
  GeneratorAction hd(heisenberg_dephasing(6, 0.5, 0.5));
  auto cert = build_certificate(hd.spec(), 2.0);
  LocalOperator b5{{5}, pauli('X')};
  for (double t : {0.25, 0.5, 1.0, 2.0}) {
    double emp = empirical_lr(hd, k0, b5, 0.0, t);
    double bnd = lr_bound_sum(cert, k0, b5, hd.spec().volume.graph,
                              hd.spec().decay, t);
    CHECK(emp <= bnd);
    CHECK(emp <= 2.0 + 1e-9);  // trivial bound as sanity floor
  }
}

TEST_CASE("light-cone scan") {
  // strictly local dynamics: the front never leaves the initial support
  GeneratorAction dp(dephasing_spec(4, 0.5));
  LocalOperator b{{1}, pauli('X')};
  auto res = lightcone_scan(dp, b, {0, 1, 2, 3}, {0.0, 0.2, 0.5, 1.0});
  REQUIRE(res.cells.size() == 16);
  CHECK(res.theta == doctest::Approx(2e-3).epsilon(1e-12));
  for (const auto& c : res.cells) {
    if (c.site != 1) CHECK(c.empirical == 0.0);
  }
  CHECK(res.front_time[1] == 0.0);
  CHECK(!std::isfinite(res.front_time[0]));
  CHECK(!std::isfinite(res.front_time[2]));
  CHECK(!std::isfinite(res.v_emp));  // single crossing site

  // propagating model: finite front, positive empirical velocity below
  // the certificate velocity, and bound domination on this grid
  GeneratorAction gen(tfim_dephasing(5, 1.0, 1.0, 0.5));
  LocalOperator b0{{0}, pauli('Z')};
  std::vector<double> times = {0.2, 0.4, 0.6, 0.8, 1.0};
  auto scan = lightcone_scan(gen, b0, {0, 1, 2, 3, 4}, times);
  CHECK(scan.front_time[0] == 0.2);
  CHECK(std::isfinite(scan.front_time[1]));
  CHECK(scan.front_time[1] <= scan.front_time[2]);
  CHECK(std::isfinite(scan.v_emp));
  CHECK(scan.v_emp > 0.0);
  CHECK(scan.v_emp <= scan.cert.velocity);
  for (const auto& c : scan.cells) {
    // domination is a theorem for disjoint supports only; B sits on site 0
    if (c.site != 0) {
      CHECK(c.empirical <= c.bound_sum * (1.0 + 1e-9));
      CHECK(c.ratio <= 1.0 + 1e-9);
    }
    CHECK(c.bound_sum <= c.bound_exp * (1.0 + 1e-12));
  }
}

TEST_CASE("norm estimator") {
  // well-separated spectrum: convergence to machine precision
  Vec d(3);
  d << 5.0, 3.0, 1.0;
  Mat sep = Mat(d.asDiagonal());
  CHECK(op_norm_estimate(sep, 40, 3) == doctest::Approx(5.0).epsilon(1e-12));

  // random matrix: a from-below estimate, close enough for front detection
  Rng rng(42);
  Mat m = rng.complex_gaussian(50, 50);
  double exact = op_norm(m);
  double est = op_norm_estimate(m, 60, 7);
  CHECK(est <= exact * (1.0 + 1e-12));
  CHECK(est == doctest::Approx(exact).epsilon(1e-3));
  CHECK(op_norm_estimate(Mat::Zero(8, 8)) == 0.0);
}
