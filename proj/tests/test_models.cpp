#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <stdexcept>

#include "qlocal/models.hpp"
#include "qlocal/propagator.hpp"
#include "qlocal/thermolimit.hpp"

using namespace qlocal;

namespace {

algebra::Volume chain(int n) {
  return algebra::Volume::qubits(lattice::MetricGraph::chain(n),
                                 algebra::Volume::kAbsoluteCap);
}

}  // namespace

TEST_CASE("registry lists the five models and rejects bad input") {
  REQUIRE(models::cards().size() == 5);
  CHECK(models::card("dephasing").name == "dephasing");
  CHECK(models::card("amplitude-damping").params.front().name == "gamma");
  CHECK(models::card("random-decaying").params.size() == 4);
  CHECK_THROWS_AS(models::card("ising"), std::invalid_argument);

  algebra::Volume v = chain(2);
  CHECK_THROWS_AS(models::build("dephasing", {{"gamm", 0.1}}, v), std::invalid_argument);
  CHECK_THROWS_AS(models::build("dephasing", {{"gamma", -0.1}}, v), std::invalid_argument);
  CHECK_THROWS_AS(models::build("dephasing", {{"mu", 0.0}}, v), std::invalid_argument);
  CHECK_THROWS_AS(models::build("amplitude-damping", {{"gamma", -1.0}}, v),
                  std::invalid_argument);

  algebra::Volume qutrit = algebra::Volume::make(lattice::MetricGraph::chain(1), {3});
  CHECK_THROWS_AS(models::build("dephasing", {}, qutrit), std::invalid_argument);
}

TEST_CASE("dephasing: zero rate turns the generator off, closed form otherwise") {
  algebra::Volume v = chain(2);
  auto off = models::build("dephasing", {{"gamma", 0.0}}, v);
  CHECK(off.terms.empty());

  auto sp = models::build("dephasing", {{"gamma", 0.7}}, v);
  REQUIRE(sp.terms.size() == 2);
  generator::GeneratorAction gen(sp);
  algebra::LocalOperator ax;
  ax.support = {0};
  ax.block = algebra::pauli('X');
  Mat got = propagator::evolve(gen, ax, 0.0, 0.9);
  Mat want = std::exp(-2.0 * 0.7 * 0.9) * algebra::embed(ax, v);
  CHECK(algebra::op_norm(got - want) <= 1e-9);
}

TEST_CASE("amplitude damping: documented closed form against brute force") {
  algebra::Volume v = chain(1);
  const double gamma = 0.8, t = 0.7;
  auto sp = models::build("amplitude-damping", {{"gamma", gamma}}, v);
  generator::GeneratorAction gen(sp);

  algebra::LocalOperator az;
  az.support = {0};
  az.block = algebra::pauli('Z');
  Mat evolved = propagator::evolve(gen, az, 0.0, t);
  Mat closed = std::exp(-gamma * t) * algebra::pauli('Z') +
               (1.0 - std::exp(-gamma * t)) * Mat::Identity(2, 2);
  CHECK(algebra::op_norm(evolved - closed) <= 1e-9);

  // independent brute force: exponentiate the constant 4x4 superoperator
  Mat sop = Mat(gen.superop(0.0));
  Mat prop = (t * sop).exp();
  Vec vz(4);
  vz << 1.0, 0.0, 0.0, -1.0;  // column-stacked sigma_z
  Vec out = prop * vz;
  Mat brute(2, 2);
  brute << out(0), out(2), out(1), out(3);
  CHECK(algebra::op_norm(brute - closed) <= 1e-12);

  // the coherence decays at half the population rate
  algebra::LocalOperator am;
  am.support = {0};
  am.block = algebra::lower();
  Mat coh = propagator::evolve(gen, am, 0.0, t);
  CHECK(algebra::op_norm(coh - std::exp(-gamma * t / 2.0) * algebra::lower()) <= 1e-9);
}

TEST_CASE("tfim-dephasing: term layout and hypothesis checks") {
  auto sp = models::build("tfim-dephasing", {}, chain(5));
  CHECK(sp.terms.size() == 4 + 5 + 5);
  int bonds = 0, fields = 0, diss = 0;
  for (const auto& term : sp.terms) {
    if (term.support.size() == 2) ++bonds;
    else if (term.has_phi()) ++fields;
    else ++diss;
  }
  CHECK(bonds == 4);
  CHECK(fields == 5);
  CHECK(diss == 5);

  generator::GeneratorAction gen(sp);
  auto report = generator::check_hypotheses(gen, 1.0);
  CHECK(report.pass);
  // constant generator: no drift across the sampled grid
  CHECK(report.continuity_modulus <= 1e-12);

  auto frozen = models::build("tfim-dephasing", {{"h", 0.0}, {"gamma", 0.0}}, chain(3));
  CHECK(frozen.terms.size() == 2);
}

TEST_CASE("driven-xy: commuting drive gives a conjugation orbit") {
  algebra::Volume v = chain(2);
  const double j = 0.7, omega = 2.0, t = 0.8;
  auto sp = models::build("driven-xy", {{"j", j}, {"omega", omega}}, v);
  REQUIRE(sp.terms.size() == 1);
  CHECK(sp.terms[0].lindblads.empty());
  CHECK(sp.terms[0].profile.kind == generator::TimeProfile::Kind::Sinusoidal);

  generator::GeneratorAction gen(sp);
  algebra::LocalOperator az;
  az.support = {0};
  az.block = algebra::pauli('Z');
  Mat got = propagator::evolve(gen, az, 0.0, t);

  // every H(t) is the same operator rescaled, so time ordering collapses:
  // A(t) = e^{i Theta H} A e^{-i Theta H}, Theta = (1 - cos(omega t)) / omega
  Mat h0 = j * (algebra::pauli_string("XX", {0, 1}).block +
                algebra::pauli_string("YY", {0, 1}).block);
  double theta = (1.0 - std::cos(omega * t)) / omega;
  Mat u = (cplx(0.0, 1.0) * theta * h0).exp();
  Mat want = u * algebra::embed(az, v) * u.adjoint();
  CHECK(algebra::op_norm(got - want) <= 1e-9);

  auto report = generator::check_hypotheses(gen, 1.5);
  CHECK(report.pass);
  CHECK(report.continuity_modulus > 0.01);  // the drive really moves
}

TEST_CASE("random-decaying: seeded determinism and volume-uniform norm") {
  algebra::Volume v = chain(4);
  auto a = models::build("random-decaying", {}, v);
  auto b = models::build("random-decaying", {}, v);
  REQUIRE(a.terms.size() == 6);
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    CHECK((a.terms[i].phi - b.terms[i].phi).squaredNorm() == 0.0);
    CHECK((a.terms[i].lindblads[0] - b.terms[i].lindblads[0]).squaredNorm() == 0.0);
  }
  auto c = models::build("random-decaying", {{"seed", 7.0}}, v);
  CHECK((a.terms[0].phi - c.terms[0].phi).squaredNorm() > 0.0);

  // each pair's bound is c0 F_mu(d) exactly, so the interaction norm is c0
  // independent of the chain length
  CHECK(generator::psi_interaction_norm(a, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  auto a8 = models::build("random-decaying", {}, chain(8));
  CHECK(generator::psi_interaction_norm(a8, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  auto half = models::build("random-decaying", {{"c0", 0.7}}, chain(5));
  CHECK(generator::psi_interaction_norm(half, 1.0) == doctest::Approx(0.7).epsilon(1e-12));

  // label-keyed draws make nested volumes agree exactly on shared pairs
  auto family = [](const algebra::Volume& vol) {
    return models::build("random-decaying", {{"seed", 7.0}}, vol);
  };
  CHECK_NOTHROW(thermolimit::VolumeSequence::from_family(
      thermolimit::centered_chain_volumes(3, 1), family));

  generator::GeneratorAction gen(a);
  CHECK(generator::check_hypotheses(gen, 1.0).pass);
}

TEST_CASE("every card passes the hypothesis checks at its defaults") {
  for (const auto& c : models::cards()) {
    auto sp = models::build(c.name, {}, chain(4));
    generator::GeneratorAction gen(sp);
    auto report = generator::check_hypotheses(gen, 1.0);
    CHECK_MESSAGE(report.pass, c.name);
  }
}
