#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qlocal/thermolimit.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace qlocal;
using thermolimit::VolumeSequence;

namespace {

// transverse-field Ising chain with per-site dephasing; the field makes the
// evolved observable genuinely spread, unlike the bare ZZ model
generator::GeneratorSpec tfim_family(const algebra::Volume& v, double j, double h,
                                     double gamma) {
  generator::GeneratorSpec sp;
  sp.volume = v;
  sp.decay = lattice::DecayFunction::power_law(2.0, 1.0, 1);
  for (int x = 0; x < v.sites(); ++x) {
    for (int y = x + 1; y < v.sites(); ++y) {
      if (v.graph.d(x, y) == 1.0) {
        generator::InteractionTerm t;
        t.support = {x, y};
        t.phi = j * algebra::pauli_string("ZZ", {x, y}).block;
        sp.terms.push_back(t);
      }
    }
    if (h != 0.0) {
      generator::InteractionTerm f;
      f.support = {x};
      f.phi = h * algebra::pauli('X');
      sp.terms.push_back(f);
    }
    if (gamma != 0.0) {
      generator::InteractionTerm d;
      d.support = {x};
      d.lindblads = {std::sqrt(gamma) * algebra::pauli('Z')};
      sp.terms.push_back(d);
    }
  }
  return sp;
}

algebra::LocalOperator center_x() {
  algebra::LocalOperator a;
  a.support = {1};  // center of the 3-site base volume
  a.block = algebra::pauli('X');
  return a;
}

}  // namespace

TEST_CASE("sequence construction, maps and relabeling") {
  auto family = [](const algebra::Volume& v) { return tfim_family(v, 0.5, 0.5, 0.25); };
  std::vector<algebra::Volume> vols = thermolimit::centered_chain_volumes(3, 1);
  REQUIRE(vols.size() == 3);
  CHECK(vols[0].sites() == 3);
  CHECK(vols[2].sites() == 7);
  CHECK(vols[1].graph.labels.front() == "-2");
  CHECK(vols[1].graph.labels.back() == "2");

  VolumeSequence seq = VolumeSequence::from_family(vols, family);
  REQUIRE(seq.size() == 3);

  std::vector<int> map01 = seq.index_map(0, 1);
  CHECK(map01 == std::vector<int>{1, 2, 3});
  CHECK(seq.index_map(1, 1) == std::vector<int>{0, 1, 2, 3, 4});

  algebra::LocalOperator a2 = thermolimit::relabel(seq, center_x(), 0, 2);
  CHECK(a2.support == std::vector<int>{3});

  // reversed volumes are not nested
  std::vector<algebra::Volume> rev = {vols[1], vols[0]};
  CHECK_THROWS_AS(VolumeSequence::from_family(rev, family), std::invalid_argument);

  // a family whose coupling depends on the volume is not a restriction chain
  auto drifting = [](const algebra::Volume& v) {
    return tfim_family(v, 0.1 * v.sites(), 0.5, 0.25);
  };
  CHECK_THROWS_AS(VolumeSequence::from_family(vols, drifting), std::invalid_argument);

  // label order must be preserved by the inclusion
  auto trivial = [](const algebra::Volume& v) { return tfim_family(v, 0.0, 0.0, 0.0); };
  RMat d2(2, 2);
  d2 << 0, 1, 1, 0;
  std::vector<algebra::Volume> swapped = {
      algebra::Volume::qubits(lattice::MetricGraph::custom({"1", "0"}, d2)),
      algebra::Volume::qubits(lattice::MetricGraph::chain_interval(0, 2))};
  CHECK_THROWS_AS(VolumeSequence::from_family(swapped, trivial), std::invalid_argument);

  // shared sites must keep their pairwise distances
  RMat d2far(2, 2);
  d2far << 0, 2, 2, 0;
  std::vector<algebra::Volume> stretched = {
      algebra::Volume::qubits(lattice::MetricGraph::custom({"0", "1"}, d2far)),
      algebra::Volume::qubits(lattice::MetricGraph::chain_interval(0, 2))};
  CHECK_THROWS_AS(VolumeSequence::from_family(stretched, trivial), std::invalid_argument);
}

TEST_CASE("trivial families: empty generator and strictly local dynamics") {
  algebra::LocalOperator a = center_x();

  auto empty = [](const algebra::Volume& v) { return tfim_family(v, 0.0, 0.0, 0.0); };
  VolumeSequence s0 = VolumeSequence::from_family(
      thermolimit::centered_chain_volumes(3, 1), empty);
  CHECK(thermolimit::volume_difference(s0, a, 2, 0, 0.0, 0.7) <= 1e-14);
  auto r0 = thermolimit::cauchy_sweep(s0, a, 0.0, 0.7);
  REQUIRE(r0.rows.size() == 2);
  for (const auto& row : r0.rows) {
    CHECK(row.measured <= 1e-14);
    CHECK(row.bound == 0.0);
    CHECK(row.ratio == 0.0);
  }
  CHECK(r0.cert.psi_norm == 0.0);
  CHECK(std::isnan(r0.fit_slope));
  CHECK(r0.certified_tail == 0.0);

  // single-site terms only: no cross-boundary coupling, so growing the
  // volume changes nothing beyond integrator noise
  auto local_only = [](const algebra::Volume& v) { return tfim_family(v, 0.0, 0.5, 0.25); };
  VolumeSequence s1 = VolumeSequence::from_family(
      thermolimit::centered_chain_volumes(3, 1), local_only);
  auto r1 = thermolimit::cauchy_sweep(s1, a, 0.0, 0.6);
  for (const auto& row : r1.rows) {
    CHECK(row.measured <= 1e-8);
    CHECK(row.bound > 0.0);
  }
  CHECK(r1.fit_points == 0);
  CHECK(std::isnan(r1.fit_slope));

  // identical volume indices short-circuit to zero
  VolumeSequence s2 = VolumeSequence::from_family(
      thermolimit::centered_chain_volumes(2, 1),
      [](const algebra::Volume& v) { return tfim_family(v, 0.5, 0.5, 0.25); });
  CHECK(thermolimit::volume_difference(s2, a, 1, 1, 0.0, 0.5) == 0.0);
  auto cert = lrbound::build_certificate(s2.specs[1], 0.5);
  CHECK(thermolimit::difference_bound(s2, a, 1, 1, 0.0, 0.5, cert) == 0.0);
  CHECK(thermolimit::difference_bound(s2, a, 1, 0, 0.5, 0.5, cert) == 0.0);
}

TEST_CASE("difference bound replicates the closed formula") {
  auto family = [](const algebra::Volume& v) { return tfim_family(v, 0.5, 0.5, 0.25); };
  VolumeSequence seq = VolumeSequence::from_family(
      thermolimit::centered_chain_volumes(2, 1), family);
  algebra::LocalOperator a = center_x();
  const double t = 0.6;
  auto cert = lrbound::build_certificate(seq.specs[1], t);

  // bond term dominates the interaction norm: cb = 2*0.5 against F_mu(1)
  CHECK(cert.psi_norm == doctest::Approx(4.0 * std::exp(1.0)).epsilon(1e-12));
  CHECK(cert.velocity ==
        doctest::Approx(cert.psi_norm * cert.c_mu / cert.mu).epsilon(1e-12));
  CHECK(cert.rigorous);

  // volumes 3 -> 5 sites add coordinates -2 and 2, both at distance 2 from
  // the center, so the boundary sum is two copies of F_mu(2)
  double aexp = cert.c_mu * cert.psi_norm;
  double integral = (std::exp(aexp * t) - 1.0) / aexp;
  double zsum = 2.0 * std::exp(-2.0) / 9.0;
  double want = 1.0 * cert.psi_norm * integral * 1.0 * zsum;
  double got = thermolimit::difference_bound(seq, a, 1, 0, 0.0, t, cert);
  CHECK(got == doctest::Approx(want).epsilon(1e-12));

  CHECK_THROWS_AS(thermolimit::difference_bound(seq, a, 0, 1, 0.0, t, cert),
                  std::invalid_argument);
  CHECK_THROWS_AS(thermolimit::difference_bound(seq, a, 1, 0, -0.1, t, cert),
                  std::invalid_argument);
  CHECK_THROWS_AS(thermolimit::difference_bound(seq, a, 1, 0, 0.4, 0.2, cert),
                  std::invalid_argument);
  auto wrong_mu = cert;
  wrong_mu.mu = 0.5;
  CHECK_THROWS_AS(thermolimit::difference_bound(seq, a, 1, 0, 0.0, t, wrong_mu),
                  std::invalid_argument);

  algebra::LocalOperator outside;
  outside.support = {4};
  outside.block = algebra::pauli('X');
  CHECK_THROWS(thermolimit::volume_difference(seq, outside, 1, 0, 0.0, t));
}

TEST_CASE("nested chain sweep: domination, decay and certified tail") {
  auto family = [](const algebra::Volume& v) { return tfim_family(v, 0.5, 0.5, 0.25); };
  VolumeSequence seq = VolumeSequence::from_family(
      thermolimit::centered_chain_volumes(4, 1), family);
  algebra::LocalOperator a = center_x();
  const double t = 0.6;

  auto res = thermolimit::cauchy_sweep(seq, a, 0.0, t);
  REQUIRE(res.rows.size() == 3);

  CHECK(res.rows[0].n == 2);
  CHECK(res.rows[0].sites == 5);
  CHECK(res.rows[1].sites == 7);
  CHECK(res.rows[2].sites == 9);
  CHECK(res.rows[0].boundary_distance == 2.0);
  CHECK(res.rows[1].boundary_distance == 3.0);
  CHECK(res.rows[2].boundary_distance == 4.0);

  CHECK(res.rows[0].measured == doctest::Approx(0.044059258285160878).epsilon(1e-6));
  CHECK(res.rows[1].measured == doctest::Approx(0.00069600954326134274).epsilon(1e-6));
  CHECK(res.rows[2].measured == doctest::Approx(5.2073365261760836e-06).epsilon(1e-5));

  for (std::size_t i = 0; i + 1 < res.rows.size(); ++i)
    CHECK(res.rows[i].measured > res.rows[i + 1].measured);
  for (const auto& row : res.rows) {
    CHECK(row.measured <= row.bound);
    CHECK(row.ratio <= 1.0);
  }

  CHECK(res.fit_points == 3);
  CHECK(res.fit_slope <= -0.5);  // at least mu/2 decay per unit distance
  CHECK(res.fit_slope == doctest::Approx(-4.5216111421757903).epsilon(1e-4));

  // tail: everything outside coordinates [-4, 4], nearest distance from the
  // center, summed far past convergence
  double series = 0.0;
  for (int i = 1; i <= 400; ++i)
    series += 2.0 * std::exp(-(4.0 + i)) / std::pow(5.0 + i, 2.0);
  double aexp = res.cert.c_mu * res.cert.psi_norm;
  double integral = (std::exp(aexp * t) - 1.0) / aexp;
  CHECK(res.certified_tail ==
        doctest::Approx(res.cert.psi_norm * integral * series).epsilon(1e-12));
  CHECK(res.certified_tail < res.rows[2].bound);

  // the measured value is exactly what evolving in both volumes and
  // embedding the smaller result gives
  {
    generator::GeneratorAction g0(seq.specs[0]), g1(seq.specs[1]);
    Mat small = propagator::evolve(g0, a, 0.0, t, 1e-10);
    Mat big = propagator::evolve(g1, thermolimit::relabel(seq, a, 0, 1), 0.0, t, 1e-10);
    algebra::LocalOperator lift;
    lift.support = seq.index_map(0, 1);
    lift.block = small;
    double direct = algebra::op_norm(big - algebra::embed(lift, seq.volume(1)));
    CHECK(res.rows[0].measured == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("restriction of the larger generator acts identically") {
  auto family = [](const algebra::Volume& v) { return tfim_family(v, 0.5, 0.5, 0.25); };
  VolumeSequence seq = VolumeSequence::from_family(
      thermolimit::centered_chain_volumes(4, 1), family);
  CHECK(thermolimit::restriction_defect(seq, 2, 0, 0.4) <= 1e-12);
  CHECK(thermolimit::restriction_defect(seq, 3, 1, 0.4) <= 1e-12);

  // time-dependent profiles restrict the same way
  auto driven = [](const algebra::Volume& v) {
    auto sp = tfim_family(v, 0.5, 0.5, 0.25);
    for (auto& term : sp.terms)
      if (term.support.size() == 2)
        term.profile = generator::TimeProfile::sinusoidal(1.0, 2.0);
    return sp;
  };
  VolumeSequence sd = VolumeSequence::from_family(
      thermolimit::centered_chain_volumes(3, 1), driven);
  CHECK(thermolimit::restriction_defect(sd, 2, 0, 0.37) <= 1e-12);
}

TEST_CASE("time-dependent profiles take the quadrature path") {
  auto driven = [](const algebra::Volume& v) {
    auto sp = tfim_family(v, 0.5, 0.5, 0.25);
    for (auto& term : sp.terms)
      if (term.support.size() == 2)
        term.profile = generator::TimeProfile::sinusoidal(1.0, 2.0);
    return sp;
  };
  VolumeSequence seq = VolumeSequence::from_family(
      thermolimit::centered_chain_volumes(3, 1), driven);
  algebra::LocalOperator a = center_x();
  const double t = 0.6;

  auto res = thermolimit::cauchy_sweep(seq, a, 0.0, t);
  REQUIRE(res.rows.size() == 2);
  CHECK(res.rows[0].measured == doctest::Approx(0.010676142115375145).epsilon(1e-6));
  CHECK(res.rows[1].measured == doctest::Approx(7.7644248826326464e-05).epsilon(1e-5));
  for (const auto& row : res.rows) CHECK(row.measured <= row.bound);

  // sup of |sin(2r)| over [0, 0.6] is sin(1.2)
  CHECK(res.cert.psi_norm ==
        doctest::Approx(4.0 * std::exp(1.0) * std::sin(1.2)).epsilon(1e-12));

  // right-endpoint upper sum over 64 panels, certificate interaction norm up
  // front, per-panel norms inside the exponent
  double acc = 0.0;
  for (int k = 1; k <= 64; ++k) {
    double r = k * (t / 64.0);
    double psir = generator::psi_interaction_norm(seq.specs[1], r, 101, true);
    acc += (t / 64.0) * std::exp(res.cert.c_mu * psir * r);
  }
  double zsum = 2.0 * std::exp(-2.0) / 9.0;
  double want = res.cert.psi_norm * acc * zsum;
  auto cert = res.cert;
  double got = thermolimit::difference_bound(seq, a, 1, 0, 0.0, t, cert);
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("grid family: domination holds, no tail is claimed") {
  auto family = [](const algebra::Volume& v) { return tfim_family(v, 0.2, 0.3, 0.3); };
  std::vector<algebra::Volume> vols;
  vols.push_back(algebra::Volume::qubits(lattice::MetricGraph::grid(1, 1)));
  vols.push_back(algebra::Volume::qubits(lattice::MetricGraph::grid(3, 3),
                                         algebra::Volume::kAbsoluteCap));
  VolumeSequence seq = VolumeSequence::from_family(vols, family);

  algebra::LocalOperator a;
  a.support = {0};
  a.block = algebra::pauli('X');
  auto res = thermolimit::cauchy_sweep(seq, a, 0.0, 0.3);
  REQUIRE(res.rows.size() == 1);
  CHECK(res.rows[0].sites == 9);
  CHECK(res.rows[0].boundary_distance == 1.0);
  CHECK(res.rows[0].measured == doctest::Approx(0.19945764761662074).epsilon(1e-6));
  CHECK(res.rows[0].measured <= res.rows[0].bound);
  CHECK(std::isnan(res.certified_tail));
  CHECK(std::isnan(res.fit_slope));
}

TEST_CASE("sweep rows do not depend on the thread count") {
  auto local_only = [](const algebra::Volume& v) { return tfim_family(v, 0.0, 0.5, 0.25); };
  VolumeSequence seq = VolumeSequence::from_family(
      thermolimit::centered_chain_volumes(3, 1), local_only);
  algebra::LocalOperator a = center_x();
  auto one = thermolimit::cauchy_sweep(seq, a, 0.0, 0.6, 1e-10, 1);
  auto two = thermolimit::cauchy_sweep(seq, a, 0.0, 0.6, 1e-10, 2);
  REQUIRE(one.rows.size() == two.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    CHECK(one.rows[i].measured == two.rows[i].measured);
    CHECK(one.rows[i].bound == two.rows[i].bound);
  }
}
