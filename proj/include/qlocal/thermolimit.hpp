#pragma once

// Nested-volume dynamics: how much the evolved observable changes when the
// volume grows, measured directly and bounded by the boundary-decay estimate.
// The sequence of evolved observables being Cauchy in this sense is what
// "thermodynamic limit" means at desk scale; the limit object is represented
// by the largest computed volume plus a certified tail.

#include <functional>
#include <vector>

#include "qlocal/lrbound.hpp"
#include "qlocal/propagator.hpp"

namespace qlocal::thermolimit {

using algebra::LocalOperator;
using algebra::Volume;
using generator::GeneratorSpec;
using lrbound::LRCertificate;

// Strictly nested volumes, one generator per volume, all produced by a common
// family rule (the terms supported inside the volume). Site labels carry
// identity across volumes. Construction validates: strictly growing label
// sets, matching site dimensions and pairwise distances on shared sites,
// order-preserving inclusion (so embeddings need no index permutation), and
// exact term-list consistency (shared terms have identical blocks, Lindblads
// and profiles).
struct VolumeSequence {
  std::vector<GeneratorSpec> specs;  // smallest volume first

  int size() const { return int(specs.size()); }
  const Volume& volume(int k) const { return specs.at(std::size_t(k)).volume; }

  // indices of volume `from` sites inside volume `to`; strictly increasing
  std::vector<int> index_map(int from, int to) const;

  static VolumeSequence from_family(
      const std::vector<Volume>& volumes,
      const std::function<GeneratorSpec(const Volume&)>& family);
};

// Centered chain intervals [-r, r], r = r0 + k*step, k = 0..count-1, qubits.
std::vector<Volume> centered_chain_volumes(int count, long r0, long step = 1);

// The same operator with its support re-indexed into another volume of the
// sequence. Every support label must exist in the target volume.
LocalOperator relabel(const VolumeSequence& seq, const LocalOperator& a,
                      int from, int to);

// || gamma^(n)_{t,s}(embed A) - embed(gamma^(m)_{t,s}(A)) || for m <= n, both
// evolutions at tolerance tol. A's support indices refer to volume m. Equal
// indices return 0 without integrating.
double volume_difference(const VolumeSequence& seq, const LocalOperator& a,
                         int n, int m, double s, double t, double tol = 1e-10);

// Upper bound on volume_difference from the propagation certificate:
//   ||A|| * psi * (int_s^t e^{mu v_r r} dr) * |X| *
//     sup_{x in X} sum_{z in volume n minus volume m} F_mu(d(x, z)).
// The derivation carries C_mu once in the numerator and once in the
// denominator; the cancelled form above is what is evaluated. For
// all-constant profiles the time integral is closed-form with the
// certificate velocity; otherwise it is a right-endpoint upper sum of the
// nondecreasing integrand (64 panels), so the result stays an upper bound.
// cert must be built from this sequence's family at t_max >= t; its mu must
// match the decay function's. Requires 0 <= s <= t.
double difference_bound(const VolumeSequence& seq, const LocalOperator& a,
                        int n, int m, double s, double t,
                        const LRCertificate& cert);

// Exact-restriction check at the generator level: a random Hermitian probe
// supported on volume m, pushed through volume m's generator and through
// volume n's generator with only the terms inside volume m, embedded into
// volume n both ways. Returns the norm of the mismatch (roundoff-sized when
// the sequence is consistent).
double restriction_defect(const VolumeSequence& seq, int n, int m, double t,
                          unsigned seed = 1);

struct SweepRow {
  int n = 0;                // 1-based ordinal of the larger volume
  int sites = 0;            // sites of the larger volume
  double boundary_distance = 0.0;  // d(support(A), added sites)
  double measured = 0.0;    // volume_difference(n, n-1)
  double bound = 0.0;       // difference_bound(n, n-1)
  double ratio = 0.0;       // measured / bound; 0 when both vanish
};

struct SweepResult {
  std::vector<SweepRow> rows;
  LRCertificate cert;       // built from the largest volume at t_max = t
  double fit_slope = 0.0;   // LSQ slope of log(measured) vs boundary_distance
  int fit_points = 0;       // rows above the noise floor max(1e-12, 1e3*tol)
  double certified_tail = 0.0;  // see below
};

// Adjacent-pair differences over the whole sequence, certificate bounds
// alongside. Throws if any measured value exceeds its bound (domination is a
// theorem; a violation is a bug). fit_slope is reported, not asserted; it is
// NaN below 2 usable points.
//
// certified_tail bounds the sum of all adjacent difference bounds past the
// last volume for the declared infinite family, via
// sup_x sum_z <= sum_z F_mu(d(X, z)) over everything outside the last
// volume. Evaluated for integer-coordinate chain families (series summed to
// convergence); NaN for other families, which declare no extension rule.
// A's support indices refer to volume 0. Volume evolutions run in parallel.
SweepResult cauchy_sweep(const VolumeSequence& seq, const LocalOperator& a,
                         double s, double t, double tol = 1e-10,
                         int threads = 1);

}  // namespace qlocal::thermolimit
