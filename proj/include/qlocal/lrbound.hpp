#pragma once

// Light-cone certificates: closed-form bounds on how fast a locally observed
// disturbance can propagate, the constants evaluated as machine-checkable
// upper bounds, and the matching empirical measurements on finite volumes.

#include <limits>
#include <vector>

#include "qlocal/generator.hpp"
#include "qlocal/propagator.hpp"

namespace qlocal::lrbound {

using algebra::LocalOperator;
using algebra::Volume;
using generator::GeneratorAction;
using generator::GeneratorSpec;
using lattice::DecayFunction;
using lattice::MetricGraph;

// Local observation map vanishing on the identity: either a plain commutator
// B -> [A, B], or the dissipative form
// B -> i[A, B] + sum_a (L_a^* B L_a - (1/2){L_a^* L_a, B}).
// cb_bound is 2||A|| resp. 2||A|| + 2 sum ||L_a||^2.
struct LocalSuperMap {
  std::vector<int> support;
  Mat a;
  std::vector<Mat> lindblads;
  bool lindblad_form = false;
  double cb_bound = 0.0;

  static LocalSuperMap commutator(std::vector<int> support, Mat a);
  // requires Hermitian a
  static LocalSuperMap lindblad(std::vector<int> support, Mat a,
                                std::vector<Mat> ls);
};

// The map applied to a full-volume observable.
Mat apply_supermap(const LocalSuperMap& k, const Volume& v, const Mat& b);

enum class BoundForm { Sum, Exponential };

// Constants of the propagation bound, pinned as upper bounds. velocity =
// psi_norm * c_mu / mu. rigorous is false when any constant had to be
// sampled (undeclared profile envelope or finite-graph decay constants).
struct LRCertificate {
  double mu = 0.0;
  double psi_norm = 0.0;
  double c_mu = 0.0;
  double f_norm = 0.0;
  double velocity = 0.0;
  BoundForm bound_form = BoundForm::Sum;
  bool rigorous = false;
  bool single_site_excluded = false;
};

LRCertificate build_certificate(const GeneratorSpec& spec, double t_max,
                                bool exclude_single_site = false);

// (cb ||B|| / C_mu) e^(psi C_mu dt) sum_{x in X, y in Y} F_mu(d(x, y)).
// Evaluated exactly as displayed. The display dominates the commutator only
// for disjoint supports: with X and Y overlapping, the t = s seed term of the
// Duhamel iteration contributes cb ||B|| outright, and absorbing it into the
// display needs sum F_mu >= C_mu, which single-site overlaps do not satisfy.
// Domination checks therefore apply to d(X, Y) > 0; overlapping-support
// values are informational.
double lr_bound_sum(const LRCertificate& cert, const LocalSuperMap& k,
                    const LocalOperator& b, const MetricGraph& g,
                    const DecayFunction& decay, double dt);

// (cb ||B|| / C_mu) ||F|| min(|X|, |Y|) e^(-mu (d(X,Y) - v dt)); the weaker,
// explicitly light-cone-shaped form. Dominates lr_bound_sum everywhere.
double lr_bound_exponential(const LRCertificate& cert, const LocalSuperMap& k,
                            const LocalOperator& b, const MetricGraph& g,
                            double dt);

// ||K(gamma_{t,s}(B))||, exact operator norm.
double empirical_lr(const GeneratorAction& gen, const LocalSuperMap& k,
                    const LocalOperator& b, double s, double t,
                    double tol = 1e-10);

struct ScanCell {
  int site = 0;
  double time = 0.0;
  double empirical = 0.0;
  double bound_sum = 0.0;
  double bound_exp = 0.0;
  double ratio = 0.0;  // empirical / bound_sum
};

struct ScanResult {
  std::vector<int> sites;
  std::vector<double> times;
  std::vector<ScanCell> cells;  // site-major: cells[i * times.size() + j]
  double theta = 0.0;
  LRCertificate cert;
  // per scanned site, first time the signal exceeds theta (NaN: never)
  std::vector<double> front_time;
  // least-squares slope of distance-to-B against front time (NaN when fewer
  // than two crossing sites or degenerate times)
  double v_emp = std::numeric_limits<double>::quiet_NaN();
};

// Sweeps single-site Pauli commutator probes over sites x times against one
// evolved trajectory of B (started at s = 0). Cell norms use the
// power-iteration estimate; theta <= 0 selects the default
// 1e-3 * ||B|| * cb.
ScanResult lightcone_scan(const GeneratorAction& gen, const LocalOperator& b,
                          const std::vector<int>& sites,
                          const std::vector<double>& times, double theta = -1.0,
                          double tol = 1e-10, int threads = 1);

}  // namespace qlocal::lrbound
