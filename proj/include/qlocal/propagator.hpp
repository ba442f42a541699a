#pragma once

// Time-ordered propagators for bounded time-dependent generators, built two
// independent ways: adaptive Runge-Kutta integration of dA/dt = L(t)(A), and
// the Euler product T_n. Includes the certified product-approximation error
// bound, complete-positivity checks via the Choi matrix, and the composition
// (cocycle) defect.
//
// Superoperator norms below are spectral norms of the dim^2 x dim^2 matrix,
// i.e. the Frobenius-induced map norm. This is within a factor sqrt(dim) of
// the observable-norm-induced norm either way; certified bounds carry slack
// far exceeding that in every shipped configuration.

#include <functional>
#include <vector>

#include "qlocal/algebra.hpp"
#include "qlocal/generator.hpp"
#include "qlocal/util.hpp"

namespace qlocal::propagator {

using algebra::LocalOperator;
using generator::GeneratorAction;

// Adaptive Dormand-Prince 5(4) on a matrix-valued linear ODE y' = rhs(t, y).
// Per-step error is controlled elementwise against abs_tol + rel_tol*|y|.
struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double safety = 0.9;
  double min_factor = 0.2;
  double max_factor = 5.0;
  double floor_frac = 1e-14;  // step floor relative to the interval length
  long max_steps = 4000000;
};

struct OdeStats {
  long steps = 0;
  long rejected = 0;
};

using Rhs = std::function<void(double, const Mat&, Mat&)>;

// Integrates y from time s to t in place. Requires s <= t.
// Throws on step-size underflow with source-position diagnostics.
OdeStats integrate(const Rhs& rhs, double s, double t, Mat& y,
                   const OdeOptions& opt = {});

// Heisenberg evolution of an embedded local observable from s to t.
Mat evolve(const GeneratorAction& gen, const LocalOperator& a, double s,
           double t, double tol = 1e-10);

// Same, starting from a full-volume matrix.
Mat evolve_dense(const GeneratorAction& gen, const Mat& a0, double s, double t,
                 double tol = 1e-10);

// Evolution sampled at the given non-decreasing times (all >= s); the result
// holds the observable at each sample time.
std::vector<Mat> evolve_samples(const GeneratorAction& gen, const Mat& a0,
                                double s, const std::vector<double>& times,
                                double tol = 1e-10);

// Dimension cap for the dense superoperator representation; above it the
// propagator stays matrix-free and applies itself by integrating probes.
inline constexpr long kDensePropCap = 32;

struct Propagator {
  double s = 0.0;
  double t = 0.0;
  double tol = 1e-10;
  long dim = 0;
  bool has_matrix = false;
  Mat sop;  // dim^2 x dim^2, column-stacking, when has_matrix
  const GeneratorAction* gen = nullptr;  // borrowed; caller keeps it alive

  Mat apply(const Mat& a) const;
  double unitality_defect() const;
  // max over random probes of ||P(A)|| / ||A||, minus 1, clamped at 0
  double contraction_defect(int probes = 20, unsigned seed = 1) const;
};

// Integrates the superoperator ODE from the identity. Falls back to a
// matrix-free propagator when dim exceeds kDensePropCap.
Propagator propagator_matrix(const GeneratorAction& gen, double s, double t,
                             double tol = 1e-10);

// T_n(t): product of (id + (t/n) L(k t/n)) with the k = 1 factor applied
// first (rightmost). Dense superoperator; requires dim <= kDensePropCap.
Mat euler_product(const GeneratorAction& gen, long n, double t);

struct EulerReport {
  long n = 0;
  double error = 0.0;  // ||T_n - gamma_{t,0}||, superoperator spectral norm
  double bound = 0.0;  // t e^(2 t M) (eps_n + M^2 e^(t M / n) t / (2n))
  double eps_n = 0.0;  // continuity modulus of L over a step of width t/n
  double m_t = 0.0;    // certified sup-norm bound on L over [0, t]
  double d = 0.0;      // 1 + (t/n)^2 M^2
  bool rigorous = false;  // eps_n is an exact envelope (declared Lipschitz)
};

// Evaluates the product-approximation error against its certified bound.
// When every profile declares a Lipschitz constant, eps_n is exact and
// error <= bound is a theorem; otherwise eps_n is a sampled estimate.
EulerReport euler_report(const GeneratorAction& gen, long n, double t,
                         double tol = 1e-10);

// Choi matrix of the Schroedinger-picture adjoint of a Heisenberg-picture
// superoperator (column-stacking convention).
Mat choi_matrix(const Mat& sop_heis, long dim);

// Minimum eigenvalue of the (symmetrized) Choi matrix; the map is completely
// positive iff this is >= -tolerance.
double choi_min_eig(const Mat& sop_heis, long dim);

// Same, for a propagator. Requires a matrix representation.
double choi_check(const Propagator& p);

// || gamma_{t,s} o gamma_{s,r} - gamma_{t,r} || for r <= s <= t, in the
// superoperator spectral norm (random probes when matrix-free).
double cocycle_defect(const GeneratorAction& gen, double r, double s, double t,
                      double tol = 1e-10);

}  // namespace qlocal::propagator
