#pragma once

// Finite-volume operator algebra: tensor-product volumes, local operators and
// their embeddings, norms, (anti)commutators, minimal supports.

#include "qlocal/lattice.hpp"
#include "qlocal/util.hpp"

#include <vector>

namespace qlocal::algebra {

// A metric graph with a Hilbert space dimension per site. Kronecker index
// convention is site-0-major throughout: site 0 is the slowest index, so a
// basis state is i = ((i_0 d_1 + i_1) d_2 + i_2) ...
struct Volume {
  lattice::MetricGraph graph;
  std::vector<int> site_dims;
  long total_dim = 1;
  std::vector<long> strides;

  static constexpr long kDefaultCap = 256;
  static constexpr long kAbsoluteCap = 4096;
  static constexpr int kSiteCap = 64;

  // cap limits total_dim; values above kAbsoluteCap are rejected outright
  static Volume make(lattice::MetricGraph g, std::vector<int> dims, long cap = kDefaultCap);
  static Volume qubits(lattice::MetricGraph g, long cap = kDefaultCap);

  int sites() const { return int(site_dims.size()); }
};

// Operator block living on a sorted list of sites.
struct LocalOperator {
  std::vector<int> support;  // sorted, distinct site indices
  Mat block;                 // dim = product of the supported site dimensions

  double norm() const;
};

long support_dim(const Volume& v, const std::vector<int>& support);
void validate_local(const Volume& v, const LocalOperator& op);

// Kronecker embedding against identity on the complement, site-0-major.
Mat embed(const LocalOperator& op, const Volume& v);
SpMat embed_sparse(const LocalOperator& op, const Volume& v);

// Largest singular value. Hermitian inputs take the eigensolver fast path.
double op_norm(const Mat& m);

// Deterministic power-iteration estimate of op_norm; converges from below.
// Used in scan cells where an eigensolve per cell would dominate the budget.
double op_norm_estimate(const Mat& m, int iters = 40, unsigned seed = 1);

Mat commutator(const Mat& a, const Mat& b);
Mat anticommutator(const Mat& a, const Mat& b);

// Smallest site set X with ||M - E_X(M)|| <= tol, where E_X is the
// conditional expectation obtained by averaging conjugations over a complete
// single-site unitary basis (clock-and-shift) on each site outside X.
// Multiples of the identity return the empty set.
std::vector<int> minimal_support(const Mat& m, const Volume& v, double tol = 1e-10);

// Single-site helpers. pauli accepts I, X, Y, Z.
Mat pauli(char p);
Mat lower();  // |0><1|
Mat raise();  // |1><0|
// Pauli string on explicitly listed (strictly increasing) qubit sites
LocalOperator pauli_string(const std::string& s, const std::vector<int>& sites);

}  // namespace qlocal::algebra
