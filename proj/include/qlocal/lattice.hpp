#pragma once

// Metric graphs, decay functions and their summability constants, and the
// enumeration of interaction supports.

#include "qlocal/util.hpp"

#include <functional>
#include <string>
#include <vector>

namespace qlocal::lattice {

// Finite vertex set with an explicit metric. Labels identify sites across
// nested volumes (the label, not the index, is the site's identity).
struct MetricGraph {
  std::vector<std::string> labels;
  RMat dist;  // symmetric, zero diagonal, triangle inequality checked on construction
  std::string family_tag;  // "chain-Z1", "grid-Z2", "custom"

  int size() const { return int(labels.size()); }
  double d(int x, int y) const { return dist(x, y); }
  int index_of(const std::string& label) const;  // -1 if absent

  // chain sites lo..hi (inclusive) with |i-j| metric, labels are the coordinates
  static MetricGraph chain_interval(long lo, long hi);
  static MetricGraph chain(int n) { return chain_interval(0, n - 1); }
  // w x h patch of the square lattice with path (L1) metric, labels "(x,y)"
  static MetricGraph grid(int w, int h);
  static MetricGraph custom(std::vector<std::string> labels, RMat dist);
};

enum class Provenance { FiniteTruncation, AnalyticBound };

// Decay function F together with its summability constants. The weighted
// variant F_mu(r) = exp(-mu r) F(r) inherits f_norm and c_const as upper
// bounds, which is what certificates consume.
struct DecayFunction {
  enum class Kind { PowerLaw, Custom };

  Kind kind = Kind::PowerLaw;
  double alpha = 2.0;  // F(r) = (1+r)^-alpha for PowerLaw
  double mu = 0.0;
  double f_norm = 0.0;  // sup_x sum_y F(d(x,y))
  double c_const = 0.0; // sup_{x,y} sum_z F(d(x,z)) F(d(y,z)) / F(d(x,y))
  Provenance f_norm_prov = Provenance::FiniteTruncation;
  Provenance c_const_prov = Provenance::FiniteTruncation;
  std::function<double(double)> fn;  // set for Custom

  double F(double r) const;

  // Power law with constants valid for the infinite lattice of the given
  // dimension (1 = chain, 2 = square lattice, path metric). Requires
  // alpha > dim; f_norm is an Euler-Maclaurin-certified upper bound and
  // c_const = 2^alpha * f_norm.
  static DecayFunction power_law(double alpha, double mu, int dim = 1);

  // Power law with constants estimated on a concrete finite graph.
  static DecayFunction power_law_on(const MetricGraph& g, double alpha, double mu);

  // Arbitrary decay profile; constants estimated on the graph. fn must be
  // strictly positive and non-increasing (validated on the graph's distances).
  static DecayFunction custom(std::function<double(double)> fn, double mu,
                              const MetricGraph& g);
};

// sup_x sum_y F(d(x,y)) over the finite graph
double f_norm_estimate(const MetricGraph& g, const DecayFunction& F);

// sup_{x,y} sum_z F(d(x,z)) F(d(y,z)) / F(d(x,y)) over the finite graph
double c_constant_estimate(const MetricGraph& g, const DecayFunction& F);

// 2^alpha * f_norm for a power law with analytic f_norm; throws otherwise
double c_constant_analytic(const DecayFunction& F);

// exp(-mu r) F(r); rejects r < 0
double f_mu(const DecayFunction& F, double r);

struct SubsetFamily {
  std::vector<std::vector<int>> subsets;  // each sorted; list in lexicographic order
  int k_max = 0;
  double r_max = 0.0;
};

// All subsets of size <= k_max and diameter <= r_max, lexicographic in the
// sorted index tuples. Throws if more than cap subsets would be produced.
SubsetFamily enumerate_subsets(const MetricGraph& g, int k_max, double r_max,
                               std::size_t cap = 2000000);

}  // namespace qlocal::lattice
