#include "qlocal/algebra.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <stdexcept>

namespace qlocal::algebra {

Volume Volume::make(lattice::MetricGraph g, std::vector<int> dims, long cap) {
  if (int(dims.size()) != g.size())
    throw std::invalid_argument("one site dimension per graph vertex required");
  if (g.size() > kSiteCap) throw std::invalid_argument("volume exceeds the site cap");
  if (cap > kAbsoluteCap) cap = kAbsoluteCap;
  Volume v;
  v.graph = std::move(g);
  v.site_dims = std::move(dims);
  v.total_dim = 1;
  for (int d : v.site_dims) {
    if (d < 2) throw std::invalid_argument("site dimension must be >= 2");
    v.total_dim *= d;
    if (v.total_dim > cap) throw std::invalid_argument("volume exceeds the dimension cap");
  }
  v.strides.assign(v.site_dims.size(), 1);
  for (int s = int(v.site_dims.size()) - 2; s >= 0; --s)
    v.strides[s] = v.strides[s + 1] * v.site_dims[s + 1];
  return v;
}

Volume Volume::qubits(lattice::MetricGraph g, long cap) {
  std::vector<int> dims(g.size(), 2);
  return make(std::move(g), std::move(dims), cap);
}

double LocalOperator::norm() const { return op_norm(block); }

long support_dim(const Volume& v, const std::vector<int>& support) {
  long d = 1;
  for (int s : support) d *= v.site_dims[s];
  return d;
}

void validate_local(const Volume& v, const LocalOperator& op) {
  if (op.support.empty()) throw std::invalid_argument("empty support");
  for (std::size_t i = 0; i < op.support.size(); ++i) {
    int s = op.support[i];
    if (s < 0 || s >= v.sites()) throw std::invalid_argument("support site out of range");
    if (i > 0 && op.support[i - 1] >= s)
      throw std::invalid_argument("support must be sorted and distinct");
  }
  long d = support_dim(v, op.support);
  if (op.block.rows() != d || op.block.cols() != d)
    throw std::invalid_argument("operator block does not match its support dimension");
}

namespace {

// Enumerates full-space indices split into the support part and the rest.
// rest_base[r] is the full index with all supported sites at 0; sub_offset[k]
// is the full-index contribution of supported configuration k.
struct EmbedIndex {
  std::vector<long> rest_base;
  std::vector<long> sub_offset;
};

EmbedIndex embed_index(const LocalOperator& op, const Volume& v) {
  EmbedIndex ix;
  long d_sub = support_dim(v, op.support);
  ix.sub_offset.resize(d_sub);
  for (long k = 0; k < d_sub; ++k) {
    long rem = k, off = 0;
    for (int i = int(op.support.size()) - 1; i >= 0; --i) {
      int site = op.support[i];
      long dim = v.site_dims[site];
      off += (rem % dim) * v.strides[site];
      rem /= dim;
    }
    ix.sub_offset[k] = off;
  }
  std::vector<int> rest;
  for (int s = 0; s < v.sites(); ++s)
    if (!std::binary_search(op.support.begin(), op.support.end(), s)) rest.push_back(s);
  long d_rest = 1;
  for (int s : rest) d_rest *= v.site_dims[s];
  ix.rest_base.resize(d_rest);
  for (long k = 0; k < d_rest; ++k) {
    long rem = k, off = 0;
    for (int i = int(rest.size()) - 1; i >= 0; --i) {
      int site = rest[i];
      long dim = v.site_dims[site];
      off += (rem % dim) * v.strides[site];
      rem /= dim;
    }
    ix.rest_base[k] = off;
  }
  return ix;
}

}  // namespace

Mat embed(const LocalOperator& op, const Volume& v) {
  validate_local(v, op);
  auto ix = embed_index(op, v);
  Mat out = Mat::Zero(v.total_dim, v.total_dim);
  long d_sub = op.block.rows();
  for (long base : ix.rest_base)
    for (long c = 0; c < d_sub; ++c)
      for (long r = 0; r < d_sub; ++r) {
        cplx val = op.block(r, c);
        if (val != cplx(0.0, 0.0))
          out(base + ix.sub_offset[r], base + ix.sub_offset[c]) = val;
      }
  return out;
}

SpMat embed_sparse(const LocalOperator& op, const Volume& v) {
  validate_local(v, op);
  auto ix = embed_index(op, v);
  long d_sub = op.block.rows();
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(ix.rest_base.size() * d_sub * 2);
  for (long base : ix.rest_base)
    for (long c = 0; c < d_sub; ++c)
      for (long r = 0; r < d_sub; ++r) {
        cplx val = op.block(r, c);
        if (val != cplx(0.0, 0.0))
          trips.emplace_back(int(base + ix.sub_offset[r]), int(base + ix.sub_offset[c]), val);
      }
  SpMat out(v.total_dim, v.total_dim);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

double op_norm(const Mat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("op_norm expects a square matrix");
  if (m.rows() == 0) return 0.0;
  double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + scale)) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m.adjoint() * m, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double op_norm_estimate(const Mat& m, int iters, unsigned seed) {
  if (m.rows() != m.cols()) throw std::invalid_argument("op_norm expects a square matrix");
  const long n = m.rows();
  if (n == 0 || m.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Rng rng(seed);
  Vec v(n);
  for (long i = 0; i < n; ++i) v(i) = rng.cgauss();
  v /= v.norm();
  for (int it = 0; it < iters; ++it) {
    Vec w = m.adjoint() * (m * v);
    double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
  }
  return (m * v).norm();
}

Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

Mat anticommutator(const Mat& a, const Mat& b) { return a * b + b * a; }

namespace {

// clock and shift on a d-dimensional site: X|k> = |k+1 mod d>, Z|k> = w^k |k>
Mat shift_op(int d) {
  Mat x = Mat::Zero(d, d);
  for (int k = 0; k < d; ++k) x((k + 1) % d, k) = 1.0;
  return x;
}

Mat clock_op(int d) {
  Mat z = Mat::Zero(d, d);
  for (int k = 0; k < d; ++k)
    z(k, k) = std::polar(1.0, 2.0 * std::numbers::pi * k / d);
  return z;
}

// average of W M W^dagger over the d^2 clock-shift unitaries on one site
Mat site_average(const Mat& m, const Volume& v, int site) {
  int d = v.site_dims[site];
  Mat x = shift_op(d), z = clock_op(d);
  Mat acc = Mat::Zero(m.rows(), m.cols());
  Mat xa = Mat::Identity(d, d);
  for (int a = 0; a < d; ++a) {
    Mat w = xa;
    for (int b = 0; b < d; ++b) {
      SpMat wf = embed_sparse(LocalOperator{{site}, w}, v);
      acc += wf * m * wf.adjoint();
      w = w * z;
    }
    xa = xa * x;
  }
  return acc / double(d * d);
}

}  // namespace

std::vector<int> minimal_support(const Mat& m, const Volume& v, double tol) {
  if (m.rows() != v.total_dim || m.cols() != v.total_dim)
    throw std::invalid_argument("operator does not match the volume dimension");
  std::vector<int> support;
  for (int s = 0; s < v.sites(); ++s) {
    double defect = op_norm(m - site_average(m, v, s));
    if (defect > tol) support.push_back(s);
  }
  return support;
}

Mat pauli(char p) {
  Mat m(2, 2);
  switch (p) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: throw std::invalid_argument("unknown Pauli label");
  }
  return m;
}

Mat lower() {
  Mat m = Mat::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}

Mat raise() {
  Mat m = Mat::Zero(2, 2);
  m(1, 0) = 1.0;
  return m;
}

LocalOperator pauli_string(const std::string& s, const std::vector<int>& sites) {
  if (s.size() != sites.size())
    throw std::invalid_argument("one Pauli letter per site required");
  if (s.empty()) throw std::invalid_argument("empty Pauli string");
  for (std::size_t i = 1; i < sites.size(); ++i)
    if (sites[i - 1] >= sites[i])
      throw std::invalid_argument("Pauli string sites must be strictly increasing");
  Mat block = pauli(s[0]);
  for (std::size_t i = 1; i < s.size(); ++i) {
    Mat next = pauli(s[i]);
    Mat acc(block.rows() * 2, block.cols() * 2);
    for (int r = 0; r < block.rows(); ++r)
      for (int c = 0; c < block.cols(); ++c) acc.block(2 * r, 2 * c, 2, 2) = block(r, c) * next;
    block = std::move(acc);
  }
  return LocalOperator{sites, block};
}

}  // namespace qlocal::algebra
