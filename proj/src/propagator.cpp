#include "qlocal/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qlocal::propagator {

namespace {

// Dormand-Prince 5(4). Row 7 of the a-array is the 5th-order weight vector,
// so the last stage evaluates the accepted solution (first-same-as-last).
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {0, 0, 0, 0, 0, 0},
    {1.0 / 5, 0, 0, 0, 0, 0},
    {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
    {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656,
     0},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB4[7] = {5179.0 / 57600,    0.0,         7571.0 / 16695,
                           393.0 / 640,       -92097.0 / 339200,
                           187.0 / 2100,      1.0 / 40};

double scaled_rms(const Mat& e, const Mat& y0, const Mat& y1, double atol,
                  double rtol) {
  const long n = e.size();
  const cplx* pe = e.data();
  const cplx* p0 = y0.data();
  const cplx* p1 = y1.data();
  double acc = 0.0;
  for (long i = 0; i < n; ++i) {
    double sc = atol + rtol * std::max(std::abs(p0[i]), std::abs(p1[i]));
    double q = std::abs(pe[i]) / sc;
    acc += q * q;
  }
  return std::sqrt(acc / double(n));
}

}  // namespace

OdeStats integrate(const Rhs& rhs, double s, double t, Mat& y,
                   const OdeOptions& opt) {
  if (t < s) throw std::invalid_argument("integrate: requires s <= t");
  OdeStats st;
  if (t == s) return st;
  const double span = t - s;
  const double h_floor = opt.floor_frac * span;

  Mat k[7];
  Mat ytmp(y.rows(), y.cols());
  Mat err(y.rows(), y.cols());
  rhs(s, y, k[0]);

  double f0 = k[0].norm();
  double h = (f0 > 1e-300) ? 0.01 * (y.norm() + opt.abs_tol) / f0 : span;
  h = std::clamp(h, std::min(span, 1e-6 * span), span);

  double cur = s;
  bool just_rejected = false;
  while (cur < t) {
    if (st.steps + st.rejected >= opt.max_steps)
      throw std::runtime_error("integrate: exceeded maximum step count");
    h = std::min(h, t - cur);
    const bool last = (h >= t - cur);

    for (int i = 1; i < 7; ++i) {
      ytmp = y;
      for (int j = 0; j < i; ++j)
        if (kA[i][j] != 0.0) ytmp.noalias() += cplx(h * kA[i][j]) * k[j];
      rhs(cur + kC[i] * h, ytmp, k[i]);
    }
    // after stage 7, ytmp holds the 5th-order solution and k[6] its slope
    err.setZero();
    for (int j = 0; j < 6; ++j) {
      double d = kA[6][j] - kB4[j];
      if (d != 0.0) err.noalias() += cplx(h * d) * k[j];
    }
    err.noalias() -= cplx(h * kB4[6]) * k[6];

    double e = scaled_rms(err, y, ytmp, opt.abs_tol, opt.rel_tol);
    if (e <= 1.0) {
      cur = last ? t : cur + h;
      y.swap(ytmp);
      k[0].swap(k[6]);
      ++st.steps;
      double fac = (e == 0.0) ? opt.max_factor
                              : opt.safety * std::pow(e, -0.2);
      fac = std::clamp(fac, opt.min_factor,
                       just_rejected ? 1.0 : opt.max_factor);
      h *= fac;
      just_rejected = false;
    } else {
      ++st.rejected;
      just_rejected = true;
      h *= std::clamp(opt.safety * std::pow(e, -0.2), opt.min_factor, 1.0);
      if (h < h_floor) {
        std::ostringstream msg;
        msg << "integrate: step size underflow (stiff input?) at time " << cur
            << ", h = " << h << ", scaled error " << e;
        throw std::runtime_error(msg.str());
      }
    }
  }
  return st;
}

Mat evolve_dense(const GeneratorAction& gen, const Mat& a0, double s, double t,
                 double tol) {
  if (a0.rows() != gen.dim() || a0.cols() != gen.dim())
    throw std::invalid_argument("evolve: observable has the wrong dimension");
  Mat y = a0;
  OdeOptions opt;
  opt.abs_tol = opt.rel_tol = tol;
  integrate([&gen](double u, const Mat& a, Mat& out) { out = gen.apply(u, a); },
            s, t, y, opt);
  return y;
}

Mat evolve(const GeneratorAction& gen, const LocalOperator& a, double s,
           double t, double tol) {
  return evolve_dense(gen, algebra::embed(a, gen.spec().volume), s, t, tol);
}

std::vector<Mat> evolve_samples(const GeneratorAction& gen, const Mat& a0,
                                double s, const std::vector<double>& times,
                                double tol) {
  if (a0.rows() != gen.dim() || a0.cols() != gen.dim())
    throw std::invalid_argument("evolve: observable has the wrong dimension");
  OdeOptions opt;
  opt.abs_tol = opt.rel_tol = tol;
  auto rhs = [&gen](double u, const Mat& a, Mat& out) {
    out = gen.apply(u, a);
  };
  std::vector<Mat> out;
  out.reserve(times.size());
  Mat y = a0;
  double cur = s;
  for (double tk : times) {
    if (tk < cur)
      throw std::invalid_argument(
          "evolve_samples: times must be non-decreasing and >= s");
    if (tk > cur) {
      integrate(rhs, cur, tk, y, opt);
      cur = tk;
    }
    out.push_back(y);
  }
  return out;
}

Mat Propagator::apply(const Mat& a) const {
  if (a.rows() != dim || a.cols() != dim)
    throw std::invalid_argument("propagator: observable dimension mismatch");
  if (has_matrix) {
    Vec va = Eigen::Map<const Vec>(a.data(), a.size());
    Vec vo = sop * va;
    return Eigen::Map<const Mat>(vo.data(), dim, dim);
  }
  return evolve_dense(*gen, a, s, t, tol);
}

double Propagator::unitality_defect() const {
  Mat id = Mat::Identity(dim, dim);
  return algebra::op_norm(apply(id) - id);
}

double Propagator::contraction_defect(int probes, unsigned seed) const {
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    Mat a = rng.complex_gaussian(dim, dim);
    double ratio = algebra::op_norm(apply(a)) / algebra::op_norm(a);
    worst = std::max(worst, ratio - 1.0);
  }
  return std::max(worst, 0.0);
}

Propagator propagator_matrix(const GeneratorAction& gen, double s, double t,
                             double tol) {
  Propagator p;
  p.s = s;
  p.t = t;
  p.tol = tol;
  p.dim = gen.dim();
  p.gen = &gen;
  if (p.dim > kDensePropCap) {
    p.has_matrix = false;
    return p;
  }
  const long d2 = p.dim * p.dim;
  Mat y = Mat::Identity(d2, d2);
  OdeOptions opt;
  opt.abs_tol = opt.rel_tol = tol;
  integrate([&gen](double u, const Mat& sc, Mat& out) {
              gen.apply_superop(u, sc, out);
            },
            s, t, y, opt);
  p.sop = std::move(y);
  p.has_matrix = true;
  return p;
}

Mat euler_product(const GeneratorAction& gen, long n, double t) {
  if (n < 1) throw std::invalid_argument("euler_product: requires n >= 1");
  const long dim = gen.dim();
  if (dim > kDensePropCap)
    throw std::runtime_error("euler_product: dimension cap exceeded");
  const long d2 = dim * dim;
  const double h = t / double(n);
  Mat prod = Mat::Identity(d2, d2);
  Mat lp(d2, d2);
  for (long k = 1; k <= n; ++k) {
    gen.apply_superop(double(k) * t / double(n), prod, lp);
    prod.noalias() += cplx(h) * lp;
  }
  return prod;
}

namespace {

// Sampled continuity modulus sup ||L(u) - L(v)|| over |u - v| <= h. Grid
// pairs straddle profile discontinuities when at most one jump falls inside
// a window; reported non-rigorous either way.
double sampled_modulus(const GeneratorAction& gen, double t, double h) {
  const int grid = 257;
  double worst = 0.0;
  for (int i = 0; i < grid; ++i) {
    double u = t * double(i) / double(grid - 1);
    double v = std::min(u + h, t);
    if (v <= u) continue;
    Mat diff = Mat(gen.superop(u)) - Mat(gen.superop(v));
    worst = std::max(worst, algebra::op_norm(diff));
  }
  return worst;
}

}  // namespace

EulerReport euler_report(const GeneratorAction& gen, long n, double t,
                         double tol) {
  EulerReport r;
  r.n = n;
  r.m_t = generator::m_t_bound(gen.spec(), t);
  const double h = t / double(n);
  r.d = 1.0 + h * h * r.m_t * r.m_t;

  double lip = gen.lipschitz_bound();
  if (std::isnan(lip)) {
    r.rigorous = false;
    r.eps_n = sampled_modulus(gen, t, h);
  } else {
    r.rigorous = true;
    r.eps_n = lip * h;
  }

  Mat tn = euler_product(gen, n, t);
  Propagator p = propagator_matrix(gen, 0.0, t, tol);
  r.error = algebra::op_norm(tn - p.sop);
  r.bound = t * std::exp(2.0 * t * r.m_t) *
            (r.eps_n + r.m_t * r.m_t * std::exp(h * r.m_t) * t / (2.0 * n));
  return r;
}

Mat choi_matrix(const Mat& sop_heis, long dim) {
  const long d2 = dim * dim;
  if (sop_heis.rows() != d2 || sop_heis.cols() != d2)
    throw std::invalid_argument("choi_matrix: superoperator size mismatch");
  // Schroedinger-picture adjoint, then the reshuffle
  // C[j*d + r, l*d + c] = S[r + d*c, j + d*l].
  Mat s = sop_heis.adjoint();
  Mat c(d2, d2);
  for (long j = 0; j < dim; ++j)
    for (long r = 0; r < dim; ++r)
      for (long l = 0; l < dim; ++l)
        for (long cc = 0; cc < dim; ++cc)
          c(j * dim + r, l * dim + cc) = s(r + dim * cc, j + dim * l);
  return c;
}

double choi_min_eig(const Mat& sop_heis, long dim) {
  Mat c = choi_matrix(sop_heis, dim);
  Mat ch = 0.5 * (c + c.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(ch, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double choi_check(const Propagator& p) {
  if (!p.has_matrix)
    throw std::runtime_error("choi_check: needs a matrix representation");
  return choi_min_eig(p.sop, p.dim);
}

double cocycle_defect(const GeneratorAction& gen, double r, double s, double t,
                      double tol) {
  if (!(r <= s && s <= t))
    throw std::invalid_argument("cocycle_defect: requires r <= s <= t");
  if (gen.dim() <= kDensePropCap) {
    Propagator p1 = propagator_matrix(gen, r, s, tol);
    Propagator p2 = propagator_matrix(gen, s, t, tol);
    Propagator p3 = propagator_matrix(gen, r, t, tol);
    return algebra::op_norm(p2.sop * p1.sop - p3.sop);
  }
  Rng rng(0x636f6379u);
  const long d = gen.dim();
  double worst = 0.0;
  for (int i = 0; i < 8; ++i) {
    Mat a = rng.complex_gaussian(d, d);
    Mat via = evolve_dense(gen, evolve_dense(gen, a, r, s, tol), s, t, tol);
    Mat direct = evolve_dense(gen, a, r, t, tol);
    worst = std::max(worst, algebra::op_norm(via - direct) /
                                algebra::op_norm(a));
  }
  return worst;
}

}  // namespace qlocal::propagator
