#include "qlocal/lrbound.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace qlocal::lrbound {

namespace {

void check_annihilates_identity(const LocalSuperMap& k) {
  const long d = k.a.rows();
  Mat id = Mat::Identity(d, d);
  Mat out;
  if (!k.lindblad_form) {
    out = k.a * id - id * k.a;
  } else {
    out = cplx(0.0, 1.0) * (k.a * id - id * k.a);
    for (const auto& l : k.lindblads) {
      Mat kk = l.adjoint() * l;
      out += l.adjoint() * l - 0.5 * (kk + kk);
    }
  }
  if (out.cwiseAbs().maxCoeff() > 1e-12 * (1.0 + k.a.cwiseAbs().maxCoeff()))
    throw std::logic_error("observation map does not vanish on the identity");
}

}  // namespace

LocalSuperMap LocalSuperMap::commutator(std::vector<int> support, Mat a) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw std::invalid_argument("observation map block must be square");
  LocalSuperMap k;
  k.support = std::move(support);
  k.a = std::move(a);
  k.lindblad_form = false;
  k.cb_bound = 2.0 * algebra::op_norm(k.a);
  check_annihilates_identity(k);
  return k;
}

LocalSuperMap LocalSuperMap::lindblad(std::vector<int> support, Mat a,
                                      std::vector<Mat> ls) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw std::invalid_argument("observation map block must be square");
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() >
      1e-12 * (1.0 + a.cwiseAbs().maxCoeff()))
    throw std::invalid_argument(
        "dissipative observation map needs a Hermitian block");
  LocalSuperMap k;
  k.support = std::move(support);
  k.a = std::move(a);
  k.lindblads = std::move(ls);
  k.lindblad_form = true;
  k.cb_bound = 2.0 * algebra::op_norm(k.a);
  for (const auto& l : k.lindblads) {
    if (l.rows() != k.a.rows() || l.cols() != k.a.cols())
      throw std::invalid_argument("observation map blocks disagree in size");
    double n = algebra::op_norm(l);
    k.cb_bound += 2.0 * n * n;
  }
  check_annihilates_identity(k);
  return k;
}

Mat apply_supermap(const LocalSuperMap& k, const Volume& v, const Mat& b) {
  if (b.rows() != v.total_dim || b.cols() != v.total_dim)
    throw std::invalid_argument("observable dimension mismatch");
  SpMat a = algebra::embed_sparse({k.support, k.a}, v);
  if (!k.lindblad_form) return a * b - b * a;
  Mat out = cplx(0.0, 1.0) * (a * b - b * a);
  for (const auto& lb : k.lindblads) {
    SpMat l = algebra::embed_sparse({k.support, lb}, v);
    SpMat ld = SpMat(l.adjoint());
    SpMat kk = SpMat(ld * l);
    out.noalias() += ld * (b * l).eval();
    out.noalias() -= 0.5 * (kk * b).eval();
    out.noalias() -= 0.5 * (b * kk).eval();
  }
  return out;
}

LRCertificate build_certificate(const GeneratorSpec& spec, double t_max,
                                bool exclude_single_site) {
  const auto& d = spec.decay;
  if (d.mu <= 0.0)
    throw std::invalid_argument("certificate requires a positive decay rate");
  if (d.f_norm <= 0.0 || d.c_const <= 0.0)
    throw std::invalid_argument("certificate requires positive decay constants");

  LRCertificate c;
  bool rigorous = true;
  c.psi_norm = generator::psi_interaction_norm(spec, t_max, 101,
                                               !exclude_single_site, &rigorous);
  c.mu = d.mu;
  c.f_norm = d.f_norm;
  if (d.kind == DecayFunction::Kind::PowerLaw &&
      d.c_const_prov == lattice::Provenance::AnalyticBound) {
    c.c_mu = lattice::c_constant_analytic(d);
  } else {
    c.c_mu = d.c_const;
    rigorous = false;
  }
  if (d.f_norm_prov != lattice::Provenance::AnalyticBound) rigorous = false;
  c.velocity = c.psi_norm * c.c_mu / c.mu;
  c.rigorous = rigorous;
  c.single_site_excluded = exclude_single_site;
  return c;
}

double lr_bound_sum(const LRCertificate& cert, const LocalSuperMap& k,
                    const LocalOperator& b, const MetricGraph& g,
                    const DecayFunction& decay, double dt) {
  if (dt < 0.0) throw std::invalid_argument("bound requires dt >= 0");
  double bn = algebra::op_norm(b.block);
  if (bn == 0.0) return 0.0;
  double fsum = 0.0;
  for (int x : k.support)
    for (int y : b.support) fsum += lattice::f_mu(decay, g.dist(x, y));
  return (k.cb_bound * bn / cert.c_mu) *
         std::exp(cert.psi_norm * cert.c_mu * dt) * fsum;
}

double lr_bound_exponential(const LRCertificate& cert, const LocalSuperMap& k,
                            const LocalOperator& b, const MetricGraph& g,
                            double dt) {
  if (dt < 0.0) throw std::invalid_argument("bound requires dt >= 0");
  double bn = algebra::op_norm(b.block);
  if (bn == 0.0) return 0.0;
  double dxy = std::numeric_limits<double>::infinity();
  for (int x : k.support)
    for (int y : b.support) dxy = std::min(dxy, g.dist(x, y));
  double m = double(std::min(k.support.size(), b.support.size()));
  return (k.cb_bound * bn / cert.c_mu) * cert.f_norm * m *
         std::exp(-cert.mu * (dxy - cert.velocity * dt));
}

double empirical_lr(const GeneratorAction& gen, const LocalSuperMap& k,
                    const LocalOperator& b, double s, double t, double tol) {
  Mat bt = propagator::evolve(gen, b, s, t, tol);
  return algebra::op_norm(apply_supermap(k, gen.spec().volume, bt));
}

ScanResult lightcone_scan(const GeneratorAction& gen, const LocalOperator& b,
                          const std::vector<int>& sites,
                          const std::vector<double>& times, double theta,
                          double tol, int threads) {
  const auto& spec = gen.spec();
  const auto& vol = spec.volume;
  algebra::validate_local(vol, b);
  for (int s : sites)
    if (s < 0 || s >= vol.sites())
      throw std::invalid_argument("scan site out of range");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    if (times[i + 1] < times[i])
      throw std::invalid_argument("scan times must be non-decreasing");

  ScanResult res;
  res.sites = sites;
  res.times = times;
  double t_max = times.empty() ? 0.0 : times.back();
  res.cert = build_certificate(spec, t_max);

  const double bn = algebra::op_norm(b.block);
  const double cb = 2.0;  // single-site Pauli commutator probes
  res.theta = (theta > 0.0) ? theta : 1e-3 * bn * cb;

  Mat b0 = algebra::embed(b, vol);
  auto traj = propagator::evolve_samples(gen, b0, 0.0, times, tol);

  // embedded probe operators, three per scanned site
  std::vector<std::array<SpMat, 3>> probes(sites.size());
  const char kPauli[3] = {'X', 'Y', 'Z'};
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (int p = 0; p < 3; ++p)
      probes[i][p] = algebra::embed_sparse(
          {{sites[i]}, algebra::pauli(kPauli[p])}, vol);

  const std::size_t nt = times.size();
  res.cells.assign(sites.size() * nt, ScanCell{});
  parallel_for(int(res.cells.size()), threads, [&](int idx_i) {
    const std::size_t idx = std::size_t(idx_i);
    const std::size_t i = idx / nt;
    const std::size_t j = idx % nt;
    const Mat& bt = traj[j];
    double emp = 0.0;
    for (int p = 0; p < 3; ++p) {
      Mat c = probes[i][p] * bt - bt * probes[i][p];
      emp = std::max(emp, algebra::op_norm_estimate(
                              c, 40, 0x73636e00u ^ unsigned(idx * 3 + p)));
    }
    LocalSuperMap km =
        LocalSuperMap::commutator({sites[i]}, algebra::pauli('Z'));
    ScanCell& cell = res.cells[idx];
    cell.site = sites[i];
    cell.time = times[j];
    cell.empirical = emp;
    cell.bound_sum =
        lr_bound_sum(res.cert, km, b, vol.graph, spec.decay, times[j]);
    cell.bound_exp = lr_bound_exponential(res.cert, km, b, vol.graph, times[j]);
    cell.ratio = (cell.bound_sum > 0.0)
                     ? emp / cell.bound_sum
                     : std::numeric_limits<double>::quiet_NaN();
  });

  // first-crossing front per site, then distance-vs-time slope
  res.front_time.assign(sites.size(),
                        std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = 0; j < nt; ++j)
      if (res.cells[i * nt + j].empirical >= res.theta) {
        res.front_time[i] = times[j];
        break;
      }

  std::vector<double> ts, ds;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (!std::isfinite(res.front_time[i])) continue;
    double dist = std::numeric_limits<double>::infinity();
    for (int y : b.support)
      dist = std::min(dist, vol.graph.dist(sites[i], y));
    ts.push_back(res.front_time[i]);
    ds.push_back(dist);
  }
  if (ts.size() >= 2) {
    double tm = 0.0, dm = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      tm += ts[i];
      dm += ds[i];
    }
    tm /= double(ts.size());
    dm /= double(ts.size());
    double cov = 0.0, var = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      cov += (ts[i] - tm) * (ds[i] - dm);
      var += (ts[i] - tm) * (ts[i] - tm);
    }
    if (var > 0.0) res.v_emp = cov / var;
  }
  return res;
}

}  // namespace qlocal::lrbound
