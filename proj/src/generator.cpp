#include "qlocal/generator.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qlocal::generator {

using algebra::embed_sparse;
using algebra::LocalOperator;
using algebra::op_norm;

double TimeProfile::operator()(double t) const {
  switch (kind) {
    case Kind::Constant: return value;
    case Kind::Sinusoidal: return amp * std::sin(omega * t + phase);
    case Kind::PiecewiseConstant: {
      if (t < knots.front()) return 0.0;
      std::size_t i = 0;
      while (i + 1 < knots.size() && t >= knots[i + 1]) ++i;
      return values[i];
    }
    case Kind::Ramp: return a + b * t;
  }
  return 0.0;
}

std::string TimeProfile::name() const {
  switch (kind) {
    case Kind::Constant: return "constant";
    case Kind::Sinusoidal: return "sinusoidal";
    case Kind::PiecewiseConstant: return "piecewise";
    case Kind::Ramp: return "ramp";
  }
  return "?";
}

double TimeProfile::envelope(double t_max) const {
  if (t_max < 0.0) throw std::invalid_argument("negative horizon");
  switch (kind) {
    case Kind::Constant: return std::abs(value);
    case Kind::Sinusoidal: {
      if (omega == 0.0) return std::abs(amp * std::sin(phase));
      // |sin| peaks at omega t + phase = pi/2 + k pi; check if one lands in [0, t_max]
      double lo = phase, hi = omega * t_max + phase;
      if (lo > hi) std::swap(lo, hi);
      double k = std::ceil((lo - std::numbers::pi / 2.0) / std::numbers::pi);
      double peak = std::numbers::pi / 2.0 + k * std::numbers::pi;
      if (peak <= hi) return std::abs(amp);
      return std::max(std::abs((*this)(0.0)), std::abs((*this)(t_max)));
    }
    case Kind::PiecewiseConstant: {
      double best = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (knots[i] > t_max) break;
        best = std::max(best, std::abs(values[i]));
      }
      return best;
    }
    case Kind::Ramp: return std::max(std::abs(a), std::abs(a + b * t_max));
  }
  return 0.0;
}

double TimeProfile::lipschitz() const {
  switch (kind) {
    case Kind::Constant: return 0.0;
    case Kind::Sinusoidal: return std::abs(amp * omega);
    case Kind::Ramp: return std::abs(b);
    case Kind::PiecewiseConstant:
      return std::numeric_limits<double>::quiet_NaN();
  }
  return 0.0;
}

bool TimeProfile::nonnegative() const {
  switch (kind) {
    case Kind::Constant: return value >= 0.0;
    case Kind::Sinusoidal: return amp == 0.0;
    case Kind::PiecewiseConstant:
      return std::all_of(values.begin(), values.end(), [](double v) { return v >= 0.0; });
    case Kind::Ramp: return a >= 0.0 && b >= 0.0;
  }
  return false;
}

bool TimeProfile::operator==(const TimeProfile& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::Constant: return value == o.value;
    case Kind::Sinusoidal: return amp == o.amp && omega == o.omega && phase == o.phase;
    case Kind::PiecewiseConstant: return knots == o.knots && values == o.values;
    case Kind::Ramp: return a == o.a && b == o.b;
  }
  return false;
}

TimeProfile TimeProfile::constant(double v) {
  TimeProfile p;
  p.kind = Kind::Constant;
  p.value = v;
  return p;
}

TimeProfile TimeProfile::sinusoidal(double amp, double omega, double phase) {
  TimeProfile p;
  p.kind = Kind::Sinusoidal;
  p.amp = amp;
  p.omega = omega;
  p.phase = phase;
  return p;
}

TimeProfile TimeProfile::piecewise(std::vector<double> knots, std::vector<double> values) {
  if (knots.empty() || knots.size() != values.size())
    throw std::invalid_argument("piecewise profile needs matching knots and values");
  if (!std::is_sorted(knots.begin(), knots.end()))
    throw std::invalid_argument("piecewise knots must be sorted");
  TimeProfile p;
  p.kind = Kind::PiecewiseConstant;
  p.knots = std::move(knots);
  p.values = std::move(values);
  return p;
}

TimeProfile TimeProfile::ramp(double a, double b) {
  TimeProfile p;
  p.kind = Kind::Ramp;
  p.a = a;
  p.b = b;
  return p;
}

void GeneratorSpec::validate_and_normalize() {
  for (auto& term : terms) {
    if (term.support.empty()) throw std::invalid_argument("term with empty support");
    for (std::size_t i = 0; i < term.support.size(); ++i) {
      int s = term.support[i];
      if (s < 0 || s >= volume.sites())
        throw std::invalid_argument("term support site out of range");
      if (i > 0 && term.support[i - 1] >= s)
        throw std::invalid_argument("term support must be sorted and distinct");
    }
    long d = algebra::support_dim(volume, term.support);
    if (term.has_phi()) {
      if (term.phi.rows() != d || term.phi.cols() != d)
        throw std::invalid_argument("phi block does not match the term support");
      if ((term.phi - term.phi.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("phi block must be Hermitian (tolerance 1e-12)");
    }
    for (const auto& l : term.lindblads)
      if (l.rows() != d || l.cols() != d)
        throw std::invalid_argument("Lindblad block does not match the term support");
    if (!term.lindblads.empty() && !term.profile.nonnegative())
      throw std::invalid_argument(
          "terms carrying Lindblads need a nonnegative time profile");
  }
  std::stable_sort(terms.begin(), terms.end(),
                   [](const InteractionTerm& a, const InteractionTerm& b) {
                     return a.support < b.support;
                   });
}

Mat psi_z(const InteractionTerm& term, double t, const Mat& a_block) {
  long d = a_block.rows();
  Mat out = Mat::Zero(d, d);
  double g = term.profile(t);
  if (term.has_phi()) out += cplx(0, 1) * g * (term.phi * a_block - a_block * term.phi);
  if (!term.lindblads.empty()) {
    if (g < 0.0) throw std::domain_error("negative profile on a Lindblad-carrying term");
    for (const auto& l : term.lindblads) {
      Mat k = l.adjoint() * l;
      out += g * (l.adjoint() * a_block * l - 0.5 * (k * a_block + a_block * k));
    }
  }
  return out;
}

double cb_norm_bound(const InteractionTerm& term, double t) {
  double g = term.profile(t);
  double base = 0.0;
  if (term.has_phi()) base += 2.0 * op_norm(term.phi);
  double l2 = 0.0;
  for (const auto& l : term.lindblads) {
    double n = op_norm(l);
    l2 += n * n;
  }
  return std::abs(g) * base + std::abs(g) * 2.0 * l2;
}

double cb_norm_envelope(const InteractionTerm& term, double t_max) {
  double env = term.profile.envelope(t_max);
  double base = 0.0;
  if (term.has_phi()) base += 2.0 * op_norm(term.phi);
  double l2 = 0.0;
  for (const auto& l : term.lindblads) {
    double n = op_norm(l);
    l2 += n * n;
  }
  return env * (base + 2.0 * l2);
}

double psi_interaction_norm(const GeneratorSpec& spec, double t_max, int samples,
                            bool include_single_site, bool* rigorous) {
  if (samples < 2) samples = 2;
  int n = spec.volume.sites();
  bool all_declared = true;
  std::vector<double> cb0(spec.terms.size(), 0.0);   // profile-stripped cb
  std::vector<double> env(spec.terms.size(), 0.0);   // envelope of |g|
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    const auto& term = spec.terms[i];
    double base = 0.0, l2 = 0.0;
    if (term.has_phi()) base = 2.0 * op_norm(term.phi);
    for (const auto& l : term.lindblads) {
      double m = op_norm(l);
      l2 += m * m;
    }
    cb0[i] = base + 2.0 * l2;
    if (term.profile.envelope_declared()) {
      env[i] = term.profile.envelope(t_max);
    } else {
      all_declared = false;
      double e = 0.0;
      for (int s = 0; s < samples; ++s)
        e = std::max(e, std::abs(term.profile(t_max * s / double(samples - 1))));
      env[i] = e;
    }
  }
  if (rigorous) *rigorous = all_declared;

  double best = 0.0;
  for (int x = 0; x < n; ++x)
    for (int y = x; y < n; ++y) {
      double s = 0.0;
      for (std::size_t i = 0; i < spec.terms.size(); ++i) {
        const auto& supp = spec.terms[i].support;
        if (!include_single_site && supp.size() < 2) continue;
        if (std::binary_search(supp.begin(), supp.end(), x) &&
            std::binary_search(supp.begin(), supp.end(), y))
          s += env[i] * cb0[i];
      }
      if (s == 0.0) continue;
      double w = lattice::f_mu(spec.decay, spec.volume.graph.d(x, y));
      best = std::max(best, s / w);
    }
  return best;
}

double m_t_bound(const GeneratorSpec& spec, double t_max) {
  return psi_interaction_norm(spec, t_max) * spec.volume.sites() * spec.decay.f_norm;
}

GeneratorAction::GeneratorAction(GeneratorSpec spec) : spec_(std::move(spec)) {
  spec_.validate_and_normalize();
  const auto& v = spec_.volume;
  for (const auto& term : spec_.terms) {
    Piece* piece = nullptr;
    for (auto& p : pieces_)
      if (p.profile == term.profile) {
        piece = &p;
        break;
      }
    if (!piece) {
      pieces_.emplace_back();
      piece = &pieces_.back();
      piece->profile = term.profile;
      piece->ham = SpMat(v.total_dim, v.total_dim);
      piece->ksum = SpMat(v.total_dim, v.total_dim);
    }
    if (term.has_phi()) {
      piece->ham = piece->ham + embed_sparse(LocalOperator{term.support, term.phi}, v);
      piece->has_ham = true;
      piece->cb0 += 2.0 * op_norm(term.phi);
    }
    for (const auto& l : term.lindblads) {
      SpMat lf = embed_sparse(LocalOperator{term.support, l}, v);
      piece->ldags.push_back(lf.adjoint());
      piece->ksum = piece->ksum + SpMat(lf.adjoint() * lf);
      piece->ls.push_back(std::move(lf));
      piece->has_diss = true;
      double m = op_norm(l);
      piece->cb0 += 2.0 * m * m;
    }
  }
  // Hadamard-mask fast path when every Lindblad in a piece is diagonal
  for (auto& p : pieces_) {
    if (!p.has_diss) continue;
    bool all_diag = true;
    for (const auto& l : p.ls)
      for (int k = 0; k < l.outerSize() && all_diag; ++k)
        for (SpMat::InnerIterator it(l, k); it; ++it)
          if (it.row() != it.col()) {
            all_diag = false;
            break;
          }
    if (!all_diag) continue;
    long d = dim();
    p.mask = Mat::Zero(d, d);
    for (const auto& l : p.ls) {
      Vec diag = Vec::Zero(d);
      for (int k = 0; k < l.outerSize(); ++k)
        for (SpMat::InnerIterator it(l, k); it; ++it) diag(it.row()) = it.value();
      for (long r = 0; r < d; ++r)
        for (long c = 0; c < d; ++c)
          p.mask(r, c) += std::conj(diag(r)) * diag(c) -
                          0.5 * (std::norm(diag(r)) + std::norm(diag(c)));
    }
    p.diag_diss = true;
    p.ls.clear();
    p.ldags.clear();
  }
}

bool GeneratorAction::time_dependent() const {
  for (const auto& p : pieces_)
    if (p.profile.kind != TimeProfile::Kind::Constant) return true;
  return false;
}

Mat GeneratorAction::apply(double t, const Mat& a) const {
  if (a.rows() != dim() || a.cols() != dim())
    throw std::invalid_argument("operator does not match the volume dimension");
  Mat out = Mat::Zero(dim(), dim());
  for (const auto& p : pieces_) {
    double g = p.profile(t);
    if (g == 0.0) continue;
    if (p.has_diss && g < 0.0)
      throw std::domain_error("negative profile on a Lindblad-carrying term");
    if (p.has_ham) {
      out.noalias() += cplx(0, g) * (p.ham * a);
      out.noalias() -= cplx(0, g) * (a * p.ham);
    }
    if (p.diag_diss) {
      out.noalias() += g * a.cwiseProduct(p.mask);
    } else if (p.has_diss) {
      for (std::size_t i = 0; i < p.ls.size(); ++i)
        out.noalias() += g * (p.ldags[i] * (a * p.ls[i]));
      out.noalias() -= (0.5 * g) * (p.ksum * a);
      out.noalias() -= (0.5 * g) * (a * p.ksum);
    }
  }
  return out;
}

void GeneratorAction::build_piece_superop(const Piece& p) const {
  long d = dim();
  SpMat id(d, d);
  id.setIdentity();
  SpMat s(d * d, d * d);
  if (p.has_ham) {
    SpMat ht = p.ham.transpose();
    s = s + SpMat(cplx(0, 1) * (Eigen::kroneckerProduct(id, p.ham) -
                                Eigen::kroneckerProduct(ht, id)));
  }
  if (p.has_diss) {
    if (p.diag_diss) {
      // mask acts entrywise: superop is diagonal with entries mask(r, c)
      std::vector<Eigen::Triplet<cplx>> trips;
      trips.reserve(d * d);
      for (long c = 0; c < d; ++c)
        for (long r = 0; r < d; ++r) {
          long i = r + d * c;
          trips.emplace_back(int(i), int(i), p.mask(r, c));
        }
      SpMat m(d * d, d * d);
      m.setFromTriplets(trips.begin(), trips.end());
      s = s + m;
    } else {
      for (std::size_t i = 0; i < p.ls.size(); ++i) {
        SpMat lt = p.ls[i].transpose();
        s = s + SpMat(Eigen::kroneckerProduct(lt, p.ldags[i]));
      }
      SpMat kt = p.ksum.transpose();
      s = s - SpMat(0.5 * (Eigen::kroneckerProduct(id, p.ksum) +
                           Eigen::kroneckerProduct(kt, id)));
    }
  }
  p.sop = std::move(s);
  p.superop_built = true;
}

SpMat GeneratorAction::superop(double t) const {
  if (dim() > kSuperopDimCap)
    throw std::runtime_error("superoperator form exceeds the dimension cap");
  SpMat out(dim() * dim(), dim() * dim());
  for (const auto& p : pieces_) {
    if (!p.superop_built) build_piece_superop(p);
    double g = p.profile(t);
    if (g == 0.0) continue;
    if (p.has_diss && g < 0.0)
      throw std::domain_error("negative profile on a Lindblad-carrying term");
    out = out + SpMat(g * p.sop);
  }
  return out;
}

void GeneratorAction::apply_superop(double t, const Mat& s_cols, Mat& out) const {
  if (dim() > kSuperopDimCap)
    throw std::runtime_error("superoperator form exceeds the dimension cap");
  out.setZero(s_cols.rows(), s_cols.cols());
  for (const auto& p : pieces_) {
    if (!p.superop_built) build_piece_superop(p);
    double g = p.profile(t);
    if (g == 0.0) continue;
    if (p.has_diss && g < 0.0)
      throw std::domain_error("negative profile on a Lindblad-carrying term");
    out.noalias() += cplx(g, 0.0) * (p.sop * s_cols);
  }
}

double GeneratorAction::lipschitz_bound() const {
  double s = 0.0;
  for (const auto& p : pieces_) {
    if (!p.profile.lipschitz_declared())
      return std::numeric_limits<double>::quiet_NaN();
    s += p.profile.lipschitz() * p.cb0;
  }
  return s;
}

GeneratorMatrix assemble(const GeneratorSpec& spec, double t) {
  GeneratorSpec s = spec;
  s.validate_and_normalize();
  GeneratorAction gen(std::move(s));
  GeneratorMatrix out;
  out.dim = gen.dim();
  out.mat = gen.superop(t);
  return out;
}

DissipativityResult dissipativity_defect(const GeneratorAction& gen, double t, const Mat& a) {
  Mat ad = a.adjoint();
  Mat d = gen.apply(t, ad * a) - gen.apply(t, ad) * a - ad * gen.apply(t, a);
  Mat dh = 0.5 * (d + d.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(dh, Eigen::EigenvaluesOnly);

  // independent form: sum_Z g_Z(t) sum_a [A, L]^dag [A, L] with embedded L
  const auto& spec = gen.spec();
  Mat cross = Mat::Zero(a.rows(), a.cols());
  for (const auto& term : spec.terms) {
    if (term.lindblads.empty()) continue;
    double g = term.profile(t);
    for (const auto& l : term.lindblads) {
      Mat lf = Mat(embed_sparse(LocalOperator{term.support, l}, spec.volume));
      Mat c = a * lf - lf * a;
      cross.noalias() += g * (c.adjoint() * c);
    }
  }
  DissipativityResult r;
  r.min_eig = es.eigenvalues().minCoeff();
  r.cross_defect = (d - cross).cwiseAbs().maxCoeff();
  return r;
}

HypothesisReport check_hypotheses(const GeneratorAction& gen, double t_max,
                                  int time_samples, int probes, std::uint64_t seed) {
  HypothesisReport rep;
  long d = gen.dim();
  Rng rng(seed);
  std::vector<double> grid;
  for (int i = 0; i < time_samples; ++i)
    grid.push_back(t_max * i / double(std::max(1, time_samples - 1)));

  rep.dissipativity_min = std::numeric_limits<double>::infinity();
  Mat id = Mat::Identity(d, d);
  for (double t : grid)
    rep.unitality_defect = std::max(rep.unitality_defect, algebra::op_norm(gen.apply(t, id)));

  for (int p = 0; p < probes; ++p) {
    Mat a = rng.complex_gaussian(int(d), int(d));
    a /= algebra::op_norm(a);
    double t = grid[p % grid.size()];
    Mat la = gen.apply(t, a);
    Mat lad = gen.apply(t, Mat(a.adjoint()));
    rep.hermiticity_defect =
        std::max(rep.hermiticity_defect, (lad - la.adjoint()).cwiseAbs().maxCoeff());
    auto diss = dissipativity_defect(gen, t, a);
    rep.dissipativity_min = std::min(rep.dissipativity_min, diss.min_eig);
  }

  rep.continuity_exact = d <= GeneratorAction::kSuperopDimCap;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    double delta;
    if (rep.continuity_exact) {
      Mat diff = Mat(gen.superop(grid[i + 1])) - Mat(gen.superop(grid[i]));
      delta = algebra::op_norm(diff);
    } else {
      delta = 0.0;
      Rng prng(seed ^ 0x9e3779b97f4a7c15ull);
      for (int p = 0; p < 5; ++p) {
        Mat a = prng.complex_gaussian(int(d), int(d));
        a /= algebra::op_norm(a);
        delta = std::max(delta, algebra::op_norm(gen.apply(grid[i + 1], a) -
                                                 gen.apply(grid[i], a)));
      }
    }
    rep.continuity_modulus = std::max(rep.continuity_modulus, delta);
  }

  rep.pass = rep.unitality_defect <= 1e-10 && rep.hermiticity_defect <= 1e-10 &&
             rep.dissipativity_min >= -1e-10;
  return rep;
}

}  // namespace qlocal::generator
