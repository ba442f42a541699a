#include "qlocal/thermolimit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace qlocal::thermolimit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same_matrix(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a - b).squaredNorm() == 0.0;
}

bool same_term(const generator::InteractionTerm& a,
               const generator::InteractionTerm& b) {
  if (a.support != b.support) return false;
  if (!(a.profile == b.profile)) return false;
  if (a.has_phi() != b.has_phi()) return false;
  if (a.has_phi() && !same_matrix(a.phi, b.phi)) return false;
  if (a.lindblads.size() != b.lindblads.size()) return false;
  for (std::size_t i = 0; i < a.lindblads.size(); ++i)
    if (!same_matrix(a.lindblads[i], b.lindblads[i])) return false;
  return true;
}

std::unordered_map<std::string, int> label_index(const Volume& v) {
  std::unordered_map<std::string, int> m;
  for (int i = 0; i < v.sites(); ++i) m.emplace(v.graph.labels[std::size_t(i)], i);
  return m;
}

// terms of sp whose support labels all appear in `inside`, supports re-indexed
// through map (target index of source site i), sorted order preserved
std::vector<generator::InteractionTerm> restrict_terms(
    const GeneratorSpec& sp, const std::vector<int>& map_to_small) {
  std::vector<generator::InteractionTerm> out;
  for (const auto& term : sp.terms) {
    std::vector<int> mapped;
    mapped.reserve(term.support.size());
    for (int site : term.support) {
      int t = map_to_small[std::size_t(site)];
      if (t < 0) break;
      mapped.push_back(t);
    }
    if (mapped.size() != term.support.size()) continue;
    generator::InteractionTerm r = term;
    r.support = std::move(mapped);
    out.push_back(std::move(r));
  }
  return out;
}

void check_pair(const GeneratorSpec& small, const GeneratorSpec& big, int k) {
  const Volume& vs = small.volume;
  const Volume& vb = big.volume;
  if (vs.sites() >= vb.sites())
    throw std::invalid_argument("volume sequence: sizes must grow strictly (" +
                                std::to_string(k) + " -> " + std::to_string(k + 1) + ")");
  auto big_idx = label_index(vb);
  std::vector<int> up(std::size_t(vs.sites()), -1);
  int prev = -1;
  for (int i = 0; i < vs.sites(); ++i) {
    auto it = big_idx.find(vs.graph.labels[std::size_t(i)]);
    if (it == big_idx.end())
      throw std::invalid_argument("volume sequence: site '" + vs.graph.labels[std::size_t(i)] +
                                  "' of volume " + std::to_string(k) + " missing from volume " +
                                  std::to_string(k + 1));
    if (vs.site_dims[std::size_t(i)] != vb.site_dims[std::size_t(it->second)])
      throw std::invalid_argument("volume sequence: site dimension changes across volumes at '" +
                                  vs.graph.labels[std::size_t(i)] + "'");
    if (it->second <= prev)
      throw std::invalid_argument("volume sequence: inclusion of volume " + std::to_string(k) +
                                  " does not preserve site order");
    prev = up[std::size_t(i)] = it->second;
  }
  for (int i = 0; i < vs.sites(); ++i)
    for (int j = 0; j < vs.sites(); ++j)
      if (vs.graph.d(i, j) != vb.graph.d(up[std::size_t(i)], up[std::size_t(j)]))
        throw std::invalid_argument("volume sequence: metric changes on shared sites between volumes " +
                                    std::to_string(k) + " and " + std::to_string(k + 1));

  // down-map: big site index -> small index, -1 outside
  std::vector<int> down(std::size_t(vb.sites()), -1);
  for (int i = 0; i < vs.sites(); ++i) down[std::size_t(up[std::size_t(i)])] = i;
  std::vector<generator::InteractionTerm> restricted = restrict_terms(big, down);
  if (restricted.size() != small.terms.size())
    throw std::invalid_argument("volume sequence: volume " + std::to_string(k) + " has " +
                                std::to_string(small.terms.size()) + " terms but the restriction of volume " +
                                std::to_string(k + 1) + " has " + std::to_string(restricted.size()));
  std::vector<bool> used(restricted.size(), false);
  for (const auto& term : small.terms) {
    bool found = false;
    for (std::size_t j = 0; j < restricted.size(); ++j) {
      if (used[j] || !same_term(term, restricted[j])) continue;
      used[j] = found = true;
      break;
    }
    if (!found)
      throw std::invalid_argument("volume sequence: a term of volume " + std::to_string(k) +
                                  " has no exact match in the restriction of volume " +
                                  std::to_string(k + 1));
  }
}

// whole evolved small-volume matrix as a local operator on the large volume
Mat embed_up(const VolumeSequence& seq, const Mat& small_full, int from, int to) {
  LocalOperator op;
  op.support = seq.index_map(from, to);
  op.block = small_full;
  return algebra::embed(op, seq.volume(to));
}

bool all_profiles_constant(const GeneratorSpec& sp) {
  for (const auto& term : sp.terms)
    if (term.profile.kind != generator::TimeProfile::Kind::Constant) return false;
  return true;
}

// int_s^t e^{mu v_r r} dr, exponent mu * v_r * r = c_mu * psi(r) * r
double growth_integral(const GeneratorSpec& sp, const LRCertificate& cert,
                       double s, double t) {
  if (t <= s) return 0.0;
  if (all_profiles_constant(sp) || cert.velocity == 0.0) {
    double a = cert.mu * cert.velocity;
    if (a == 0.0) return t - s;
    return (std::exp(a * t) - std::exp(a * s)) / a;
  }
  constexpr int kPanels = 64;
  double h = (t - s) / kPanels;
  double acc = 0.0;
  for (int k = 1; k <= kPanels; ++k) {
    double r = s + k * h;
    double psi = generator::psi_interaction_norm(sp, r, 101, !cert.single_site_excluded);
    acc += h * std::exp(cert.c_mu * psi * r);
  }
  return acc;
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
  }
  double den = n * sxx - sx * sx;
  if (den == 0.0) return kNaN;
  return (n * sxy - sx * sy) / den;
}

// chain-family tail: sum of F_mu over all integer coordinates outside [lo, hi],
// distances taken to the nearest support coordinate
double chain_tail_sum(const lattice::DecayFunction& decay, long lo, long hi,
                      long xmin, long xmax) {
  double acc = 0.0;
  for (int side = 0; side < 2; ++side) {
    double base = side == 0 ? double(xmin - lo) : double(hi - xmax);
    for (long i = 1; i < 100000000L; ++i) {
      double term = lattice::f_mu(decay, base + double(i));
      acc += term;
      if (term <= 1e-18 * acc) break;
    }
  }
  return acc;
}

}  // namespace

std::vector<int> VolumeSequence::index_map(int from, int to) const {
  if (from < 0 || to < from || to >= size())
    throw std::invalid_argument("index_map: need 0 <= from <= to < size");
  const Volume& vf = volume(from);
  const Volume& vt = volume(to);
  std::vector<int> map(std::size_t(vf.sites()));
  for (int i = 0; i < vf.sites(); ++i) {
    int j = vt.graph.index_of(vf.graph.labels[std::size_t(i)]);
    if (j < 0)
      throw std::runtime_error("index_map: label '" + vf.graph.labels[std::size_t(i)] +
                               "' missing from volume " + std::to_string(to));
    map[std::size_t(i)] = j;
  }
  return map;
}

VolumeSequence VolumeSequence::from_family(
    const std::vector<Volume>& volumes,
    const std::function<GeneratorSpec(const Volume&)>& family) {
  if (volumes.empty()) throw std::invalid_argument("from_family: no volumes");
  VolumeSequence seq;
  seq.specs.reserve(volumes.size());
  for (const Volume& v : volumes) {
    GeneratorSpec sp = family(v);
    sp.validate_and_normalize();
    seq.specs.push_back(std::move(sp));
  }
  for (std::size_t k = 0; k + 1 < seq.specs.size(); ++k)
    check_pair(seq.specs[k], seq.specs[k + 1], int(k));
  return seq;
}

std::vector<Volume> centered_chain_volumes(int count, long r0, long step) {
  if (count < 1 || r0 < 0 || step < 1)
    throw std::invalid_argument("centered_chain_volumes: need count >= 1, r0 >= 0, step >= 1");
  std::vector<Volume> out;
  out.reserve(std::size_t(count));
  for (int k = 0; k < count; ++k) {
    long r = r0 + k * step;
    out.push_back(Volume::qubits(lattice::MetricGraph::chain_interval(-r, r),
                                 Volume::kAbsoluteCap));
  }
  return out;
}

LocalOperator relabel(const VolumeSequence& seq, const LocalOperator& a,
                      int from, int to) {
  algebra::validate_local(seq.volume(from), a);
  std::vector<int> map = seq.index_map(from, to);
  LocalOperator out;
  out.support.reserve(a.support.size());
  for (int site : a.support) out.support.push_back(map[std::size_t(site)]);
  out.block = a.block;
  return out;
}

double volume_difference(const VolumeSequence& seq, const LocalOperator& a,
                         int n, int m, double s, double t, double tol) {
  if (m > n || n >= seq.size() || m < 0)
    throw std::invalid_argument("volume_difference: need 0 <= m <= n < size");
  algebra::validate_local(seq.volume(m), a);
  if (m == n) return 0.0;
  generator::GeneratorAction gm(seq.specs[std::size_t(m)]);
  generator::GeneratorAction gn(seq.specs[std::size_t(n)]);
  Mat small = propagator::evolve(gm, a, s, t, tol);
  Mat big = propagator::evolve(gn, relabel(seq, a, m, n), s, t, tol);
  return algebra::op_norm(big - embed_up(seq, small, m, n));
}

double difference_bound(const VolumeSequence& seq, const LocalOperator& a,
                        int n, int m, double s, double t,
                        const LRCertificate& cert) {
  if (m > n || n >= seq.size() || m < 0)
    throw std::invalid_argument("difference_bound: need 0 <= m <= n < size");
  if (s < 0.0 || t < s)
    throw std::invalid_argument("difference_bound: need 0 <= s <= t");
  algebra::validate_local(seq.volume(m), a);
  const GeneratorSpec& spn = seq.specs[std::size_t(n)];
  if (cert.mu != spn.decay.mu)
    throw std::invalid_argument("difference_bound: certificate mu does not match the decay function");
  if (m == n || t == s) return 0.0;

  std::vector<int> up = seq.index_map(m, n);
  std::vector<bool> shared(std::size_t(seq.volume(n).sites()), false);
  for (int j : up) shared[std::size_t(j)] = true;

  double zsup = 0.0;
  for (int x : a.support) {
    int xs = up[std::size_t(x)];
    double acc = 0.0;
    for (int z = 0; z < seq.volume(n).sites(); ++z)
      if (!shared[std::size_t(z)])
        acc += lattice::f_mu(spn.decay, seq.volume(n).graph.d(xs, z));
    zsup = std::max(zsup, acc);
  }
  double integral = growth_integral(spn, cert, s, t);
  return a.norm() * cert.psi_norm * integral * double(a.support.size()) * zsup;
}

double restriction_defect(const VolumeSequence& seq, int n, int m, double t,
                          unsigned seed) {
  if (m > n || n >= seq.size() || m < 0)
    throw std::invalid_argument("restriction_defect: need 0 <= m <= n < size");
  const GeneratorSpec& spm = seq.specs[std::size_t(m)];
  Rng rng(seed);
  Mat probe = rng.hermitian_gaussian(int(seq.volume(m).total_dim));

  generator::GeneratorAction gm(spm);
  Mat small = gm.apply(t, probe);

  std::vector<int> up = seq.index_map(m, n);
  std::vector<int> down(std::size_t(seq.volume(n).sites()), -1);
  for (int i = 0; i < int(up.size()); ++i) down[std::size_t(up[std::size_t(i)])] = i;
  GeneratorSpec filtered = seq.specs[std::size_t(n)];
  filtered.terms = restrict_terms(filtered, down);
  for (auto& term : filtered.terms) {
    for (int& site : term.support) site = up[std::size_t(site)];
  }
  filtered.validate_and_normalize();
  generator::GeneratorAction gf(filtered);
  Mat big = gf.apply(t, embed_up(seq, probe, m, n));

  return algebra::op_norm(big - embed_up(seq, small, m, n));
}

SweepResult cauchy_sweep(const VolumeSequence& seq, const LocalOperator& a,
                         double s, double t, double tol, int threads) {
  algebra::validate_local(seq.volume(0), a);
  if (s < 0.0 || t < s)
    throw std::invalid_argument("cauchy_sweep: need 0 <= s <= t");
  const int nvol = seq.size();

  SweepResult res;
  res.cert = lrbound::build_certificate(seq.specs[std::size_t(nvol - 1)], t);

  std::vector<Mat> evolved(static_cast<std::size_t>(nvol));
  parallel_for(nvol, threads, [&](int k) {
    generator::GeneratorAction gen(seq.specs[std::size_t(k)]);
    evolved[std::size_t(k)] = propagator::evolve(gen, relabel(seq, a, 0, k), s, t, tol);
  });

  res.rows.reserve(std::size_t(nvol - 1));
  for (int k = 1; k < nvol; ++k) {
    SweepRow row;
    row.n = k + 1;
    row.sites = seq.volume(k).sites();
    row.measured = algebra::op_norm(evolved[std::size_t(k)] -
                                    embed_up(seq, evolved[std::size_t(k - 1)], k - 1, k));
    row.bound = difference_bound(seq, relabel(seq, a, 0, k - 1), k, k - 1, s, t, res.cert);

    std::vector<int> up_prev = seq.index_map(k - 1, k);
    std::vector<bool> shared(std::size_t(row.sites), false);
    for (int j : up_prev) shared[std::size_t(j)] = true;
    std::vector<int> xs = relabel(seq, a, 0, k).support;
    double dmin = std::numeric_limits<double>::infinity();
    for (int x : xs)
      for (int z = 0; z < row.sites; ++z)
        if (!shared[std::size_t(z)]) dmin = std::min(dmin, seq.volume(k).graph.d(x, z));
    row.boundary_distance = dmin;

    row.ratio = row.bound > 0.0 ? row.measured / row.bound
                                : (row.measured == 0.0 ? 0.0
                                                       : std::numeric_limits<double>::infinity());
    if (row.measured > row.bound * (1.0 + 1e-9) + 1e-12)
      throw std::runtime_error("cauchy_sweep: measured difference " + std::to_string(row.measured) +
                               " exceeds its bound " + std::to_string(row.bound) +
                               " at volume ordinal " + std::to_string(row.n));
    res.rows.push_back(row);
  }

  const double floor = std::max(1e-12, 1e3 * tol);
  std::vector<double> xs, ys;
  for (const SweepRow& row : res.rows) {
    if (row.measured > floor) {
      xs.push_back(row.boundary_distance);
      ys.push_back(std::log(row.measured));
    }
  }
  res.fit_points = int(xs.size());
  res.fit_slope = xs.size() >= 2 ? lsq_slope(xs, ys) : kNaN;

  res.certified_tail = kNaN;
  const Volume& last = seq.volume(nvol - 1);
  if (last.graph.family_tag == "chain-Z1") {
    long lo = 0, hi = 0;
    bool ok = true;
    for (int i = 0; i < last.sites() && ok; ++i) {
      try {
        long c = std::stol(last.graph.labels[std::size_t(i)]);
        if (i == 0) lo = hi = c;
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (ok && hi - lo + 1 == last.sites()) {
      LocalOperator al = relabel(seq, a, 0, nvol - 1);
      long xmin = 0, xmax = 0;
      for (std::size_t i = 0; i < al.support.size(); ++i) {
        long c = std::stol(last.graph.labels[std::size_t(al.support[i])]);
        if (i == 0) xmin = xmax = c;
        xmin = std::min(xmin, c);
        xmax = std::max(xmax, c);
      }
      const GeneratorSpec& spn = seq.specs[std::size_t(nvol - 1)];
      double integral = growth_integral(spn, res.cert, s, t);
      res.certified_tail = a.norm() * res.cert.psi_norm * integral *
                           double(a.support.size()) *
                           chain_tail_sum(spn.decay, lo, hi, xmin, xmax);
    }
  }
  return res;
}

}  // namespace qlocal::thermolimit
