#include "qlocal/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qlocal::lattice {

namespace {

void validate_metric(const RMat& d, int n) {
  if (d.rows() != n || d.cols() != n) throw std::invalid_argument("distance matrix shape mismatch");
  for (int i = 0; i < n; ++i) {
    if (d(i, i) != 0.0) throw std::invalid_argument("metric has nonzero diagonal");
    for (int j = i + 1; j < n; ++j) {
      if (d(i, j) != d(j, i)) throw std::invalid_argument("metric not symmetric");
      if (!(d(i, j) > 0.0)) throw std::invalid_argument("off-diagonal distance not positive");
    }
  }
  // Exact triangle check is O(n^3); beyond 300 sites spot-check random triples.
  auto check = [&](int i, int j, int k) {
    if (d(i, j) > d(i, k) + d(k, j) + 1e-12)
      throw std::invalid_argument("triangle inequality violated");
  };
  if (n <= 300) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (int k = 0; k < n; ++k) check(i, j, k);
  } else {
    Rng rng(0x6d657472u);
    for (int t = 0; t < 20000; ++t) {
      int i = int(rng.raw() % std::uint64_t(n));
      int j = int(rng.raw() % std::uint64_t(n));
      int k = int(rng.raw() % std::uint64_t(n));
      if (i != j && j != k && i != k) check(i, j, k);
    }
  }
}

}  // namespace

int MetricGraph::index_of(const std::string& label) const {
  for (int i = 0; i < size(); ++i)
    if (labels[i] == label) return i;
  return -1;
}

MetricGraph MetricGraph::chain_interval(long lo, long hi) {
  if (hi < lo) throw std::invalid_argument("empty chain interval");
  int n = int(hi - lo + 1);
  MetricGraph g;
  g.family_tag = "chain-Z1";
  g.labels.reserve(n);
  for (long c = lo; c <= hi; ++c) g.labels.push_back(std::to_string(c));
  g.dist.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g.dist(i, j) = std::abs(i - j);
  return g;
}

MetricGraph MetricGraph::grid(int w, int h) {
  if (w < 1 || h < 1) throw std::invalid_argument("empty grid");
  MetricGraph g;
  g.family_tag = "grid-Z2";
  int n = w * h;
  g.labels.reserve(n);
  std::vector<std::pair<int, int>> xy;
  xy.reserve(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      g.labels.push_back("(" + std::to_string(x) + "," + std::to_string(y) + ")");
      xy.emplace_back(x, y);
    }
  g.dist.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g.dist(i, j) = std::abs(xy[i].first - xy[j].first) + std::abs(xy[i].second - xy[j].second);
  return g;
}

MetricGraph MetricGraph::custom(std::vector<std::string> labels, RMat dist) {
  MetricGraph g;
  g.family_tag = "custom";
  g.labels = std::move(labels);
  g.dist = std::move(dist);
  validate_metric(g.dist, g.size());
  return g;
}

double DecayFunction::F(double r) const {
  if (r < 0.0) throw std::domain_error("decay function evaluated at negative distance");
  if (kind == Kind::PowerLaw) return std::pow(1.0 + r, -alpha);
  return fn(r);
}

namespace {

// Upper/lower bounds for sum_{m >= M} m^-s by Euler-Maclaurin. Truncating the
// alternating correction series after a positive term gives an upper bound.
double zeta_tail(double s, double M, bool upper) {
  double t = std::pow(M, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(M, -s) +
             s / 12.0 * std::pow(M, -s - 1.0);
  if (!upper) t -= s * (s + 1.0) * (s + 2.0) / 720.0 * std::pow(M, -s - 3.0);
  return t;
}

double f_norm_analytic(double alpha, int dim) {
  const int K = 20000;
  double s = 1.0;  // the x = y term, F(0) = 1
  if (dim == 1) {
    // 1 + 2 sum_{k>=1} (1+k)^-alpha
    for (int k = 1; k <= K; ++k) s += 2.0 * std::pow(1.0 + k, -alpha);
    s += 2.0 * zeta_tail(alpha, K + 2, true);
  } else if (dim == 2) {
    // 4k sites at path distance k from any site of the square lattice
    for (int k = 1; k <= K; ++k) s += 4.0 * k * std::pow(1.0 + k, -alpha);
    // sum_{k>K} 4k (1+k)^-a = 4 [ sum m^{1-a} - sum m^-a ], m >= K+2
    s += 4.0 * (zeta_tail(alpha - 1.0, K + 2, true) - zeta_tail(alpha, K + 2, false));
  } else {
    throw std::invalid_argument("analytic decay constants available for dim 1 and 2 only");
  }
  return s;
}

}  // namespace

DecayFunction DecayFunction::power_law(double alpha, double mu, int dim) {
  if (!(alpha > dim)) throw std::invalid_argument("power law needs alpha > dim for summability");
  if (mu < 0.0) throw std::invalid_argument("negative mu");
  DecayFunction f;
  f.kind = Kind::PowerLaw;
  f.alpha = alpha;
  f.mu = mu;
  f.f_norm = f_norm_analytic(alpha, dim);
  f.f_norm_prov = Provenance::AnalyticBound;
  f.c_const = std::pow(2.0, alpha) * f.f_norm;
  f.c_const_prov = Provenance::AnalyticBound;
  return f;
}

DecayFunction DecayFunction::power_law_on(const MetricGraph& g, double alpha, double mu) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (mu < 0.0) throw std::invalid_argument("negative mu");
  DecayFunction f;
  f.kind = Kind::PowerLaw;
  f.alpha = alpha;
  f.mu = mu;
  f.f_norm = f_norm_estimate(g, f);
  f.f_norm_prov = Provenance::FiniteTruncation;
  f.c_const = c_constant_estimate(g, f);
  f.c_const_prov = Provenance::FiniteTruncation;
  return f;
}

DecayFunction DecayFunction::custom(std::function<double(double)> fn, double mu,
                                    const MetricGraph& g) {
  if (mu < 0.0) throw std::invalid_argument("negative mu");
  DecayFunction f;
  f.kind = Kind::Custom;
  f.alpha = 0.0;
  f.mu = mu;
  f.fn = std::move(fn);
  // positivity and monotonicity on the realized distances
  std::vector<double> rs;
  for (int i = 0; i < g.size(); ++i)
    for (int j = 0; j < g.size(); ++j) rs.push_back(g.d(i, j));
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
  double prev = std::numeric_limits<double>::infinity();
  for (double r : rs) {
    double v = f.fn(r);
    if (!(v > 0.0)) throw std::invalid_argument("decay function must be strictly positive");
    if (v > prev + 1e-15) throw std::invalid_argument("decay function must be non-increasing");
    prev = v;
  }
  f.f_norm = f_norm_estimate(g, f);
  f.f_norm_prov = Provenance::FiniteTruncation;
  f.c_const = c_constant_estimate(g, f);
  f.c_const_prov = Provenance::FiniteTruncation;
  return f;
}

double f_norm_estimate(const MetricGraph& g, const DecayFunction& F) {
  int n = g.size();
  double best = 0.0;
  for (int x = 0; x < n; ++x) {
    double s = 0.0;
    for (int y = 0; y < n; ++y) s += F.F(g.d(x, y));
    best = std::max(best, s);
  }
  return best;
}

double c_constant_estimate(const MetricGraph& g, const DecayFunction& F) {
  int n = g.size();
  RMat Fd(n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) Fd(x, y) = F.F(g.d(x, y));
  double best = 0.0;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      double s = Fd.row(x).dot(Fd.row(y)) / Fd(x, y);
      best = std::max(best, s);
    }
  return best;
}

double c_constant_analytic(const DecayFunction& F) {
  if (F.kind != DecayFunction::Kind::PowerLaw)
    throw std::invalid_argument("analytic convolution constant requires a power-law base");
  if (F.f_norm_prov != Provenance::AnalyticBound)
    throw std::invalid_argument("analytic convolution constant requires analytic f_norm");
  return std::pow(2.0, F.alpha) * F.f_norm;
}

double f_mu(const DecayFunction& F, double r) {
  if (r < 0.0) throw std::domain_error("negative distance");
  return std::exp(-F.mu * r) * F.F(r);
}

SubsetFamily enumerate_subsets(const MetricGraph& g, int k_max, double r_max,
                               std::size_t cap) {
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  SubsetFamily fam;
  fam.k_max = k_max;
  fam.r_max = r_max;
  int n = g.size();
  std::vector<int> cur;
  // depth-first extension by larger indices keeps the output lexicographic
  std::function<void(int)> extend = [&](int start) {
    for (int j = start; j < n; ++j) {
      bool ok = true;
      for (int i : cur)
        if (g.d(i, j) > r_max) {
          ok = false;
          break;
        }
      if (!ok) continue;
      cur.push_back(j);
      if (fam.subsets.size() >= cap)
        throw std::runtime_error("subset enumeration exceeds cap");
      fam.subsets.push_back(cur);
      if (int(cur.size()) < k_max) extend(j + 1);
      cur.pop_back();
    }
  };
  extend(0);
  return fam;
}

}  // namespace qlocal::lattice
