#pragma once

// Shared scalar aliases, deterministic RNG, output formatting.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace qlocal {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<cplx>;

// Deterministic Gaussian sampling, procedure "gauss-bm-v1": mt19937_64 (bit-exact
// per the standard) -> 53-bit uniforms -> Box-Muller. std::normal_distribution is
// implementation-defined, so it is never used; seeds reproduce across builds.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }  // [0,1)

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  cplx cgauss() {
    double re = gauss();
    double im = gauss();
    return cplx(re, im) * std::numbers::sqrt2 / 2.0;
  }

  Mat complex_gaussian(int rows, int cols) {
    Mat g(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) g(i, j) = cgauss();
    return g;
  }

  // Hermitian with independent Gaussian entries above the diagonal
  Mat hermitian_gaussian(int n) {
    Mat g = complex_gaussian(n, n);
    return (g + g.adjoint()) / 2.0;
  }

private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// %.17g round-trips a double exactly
inline std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Runs fn(i) for i in [0,n). Work items are claimed by atomic counter; results
// must be written to per-index slots so the assembly order is deterministic.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  int nw = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace qlocal
