#pragma once

// Time-dependent local generators in the Heisenberg picture: interaction
// terms with scalar time profiles, their completely-bounded norm surrogates,
// interaction norms against a decay function, and the assembled action.

#include "qlocal/algebra.hpp"
#include "qlocal/lattice.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qlocal::generator {

// Scalar factor g(t) applied per term: the Hamiltonian block scales as g(t)
// and each Lindblad block as sqrt(g(t)), so the whole local generator scales
// linearly in g and stays in Lindblad form. Terms carrying Lindblads need
// g >= 0 (validated; sinusoidal profiles are Hamiltonian-only).
struct TimeProfile {
  enum class Kind { Constant, Sinusoidal, PiecewiseConstant, Ramp };

  Kind kind = Kind::Constant;
  double value = 1.0;                      // Constant
  double amp = 0.0, omega = 0.0, phase = 0.0;  // amp * sin(omega t + phase)
  std::vector<double> knots;               // Piecewise: value[i] on [knots[i], knots[i+1])
  std::vector<double> values;              //   last value extends to +inf
  double a = 0.0, b = 0.0;                 // Ramp: a + b t

  double operator()(double t) const;
  std::string name() const;

  // exact sup of |g| over [0, t_max] is available without sampling
  bool envelope_declared() const { return kind != Kind::Ramp; }
  double envelope(double t_max) const;

  bool lipschitz_declared() const { return kind != Kind::PiecewiseConstant; }
  double lipschitz() const;

  // g >= 0 guaranteed on [0, inf)
  bool nonnegative() const;

  bool operator==(const TimeProfile& o) const;

  static TimeProfile constant(double v);
  static TimeProfile sinusoidal(double amp, double omega, double phase = 0.0);
  static TimeProfile piecewise(std::vector<double> knots, std::vector<double> values);
  static TimeProfile ramp(double a, double b);
};

struct InteractionTerm {
  std::vector<int> support;     // sorted site indices
  Mat phi;                      // Hermitian block; 0x0 when absent
  std::vector<Mat> lindblads;   // blocks on the support
  TimeProfile profile;

  bool has_phi() const { return phi.rows() > 0; }
};

struct GeneratorSpec {
  algebra::Volume volume;
  std::vector<InteractionTerm> terms;
  lattice::DecayFunction decay;  // carries mu; certificates consume its constants

  double mu() const { return decay.mu; }

  // Hermiticity of phi (1e-12), block dimensions, supports inside the volume,
  // profile nonnegativity for Lindblad-carrying terms; sorts terms by support
  // (stable) for deterministic ordering.
  void validate_and_normalize();
};

// Local Heisenberg action of one term on its support block at time t:
// g(t) ( i[phi, A] + sum_a L_a^dag A L_a - (1/2){L_a^dag L_a, A} ).
Mat psi_z(const InteractionTerm& term, double t, const Mat& a_block);

// 2 ||phi(t)|| + 2 sum_a ||L_a(t)||^2 = |g(t)| (2||phi|| + 2 sum ||L_a||^2)
double cb_norm_bound(const InteractionTerm& term, double t);
// the same with |g| replaced by its envelope over [0, t_max]
double cb_norm_envelope(const InteractionTerm& term, double t_max);

// sup over [0, t_max] and site pairs (x,y) of
//   sum_{terms with support containing x and y} cb(term, s) / F_mu(d(x,y)).
// With every profile's envelope declared the per-term envelope is used
// (an exact sup for constants, a certified upper bound otherwise) and
// *rigorous is set; otherwise undeclared envelopes are sampled on a uniform
// grid and the value is an estimate.
double psi_interaction_norm(const GeneratorSpec& spec, double t_max, int samples = 101,
                            bool include_single_site = true, bool* rigorous = nullptr);

// ||Psi||_{t_max,mu} * |volume| * ||F||; a bound on the generator norm used by
// Gronwall and Euler-product error estimates
double m_t_bound(const GeneratorSpec& spec, double t_max);

// Precomputed embedded action. Pieces are grouped by profile; dissipators
// whose embedded Lindblads are all diagonal apply as a Hadamard mask.
class GeneratorAction {
public:
  explicit GeneratorAction(GeneratorSpec spec);

  const GeneratorSpec& spec() const { return spec_; }
  long dim() const { return spec_.volume.total_dim; }
  bool time_dependent() const;

  Mat apply(double t, const Mat& a) const;

  // Heisenberg superoperator in column-stacking convention,
  // vec(X A Y) = (Y^T kron X) vec(A). Requires dim <= kSuperopDimCap.
  SpMat superop(double t) const;

  // out = L_sop(t) * s_cols for a dense block of column-stacked states,
  // without materializing the combined sparse matrix. Same cap as superop().
  void apply_superop(double t, const Mat& s_cols, Mat& out) const;

  // sum over pieces of Lip(g) * sum cb0; NaN when some profile lacks a
  // declared Lipschitz constant
  double lipschitz_bound() const;

  static constexpr long kSuperopDimCap = 64;

private:
  struct Piece {
    TimeProfile profile;
    bool has_ham = false;
    SpMat ham;
    std::vector<SpMat> ls, ldags;
    SpMat ksum;             // sum_a L_a^dag L_a
    bool has_diss = false;
    bool diag_diss = false;
    Mat mask;               // dissipator Hadamard mask when all L are diagonal
    double cb0 = 0.0;
    mutable bool superop_built = false;
    mutable SpMat sop;
  };

  GeneratorSpec spec_;
  std::vector<Piece> pieces_;

  void build_piece_superop(const Piece& p) const;
};

struct GeneratorMatrix {
  SpMat mat;
  long dim = 0;  // Hilbert space dimension; mat is dim^2 x dim^2
};

// Superoperator of the full generator at time t; annihilates vec(identity).
GeneratorMatrix assemble(const GeneratorSpec& spec, double t);

struct DissipativityResult {
  double min_eig = 0.0;        // smallest eigenvalue of L(A*A) - L(A*)A - A*L(A)
  double cross_defect = 0.0;   // distance to the independent commutator-sum form
};

DissipativityResult dissipativity_defect(const GeneratorAction& gen, double t, const Mat& a);

struct HypothesisReport {
  double unitality_defect = 0.0;      // max_t ||L(t)(1)||
  double hermiticity_defect = 0.0;    // max ||L(A^dag) - L(A)^dag|| over unit probes
  double dissipativity_min = 0.0;     // min eigenvalue seen over probes
  double continuity_modulus = 0.0;    // max ||L(t_{i+1}) - L(t_i)|| over the grid
  bool continuity_exact = false;      // superoperator norms vs probe estimates
  bool pass = false;                  // unitality/hermiticity <= 1e-10, dissipativity >= -1e-10
};

HypothesisReport check_hypotheses(const GeneratorAction& gen, double t_max,
                                  int time_samples = 11, int probes = 20,
                                  std::uint64_t seed = 1);

}  // namespace qlocal::generator
