#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "freqlab/exponents.hpp"
#include "freqlab/grid.hpp"
#include "freqlab/multiplier.hpp"

namespace freqlab {

// ---- witnesses ---------------------------------------------------------------

enum class WitnessKind { Knapp, Focus, RandomSlab, Conjugate, Mode };

std::string witness_name(WitnessKind k);
WitnessKind parse_witness(const std::string& name);

/// Extremizer families for the operator in `spec` on grid g, returned in the
/// frequency representation with f-hat supported in (1/2)I^d.
///  knapp       smooth bump on a sqrt(delta) x ... x delta plate tangent to the surface
///  focus       the slab symbol itself, phi((tau-psi)/delta) chi(xi)
///  random-slab seeded gaussian coefficients on the delta-slab lattice points
///  conjugate   band-projected conjugate phase of the slab kernel (focusing input)
///  mode        single lattice mode on the slab center
GridFunction make_witness(WitnessKind kind, const Grid& g, const OperatorSpec& spec, uint64_t seed);

/// Apply the operator described by spec (dispatch on kind).
GridFunction op_apply(const GridFunction& f, const OperatorSpec& spec);

// ---- regression -----------------------------------------------------------------

struct RegressionFit {
    double slope = 0.0, intercept = 0.0, stderr_slope = 0.0;
    double max_abs_residual = 0.0;
    int npoints = 0;
};

/// OLS of log2(ratio) against log2(delta).
RegressionFit fit_loglog(const std::vector<double>& deltas, const std::vector<double>& ratios);

// ---- scaling experiments -----------------------------------------------------------

struct ExperimentPolicy {
    double h_over_delta = 0.25;          // grid h = delta * this
    int64_t max_points = int64_t(1) << 23;  // memory budget: samples per grid
};

struct RatioSample {
    double delta = 0.0;
    std::string witness;
    double ratio = 0.0;
    double normalized = 0.0;  // ratio / delta^{theoretical slope}
    int n_grid = 0;
    bool skipped = false;
};

struct ScalingReport {
    std::string op_id;
    int d = 0;
    double p = 0.0;
    std::vector<RatioSample> samples;        // every (delta, witness)
    std::vector<double> ladder;              // kept deltas
    std::vector<double> max_ratio;           // max over witnesses per delta
    RegressionFit fit;
    double theoretical_slope = 0.0;
    std::string dominant_witness;            // witness with the smallest fitted slope (strongest as delta -> 0)
    std::vector<double> skipped_deltas;
};

struct ScalingConfig {
    OpKind kind = OpKind::TDelta;
    std::string phase_id = "paraboloid";
    int d = 2;
    double p = 4.0;
    std::vector<double> ladder;
    std::vector<WitnessKind> witnesses;
    uint64_t seed = 1;
    ExperimentPolicy policy;
};

ScalingReport scaling_experiment(const ScalingConfig& cfg);

// ---- bilinear transversal experiment ------------------------------------------------

struct BilinearPoint {
    double delta = 0.0, lhs = 0.0, normalized = 0.0;
    int n_grid = 0;
};

struct BilinearReport {
    int d = 0;
    double p = 0.0, sigma = 0.0, achieved_vol = 0.0;
    std::vector<BilinearPoint> points;
    double spread = 0.0;  // max/min of normalized constants
};

/// || T_delta f1 . T_delta f2 ||_{p/2} against delta^{2(d/p-(d-1)/2)} prod ||f_i||_p,
/// with focus witnesses in two Vol-separated cubes. k = 2, p >= 4 required.
BilinearReport bilinear_transversal_experiment(const std::string& phase_id, int d, double p,
                                               double sigma_sep, const std::vector<double>& ladder,
                                               const ExperimentPolicy& policy = {});

// ---- confined square experiment --------------------------------------------------------

struct ConfinedPoint {
    double delta = 0.0, lhs = 0.0, rhs = 0.0, ratio = 0.0;
};

struct ConfinedReport {
    int d = 0, k = 2;
    double p = 0.0, sigma_tilde = 0.0;
    std::vector<ConfinedPoint> points;
    double spread = 0.0;
};

/// prod_i || S_delta f_i ||_{p/k} over a ball against the square-sum bound
/// prod_i || (sum_q |S_delta f_{i,q}|^2)^{1/2} rho_B ||_p, normals confined
/// near a k-plane. Defaults d=3, k=2.
ConfinedReport confined_square_experiment(int d, double p, double sigma_tilde,
                                          const std::vector<double>& ladder, uint64_t seed,
                                          const ExperimentPolicy& policy = {});

// ---- induction quantities ----------------------------------------------------------------

struct InductionEstimate {
    double value = 0.0;  // max ratio over suite x phase library
    std::vector<RatioSample> detail;
};

/// A-hat(delta) (kind 'A', T_delta over the static library) or B-hat(delta)
/// (kind 'B', S_delta over the time library): max operator-norm ratio over the
/// witness suite. Lower estimator for the induction quantity.
InductionEstimate induction_estimate(char kind, int d, double p, double delta,
                                     const std::vector<WitnessKind>& suite, uint64_t seed,
                                     const ExperimentPolicy& policy = {});

struct CovarianceCheck {
    double small_ratio = 0.0;   // ratio for f supported in q((a,mu), eps)
    double base = 0.0;          // A-hat(eps^-2 delta), or eps^{1/p+1/2} B-hat(eps^-2 delta)
    double quotient = 0.0;
    bool hypothesis_ok = true;  // the proposition's smallness hypotheses
};

/// Rescaling covariance of Prop-rescale type: compares the small-support ratio
/// against the rescaled induction estimate.
CovarianceCheck rescale_covariance(char kind, int d, double p, double delta, double eps,
                                   uint64_t seed, const ExperimentPolicy& policy = {});

/// Grid sized for a delta-experiment under the policy (h = delta * h_over_delta,
/// n the minimal power of two with n h >= 2). Returns false when the memory
/// budget is exceeded.
bool experiment_grid(int d, double delta, const ExperimentPolicy& policy, Grid* out);

}  // namespace freqlab
