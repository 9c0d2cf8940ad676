#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "freqlab/grid.hpp"
#include "freqlab/multiplier.hpp"
#include "freqlab/phase.hpp"

namespace freqlab {

/// Dyadic frequency cubes of side 2*sigma tiling I^d = [-1,1)^d, half-open so
/// the lattice points are partitioned exactly. Requires h | sigma.
struct CubeSet {
    Grid grid;
    double sigma = 0.0;
    int per_axis = 0;  // 1/sigma

    int64_t count() const {
        int64_t c = 1;
        for (int i = 0; i < grid.d; ++i) c *= per_axis;
        return c;
    }
    /// Cube cell of a lattice index vector; -1 when the point lies outside I^d.
    int64_t cube_of_lattice(const int* k) const;
    void cell_of(int64_t cube, int* cell) const;
    Vec center(int64_t cube) const;
    double lo(int cell) const { return -1.0 + 2.0 * sigma * cell; }
    /// Minimum Euclidean distance between two cubes (as closed boxes).
    double cube_distance(int64_t a, int64_t b) const;
};

CubeSet cubes_at_scale(const Grid& g, double sigma);

/// Keeps only the frequency samples inside the cube.
GridFunction cube_restrict(const GridFunction& f, const CubeSet& cs, int64_t cube);

/// lhs = (sum_q ||f_q||_p^p)^{1/p}, rhs = ||f||_p; p >= 2 required.
std::pair<double, double> rubio_check(const GridFunction& f, double sigma, double p);

// ---- scattered modulation sums ---------------------------------------------

/// Majorant data for Lemma-scattered style sums: A_l = C_M (1+|sigma l|)^{-M}
/// with C_M computed from the Fourier coefficients of the window
/// A(x, xi) = a(x) a(xi) e^{i x.xi}, so that the domination is a genuine
/// inequality (not an assumed constant).
struct ScatteredMajorant {
    int d = 0;
    int order = 6;       // M
    double c_m = 0.0;    // C_M
    double a_l(const std::vector<int>& j) const;  // C_M (1+|j|)^{-M}
};

ScatteredMajorant scattered_majorant(int d, int order = 6);

/// Exact evaluation of the band-limited trig polynomial at an arbitrary point.
cplx eval_bandlimited(const GridFunction& fhat, const Vec& x);

/// l-infinity bound sup |F| <= n^{-d} sum |F-hat| (coefficient l1 mass).
double linf_bound(const GridFunction& fhat);

struct ScatteredResult {
    double value = 0.0;      // [F]_sigma(x0) over |l| <= r_tr
    double tail = 0.0;       // bound on the truncated remainder
    int terms = 0;
};

/// [F]_sigma(x0) = sum_{l in sigma^{-1} Z^d, |l| <= r_tr} A_l |F(x0 - l)|.
/// F must be band-limited to a cube of side 2*sigma (mass check 1e-10).
ScatteredResult scattered_sum(const GridFunction& f, double sigma, const Vec& x0,
                              const ScatteredMajorant& maj, double r_tr);

/// Doubled variant |[F]|_sigma(x) with the A_{l1} A_{l2} weights.
ScatteredResult scattered_sum_doubled(const GridFunction& f, double sigma, const Vec& x,
                                      const ScatteredMajorant& maj, double r_tr);

// ---- direction buckets -------------------------------------------------------

struct DirectionBucket {
    Vec theta;                    // representative direction on S^{d-1}
    std::vector<int64_t> cubes;
};

/// Greedy partition of the near-surface cubes at this scale by sigma-separated
/// normal directions; cubes further than c_near*sigma from the graph are dropped.
std::vector<DirectionBucket> direction_buckets(const CubeSet& cs, const PhaseSurface& psi,
                                               double c_near = 3.0);

/// S_d f = ( sum_{q in d} |S_delta f_q|^2 )^{1/2}.
GridFunction bucket_square(const GridFunction& f, const CubeSet& cs, const DirectionBucket& b,
                           const OperatorSpec& spec);

/// max over grid points of S_delta(sum_{q in d} f_q) / S_d f (the Eq.-lps monitor).
double bucket_square_monitor(const GridFunction& f, const CubeSet& cs, const DirectionBucket& b,
                             const OperatorSpec& spec);

// ---- decomposition certificates ---------------------------------------------

struct DecomposeParams {
    double c_trans = 0.125;        // Vol >= c_trans * sigma_1 ... sigma_k
    double c_neighbor = 10.0;      // dist(n(q), Pi^k) <= c_neighbor * sigma_k
    double c_near = 3.0;           // near-surface cube filter
    double dichotomy_factor = 0.0; // 0 = the verbatim 100^d
    double separation = 10.0;      // far-pair separation, units of sigma_1
};

/// Pointwise magnitudes |T_delta f_q(x)| (complex value kept) or S_delta f_q(x)
/// for every cube, evaluated by direct summation over the nonzero frequency
/// samples, with no FFT involved, so certificates stay cheap on large grids.
struct CubeValues {
    std::vector<cplx> t_value;    // TDelta: per cube
    std::vector<double> mag;      // both kinds: magnitude per cube
};

CubeValues cube_values_at(const GridFunction& fhat, const CubeSet& cs, const OperatorSpec& spec,
                          const Vec& x);

struct Scale1Certificate {
    double sigma1 = 0.0, delta = 0.0;
    Vec x;
    std::string branch;            // "max" or "bilinear"
    int64_t qstar = -1;
    double mstar = 0.0, total = 0.0;
    double threshold_factor = 0.0;
    int64_t q1 = -1;               // bilinear partner (branch == "bilinear")
    double pair_geom = 0.0;        // sqrt(|T q1| |T qstar|)
    double constant = 0.0;         // derived bilinear constant
    double margin = 0.0;           // branch inequality margin, >= 1 when valid
    std::vector<std::pair<int64_t, double>> table;  // cube -> magnitude (nonzero only)
};

Scale1Certificate decompose_scale1(const GridFunction& f, const OperatorSpec& spec, double sigma1,
                                   const Vec& x, const DecomposeParams& params = {});

struct TransTuple {
    std::vector<int64_t> cubes;   // k+1 cubes at scale sigma_k
    double vol_min = 0.0;         // sampled minimum of Vol over the tuple
};

struct StepCertificate {
    int k = 0;
    std::vector<double> sigmas;   // sigma_1 .. sigma_k
    double delta = 0.0;
    std::vector<int64_t> parents; // (k-1)-scale cubes, transversal
    Vec x0;                       // center of the spatial cube Q^k
    double q_side = 0.0;          // 2 / sigma_k
    std::vector<int64_t> dominant;
    double lambda_threshold = 0.0;         // sigma_k^{kd}
    std::vector<std::vector<int64_t>> lambda;
    std::vector<Vec> pi_normals;           // normals spanning Pi^k
    std::vector<int64_t> neighbors;        // the N set
    std::vector<TransTuple> emitted;
    double sum_max_bucket = 0.0;   // tuples outside prod Lambda
    double sum_confined = 0.0;     // |coherent sum| over Lambda-and-N tuples
    double sum_trans = 0.0;        // tuples escaping N
    double lhs = 0.0;              // |prod_i op(f_parent_i)(x0)|
    double margin = 0.0;
    bool sdelta = false;
    DecomposeParams params;
};

StepCertificate decompose_step(const GridFunction& f, const OperatorSpec& spec,
                               const std::vector<double>& sigmas,
                               const std::vector<int64_t>& parents, const Vec& x,
                               const DecomposeParams& params = {});

struct MarginReport {
    double margin_at_x = 0.0;
    bool vol_ok = true;            // emitted tuples re-verified on a denser sample
    bool neighbor_ok = true;       // N members within C sigma_k of Pi^k
    double min_vol_ratio = 0.0;    // min over tuples of vol / (c sigma_1..sigma_k)
    double max_neighbor_dist = 0.0;
};

MarginReport verify_certificate(const StepCertificate& cert, const GridFunction& f,
                                const OperatorSpec& spec, const Vec& x);

std::string serialize(const Scale1Certificate& c);
std::string serialize(const StepCertificate& c);

/// Sampled minimum of Vol(n(xi_1),..,n(xi_m)) over the cube tuple, points per
/// axis controls the sample density (2 = corners, 3 adds midpoints).
double tuple_volume_min(const CubeSet& cs, const PhaseSurface& psi,
                        const std::vector<int64_t>& cubes, int points_per_axis);

/// Normal at the cube center through the ambient field (time solved when needed).
Vec cube_normal(const CubeSet& cs, const PhaseSurface& psi, int64_t cube);

/// True when the cube center lies within c_near * sigma of the graph.
bool cube_near_graph(const CubeSet& cs, const PhaseSurface& psi, int64_t cube, double c_near);

}  // namespace freqlab
