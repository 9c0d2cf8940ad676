#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "freqlab/linalg.hpp"

namespace freqlab {

/// Straight tube of the given width (full diameter) around the axis
/// center + s * theta, clipped to B(0,2) unless a finite length is set.
struct Tube {
    Vec theta;       // unit direction
    Vec center;
    double width = 0.0;
    double length = std::numeric_limits<double>::infinity();

    bool contains(const Vec& x) const;
    /// |T| = width^{d-1} * (axis length clipped to B(0,2)).
    double measure(int d) const;
    double clipped_length() const;
};

struct TubeFamily {
    std::vector<std::vector<Tube>> families;  // k families
    int d = 0;

    int k() const { return static_cast<int>(families.size()); }
    /// min Vol over cross-family direction tuples (exhaustive).
    double transversality() const;
};

struct Quadrature {
    enum Kind { GridRule, MonteCarlo } kind = GridRule;
    int n_per_axis = 0;        // GridRule: 0 derives 4*sqrt(R)
    int64_t n_samples = 0;     // MonteCarlo
    uint64_t seed = 0;
};

struct KakeyaResult {
    double lhs = 0.0;          // || prod_i sum_T chi_T ||_{1/(k-1)} (B(0,1))
    double bound_normalizer = 0.0;  // R^{(d-k)/2} sigma^{-1} prod_i sum |T_i|
    double ratio = 0.0;
    double sigma = 0.0;
};

/// Overlap functional of the multilinear Kakeya inequality; degenerate
/// families (sigma = 0) are rejected.
KakeyaResult kakeya_ratio(const TubeFamily& fam, double big_r, const Quadrature& quad);

/// k families of tubes with directions in small caps around sigma_target-
/// transversal anchors; deterministic under seed. Achieved sigma is reported
/// through TubeFamily::transversality().
TubeFamily random_transversal_family(int d, int k, double sigma_target,
                                     const std::vector<int>& counts, uint64_t seed);

/// Plain-text family format: one tube per line, "theta.. center.. width".
std::string serialize(const TubeFamily& fam);
TubeFamily parse_tube_family(const std::string& text, int d, int k);

}  // namespace freqlab
