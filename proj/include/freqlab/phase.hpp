#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freqlab/linalg.hpp"

namespace freqlab {

/// Rescaling lineage: one zoom step applied to the parent phase.
struct RescaleRecord {
    std::string parent_id;
    Vec base_point;          // a, or (zeta0, t0) for the time variant
    double eps = 0.0;
};

/// A member of the elliptic phase classes: a closed-form graph phase
/// zeta -> psi(zeta) on I^{d-1} (static) or (zeta,t) -> psi(zeta,t) on
/// I^{d-1} x I (time-dependent), with exact derivatives through order 4.
///
/// The domain variable below is z = zeta for static families and
/// z = (zeta, t) for time families; nvars() is its dimension.
class PhaseSurface {
  public:
    virtual ~PhaseSurface() = default;

    int ambient_dim() const { return d_; }
    int nvars() const { return time_dependent_ ? d_ : d_ - 1; }
    bool time_dependent() const { return time_dependent_; }

    virtual std::string id() const = 0;

    /// Points further than this from 0 (in the zeta sup-norm) are outside the
    /// family's analytic domain; infinity when the formula is entire.
    virtual double domain_radius() const { return std::numeric_limits<double>::infinity(); }

    /// Directional derivative of order dirs.size() (0..4) at z.
    virtual double dir_deriv(std::span<const double> z, std::span<const Vec> dirs) const = 0;

    std::optional<RescaleRecord> lineage() const { return lineage_; }

    // Convenience wrappers (z packs zeta then t for time families).
    double eval(std::span<const double> zeta, double t = 0.0) const;
    Vec grad_zeta(std::span<const double> zeta, double t = 0.0) const;
    Mat hess_zeta(std::span<const double> zeta, double t = 0.0) const;
    double dt(std::span<const double> zeta, double t) const;
    /// Mixed partial d^alpha where alpha runs over the z-variables.
    double partial(std::span<const double> z, std::span<const int> alpha) const;

  protected:
    PhaseSurface(int d, bool time_dep) : d_(d), time_dependent_(time_dep) {}

    int d_;
    bool time_dependent_;
    std::optional<RescaleRecord> lineage_;
    friend std::shared_ptr<PhaseSurface> rescale(const std::shared_ptr<PhaseSurface>&, const Vec&, double);
    friend std::shared_ptr<PhaseSurface> rescale_time(const std::shared_ptr<PhaseSurface>&, const Vec&, double);
};

using PhasePtr = std::shared_ptr<PhaseSurface>;

// Closed-form families. d is the ambient dimension (graph over d-1 variables).
PhasePtr make_paraboloid(int d);
PhasePtr make_sphere_graph(int d);                              // 1 - sqrt(1 - |zeta|^2)
PhasePtr make_affine_time_paraboloid(int d);                    // |zeta|^2/2 + t
PhasePtr make_bochner_riesz_time(int d, double eps);            // eps^-2 (1 - sqrt((1-eps^2 t)^2 - eps^2|zeta|^2))
PhasePtr make_perturbed_paraboloid(int d, const std::string& g, double eps);  // g in {cubic, sine}

/// Parse a phase identifier: "paraboloid", "sphere", "affine-time",
/// "br:eps=0.1", "perturbed:g=cubic,eps=0.05".
PhasePtr parse_phase(const std::string& spec, int d);

/// C^order distance to the model phase (|zeta|^2/2, or |zeta|^2/2 + t for time
/// families): max over a sample lattice and all |alpha| <= order of the
/// absolute derivative gap. order is capped at 4.
double cn_distance(const PhaseSurface& psi, int order, int lattice_per_axis);

/// Parabolic rescaling psi_a^eps (exact, with lineage). Requires a in (1/2)I^{d-1},
/// 0 < eps <= 1/2, and a positive definite Hessian at a.
PhasePtr rescale(const PhasePtr& psi, const Vec& a, double eps);

/// Time-family rescaling psi_{z0}^eps, z0 = (zeta0, t0) in (1/2)I^d.
PhasePtr rescale_time(const PhasePtr& psi, const Vec& z0, double eps);

/// Upward unit normal (-grad psi, 1)/sqrt(1+|grad psi|^2) at (zeta [, t]).
Vec normal(const PhaseSurface& psi, std::span<const double> zeta, double t = 0.0);

/// Normal field on the ambient box: for static phases the trivial extension
/// n(zeta, tau) = N(zeta, psi(zeta)); for time families, solves psi(zeta,t)=tau
/// by bisection over the extended interval [-2, 2] (tolerance 1e-12) and
/// throws std::domain_error("normal field undefined at xi") when tau is out of range.
Vec normal_field(const PhaseSurface& psi, std::span<const double> xi);

/// sqrt(det(G^T G)) for the column set vs; k > d is rejected.
double transversality_volume(std::span<const Vec> vs);

}  // namespace freqlab
