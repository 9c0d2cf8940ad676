#pragma once

#include <functional>
#include <optional>
#include <string>

#include "freqlab/cutoff.hpp"
#include "freqlab/grid.hpp"
#include "freqlab/phase.hpp"

namespace freqlab {

enum class OpKind { TDelta, SDelta, BochnerRiesz, SteinSquare, SphericalSquare };

std::string op_kind_name(OpKind k);

/// Frequency-side operator description. delta is the slab width (dyadic in
/// experiments), alpha the Bochner-Riesz order, [t0, t1] the time window with
/// nt trapezoid nodes. For the moving-slab kinds the node spacing must resolve
/// the slab: spacing <= delta/4.
struct OperatorSpec {
    OpKind kind = OpKind::TDelta;
    PhasePtr phase;                 // required for TDelta / SDelta
    EtaKind eta = EtaKind::One;
    double delta = 0.0;
    double alpha = 0.0;             // BochnerRiesz / SteinSquare order
    double t_br = 1.0;              // Bochner-Riesz radius parameter
    double t0 = -1.0, t1 = 1.0;     // time window
    int nt = 0;                     // quadrature nodes (0 = derive from delta/4)

    int resolved_nt() const;
    double node_spacing() const { return (t1 - t0) / resolved_nt(); }
};

OperatorSpec make_tdelta(PhasePtr phase, double delta);
OperatorSpec make_sdelta(PhasePtr phase, double delta, EtaKind eta = EtaKind::One);
OperatorSpec make_spherical(double delta);
OperatorSpec make_bochner_riesz(double alpha, double t);
OperatorSpec make_stein_square(double alpha, double t0, double t1, int nt);

/// Pointwise frequency symbol application; returns the space representation.
GridFunction apply_multiplier(const GridFunction& f, const std::function<cplx(std::span<const double>)>& m);

/// Relative L^2 mass of f-hat outside (1/2)I^d; throws when above tol.
void require_half_box_support(const GridFunction& f, double tol = 1e-10);

/// T_delta: multiplier phi((tau - psi(zeta))/delta) on functions with
/// f-hat supported in (1/2)I^d.
GridFunction t_delta(const GridFunction& f, const OperatorSpec& spec);

/// S_delta: L^2-in-time square function over the moving slabs
/// phi(eta(xi,t)(tau - psi(zeta,t))/delta); returns a nonnegative real-valued
/// space-side function. Node spacing above delta/4 is rejected.
GridFunction s_delta(const GridFunction& f, const OperatorSpec& spec);

/// Bochner-Riesz mean: symbol (1 - |xi|^2/t^2)_+^alpha.
GridFunction bochner_riesz(const GridFunction& f, const OperatorSpec& spec);

/// Stein square function with the t-derivative applied to the symbol
/// analytically: (sum_j w_j |dR^alpha_{t_j} f|^2 t_j)^{1/2}.
GridFunction stein_square(const GridFunction& f, const OperatorSpec& spec);

/// ( sum_j w_j |phi((1 - |xi|/t_j)/delta) f|^2 )^{1/2}, window in [1/2, 2].
GridFunction spherical_square(const GridFunction& f, const OperatorSpec& spec);

/// Slab kernel K = F^{-1}[ phi(eta(xi)(tau-psi(zeta))/delta) chi~(xi) ] in the
/// continuum normalization (2pi)^{-d} int m(xi) e^{ix.xi} dxi. chi~ defaults to
/// the tensor bump comparable to 1 on q(0, sigma). Requires period >= 8pi/delta.
GridFunction slab_kernel(const Grid& g, const OperatorSpec& spec, double sigma,
                         const std::function<double(std::span<const double>)>* chi_override = nullptr);

struct KernelDecayFit {
    double constant = 0.0;            // smallest C with |K| <= C delta sigma^{d-1} (1+delta|x|)^{-M}
    double k0 = 0.0;                  // |K(0)|
    double k0_predicted = 0.0;        // slab-measure prediction for K(0) (independent quadrature)
    int m_eff = 4;
    std::vector<std::pair<double, double>> shell_ratios;  // (|x| shell center, max ratio)
};

KernelDecayFit kernel_decay_fit(const GridFunction& kernel, const OperatorSpec& spec, double sigma,
                                int m_eff = 4);

}  // namespace freqlab
