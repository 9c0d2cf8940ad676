#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace freqlab {

/// The fixed bump phi(s) = exp(1 - 1/(1-(s/2)^2)) for |s| < 2, else 0.
/// Smooth, supported in 2I, phi(0) = 1.
inline double phi_bump(double s) {
    double q = 0.25 * s * s;
    if (q >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - q));
}

/// integral of phi^2 over R, to quadrature accuracy (cached).
double phi_bump_l2sq();

/// C-infinity step: 0 for u <= 0, 1 for u >= 1, monotone.
inline double smooth_step(double u) {
    auto b = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
    double x = b(u), y = b(1.0 - u);
    return x / (x + y);
}

enum class EtaKind { One, Bump };

/// Profiles eta from the class E(N): 1/2 <= eta <= 1 on I^d x I.
inline double eta_profile(EtaKind kind, std::span<const double> xi, double t) {
    if (kind == EtaKind::One) return 1.0;
    double q = t * t;
    for (double x : xi) q += x * x;
    return 0.5 + 0.5 * std::exp(-q);
}

/// Schwartz weight rho with Fourier support in q(0,1) and rho >= 1 on q(0,1):
/// tensor FejEr kernel, rho(x) = prod c (sin(x_i/2)/(x_i/2))^2.
inline double rho_weight(std::span<const double> x) {
    auto f = [](double s) {
        if (std::abs(s) < 1e-8) return 1.0 - s * s / 24.0;
        double u = std::sin(0.5 * s) / (0.5 * s);
        return u * u;
    };
    static const double c = 1.0 / ((std::sin(0.5) / 0.5) * (std::sin(0.5) / 0.5));
    double v = 1.0;
    for (double xi : x) v *= c * f(xi);
    return v;
}

/// Smooth tensor bump supported in {max_i |xi_i| <= r}, equal to 1 at 0.
inline double box_bump(std::span<const double> xi, double r) {
    double v = 1.0;
    for (double x : xi) v *= phi_bump(2.0 * x / r);
    return v;
}

/// chi_circ: smooth bump near the origin, supported in (r/2)-box, default r = 1/2.
inline double chi_origin(std::span<const double> xi, double r = 0.5) { return box_bump(xi, r); }

/// Kernel cutoff chi~ comparable to 1 on q(0, sigma) with |d^a chi~| <~ sigma^{-|a|}.
inline double chi_kernel(std::span<const double> xi, double sigma) {
    double v = 1.0;
    for (double x : xi) v *= phi_bump(x / sigma);
    return v;
}

/// Smooth window a(x) = prod eta1(x_i) with eta1 supported in [-pi, pi],
/// eta1 = 1 on [-1, 1] (used by the scattered-sum majorant).
inline double scattered_window_1d(double s) {
    double a = std::abs(s);
    if (a <= 1.0) return 1.0;
    if (a >= M_PI) return 0.0;
    return smooth_step((M_PI - a) / (M_PI - 1.0));
}

}  // namespace freqlab
