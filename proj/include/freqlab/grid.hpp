#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace freqlab {

using cplx = std::complex<double>;

/// Periodic sampling grid for R^d. The frequency lattice has spacing h with
/// k-th coordinate h*(k - n/2); the dual spatial lattice has spacing P/n with
/// period P = 2*pi/h and coordinates centered the same way. n*h >= 2 keeps the
/// frequency box [-1,1]^d covered, which every slab operator relies on.
struct Grid {
    int d = 0;
    int n = 0;
    double h = 0.0;
    double period = 0.0;  // P = 2*pi/h

    int64_t size() const {
        int64_t s = 1;
        for (int i = 0; i < d; ++i) s *= n;
        return s;
    }
    double spacing() const { return period / n; }
    double cell_volume() const {
        double v = 1.0;
        for (int i = 0; i < d; ++i) v *= spacing();
        return v;
    }
    double freq_coord(int k) const { return h * (k - n / 2); }
    double space_coord(int j) const { return spacing() * (j - n / 2); }

    void unflatten(int64_t flat, int* idx) const {
        for (int a = d - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(flat % n);
            flat /= n;
        }
    }
    int64_t flatten(const int* idx) const {
        int64_t f = 0;
        for (int a = 0; a < d; ++a) f = f * n + idx[a];
        return f;
    }

    bool operator==(const Grid& o) const { return d == o.d && n == o.n && h == o.h; }
};

/// Rejects non-power-of-two n and uncovered frequency boxes (n*h < 2).
Grid make_grid(int d, int n, double h);

enum class Rep { Space, Frequency };

/// Complex samples on a Grid, tagged with the live representation.
/// Values are immutable by convention once an operation returns them.
struct GridFunction {
    Grid grid;
    Rep rep = Rep::Space;
    std::vector<cplx> v;

    GridFunction() = default;
    GridFunction(const Grid& g, Rep r) : grid(g), rep(r), v(static_cast<size_t>(g.size()), cplx(0.0, 0.0)) {}
};

/// Exact DFT pair in the centered convention:
///   space -> frequency:  F[k] = sum_j f[j] exp(-i x_j . xi_k)      (unnormalized)
///   frequency -> space:  f[j] = n^{-d} sum_k F[k] exp(+i x_j . xi_k)
/// transform(transform(f)) == f up to machine rounding. Discrete Parseval:
///   sum_j |f_j|^2 = n^{-d} sum_k |F_k|^2.
GridFunction transform(const GridFunction& f);

/// Single lattice mode: returns the frequency-side function whose space
/// representation is exactly coeff * exp(i x . xi_k) (frequency sample is
/// coeff * n^d at lattice index k, zero elsewhere).
GridFunction mode(const Grid& g, const std::vector<int>& k, cplx coeff);

/// Riemann-sum L^p norm over one period cell; requires the space representation.
/// p = infinity gives the max modulus; p < 1 is rejected.
double lp_norm(const GridFunction& f, double p);

/// ( integral ( sum_j w_j |F_j(x)|^2 )^{p/2} dx )^{1/p}; all members must share
/// a grid and be in space representation; weights must be nonnegative.
double mixed_norm(std::span<const GridFunction> fs, std::span<const double> weights, double p);

/// Pointwise algebra helpers (space representation).
GridFunction pointwise_product(const GridFunction& a, const GridFunction& b);
GridFunction scale(const GridFunction& f, cplx c);

/// Fraction of squared frequency mass outside the box max_i |xi_i| <= half.
double freq_mass_fraction_outside(const GridFunction& f, double half);

/// Random complex-gaussian function (frequency representation, full box).
GridFunction random_freq(const Grid& g, uint64_t seed);

}  // namespace freqlab
