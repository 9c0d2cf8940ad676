#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "freqlab/cutoff.hpp"
#include "freqlab/lab.hpp"
#include "freqlab/multiplier.hpp"
#include "freqlab/rng.hpp"

using namespace freqlab;

namespace {

GridFunction half_box_random(const Grid& g, uint64_t seed) {
    Rng rng(seed);
    GridFunction f(g, Rep::Frequency);
    std::vector<int> idx(g.d);
    for (int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx.data());
        bool in = true;
        for (int a = 0; a < g.d; ++a)
            if (std::abs(g.freq_coord(idx[a])) > 0.5) in = false;
        if (in) f.v[i] = cplx(rng.normal(), rng.normal());
    }
    return f;
}

// high-resolution 1-d quadrature of int phi((u0 - t)/delta)^2 dt over [a, b]
double slab_time_oracle(double u0, double delta, double a, double b) {
    const int n = 200000;
    double s = 0.0, hstep = (b - a) / n;
    for (int i = 0; i <= n; ++i) {
        double t = a + i * hstep;
        double w = (i == 0 || i == n) ? 0.5 : 1.0;
        double v = phi_bump((u0 - t) / delta);
        s += w * v * v;
    }
    return s * hstep;
}

}  // namespace

TEST_CASE("cutoff profiles satisfy their class constraints") {
    CHECK(phi_bump(0.0) == doctest::Approx(1.0));
    CHECK(phi_bump(2.0) == 0.0);
    CHECK(phi_bump(-2.1) == 0.0);
    CHECK(phi_bump(1.5) > 0.0);
    // 1/2 <= eta <= 1 on I^d x I
    for (double x : {-1.0, -0.3, 0.0, 0.7, 1.0})
        for (double t : {-1.0, 0.0, 1.0}) {
            Vec xi{x, -x};
            double e = eta_profile(EtaKind::Bump, xi, t);
            CHECK(e >= 0.5);
            CHECK(e <= 1.0);
            CHECK(eta_profile(EtaKind::One, xi, t) == 1.0);
        }
    // rho >= 1 on q(0,1)
    for (double x : {-1.0, -0.5, 0.0, 0.5, 1.0})
        for (double y : {-1.0, 0.0, 1.0}) {
            Vec p{x, y};
            CHECK(rho_weight(p) >= 1.0);
        }
}

TEST_CASE("apply_multiplier basics") {
    Grid g = make_grid(2, 32, 1.0 / 16);
    GridFunction f = half_box_random(g, 1);
    GridFunction f_space = transform(f);
    GridFunction id = apply_multiplier(f, [](std::span<const double>) { return cplx(1.0, 0.0); });
    double worst = 0.0;
    for (size_t i = 0; i < id.v.size(); ++i) worst = std::max(worst, std::abs(id.v[i] - f_space.v[i]));
    CHECK(worst < 1e-10);
    GridFunction zero = apply_multiplier(f, [](std::span<const double>) { return cplx(0.0, 0.0); });
    CHECK(lp_norm(zero, 2.0) == doctest::Approx(0.0));

    // half-space characteristic keeps exactly the in-half-space mode
    GridFunction two = mode(g, {20, 16}, 1.0);  // xi_0 = 0.25 > 0
    GridFunction m2 = mode(g, {10, 16}, 1.0);   // xi_0 = -0.375 < 0
    for (size_t i = 0; i < two.v.size(); ++i) two.v[i] += m2.v[i];
    GridFunction kept = apply_multiplier(two, [](std::span<const double> xi) {
        return cplx(xi[0] > 0.0 ? 1.0 : 0.0, 0.0);
    });
    GridFunction want = transform(mode(g, {20, 16}, 1.0));
    double gap = 0.0;
    for (size_t i = 0; i < kept.v.size(); ++i) gap = std::max(gap, std::abs(kept.v[i] - want.v[i]));
    CHECK(gap < 1e-10);
}

TEST_CASE("t_delta slab support and identity cases") {
    Grid g = make_grid(2, 128, 1.0 / 64);
    OperatorSpec spec = make_tdelta(make_paraboloid(2), 1.0 / 32);

    // mode on the graph: tau0 = psi(zeta0); phi(0) = 1 so T f = f
    GridFunction on = mode(g, {g.n / 2, g.n / 2}, 1.0);  // xi = (0, 0), psi(0) = 0
    GridFunction t_on = t_delta(on, spec);
    GridFunction on_space = transform(on);
    double gap = 0.0;
    for (size_t i = 0; i < t_on.v.size(); ++i) gap = std::max(gap, std::abs(t_on.v[i] - on_space.v[i]));
    CHECK(gap < 1e-10);

    // mode far from the slab is annihilated
    GridFunction off = mode(g, {g.n / 2, g.n / 2 + 20}, 1.0);  // tau = 0.3125 > 2 delta
    CHECK(lp_norm(t_delta(off, spec), 2.0) == doctest::Approx(0.0));

    // support precondition
    GridFunction wide = mode(g, {g.n / 2 + 50, g.n / 2}, 1.0);  // zeta = 0.78 outside half box
    CHECK_THROWS_AS(t_delta(wide, spec), std::invalid_argument);
}

TEST_CASE("contraction on L2 and frequency-support preservation") {
    Grid g = make_grid(2, 64, 1.0 / 32);
    OperatorSpec spec = make_tdelta(make_sphere_graph(2), 1.0 / 16);
    for (uint64_t seed = 0; seed < 10; ++seed) {
        GridFunction f = half_box_random(g, seed);
        GridFunction tf = t_delta(f, spec);
        CHECK(lp_norm(tf, 2.0) <= lp_norm(transform(f), 2.0) * (1.0 + 1e-12));
        // supp of the output stays inside supp f-hat intersect the 2delta-slab
        GridFunction tf_hat = transform(tf);
        std::vector<int> idx(2);
        double bad = 0.0, total = 0.0;
        for (int64_t i = 0; i < g.size(); ++i) {
            g.unflatten(i, idx.data());
            double zeta = g.freq_coord(idx[0]), tau = g.freq_coord(idx[1]);
            double m = std::norm(tf_hat.v[i]);
            total += m;
            bool in_slab = std::abs(zeta) < 1.0 &&
                           std::abs(tau - spec.phase->eval(Vec{zeta})) <= 2.0 * spec.delta + 1e-12;
            bool in_supp = std::norm(f.v[i]) > 0.0;
            if (!(in_slab && in_supp)) bad += m;
        }
        CHECK(bad <= 1e-10 * total);
    }
}

TEST_CASE("s_delta single-mode value against the 1-d quadrature oracle") {
    Grid g = make_grid(2, 64, 1.0 / 32);
    OperatorSpec spec = make_sdelta(make_affine_time_paraboloid(2), 1.0 / 16);
    // mode at (zeta0, tau0) = (0.25, 0.25): u0 = tau0 - zeta0^2/2 = 0.21875 interior
    GridFunction f = mode(g, {g.n / 2 + 8, g.n / 2 + 8}, cplx(0.0, 2.0));
    GridFunction s = s_delta(f, spec);
    double u0 = 0.25 - 0.25 * 0.25 / 2.0;
    double want = 2.0 * std::sqrt(slab_time_oracle(u0, spec.delta, -1.0, 1.0));
    for (int64_t i = 0; i < g.size(); i += 97)
        CHECK(std::abs(s.v[i].real() - want) < 0.02 * want);

    // slab never reaches the support over a shrunk window: output vanishes
    OperatorSpec narrow = spec;
    narrow.t0 = -0.25;
    narrow.t1 = 0.25;
    GridFunction far = mode(g, {g.n / 2, g.n / 2 + 14}, 1.0);  // u0 = 0.4375, gap > 2 delta
    CHECK(lp_norm(s_delta(far, narrow), 2.0) == doctest::Approx(0.0));

    // resolution guard
    OperatorSpec bad = spec;
    bad.nt = 4;
    CHECK_THROWS_AS(s_delta(f, bad), std::invalid_argument);
}

TEST_CASE("s_delta adds disjoint activations in square") {
    Grid g = make_grid(2, 64, 1.0 / 32);
    OperatorSpec spec = make_sdelta(make_affine_time_paraboloid(2), 1.0 / 32);
    // two modes whose activation intervals t = u0 +- 2delta are disjoint
    GridFunction f1 = mode(g, {g.n / 2, g.n / 2 - 12}, 1.0);  // u0 = -0.375
    GridFunction f2 = mode(g, {g.n / 2, g.n / 2 + 12}, 1.0);  // u0 = +0.375
    GridFunction sum = f1;
    for (size_t i = 0; i < sum.v.size(); ++i) sum.v[i] += f2.v[i];
    GridFunction s12 = s_delta(sum, spec);
    GridFunction s1 = s_delta(f1, spec), s2 = s_delta(f2, spec);
    double worst = 0.0;
    for (size_t i = 0; i < s12.v.size(); ++i) {
        double want = std::sqrt(std::norm(s1.v[i]) + std::norm(s2.v[i]));
        worst = std::max(worst, std::abs(s12.v[i].real() - want));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("s_delta single mode scales like sqrt(delta)") {
    // delta-independent single mode: slope 1/2 within +-0.02
    std::vector<double> deltas, values;
    for (double delta : {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        Grid g = make_grid(2, 64, 1.0 / 32);
        OperatorSpec spec = make_sdelta(make_affine_time_paraboloid(2), delta);
        GridFunction f = mode(g, {g.n / 2 + 4, g.n / 2 + 4}, 1.0);
        GridFunction s = s_delta(f, spec);
        deltas.push_back(delta);
        values.push_back(s.v[0].real());
    }
    RegressionFit fit = fit_loglog(deltas, values);
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(0.04));
    CHECK(std::abs(fit.slope - 0.5) < 0.02);
}

TEST_CASE("bochner-riesz annihilates outside the ball and is monotone in alpha") {
    Grid g = make_grid(2, 32, 1.0 / 8);
    GridFunction far = mode(g, {g.n / 2 + 10, g.n / 2}, 1.0);  // |xi| = 1.25 > t = 1
    OperatorSpec br = make_bochner_riesz(1.0, 1.0);
    CHECK(lp_norm(bochner_riesz(far, br), 2.0) == doctest::Approx(0.0));

    GridFunction in = mode(g, {g.n / 2 + 4, g.n / 2}, 1.0);  // |xi| = 0.5 < 1
    double prev = 1e300;
    for (double alpha : {1.0, 2.0, 4.0, 8.0}) {
        OperatorSpec spec = make_bochner_riesz(alpha, 1.0);
        double v = lp_norm(bochner_riesz(in, spec), std::numeric_limits<double>::infinity());
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("stein square closed form for a single mode at alpha = 1") {
    Grid g = make_grid(2, 32, 1.0 / 8);
    GridFunction f = mode(g, {g.n / 2 + 4, g.n / 2}, cplx(3.0, 0.0));  // r = 0.5
    double r = 0.5, T = 1.0;
    OperatorSpec spec = make_stein_square(1.0, r, T, 4096);
    GridFunction s = stein_square(f, spec);
    double want = 3.0 * std::sqrt(1.0 - std::pow(r / T, 4.0));
    CHECK(s.v[0].real() == doctest::Approx(want).epsilon(0.01));
    CHECK_THROWS_AS(make_stein_square(-1.0, 0.5, 1.0, 64), std::invalid_argument);
}

TEST_CASE("spherical square function: mode value, vanishing, and sqrt-delta scaling") {
    Grid g = make_grid(2, 256, 1.0 / 64);  // box [-2,2) so |xi| = 1 is on the lattice
    double delta = 1.0 / 16;
    OperatorSpec spec = make_spherical(delta);
    GridFunction f = mode(g, {g.n / 2 + 64, g.n / 2}, cplx(0.0, -2.0));  // |xi| = 1
    GridFunction s = spherical_square(f, spec);
    // oracle: 1-d quadrature of phi((1-1/t)/delta)^2 over [1/2, 2]
    const int n = 200000;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        double t = 0.5 + 1.5 * i / n;
        double w = (i == 0 || i == n) ? 0.5 : 1.0;
        double v = phi_bump((1.0 - 1.0 / t) / delta);
        acc += w * v * v * (1.5 / n);
    }
    CHECK(s.v[0].real() == doctest::Approx(2.0 * std::sqrt(acc)).epsilon(0.02));

    // support below the annulus: zero
    GridFunction low = mode(g, {g.n / 2 + 8, g.n / 2}, 1.0);  // |xi| = 1/8 < (1-2delta)/2
    CHECK(lp_norm(spherical_square(low, spec), 2.0) == doctest::Approx(0.0));

    // delta halving scales the value by sqrt(1/2) within 5 percent
    OperatorSpec half = make_spherical(delta / 2.0);
    GridFunction sh = spherical_square(f, half);
    CHECK(sh.v[0].real() / s.v[0].real() == doctest::Approx(std::sqrt(0.5)).epsilon(0.05));
}

TEST_CASE("slab kernel: zero cutoff, decay fit stability, K(0) prediction") {
    double sigma = 0.25;
    double delta = 1.0 / 32;
    Grid g = make_grid(2, 512, delta / 4.0);
    OperatorSpec spec = make_tdelta(make_paraboloid(2), delta);

    std::function<double(std::span<const double>)> zero = [](std::span<const double>) { return 0.0; };
    GridFunction k0 = slab_kernel(g, spec, sigma, &zero);
    CHECK(lp_norm(k0, 2.0) == doctest::Approx(0.0));

    GridFunction k = slab_kernel(g, spec, sigma);
    KernelDecayFit fit = kernel_decay_fit(k, spec, sigma);
    CHECK(fit.constant > 0.0);
    CHECK(fit.k0 == doctest::Approx(fit.k0_predicted).epsilon(0.10));

    // period guard
    Grid small = make_grid(2, 64, 1.0 / 32);
    OperatorSpec tiny = make_tdelta(make_paraboloid(2), 1.0 / 512);
    CHECK_THROWS_AS(slab_kernel(small, tiny, sigma), std::invalid_argument);

    double delta2 = delta / 2.0;
    Grid g2 = make_grid(2, 1024, delta2 / 4.0);
    OperatorSpec spec2 = make_tdelta(make_paraboloid(2), delta2);
    KernelDecayFit fit2 = kernel_decay_fit(slab_kernel(g2, spec2, sigma), spec2, sigma);
    double ratio = fit.constant / fit2.constant;
    CHECK(ratio > 0.25);
    CHECK(ratio < 4.0);
}

TEST_CASE("affine change of variables norm identity") {
    // || F^{-1}(g-hat o L) ||_p = eps^{(d+1)(1/p - 1)} || g ||_p within 2 percent
    const int d = 2;
    const double eps = 0.25, p = 4.0;
    Grid g = make_grid(d, 512, 1.0 / 256);
    auto psi = make_paraboloid(d);
    Vec a{0.25};
    double psi_a = psi->eval(a);
    Vec grad = psi->grad_zeta(a);
    // g-hat: a bump of width eps/4 at (a, psi(a)); sampled on the lattice
    auto ghat = [&](std::span<const double> xi) {
        Vec rel{(xi[0] - a[0]) / (eps / 4.0), (xi[1] - psi_a) / (eps / 4.0)};
        return box_bump(rel, 1.0);
    };
    // L(zeta, tau) = (eps zeta + a, eps^2 tau + psi(a) + eps grad . zeta)   (M = I)
    auto ghat_of_L = [&](std::span<const double> xi) {
        Vec l{eps * xi[0] + a[0], eps * eps * xi[1] + psi_a + eps * grad[0] * xi[0]};
        return ghat(l);
    };
    GridFunction gf(g, Rep::Frequency), gl(g, Rep::Frequency);
    std::vector<int> idx(d);
    Vec xi(d);
    for (int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx.data());
        for (int q = 0; q < d; ++q) xi[q] = g.freq_coord(idx[q]);
        gf.v[i] = ghat(xi);
        gl.v[i] = ghat_of_L(xi);
    }
    double lhs = lp_norm(transform(gl), p);
    double rhs = std::pow(eps, (d + 1) * (1.0 / p - 1.0)) * lp_norm(transform(gf), p);
    CHECK(lhs == doctest::Approx(rhs).epsilon(0.02));
}
