#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "freqlab/grid.hpp"
#include "freqlab/rng.hpp"

using namespace freqlab;

TEST_CASE("make_grid accepts covered boxes and fixes the period") {
    Grid g = make_grid(2, 8, 0.25);
    CHECK(g.period == doctest::Approx(8.0 * M_PI));
    Grid g3 = make_grid(3, 128, std::pow(2.0, -6));
    CHECK(g3.period == doctest::Approx(128.0 * M_PI));
    CHECK(g3.size() == 128LL * 128 * 128);
}

TEST_CASE("make_grid rejects bad parameters") {
    CHECK_THROWS_AS(make_grid(2, 8, 1.0 / 16.0), std::invalid_argument);  // n*h = 1/2 < 2
    CHECK_THROWS_AS(make_grid(2, 12, 0.25), std::invalid_argument);       // not a power of two
    CHECK_THROWS_AS(make_grid(0, 8, 0.25), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(2, 8, -0.25), std::invalid_argument);
}

TEST_CASE("transform of a spatial delta is flat in frequency") {
    Grid g = make_grid(2, 16, 0.25);
    GridFunction f(g, Rep::Space);
    std::vector<int> c(2, g.n / 2);
    f.v[g.flatten(c.data())] = 1.0;
    GridFunction fh = transform(f);
    CHECK(fh.rep == Rep::Frequency);
    // F[k] = e^{-i x_0 . xi_k} with x_0 = 0: identically 1
    for (const cplx& z : fh.v) {
        CHECK(z.real() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(z.imag()) < 1e-12);
    }
}

TEST_CASE("mode produces the exact complex exponential") {
    Grid g = make_grid(2, 16, 0.25);
    std::vector<int> k{10, 7};
    GridFunction f = transform(mode(g, k, cplx(2.0, 0.5)));
    std::vector<int> idx(2);
    for (int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx.data());
        double ph = g.space_coord(idx[0]) * g.freq_coord(k[0]) + g.space_coord(idx[1]) * g.freq_coord(k[1]);
        cplx want = cplx(2.0, 0.5) * std::polar(1.0, ph);
        CHECK(std::abs(f.v[i] - want) < 1e-10);
    }
}

TEST_CASE("round trip and Parseval over random functions") {
    for (auto [d, n] : {std::pair{1, 64}, std::pair{2, 32}, std::pair{3, 16}}) {
        Grid g = make_grid(d, n, 2.5 / n);
        for (int trial = 0; trial < (d == 3 ? 20 : 100); ++trial) {
            GridFunction f = random_freq(g, 1000 * d + trial);
            f.rep = Rep::Space;  // treat the samples as spatial data
            GridFunction back = transform(transform(f));
            double worst = 0.0, scale = 0.0;
            double sum_sp = 0.0, sum_fr = 0.0;
            GridFunction fh = transform(f);
            for (size_t i = 0; i < f.v.size(); ++i) {
                worst = std::max(worst, std::abs(back.v[i] - f.v[i]));
                scale = std::max(scale, std::abs(f.v[i]));
                sum_sp += std::norm(f.v[i]);
                sum_fr += std::norm(fh.v[i]);
            }
            CHECK(worst < 1e-12 * scale);
            // discrete Parseval: sum |f|^2 = n^{-d} sum |F|^2
            CHECK(sum_sp == doctest::Approx(sum_fr / g.size()).epsilon(1e-12));
        }
    }
}

TEST_CASE("lp_norm closed forms") {
    Grid g = make_grid(2, 32, 0.25);
    GridFunction one(g, Rep::Space);
    for (cplx& z : one.v) z = 1.0;
    CHECK(lp_norm(one, 4.0) == doctest::Approx(std::sqrt(g.period)));
    CHECK(lp_norm(one, std::numeric_limits<double>::infinity()) == doctest::Approx(1.0));

    GridFunction m = transform(mode(g, {20, 16}, 1.0));
    CHECK(lp_norm(m, 2.0) == doctest::Approx(std::pow(g.period, 1.0)));

    CHECK_THROWS_AS(lp_norm(one, 0.5), std::invalid_argument);
    GridFunction freq(g, Rep::Frequency);
    CHECK_THROWS_AS(lp_norm(freq, 2.0), std::invalid_argument);
}

TEST_CASE("gaussian L2 norm matches the closed form within 1 percent") {
    Grid g = make_grid(2, 256, 0.25);  // period 8 pi
    double sigma = g.period / 16.0;
    GridFunction f(g, Rep::Space);
    std::vector<int> idx(2);
    for (int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx.data());
        double r2 = 0.0;
        for (int a = 0; a < 2; ++a) {
            double x = g.space_coord(idx[a]);
            r2 += x * x;
        }
        f.v[i] = std::exp(-r2 / (2.0 * sigma * sigma));
    }
    double want = std::pow(M_PI * sigma * sigma, 0.5);  // (pi sigma^2)^{d/4}, d = 2
    CHECK(lp_norm(f, 2.0) == doctest::Approx(want).epsilon(0.01));
}

TEST_CASE("lp_norm homogeneity and Hoelder monotonicity") {
    Grid g = make_grid(2, 32, 0.25);
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        GridFunction f(g, Rep::Space);
        for (cplx& z : f.v) z = cplx(rng.normal(), rng.normal());
        cplx c(rng.normal(), rng.normal());
        CHECK(lp_norm(scale(f, c), 3.0) == doctest::Approx(std::abs(c) * lp_norm(f, 3.0)).epsilon(1e-12));
        // ||f||_p <= P^{d(1/p-1/q)} ||f||_q for p <= q
        double p = 2.0, q = 4.0;
        double lhs = lp_norm(f, p);
        double rhs = std::pow(g.period, 2.0 * (1.0 / p - 1.0 / q)) * lp_norm(f, q);
        CHECK(lhs <= rhs * (1.0 + 1e-12));
    }
}

TEST_CASE("mixed_norm degenerate and closed-form cases") {
    Grid g = make_grid(2, 16, 0.25);
    GridFunction m = transform(mode(g, {10, 9}, 1.0));
    std::vector<GridFunction> fam{m};
    std::vector<double> w{1.0};
    CHECK(mixed_norm(fam, w, 4.0) == doctest::Approx(lp_norm(m, 4.0)));

    std::vector<GridFunction> two{m, m};
    std::vector<double> wh{0.5, 0.5};
    CHECK(mixed_norm(two, wh, 4.0) == doctest::Approx(lp_norm(m, 4.0)));

    // F_j = e^{i x xi0} c_j: value (sum w |c_j|^2)^{1/2} P^{d/p}
    std::vector<GridFunction> fam2{transform(mode(g, {10, 9}, 2.0)), transform(mode(g, {10, 9}, cplx(0, 1)))};
    std::vector<double> w2{0.25, 1.75};
    double want = std::sqrt(0.25 * 4.0 + 1.75 * 1.0) * std::pow(g.period, 2.0 / 4.0);
    CHECK(mixed_norm(fam2, w2, 4.0) == doctest::Approx(want).epsilon(1e-12));

    Grid g2 = make_grid(2, 32, 0.25);
    std::vector<GridFunction> bad{m, GridFunction(g2, Rep::Space)};
    CHECK_THROWS_AS(mixed_norm(bad, w2, 4.0), std::invalid_argument);
}
