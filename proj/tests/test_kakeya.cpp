#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "freqlab/kakeya.hpp"

using namespace freqlab;

namespace {

TubeFamily orthogonal_pair(double big_r) {
    TubeFamily fam;
    fam.d = 2;
    fam.families.resize(2);
    double w = 1.0 / std::sqrt(big_r);
    Tube t1, t2;
    t1.theta = {1.0, 0.0};
    t1.center = {0.0, 0.0};
    t1.width = w;
    t2.theta = {0.0, 1.0};
    t2.center = {0.0, 0.0};
    t2.width = w;
    fam.families[0].push_back(t1);
    fam.families[1].push_back(t2);
    return fam;
}

}  // namespace

TEST_CASE("orthogonal single tubes: quadrature matches the analytic overlap") {
    for (double big_r : {64.0, 256.0}) {
        TubeFamily fam = orthogonal_pair(big_r);
        double w = 1.0 / std::sqrt(big_r);
        KakeyaResult res = kakeya_ratio(fam, big_r, Quadrature{});
        CHECK(res.sigma == doctest::Approx(1.0));
        double lhs_analytic = w * w;                       // intersection square
        double denom = (w * 4.0) * (w * 4.0);              // |T| = w * chord(B(0,2)) = 4w
        CHECK(res.lhs == doctest::Approx(lhs_analytic).epsilon(0.10));
        CHECK(res.ratio == doctest::Approx(lhs_analytic / denom).epsilon(0.10));
    }
}

TEST_CASE("empty family and degenerate directions") {
    TubeFamily empty;
    empty.d = 2;
    empty.families.resize(2);
    KakeyaResult res = kakeya_ratio(empty, 64.0, Quadrature{});
    CHECK(res.lhs == 0.0);
    CHECK(res.ratio == 0.0);

    TubeFamily degen = orthogonal_pair(64.0);
    degen.families[1][0].theta = {1.0, 0.0};  // parallel to family 0
    CHECK_THROWS_AS(kakeya_ratio(degen, 64.0, Quadrature{}), std::invalid_argument);
}

TEST_CASE("doubling every tube leaves the ratio unchanged") {
    TubeFamily fam = random_transversal_family(2, 2, 0.5, {3, 3}, 7);
    for (auto& family : fam.families)
        for (Tube& t : family) t.width = 1.0 / std::sqrt(256.0);
    KakeyaResult once = kakeya_ratio(fam, 256.0, Quadrature{});
    TubeFamily twice = fam;
    for (int i = 0; i < 2; ++i)
        for (const Tube& t : fam.families[i]) twice.families[i].push_back(t);
    KakeyaResult dbl = kakeya_ratio(twice, 256.0, Quadrature{});
    CHECK(dbl.ratio == doctest::Approx(once.ratio).epsilon(1e-9));
    CHECK(dbl.lhs == doctest::Approx(4.0 * once.lhs).epsilon(1e-9));  // homogeneity of degree k
}

TEST_CASE("ratio is invariant under rigid motions within quadrature tolerance") {
    TubeFamily fam = random_transversal_family(2, 2, 0.5, {4, 4}, 11);
    for (auto& family : fam.families)
        for (Tube& t : family) {
            t.width = 1.0 / std::sqrt(256.0);
            for (double& c : t.center) c *= 0.3;  // keep the action inside B(0,1)
        }
    KakeyaResult base = kakeya_ratio(fam, 256.0, Quadrature{.kind = Quadrature::GridRule, .n_per_axis = 256});
    double c = std::cos(0.3), s = std::sin(0.3);
    TubeFamily rot = fam;
    for (auto& family : rot.families)
        for (Tube& t : family) {
            Vec th{c * t.theta[0] - s * t.theta[1], s * t.theta[0] + c * t.theta[1]};
            Vec ce{c * t.center[0] - s * t.center[1], s * t.center[0] + c * t.center[1]};
            t.theta = th;
            t.center = ce;
        }
    KakeyaResult moved = kakeya_ratio(rot, 256.0, Quadrature{.kind = Quadrature::GridRule, .n_per_axis = 256});
    CHECK(moved.ratio == doctest::Approx(base.ratio).epsilon(0.02));
}

TEST_CASE("bound normalizer scales exactly linearly in 1/sigma") {
    TubeFamily fam = orthogonal_pair(64.0);
    KakeyaResult r1 = kakeya_ratio(fam, 64.0, Quadrature{});
    // tilt family 2 to reduce sigma; the normalizer divides by the new sigma exactly
    double ang = 0.5;
    fam.families[1][0].theta = {std::sin(ang), std::cos(ang)};
    KakeyaResult r2 = kakeya_ratio(fam, 64.0, Quadrature{});
    CHECK(r2.sigma == doctest::Approx(std::cos(ang)));
    CHECK(r2.bound_normalizer * r2.sigma == doctest::Approx(r1.bound_normalizer * r1.sigma).epsilon(1e-12));
}

TEST_CASE("random transversal families: determinism and achieved sigma") {
    TubeFamily a = random_transversal_family(3, 2, 0.1, {5, 5}, 42);
    TubeFamily b = random_transversal_family(3, 2, 0.1, {5, 5}, 42);
    CHECK(serialize(a) == serialize(b));
    double sigma = a.transversality();
    CHECK(sigma >= 0.05);
    CHECK(sigma <= 0.2);

    // k = d with tiny caps around the axes: sigma near 1
    TubeFamily axes = random_transversal_family(3, 3, 0.999, {2, 2, 2}, 1);
    CHECK(axes.transversality() > 0.9);

    CHECK_THROWS_AS(random_transversal_family(3, 2, 1.5, {2, 2}, 1), std::invalid_argument);
}

TEST_CASE("family text round trip") {
    TubeFamily fam = random_transversal_family(2, 2, 0.3, {2, 3}, 9);
    for (auto& family : fam.families)
        for (Tube& t : family) t.width = 0.125;
    TubeFamily back = parse_tube_family(serialize(fam), 2, 2);
    CHECK(serialize(back) == serialize(fam));
}

TEST_CASE("monte carlo quadrature agrees with the grid rule in 3d") {
    TubeFamily fam = random_transversal_family(3, 3, 0.5, {3, 3, 3}, 17);
    for (auto& family : fam.families)
        for (Tube& t : family) t.width = 1.0 / std::sqrt(64.0);
    KakeyaResult grid = kakeya_ratio(fam, 64.0, Quadrature{.kind = Quadrature::GridRule, .n_per_axis = 96});
    KakeyaResult mc = kakeya_ratio(
        fam, 64.0, Quadrature{.kind = Quadrature::MonteCarlo, .n_samples = 2000000, .seed = 4});
    if (grid.lhs > 0.0) CHECK(mc.lhs == doctest::Approx(grid.lhs).epsilon(0.25));
}
