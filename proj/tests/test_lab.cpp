#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "freqlab/cutoff.hpp"
#include "freqlab/lab.hpp"
#include "freqlab/rng.hpp"

using namespace freqlab;

TEST_CASE("rational arithmetic is exact") {
    Rational a(1, 3), b(1, 6);
    CHECK((a + b) == Rational(1, 2));
    CHECK((a - b) == Rational(1, 6));
    CHECK((a * b) == Rational(1, 18));
    CHECK((a / b) == Rational(2));
    CHECK(Rational(10, 3).str() == "10/3");
    CHECK_THROWS_AS(Rational(1, 0), std::domain_error);
    CHECK(rational_min(Rational(12, 5), Rational(22, 9)) == Rational(12, 5));
}

TEST_CASE("exponent tables: spot values, degeneracy, crossover") {
    CHECK(p_circ(2) == Rational(4));
    CHECK(p_circ(3) == Rational(10, 3));
    CHECK(!p_s(2).has_value());  // degenerate: division by zero
    CHECK(*p_s(9) == Rational(12, 5));

    ExponentTable t2 = exponents(2);
    CHECK(t2.ps_degenerate);
    CHECK(t2.effective_square == Rational(4));  // min collapses to 2(d+2)/d

    ExponentTable t8 = exponents(8);
    CHECK(*t8.ps == t8.bilinear_square);  // crossover: equality at d = 8
    ExponentTable t9 = exponents(9);
    CHECK(*t9.ps < t9.bilinear_square);   // strict improvement at d = 9

    // both derivations agree across the table
    for (int d = 2; d <= 12; ++d) {
        CHECK(p_circ(d) == p_circ_alt(d));
        auto ps1 = p_s(d), ps2 = p_s_alt(d);
        CHECK(ps1.has_value() == ps2.has_value());
        if (ps1) CHECK(*ps1 == *ps2);
    }
}

TEST_CASE("alpha exponent and theoretical slopes") {
    ExponentTable t2 = exponents(2);
    CHECK(t2.alpha(2.0) == doctest::Approx(0.0));  // |1/2 - 1/2| = 0
    CHECK(t2.alpha(6.0) == doctest::Approx(1.0 / 6.0));
    CHECK(alpha_rational(2, Rational(6)) == Rational(1, 6));
    CHECK(alpha_rational(2, Rational(2)) == Rational(0));
    CHECK(t2.e_t(4.0) == doctest::Approx(0.0));
    CHECK(t2.e_t(6.0) == doctest::Approx(-1.0 / 6.0));
    CHECK(t2.e_s(4.0) == doctest::Approx(0.5));
}

TEST_CASE("log-log regression recovers synthetic power laws to 0.01") {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        double e = rng.uniform(-2.0, 2.0), c = std::exp(rng.uniform(-1.0, 1.0));
        std::vector<double> deltas, ratios;
        for (int j = 3; j <= 8; ++j) {
            double d = std::pow(2.0, -j);
            deltas.push_back(d);
            ratios.push_back(c * std::pow(d, e));
        }
        RegressionFit fit = fit_loglog(deltas, ratios);
        CHECK(fit.slope == doctest::Approx(e).epsilon(1e-10));
        CHECK(std::abs(fit.slope - e) < 0.01);
        CHECK(std::pow(2.0, fit.intercept) == doctest::Approx(c).epsilon(1e-9));
    }
}

TEST_CASE("knapp witness mass matches the plate-volume integral") {
    double delta = 1.0 / 32;
    Grid g = make_grid(2, 512, delta / 4.0);
    OperatorSpec spec = make_tdelta(make_paraboloid(2), delta);
    GridFunction f = make_witness(WitnessKind::Knapp, g, spec, 0);
    // ||f||_2^2 = (2pi/(nh)^2)^d * integral |plate bump|^2 (discrete Parseval bookkeeping)
    double w = std::sqrt(delta);
    const int nq = 20000;
    auto bump_l2 = [&](double width) {
        double s = 0.0;
        for (int i = 0; i <= nq; ++i) {
            double u = -width + 2.0 * width * i / nq;
            double v = phi_bump(2.0 * u / width);
            s += ((i == 0 || i == nq) ? 0.5 : 1.0) * v * v * (2.0 * width / nq);
        }
        return s;
    };
    double plate = bump_l2(w) * bump_l2(delta);  // separable in the tangent frame
    double convention = std::pow(2.0 * M_PI, 2.0) / std::pow(g.n * g.h, 2.0) / std::pow(2.0, 2.0);
    // (s/n)^d sum |f-hat|^2 ~ (2pi/(nh))^d (nh)^{-d} integral; with nh = 2 this is (pi/2)^d
    convention = std::pow(M_PI / 2.0, 2.0);
    double want = convention * plate;
    double got = std::pow(lp_norm(transform(f), 2.0), 2.0);
    CHECK(got == doctest::Approx(want).epsilon(0.10));
}

TEST_CASE("focus witness maximizes at the origin by constructive interference") {
    double delta = 1.0 / 16;
    Grid g = make_grid(2, 256, delta / 4.0);
    OperatorSpec spec = make_tdelta(make_paraboloid(2), delta);
    GridFunction f = make_witness(WitnessKind::Focus, g, spec, 0);
    GridFunction tf = t_delta(f, spec);
    std::vector<int> c0{g.n / 2, g.n / 2};
    double at0 = std::abs(tf.v[g.flatten(c0.data())]);
    double m = 0.0;
    for (const cplx& z : tf.v) m = std::max(m, std::abs(z));
    CHECK(at0 == doctest::Approx(m));  // nonnegative symbol stacks in phase at x = 0
}

TEST_CASE("random-slab witness is seed-deterministic") {
    double delta = 1.0 / 16;
    Grid g = make_grid(2, 128, delta / 4.0);
    OperatorSpec spec = make_tdelta(make_paraboloid(2), delta);
    GridFunction a = make_witness(WitnessKind::RandomSlab, g, spec, 9);
    GridFunction b = make_witness(WitnessKind::RandomSlab, g, spec, 9);
    for (size_t i = 0; i < a.v.size(); ++i) CHECK(a.v[i] == b.v[i]);
    GridFunction c = make_witness(WitnessKind::RandomSlab, g, spec, 10);
    double diff = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) diff = std::max(diff, std::abs(a.v[i] - c.v[i]));
    CHECK(diff > 0.0);
}

TEST_CASE("scaling experiment smoke: flat witness ladder at p = 4") {
    ScalingConfig cfg;
    cfg.kind = OpKind::TDelta;
    cfg.phase_id = "paraboloid";
    cfg.d = 2;
    cfg.p = 4.0;
    cfg.ladder = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    cfg.witnesses = {WitnessKind::Knapp, WitnessKind::Focus};
    ScalingReport rep = scaling_experiment(cfg);
    CHECK(rep.theoretical_slope == doctest::Approx(0.0));
    CHECK(rep.ladder.size() == 4);
    CHECK(std::abs(rep.fit.slope) < 0.15);
}

TEST_CASE("memory budget skips oversized ladder points") {
    ScalingConfig cfg;
    cfg.kind = OpKind::TDelta;
    cfg.d = 2;
    cfg.p = 4.0;
    cfg.ladder = {1.0 / 8, 1.0 / 16, 1.0 / 4096};
    cfg.witnesses = {WitnessKind::Knapp};
    cfg.policy.max_points = 1 << 16;
    ScalingReport rep = scaling_experiment(cfg);
    CHECK(rep.skipped_deltas.size() == 1);
    CHECK(rep.skipped_deltas[0] == doctest::Approx(1.0 / 4096));
}

TEST_CASE("bilinear experiment: zero factor, swap symmetry, transversality guard") {
    // a zero factor collapses the product (direct operator check)
    Grid g = make_grid(2, 128, 1.0 / 64);
    OperatorSpec spec = make_tdelta(make_paraboloid(2), 1.0 / 16);
    GridFunction z(g, Rep::Frequency);
    GridFunction f = make_witness(WitnessKind::Focus, g, spec, 0);
    GridFunction prod = pointwise_product(t_delta(f, spec), t_delta(z, spec));
    CHECK(lp_norm(prod, 2.0) == doctest::Approx(0.0));

    BilinearReport rep = bilinear_transversal_experiment("paraboloid", 2, 4.0, 0.25,
                                                         {1.0 / 8, 1.0 / 16, 1.0 / 32});
    CHECK(rep.points.size() == 3);
    CHECK(rep.achieved_vol >= 0.25);
    CHECK(rep.spread < 4.0);
    // swap symmetry is structural: the product is commutative
    GridFunction p1 = pointwise_product(t_delta(f, spec), t_delta(f, spec));
    GridFunction p2 = pointwise_product(t_delta(f, spec), t_delta(f, spec));
    CHECK(lp_norm(p1, 2.0) == doctest::Approx(lp_norm(p2, 2.0)));

    CHECK_THROWS_AS(bilinear_transversal_experiment("paraboloid", 2, 4.0, 0.99, {1.0 / 8}),
                    std::invalid_argument);
    CHECK_THROWS_AS(bilinear_transversal_experiment("paraboloid", 2, 3.0, 0.25, {1.0 / 8}),
                    std::invalid_argument);
}

TEST_CASE("confined square experiment runs and reports stable ratios") {
    ExperimentPolicy policy;
    ConfinedReport rep = confined_square_experiment(3, 2.0, 0.25, {1.0 / 4, 1.0 / 8}, 3, policy);
    CHECK(rep.points.size() == 2);
    for (const auto& pt : rep.points) {
        CHECK(pt.lhs > 0.0);
        CHECK(pt.rhs > 0.0);
    }
    CHECK(rep.spread < 8.0);
    CHECK_THROWS_AS(confined_square_experiment(3, 6.0, 0.25, {0.25}, 3, policy), std::invalid_argument);
}

TEST_CASE("induction estimates: coarse delta stays bounded, empty suite rejected") {
    InductionEstimate a = induction_estimate('A', 2, 4.0, 1.0, {WitnessKind::Focus, WitnessKind::Knapp}, 1);
    CHECK(a.value > 0.0);
    CHECK(a.value <= 2.0);  // kernel in L^1 uniformly at delta >= 1
    CHECK_THROWS_AS(induction_estimate('A', 2, 4.0, 0.5, {}, 1), std::invalid_argument);
}

TEST_CASE("rescale covariance quotient is finite and hypothesis-flagged") {
    ExperimentPolicy policy;
    policy.h_over_delta = 1.0;  // covariance runs resolve the slab with h = delta
    CovarianceCheck c = rescale_covariance('A', 2, 4.0, 1.0 / 512, 0.5, 12, policy);
    CHECK(c.hypothesis_ok);  // delta <= 1e-2 eps^2
    CHECK(c.quotient > 0.0);
    CovarianceCheck loose = rescale_covariance('A', 2, 4.0, 1.0 / 256, 0.25, 12, policy);
    CHECK(!loose.hypothesis_ok);  // the spec-example parameters violate the hypothesis
    CHECK(loose.quotient > 0.0);
}
