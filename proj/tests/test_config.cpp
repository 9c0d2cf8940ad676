#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "freqlab/config.hpp"

using namespace freqlab;

TEST_CASE("config file parsing is strict") {
    ConfigFile cf = ConfigFile::parse(
        "# comment\n"
        "[scaling]\n"
        "p = 4\n"
        "ladder = 2^-3..2^-8\n"
        "\n"
        "[constants]\n"
        "eps0 = 0.05\n");
    CHECK(*cf.get("scaling", "p") == "4");
    CHECK(*cf.get("scaling", "ladder") == "2^-3..2^-8");
    CHECK(cf.get("scaling", "missing") == std::nullopt);
    CHECK_THROWS_AS(cf.check_consumed(), ConfigError);  // eps0 never read
    CHECK(*cf.get("constants", "eps0") == "0.05");
    CHECK_NOTHROW(cf.check_consumed());

    CHECK_THROWS_AS(ConfigFile::parse("[unclosed\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("keyonly\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("[s]\nk = 1\nk = 2\n"), ConfigError);
    try {
        ConfigFile bad = ConfigFile::parse("[s]\ngood = 1\nweird = 2\n");
        bad.get("s", "good");
        bad.check_consumed();
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(e.line == 3);  // diagnostics carry the line number
    }
}

TEST_CASE("dyadic, ladder, and list grammar") {
    CHECK(parse_dyadic("2^-6") == doctest::Approx(1.0 / 64));
    CHECK(parse_dyadic("0.25") == doctest::Approx(0.25));
    std::vector<double> lad = parse_ladder("2^-3..2^-6");
    CHECK(lad.size() == 4);
    CHECK(lad.front() == doctest::Approx(1.0 / 8));
    CHECK(lad.back() == doctest::Approx(1.0 / 64));
    std::vector<double> ps = parse_double_list("4,6");
    CHECK(ps.size() == 2);
    CHECK(ps[1] == doctest::Approx(6.0));
}

TEST_CASE("operator spec grammar round trips") {
    for (const char* s : {"tdelta(phase=paraboloid,delta=0.015625)",
                          "tdelta(phase=sphere,delta=0.015625)",
                          "sdelta(phase=affine-time,delta=0.03125)",
                          "sdelta(phase=br:eps=0.1,delta=0.03125,eta=bump)",
                          "tdelta(phase=perturbed:g=cubic,eps=0.05,delta=0.03125)",
                          "spherical(delta=0.0625)"}) {
        OperatorSpec spec = parse_operator_spec(s, 2);
        OperatorSpec back = parse_operator_spec(print_operator_spec(spec), 2);
        CHECK(print_operator_spec(back) == print_operator_spec(spec));
    }
    OperatorSpec td = parse_operator_spec("tdelta(phase=sphere,delta=2^-6)", 2);
    CHECK(td.kind == OpKind::TDelta);
    CHECK(td.delta == doctest::Approx(1.0 / 64));
    CHECK(td.phase->id() == "sphere");

    CHECK_THROWS(parse_operator_spec("tdelta(delta=2^-6)", 2));             // missing phase
    CHECK_THROWS(parse_operator_spec("tdelta(phase=paraboloid)", 2));       // missing delta
    CHECK_THROWS(parse_operator_spec("warp(phase=paraboloid,delta=1)", 2)); // unknown kind
    CHECK_THROWS(parse_operator_spec("tdelta(phase=paraboloid,delta=2^-6,zip=1)", 2));
}

TEST_CASE("g17 formatting is stable") {
    CHECK(format_g17(0.25) == "0.25");
    CHECK(format_g17(1.0 / 3.0) == format_g17(1.0 / 3.0));
    CHECK(format_g17(1.0 / 3.0).size() >= 17);
}
