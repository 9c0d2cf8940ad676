// Batch front end for the frequency-side laboratory: experiment orchestration,
// strict config parsing, deterministic seeding, CSV/JSON emission.
//
// Exit codes: 0 pass, 1 assertion failure, 2 config error, 3 resource skip.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "freqlab/config.hpp"
#include "freqlab/decompose.hpp"
#include "freqlab/exponents.hpp"
#include "freqlab/kakeya.hpp"
#include "freqlab/lab.hpp"
#include "freqlab/report.hpp"
#include "freqlab/rng.hpp"

using namespace freqlab;

namespace {

struct CommonOpts {
    std::string out;
    std::string json_out;
    uint64_t seed = 1;
    int64_t max_points = int64_t(1) << 23;
};

std::vector<WitnessKind> parse_witness_list(const std::string& s) {
    std::vector<WitnessKind> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(parse_witness(tok));
    return out;
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-")
        std::fputs(text.c_str(), stdout);
    else
        write_file(path, text);
}

int run_scaling(OpKind kind, const std::string& phase, int d, const std::string& ladder_s,
                const std::string& p_list, const std::string& witnesses_s, const CommonOpts& opts,
                double tolerance) {
    bool all_pass = true;
    bool skipped_any = false;
    for (double p : parse_double_list(p_list)) {
        ScalingConfig cfg;
        cfg.kind = kind;
        cfg.phase_id = phase;
        cfg.d = d;
        cfg.p = p;
        cfg.ladder = parse_ladder(ladder_s);
        cfg.witnesses = parse_witness_list(witnesses_s);
        cfg.seed = opts.seed;
        cfg.policy.max_points = opts.max_points;
        ScalingReport rep = scaling_experiment(cfg);
        std::string id = rep.op_id + ":p=" + format_g17(p);
        emit(opts.out, scaling_csv(id, rep));
        if (!opts.json_out.empty()) emit(opts.json_out, scaling_json(rep, tolerance));
        if (!rep.skipped_deltas.empty()) {
            skipped_any = true;
            for (double dly : rep.skipped_deltas)
                std::fprintf(stderr, "skipped delta=%s (memory budget)\n", format_g17(dly).c_str());
        }
        if (std::abs(rep.fit.slope - rep.theoretical_slope) > tolerance) all_pass = false;
        std::fprintf(stderr, "%s p=%s slope=%.4f theoretical=%.4f stderr=%.4f %s\n",
                     rep.op_id.c_str(), format_g17(p).c_str(), rep.fit.slope, rep.theoretical_slope,
                     rep.fit.stderr_slope,
                     std::abs(rep.fit.slope - rep.theoretical_slope) <= tolerance ? "ok" : "FAIL");
    }
    if (!all_pass) return 1;
    return skipped_any ? 3 : 0;
}

// Light property suites behind `verify`; the full acceptance criteria live in
// the test tree (tests/acceptance.cpp).
int verify_suite(const std::string& which, uint64_t seed) {
    int failures = 0;
    auto check = [&](bool ok, const char* what) {
        std::printf("[%s] %s\n", ok ? "ok" : "FAIL", what);
        if (!ok) ++failures;
    };
    if (which == "grid" || which == "all") {
        Grid g = make_grid(2, 64, 1.0 / 32);
        bool roundtrip_ok = true, parseval_ok = true;
        for (int trial = 0; trial < 25; ++trial) {
            GridFunction f = random_freq(g, seed + trial);
            f.rep = Rep::Space;
            GridFunction back = transform(transform(f));
            double worst = 0.0, scale = 0.0, s_sp = 0.0, s_fr = 0.0;
            GridFunction fh = transform(f);
            for (size_t i = 0; i < f.v.size(); ++i) {
                worst = std::max(worst, std::abs(back.v[i] - f.v[i]));
                scale = std::max(scale, std::abs(f.v[i]));
                s_sp += std::norm(f.v[i]);
                s_fr += std::norm(fh.v[i]);
            }
            roundtrip_ok = roundtrip_ok && worst <= 1e-12 * scale;
            parseval_ok = parseval_ok && std::abs(s_sp - s_fr / g.size()) <= 1e-12 * s_sp;
        }
        check(roundtrip_ok, "grid: transform round trip at 1e-12");
        check(parseval_ok, "grid: discrete Parseval at 1e-12");
    }
    if (which == "phase" || which == "all") {
        bool chain_ok = true;
        Rng rng(seed);
        auto r = rescale(make_sphere_graph(2), Vec{0.2}, 0.25);
        for (int trial = 0; trial < 50; ++trial) {
            Vec z{rng.uniform(-0.9, 0.9)};
            double hstep = 1e-5;
            Vec zp{z[0] + hstep}, zm{z[0] - hstep};
            double fd = (r->eval(zp) - r->eval(zm)) / (2 * hstep);
            if (std::abs(fd - r->grad_zeta(z)[0]) > 1e-5 * (1 + std::abs(fd))) chain_ok = false;
        }
        check(chain_ok, "phase: rescaled chain rule against finite differences");
        check(rescale(make_paraboloid(2), Vec{0.3}, 0.25)->id() == "paraboloid",
              "phase: paraboloid rescaling fixed point");
    }
    if (which == "multiplier" || which == "all") {
        Grid g = make_grid(2, 64, 1.0 / 32);
        OperatorSpec spec = make_tdelta(make_paraboloid(2), 1.0 / 16);
        bool contraction_ok = true;
        for (int trial = 0; trial < 10; ++trial) {
            GridFunction f = make_witness(WitnessKind::RandomSlab, g, spec, seed + trial);
            if (lp_norm(t_delta(f, spec), 2.0) > lp_norm(transform(f), 2.0) * (1 + 1e-12))
                contraction_ok = false;
        }
        check(contraction_ok, "multiplier: L2 contraction for |symbol| <= 1");
    }
    if (which == "decompose" || which == "all") {
        Grid g = make_grid(2, 128, 1.0 / 64);
        ScatteredMajorant maj = scattered_majorant(2, 6);
        bool scatter_ok = true;
        Rng rng(seed);
        for (int trial = 0; trial < 5; ++trial) {
            GridFunction f(g, Rep::Frequency);
            Rng coeffs(seed + trial);
            std::vector<int> idx(2);
            for (int64_t i = 0; i < g.size(); ++i) {
                g.unflatten(i, idx.data());
                if (std::abs(g.freq_coord(idx[0]) - 0.25) <= 0.25 &&
                    std::abs(g.freq_coord(idx[1]) + 0.125) <= 0.25)
                    f.v[i] = cplx(coeffs.normal(), coeffs.normal());
            }
            for (int pair = 0; pair < 10; ++pair) {
                Vec x0{rng.uniform(-2, 2), rng.uniform(-2, 2)};
                Vec x{x0[0] + rng.uniform(-4, 4), x0[1] + rng.uniform(-4, 4)};
                ScatteredResult rr = scattered_sum(f, 0.25, x0, maj, 40.0);
                if (std::abs(eval_bandlimited(f, x)) > rr.value + rr.tail) scatter_ok = false;
            }
        }
        check(scatter_ok, "decompose: scattered-sum domination");
    }
    if (which == "kakeya" || which == "all") {
        TubeFamily fam = random_transversal_family(2, 2, 0.5, {4, 4}, seed);
        for (auto& family : fam.families)
            for (Tube& t : family) t.width = 1.0 / 16.0;
        KakeyaResult res = kakeya_ratio(fam, 256.0, Quadrature{});
        check(res.sigma > 0.0 && res.ratio >= 0.0, "kakeya: ratio well defined on seeded family");
    }
    if (which == "lab" || which == "all") {
        bool exact = true;
        for (int d = 2; d <= 12; ++d) {
            if (!(p_circ(d) == p_circ_alt(d))) exact = false;
            auto a = p_s(d), b = p_s_alt(d);
            if (a.has_value() != b.has_value() || (a && !(*a == *b))) exact = false;
        }
        check(exact, "lab: exponent tables match the independent re-derivation");
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"freqlab: frequency-side operator laboratory"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string config_path;
    app.add_option("--config", config_path, "config file (strict key = value)");

    auto* cmd_exp = app.add_subcommand("exponents", "exact exponent tables");
    std::string d_range = "2..12", format = "csv";
    cmd_exp->add_option("--d", d_range, "dimension range, e.g. 2..12");
    cmd_exp->add_option("--format", format, "csv|json");
    cmd_exp->add_option("--out", opts.out, "output path (default stdout)");

    std::string op_str = "tdelta(phase=paraboloid)", ladder_s = "2^-3..2^-8";
    std::string p_list = "4", witnesses_s = "knapp,focus,random-slab";
    int dim = 2;
    double tolerance = 0.1;
    auto add_scaling_opts = [&](CLI::App* c) {
        c->add_option("--op", op_str, "operator spec, e.g. tdelta(phase=sphere)");
        c->add_option("--p", p_list, "exponent list");
        c->add_option("--d", dim, "dimension");
        c->add_option("--ladder", ladder_s, "dyadic ladder, e.g. 2^-3..2^-8");
        c->add_option("--witnesses", witnesses_s, "witness kinds");
        c->add_option("--seed", opts.seed, "random seed");
        c->add_option("--tolerance", tolerance, "slope tolerance");
        c->add_option("--max-points", opts.max_points, "grid memory budget (samples)");
        c->add_option("--out", opts.out, "CSV output path");
        c->add_option("--json", opts.json_out, "JSON summary path");
    };
    auto* cmd_scaling = app.add_subcommand("scaling", "linear operator-norm scaling law");
    add_scaling_opts(cmd_scaling);
    auto* cmd_sq = app.add_subcommand("square-scaling", "square-function scaling law");
    add_scaling_opts(cmd_sq);

    auto* cmd_bi = app.add_subcommand("bilinear", "bilinear transversal gain");
    std::string bi_phase = "paraboloid";
    double bi_p = 4.0, bi_sigma = 0.25;
    cmd_bi->add_option("--phase", bi_phase);
    cmd_bi->add_option("--p", bi_p);
    cmd_bi->add_option("--sigma", bi_sigma, "transversality separation");
    cmd_bi->add_option("--d", dim);
    cmd_bi->add_option("--ladder", ladder_s);
    cmd_bi->add_option("--out", opts.out);

    auto* cmd_conf = app.add_subcommand("confined", "confined-direction square bound");
    double conf_p = 2.0, conf_sigma = 0.25;
    cmd_conf->add_option("--p", conf_p);
    cmd_conf->add_option("--sigma", conf_sigma, "direction confinement scale");
    cmd_conf->add_option("--d", dim);
    cmd_conf->add_option("--ladder", ladder_s);
    cmd_conf->add_option("--seed", opts.seed);
    cmd_conf->add_option("--out", opts.out);

    auto* cmd_kak = app.add_subcommand("kakeya", "multilinear Kakeya overlap ratios");
    int kak_k = 2, kak_families = 50;
    std::string kak_r = "64,256,1024", family_file;
    double kak_sigma = 0.5;
    cmd_kak->add_option("--d", dim);
    cmd_kak->add_option("--k", kak_k);
    cmd_kak->add_option("--R", kak_r, "R list");
    cmd_kak->add_option("--families", kak_families, "seeded family count");
    cmd_kak->add_option("--sigma", kak_sigma, "transversality target");
    cmd_kak->add_option("--seed", opts.seed);
    cmd_kak->add_option("--family-file", family_file, "read one family from a text file");
    cmd_kak->add_option("--out", opts.out);

    auto* cmd_dec = app.add_subcommand("decompose", "emit a scale-1 certificate");
    std::string dec_op = "tdelta(phase=paraboloid,delta=2^-11)";
    double dec_sigma1 = 0.5;
    std::string dec_x = "0,0";
    DecomposeParams dec_params;
    cmd_dec->add_option("--op", dec_op);
    cmd_dec->add_option("--sigma1", dec_sigma1);
    cmd_dec->add_option("--x", dec_x, "evaluation point");
    cmd_dec->add_option("--d", dim);
    cmd_dec->add_option("--seed", opts.seed);
    cmd_dec->add_option("--c-trans", dec_params.c_trans, "transversality constant c");
    cmd_dec->add_option("--c-neighbor", dec_params.c_neighbor, "neighbor-set constant C");
    cmd_dec->add_option("--dichotomy", dec_params.dichotomy_factor,
                        "max-branch threshold (0 = the 100^d default)");
    cmd_dec->add_option("--out", opts.out);

    auto* cmd_ker = app.add_subcommand("kernel-decay", "slab kernel decay fit");
    std::string ker_phase = "paraboloid";
    double ker_sigma = 0.25;
    cmd_ker->add_option("--phase", ker_phase);
    cmd_ker->add_option("--sigma", ker_sigma);
    cmd_ker->add_option("--ladder", ladder_s);
    cmd_ker->add_option("--d", dim);
    cmd_ker->add_option("--out", opts.out);

    auto* cmd_ver = app.add_subcommand("verify", "property suites");
    std::string suite = "all";
    cmd_ver->add_option("--suite", suite, "grid|phase|multiplier|decompose|kakeya|lab|all");
    cmd_ver->add_option("--seed", opts.seed);

    CLI11_PARSE(app, argc, argv);

    try {
        // A config file may override the run flags; unknown keys fail fast.
        if (!config_path.empty()) {
            ConfigFile cf = ConfigFile::load(config_path);
            auto want = [&](const char* sec, const char* key, auto& slot) {
                if (auto v = cf.get(sec, key)) {
                    std::istringstream is(*v);
                    is >> slot;
                }
            };
            if (auto v = cf.get("run", "op")) op_str = *v;
            if (auto v = cf.get("run", "ladder")) ladder_s = *v;
            if (auto v = cf.get("run", "p")) p_list = *v;
            if (auto v = cf.get("run", "witnesses")) witnesses_s = *v;
            want("run", "d", dim);
            want("run", "seed", opts.seed);
            want("run", "tolerance", tolerance);
            want("run", "max_points", opts.max_points);
            if (auto v = cf.get("run", "out")) opts.out = *v;
            if (auto v = cf.get("run", "json")) opts.json_out = *v;
            cf.check_consumed();
        }

        if (*cmd_exp) {
            size_t dots = d_range.find("..");
            int lo = std::stoi(d_range.substr(0, dots));
            int hi = dots == std::string::npos ? lo : std::stoi(d_range.substr(dots + 2));
            if (format == "csv") {
                emit(opts.out, exponents_csv(lo, hi));
            } else {
                std::ostringstream os;
                for (int d = lo; d <= hi; ++d) {
                    ExponentTable t = exponents(d);
                    os << "{\"d\":" << d << ",\"p_circ\":\"" << t.p0.str() << "\",\"p_s\":\""
                       << (t.ps ? t.ps->str() : "degenerate") << "\",\"effective_square\":\""
                       << t.effective_square.str() << "\"}\n";
                }
                emit(opts.out, os.str());
            }
            return 0;
        }
        if (*cmd_scaling || *cmd_sq) {
            // the ladder supplies delta; accept specs with or without delta=
            std::string probe_str = op_str;
            if (probe_str.find("delta=") == std::string::npos) {
                size_t close = probe_str.rfind(')');
                bool empty_args = probe_str[close - 1] == '(';
                probe_str.insert(close, std::string(empty_args ? "" : ",") + "delta=2^-4");
            }
            OperatorSpec probe = parse_operator_spec(probe_str, dim);
            if (*cmd_sq && probe.kind == OpKind::TDelta)
                throw std::invalid_argument("square-scaling expects sdelta(...) or spherical(...)");
            std::string phase = probe.phase ? probe.phase->id() : "paraboloid";
            return run_scaling(probe.kind, phase, dim, ladder_s, p_list, witnesses_s, opts, tolerance);
        }
        if (*cmd_bi) {
            BilinearReport rep =
                bilinear_transversal_experiment(bi_phase, dim, bi_p, bi_sigma, parse_ladder(ladder_s));
            emit(opts.out, bilinear_csv("bilinear", rep));
            std::fprintf(stderr, "bilinear d=%d p=%s sigma=%s spread=%.4f %s\n", dim,
                         format_g17(bi_p).c_str(), format_g17(bi_sigma).c_str(), rep.spread,
                         rep.spread <= 4.0 ? "ok" : "FAIL");
            return rep.spread <= 4.0 ? 0 : 1;
        }
        if (*cmd_conf) {
            ConfinedReport rep =
                confined_square_experiment(dim, conf_p, conf_sigma, parse_ladder(ladder_s), opts.seed);
            std::ostringstream os;
            os << "# freqlab csv v1: confined\nexperiment_id,d,p,delta,lhs,rhs,ratio\n";
            for (const auto& pt : rep.points)
                os << "confined," << dim << "," << format_g17(conf_p) << "," << format_g17(pt.delta)
                   << "," << format_g17(pt.lhs) << "," << format_g17(pt.rhs) << ","
                   << format_g17(pt.ratio) << "\n";
            emit(opts.out, os.str());
            std::fprintf(stderr, "confined spread=%.4f\n", rep.spread);
            return 0;
        }
        if (*cmd_kak) {
            std::vector<std::tuple<double, uint64_t, double>> rows;
            for (double big_r : parse_double_list(kak_r)) {
                if (!family_file.empty()) {
                    std::ifstream in(family_file);
                    if (!in) throw std::runtime_error("cannot open " + family_file);
                    std::ostringstream buf;
                    buf << in.rdbuf();
                    TubeFamily fam = parse_tube_family(buf.str(), dim, kak_k);
                    KakeyaResult res = kakeya_ratio(fam, big_r, Quadrature{});
                    rows.emplace_back(big_r, 0, res.ratio);
                    continue;
                }
                for (int s = 0; s < kak_families; ++s) {
                    TubeFamily fam = random_transversal_family(dim, kak_k, kak_sigma,
                                                               std::vector<int>(kak_k, 4),
                                                               opts.seed + s);
                    for (auto& family : fam.families)
                        for (Tube& t : family) t.width = 1.0 / std::sqrt(big_r);
                    KakeyaResult res = kakeya_ratio(fam, big_r, Quadrature{});
                    rows.emplace_back(big_r, opts.seed + s, res.ratio);
                }
            }
            emit(opts.out, kakeya_csv("kakeya", dim, kak_k, rows));
            return 0;
        }
        if (*cmd_dec) {
            OperatorSpec spec = parse_operator_spec(dec_op, dim);
            Grid g = make_grid(dim, 1024, 1.0 / 512);
            Rng rng(opts.seed);
            GridFunction f(g, Rep::Frequency);
            std::vector<int> idx(dim);
            Vec xi(dim);
            for (int64_t i = 0; i < g.size(); ++i) {
                g.unflatten(i, idx.data());
                bool in = true;
                for (int a = 0; a < dim; ++a) {
                    xi[a] = g.freq_coord(idx[a]);
                    if (std::abs(xi[a]) > 0.45) in = false;
                }
                if (!in) continue;
                Vec zeta(xi.begin(), xi.end() - 1);
                if (std::abs(xi[dim - 1] - spec.phase->eval(zeta)) <= 2.0 * spec.delta)
                    f.v[i] = cplx(rng.normal(), rng.normal());
            }
            std::vector<double> xs = parse_double_list(dec_x);
            Scale1Certificate cert =
                decompose_scale1(f, spec, dec_sigma1, Vec(xs.begin(), xs.end()), dec_params);
            emit(opts.out, serialize(cert));
            return cert.margin >= 1.0 - 1e-9 ? 0 : 1;
        }
        if (*cmd_ker) {
            std::ostringstream os;
            os << "# freqlab csv v1: kernel-decay\nexperiment_id,d,sigma,delta,C,k0,k0_predicted\n";
            double cmin = 1e300, cmax = 0.0;
            for (double delta : parse_ladder(ladder_s)) {
                int n = 2;
                while (n * (delta / 4.0) < 2.0) n <<= 1;
                Grid g = make_grid(dim, n, delta / 4.0);
                OperatorSpec spec = make_tdelta(parse_phase(ker_phase, dim), delta);
                KernelDecayFit fit = kernel_decay_fit(slab_kernel(g, spec, ker_sigma), spec, ker_sigma);
                cmin = std::min(cmin, fit.constant);
                cmax = std::max(cmax, fit.constant);
                os << "kernel-decay," << dim << "," << format_g17(ker_sigma) << ","
                   << format_g17(delta) << "," << format_g17(fit.constant) << ","
                   << format_g17(fit.k0) << "," << format_g17(fit.k0_predicted) << "\n";
            }
            emit(opts.out, os.str());
            std::fprintf(stderr, "kernel-decay C spread = %.4f %s\n", cmax / cmin,
                         cmax / cmin <= 4.0 ? "ok" : "FAIL");
            return cmax / cmin <= 4.0 ? 0 : 1;
        }
        if (*cmd_ver) return verify_suite(suite, opts.seed);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
