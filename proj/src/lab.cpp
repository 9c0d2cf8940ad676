#include "freqlab/lab.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "freqlab/cutoff.hpp"
#include "freqlab/decompose.hpp"
#include "freqlab/rng.hpp"

namespace freqlab {

std::string witness_name(WitnessKind k) {
    switch (k) {
        case WitnessKind::Knapp: return "knapp";
        case WitnessKind::Focus: return "focus";
        case WitnessKind::RandomSlab: return "random-slab";
        case WitnessKind::Conjugate: return "conjugate";
        case WitnessKind::Mode: return "mode";
    }
    return "?";
}

WitnessKind parse_witness(const std::string& name) {
    if (name == "knapp") return WitnessKind::Knapp;
    if (name == "focus") return WitnessKind::Focus;
    if (name == "random-slab") return WitnessKind::RandomSlab;
    if (name == "conjugate") return WitnessKind::Conjugate;
    if (name == "mode") return WitnessKind::Mode;
    throw std::invalid_argument("unknown witness kind '" + name + "'");
}

namespace {

constexpr double kWitnessBox = 0.45;       // keeps f-hat inside (1/2)I^d
constexpr double kSphericalRadius = 0.75;  // witness sphere, interior to [1/2, 2]

double slab_center_tau(const OperatorSpec& spec, std::span<const double> zeta, double t_c) {
    if (spec.kind == OpKind::SphericalSquare) return 0.0;  // handled radially
    return spec.phase->time_dependent() ? spec.phase->eval(zeta, t_c) : spec.phase->eval(zeta);
}

// tangent-plate bump: sqrt(delta) wide along zeta, delta thick across the graph
GridFunction knapp_witness(const Grid& g, const OperatorSpec& spec) {
    const int d = g.d;
    const double delta = spec.delta;
    const double t_c = spec.phase && spec.phase->time_dependent() ? 0.5 * (spec.t0 + spec.t1) : 0.0;
    GridFunction f(g, Rep::Frequency);
    std::vector<int> idx(d);
    Vec xi(d);
    const double w = std::min(std::sqrt(delta), 0.4);
    const double thick = std::min(delta, 0.2);  // keeps the plate inside (1/2)I^d at coarse delta
    if (spec.kind == OpKind::SphericalSquare) {
        // plate tangent to the sphere |xi| = r0 at xi0 = (r0, 0, ..); r0 interior
        // to the window so the activation interval sits inside [t0, t1]
        const double r0 = kSphericalRadius;
        for (int64_t i = 0; i < g.size(); ++i) {
            g.unflatten(i, idx.data());
            double r2 = 0.0;
            for (int a = 0; a < d; ++a) {
                xi[a] = g.freq_coord(idx[a]);
                r2 += xi[a] * xi[a];
            }
            double radial = std::sqrt(r2) - r0;
            double v = phi_bump(2.0 * radial / (r0 * delta));
            for (int a = 1; a < d; ++a) v *= phi_bump(2.0 * xi[a] / w);
            if (xi[0] < 0.0) v = 0.0;  // one cap
            f.v[i] = v;
        }
        return f;
    }
    const PhaseSurface& psi = *spec.phase;
    Vec a_pt(d - 1, 0.0);
    Vec grad = psi.time_dependent() ? psi.grad_zeta(a_pt, t_c) : psi.grad_zeta(a_pt);
    double psi_a = psi.time_dependent() ? psi.eval(a_pt, t_c) : psi.eval(a_pt);
    for (int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx.data());
        for (int a = 0; a < d; ++a) xi[a] = g.freq_coord(idx[a]);
        double v = 1.0;
        double plane = psi_a;
        for (int a = 0; a < d - 1; ++a) {
            v *= phi_bump(2.0 * xi[a] / w);
            plane += grad[a] * xi[a];
        }
        v *= phi_bump(2.0 * (xi[d - 1] - plane) / thick);
        f.v[i] = v;
    }
    return f;
}

GridFunction focus_witness(const Grid& g, const OperatorSpec& spec) {
    const int d = g.d;
    const double delta = spec.delta;
    const double t_c = spec.phase && spec.phase->time_dependent() ? 0.5 * (spec.t0 + spec.t1) : 0.0;
    GridFunction f(g, Rep::Frequency);
    std::vector<int> idx(d);
    Vec xi(d);
    for (int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx.data());
        for (int a = 0; a < d; ++a) xi[a] = g.freq_coord(idx[a]);
        if (spec.kind == OpKind::SphericalSquare) {
            double r2 = 0.0;
            for (double x : xi) r2 += x * x;
            f.v[i] = phi_bump((1.0 - std::sqrt(r2) / kSphericalRadius) / delta);  // annulus witness
            continue;
        }
        double box = box_bump(xi, kWitnessBox);
        if (box == 0.0) continue;
        std::span<const double> zeta(xi.data(), d - 1);
        double r2 = 0.0;
        for (double z : zeta) r2 += z * z;
        double dr = spec.phase->domain_radius();
        if (std::isfinite(dr) && r2 >= dr * dr) continue;
        f.v[i] = phi_bump((xi[d - 1] - slab_center_tau(spec, zeta, t_c)) / delta) * box;
    }
    return f;
}

GridFunction random_slab_witness(const Grid& g, const OperatorSpec& spec, uint64_t seed) {
    const int d = g.d;
    const double delta = spec.delta;
    const double t_c = spec.phase && spec.phase->time_dependent() ? 0.5 * (spec.t0 + spec.t1) : 0.0;
    Rng rng(seed);
    GridFunction f(g, Rep::Frequency);
    std::vector<int> idx(d);
    Vec xi(d);
    for (int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx.data());
        bool in_box = true;
        for (int a = 0; a < d; ++a) {
            xi[a] = g.freq_coord(idx[a]);
            if (std::abs(xi[a]) > kWitnessBox) in_box = false;
        }
        double gap;
        if (spec.kind == OpKind::SphericalSquare) {
            double r2 = 0.0;
            for (double x : xi) r2 += x * x;
            gap = std::sqrt(r2) - kSphericalRadius;
        } else {
            if (!in_box) continue;
            std::span<const double> zeta(xi.data(), d - 1);
            double r2 = 0.0;
            for (double z : zeta) r2 += z * z;
            double dr = spec.phase->domain_radius();
            if (std::isfinite(dr) && r2 >= dr * dr) continue;
            gap = xi[d - 1] - slab_center_tau(spec, zeta, t_c);
        }
        if (std::abs(gap) <= delta) f.v[i] = cplx(rng.normal(), rng.normal());
    }
    return f;
}

GridFunction conjugate_witness(const Grid& g, const OperatorSpec& spec) {
    GridFunction k_hat = focus_witness(g, spec);
    GridFunction kernel = transform(k_hat);  // the slab kernel (space side)
    double peak = 0.0;
    for (const cplx& z : kernel.v) peak = std::max(peak, std::abs(z));
    if (peak == 0.0) return k_hat;
    // matched filter: op(f)(0) = sum_y f(y) conj(K(y)) for a real symbol, so the
    // flattened kernel phase itself is the focusing input
    const double floor_ = 1e-2 * peak;
    GridFunction u(g, Rep::Space);
    for (size_t i = 0; i < u.v.size(); ++i)
        u.v[i] = kernel.v[i] / (std::abs(kernel.v[i]) + floor_);
    GridFunction u_hat = transform(u);
    std::vector<int> idx(g.d);
    Vec xi(g.d);
    for (int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx.data());
        for (int a = 0; a < g.d; ++a) xi[a] = g.freq_coord(idx[a]);
        u_hat.v[i] *= box_bump(xi, kWitnessBox);
    }
    return u_hat;
}

GridFunction mode_witness(const Grid& g, const OperatorSpec& spec) {
    std::vector<int> k(g.d, g.n / 2);
    if (spec.kind == OpKind::SphericalSquare) {
        // a lattice point on the witness sphere
        int off = std::min(static_cast<int>(std::round(kSphericalRadius / g.h)), g.n / 2 - 1);
        k[0] = g.n / 2 + off;
    } else {
        const double t_c = spec.phase->time_dependent() ? 0.5 * (spec.t0 + spec.t1) : 0.0;
        Vec zeta0(g.d - 1, 0.0);
        double tau = spec.phase->time_dependent() ? spec.phase->eval(zeta0, t_c) : spec.phase->eval(zeta0);
        k[g.d - 1] = g.n / 2 + static_cast<int>(std::round(tau / g.h));
    }
    return mode(g, k, cplx(1.0, 0.0));
}

}  // namespace

GridFunction make_witness(WitnessKind kind, const Grid& g, const OperatorSpec& spec, uint64_t seed) {
    switch (kind) {
        case WitnessKind::Knapp: return knapp_witness(g, spec);
        case WitnessKind::Focus: return focus_witness(g, spec);
        case WitnessKind::RandomSlab: return random_slab_witness(g, spec, seed);
        case WitnessKind::Conjugate: return conjugate_witness(g, spec);
        case WitnessKind::Mode: return mode_witness(g, spec);
    }
    throw std::logic_error("make_witness: unreachable");
}

GridFunction op_apply(const GridFunction& f, const OperatorSpec& spec) {
    switch (spec.kind) {
        case OpKind::TDelta: return t_delta(f, spec);
        case OpKind::SDelta: return s_delta(f, spec);
        case OpKind::BochnerRiesz: return bochner_riesz(f, spec);
        case OpKind::SteinSquare: return stein_square(f, spec);
        case OpKind::SphericalSquare: return spherical_square(f, spec);
    }
    throw std::logic_error("op_apply: unreachable");
}

RegressionFit fit_loglog(const std::vector<double>& deltas, const std::vector<double>& ratios) {
    if (deltas.size() != ratios.size() || deltas.size() < 2)
        throw std::invalid_argument("fit_loglog: need at least two points");
    const int n = static_cast<int>(deltas.size());
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = std::log2(deltas[i]);
        y[i] = std::log2(ratios[i]);
    }
    double xm = 0.0, ym = 0.0;
    for (int i = 0; i < n; ++i) {
        xm += x[i];
        ym += y[i];
    }
    xm /= n;
    ym /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    RegressionFit fit;
    fit.npoints = n;
    fit.slope = sxy / sxx;
    fit.intercept = ym - fit.slope * xm;
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
        double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss += r * r;
        fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
    }
    fit.stderr_slope = n > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
    return fit;
}

bool experiment_grid(int d, double delta, const ExperimentPolicy& policy, Grid* out) {
    double h = delta * policy.h_over_delta;
    int n = 2;
    while (n * h < 2.0) n <<= 1;
    int64_t pts = 1;
    for (int i = 0; i < d; ++i) pts *= n;
    if (pts > policy.max_points) return false;
    *out = make_grid(d, n, h);
    return true;
}

namespace {

OperatorSpec spec_for(OpKind kind, const std::string& phase_id, int d, double delta) {
    switch (kind) {
        case OpKind::TDelta: return make_tdelta(parse_phase(phase_id, d), delta);
        case OpKind::SDelta: return make_sdelta(parse_phase(phase_id, d), delta);
        case OpKind::SphericalSquare: return make_spherical(delta);
        default: throw std::invalid_argument("scaling_experiment: kind must be tdelta/sdelta/spherical");
    }
}

double theoretical_slope_for(OpKind kind, int d, double p) {
    ExponentTable t = exponents(d);
    return kind == OpKind::TDelta ? t.e_t(p) : t.e_s(p);
}

}  // namespace

ScalingReport scaling_experiment(const ScalingConfig& cfg) {
    if (cfg.ladder.size() < 2) throw std::invalid_argument("scaling_experiment: ladder too short");
    if (cfg.witnesses.empty()) throw std::invalid_argument("scaling_experiment: empty witness suite");
    ScalingReport rep;
    rep.d = cfg.d;
    rep.p = cfg.p;
    rep.theoretical_slope = theoretical_slope_for(cfg.kind, cfg.d, cfg.p);
    {
        OperatorSpec probe = spec_for(cfg.kind, cfg.phase_id, cfg.d, cfg.ladder.front());
        rep.op_id = op_kind_name(probe.kind) + "(" + (probe.phase ? probe.phase->id() : "radial") + ")";
    }
    std::map<std::string, std::vector<std::pair<double, double>>> per_witness;
    for (double delta : cfg.ladder) {
        Grid g;
        if (!experiment_grid(cfg.d, delta, cfg.policy, &g)) {
            rep.skipped_deltas.push_back(delta);
            RatioSample s;
            s.delta = delta;
            s.skipped = true;
            rep.samples.push_back(s);
            continue;
        }
        OperatorSpec spec = spec_for(cfg.kind, cfg.phase_id, cfg.d, delta);
        double best = 0.0;
        for (WitnessKind w : cfg.witnesses) {
            GridFunction f = make_witness(w, g, spec, cfg.seed);
            GridFunction f_space = transform(f);
            double den = lp_norm(f_space, cfg.p);
            if (!(den > 0.0)) continue;
            double num = lp_norm(op_apply(f, spec), cfg.p);
            double ratio = num / den;
            RatioSample s;
            s.delta = delta;
            s.witness = witness_name(w);
            s.ratio = ratio;
            s.normalized = ratio / std::pow(delta, rep.theoretical_slope);
            s.n_grid = g.n;
            rep.samples.push_back(s);
            per_witness[s.witness].push_back({delta, ratio});
            best = std::max(best, ratio);
        }
        if (best > 0.0) {
            rep.ladder.push_back(delta);
            rep.max_ratio.push_back(best);
        }
    }
    if (rep.ladder.size() >= 2) rep.fit = fit_loglog(rep.ladder, rep.max_ratio);
    double steepest = 1e300;
    for (const auto& [name, pts] : per_witness) {
        if (pts.size() < 2) continue;
        std::vector<double> ds, rs;
        for (auto& [d_, r_] : pts) {
            ds.push_back(d_);
            rs.push_back(r_);
        }
        double sl = fit_loglog(ds, rs).slope;
        if (sl < steepest) {
            steepest = sl;
            rep.dominant_witness = name;
        }
    }
    return rep;
}

BilinearReport bilinear_transversal_experiment(const std::string& phase_id, int d, double p,
                                               double sigma_sep, const std::vector<double>& ladder,
                                               const ExperimentPolicy& policy) {
    if (p < 4.0) throw std::invalid_argument("bilinear: p >= 4 = 2k/(k-1) required for k = 2");
    BilinearReport rep;
    rep.d = d;
    rep.p = p;
    rep.sigma = sigma_sep;
    PhasePtr psi_probe = parse_phase(phase_id, d);
    // two cubes on the surface, centers at zeta = -/+ 0.3 along the first axis;
    // the bump phi(./boxw) is supported in |.| <= 2 boxw, so reach stays in (1/2)I
    Vec a1(d - 1, 0.0), a2(d - 1, 0.0);
    a1[0] = -0.3;
    a2[0] = 0.3;
    const double boxw = 0.07;
    {
        // transversality of the supports: min Vol over the support edges
        double vmin = 1e300;
        for (int s1 = -2; s1 <= 2; ++s1)
            for (int s2 = -2; s2 <= 2; ++s2) {
                Vec z1 = a1, z2 = a2;
                z1[0] += s1 * boxw;
                z2[0] += s2 * boxw;
                std::vector<Vec> ns{normal(*psi_probe, z1), normal(*psi_probe, z2)};
                vmin = std::min(vmin, transversality_volume(ns));
            }
        rep.achieved_vol = vmin;
        if (vmin < sigma_sep) throw std::invalid_argument("bilinear: supports are not sigma-transversal");
    }
    const ExponentTable tab = exponents(d);
    for (double delta : ladder) {
        Grid g;
        if (!experiment_grid(d, delta, policy, &g)) continue;
        OperatorSpec spec = make_tdelta(parse_phase(phase_id, d), delta);
        auto piece = [&](const Vec& a) {
            GridFunction f(g, Rep::Frequency);
            std::vector<int> idx(d);
            Vec xi(d);
            for (int64_t i = 0; i < g.size(); ++i) {
                g.unflatten(i, idx.data());
                for (int q = 0; q < d; ++q) xi[q] = g.freq_coord(idx[q]);
                double box = 1.0;
                for (int q = 0; q < d - 1; ++q) box *= phi_bump((xi[q] - a[q]) / boxw);
                if (box == 0.0) continue;
                std::span<const double> zeta(xi.data(), d - 1);
                f.v[i] = phi_bump((xi[d - 1] - spec.phase->eval(zeta)) / delta) * box;
            }
            return f;
        };
        GridFunction f1 = piece(a1), f2 = piece(a2);
        GridFunction t1 = t_delta(f1, spec), t2 = t_delta(f2, spec);
        double lhs = lp_norm(pointwise_product(t1, t2), p / 2.0);
        double n1 = lp_norm(transform(f1), p), n2 = lp_norm(transform(f2), p);
        BilinearPoint pt;
        pt.delta = delta;
        pt.lhs = lhs;
        pt.n_grid = g.n;
        pt.normalized = lhs / (std::pow(delta, 2.0 * tab.e_t(p)) * n1 * n2);
        rep.points.push_back(pt);
    }
    double lo = 1e300, hi = 0.0;
    for (const BilinearPoint& pt : rep.points) {
        lo = std::min(lo, pt.normalized);
        hi = std::max(hi, pt.normalized);
    }
    rep.spread = (lo > 0.0 && hi > 0.0) ? hi / lo : 0.0;
    return rep;
}

ConfinedReport confined_square_experiment(int d, double p, double sigma_tilde,
                                          const std::vector<double>& ladder, uint64_t seed,
                                          const ExperimentPolicy& policy) {
    const int k = 2;
    if (!(p >= 2.0 && p <= 2.0 * k / (k - 1.0)))
        throw std::invalid_argument("confined: p must lie in [2, 2k/(k-1)]");
    if (d < 3) throw std::invalid_argument("confined: d >= 3 required");
    ConfinedReport rep;
    rep.d = d;
    rep.k = k;
    rep.p = p;
    rep.sigma_tilde = sigma_tilde;
    // normals along the zeta_1 axis stay in Pi = span(e_1, e_d)
    Vec a1(d - 1, 0.0), a2(d - 1, 0.0);
    a1[0] = -0.3;
    a2[0] = 0.3;
    const double boxw = std::min(sigma_tilde, 0.15);  // direction confinement, support in (1/2)I^d
    Rng rng(seed);
    for (double delta : ladder) {
        Grid g;
        if (!experiment_grid(d, delta, policy, &g)) continue;
        OperatorSpec spec = make_sdelta(make_affine_time_paraboloid(d), delta);
        auto piece = [&](const Vec& a, uint64_t salt) {
            GridFunction f(g, Rep::Frequency);
            Rng r2(seed ^ salt);
            std::vector<int> idx(d);
            Vec xi(d);
            for (int64_t i = 0; i < g.size(); ++i) {
                g.unflatten(i, idx.data());
                for (int q = 0; q < d; ++q) xi[q] = g.freq_coord(idx[q]);
                bool in = std::abs(xi[0] - a[0]) <= boxw;
                for (int q = 1; q < d - 1; ++q) in = in && std::abs(xi[q]) <= boxw * 0.5;
                if (!in) continue;
                std::span<const double> zeta(xi.data(), d - 1);
                double gap = xi[d - 1] - spec.phase->eval(zeta, 0.0);
                if (std::abs(gap) <= delta) f.v[i] = cplx(r2.normal(), r2.normal());
            }
            return f;
        };
        // direction confinement precondition: all support normals near Pi
        GridFunction f1 = piece(a1, 0x9e3779b9ULL), f2 = piece(a2, 0x7f4a7c15ULL);
        GridFunction s1 = s_delta(f1, spec), s2 = s_delta(f2, spec);
        // LHS over the ball B(0, 1/sigma~); RHS with the rho weight
        double ball_r = 1.0 / sigma_tilde;
        GridFunction prod = pointwise_product(s1, s2);
        double lhs_p = 0.0;
        std::vector<int> idx(d);
        Vec x(d);
        for (int64_t i = 0; i < g.size(); ++i) {
            g.unflatten(i, idx.data());
            double r2v = 0.0;
            for (int a = 0; a < d; ++a) {
                x[a] = g.space_coord(idx[a]);
                r2v += x[a] * x[a];
            }
            if (r2v <= ball_r * ball_r) lhs_p += std::pow(std::abs(prod.v[i]), p / k);
        }
        double lhs = std::pow(lhs_p * g.cell_volume(), k / p);
        CubeSet cs = cubes_at_scale(g, sigma_tilde / 2.0);  // cubes of side sigma~
        auto rhs_factor = [&](const GridFunction& fi) {
            GridFunction acc(g, Rep::Space);
            for (int64_t q = 0; q < cs.count(); ++q) {
                GridFunction fq = cube_restrict(fi, cs, q);
                bool nz = false;
                for (const cplx& z : fq.v)
                    if (std::norm(z) > 0.0) {
                        nz = true;
                        break;
                    }
                if (!nz) continue;
                GridFunction sq = s_delta(fq, spec);
                for (size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += std::norm(sq.v[i]);
            }
            double sum = 0.0;
            std::vector<int> id2(d);
            Vec xx(d), scaled(d);
            for (int64_t i = 0; i < g.size(); ++i) {
                g.unflatten(i, id2.data());
                for (int a = 0; a < d; ++a) {
                    xx[a] = g.space_coord(id2[a]);
                    scaled[a] = xx[a] / ball_r;
                }
                double w = rho_weight(scaled);
                sum += std::pow(std::sqrt(acc.v[i].real()) * w, p);
            }
            return std::pow(sum * g.cell_volume(), 1.0 / p);
        };
        ConfinedPoint pt;
        pt.delta = delta;
        pt.lhs = lhs;
        pt.rhs = rhs_factor(f1) * rhs_factor(f2);
        pt.ratio = pt.rhs > 0.0 ? pt.lhs / pt.rhs : 0.0;
        rep.points.push_back(pt);
    }
    double lo = 1e300, hi = 0.0;
    for (const ConfinedPoint& pt : rep.points)
        if (pt.ratio > 0.0) {
            lo = std::min(lo, pt.ratio);
            hi = std::max(hi, pt.ratio);
        }
    rep.spread = (hi > 0.0) ? hi / lo : 0.0;
    return rep;
}

InductionEstimate induction_estimate(char kind, int d, double p, double delta,
                                     const std::vector<WitnessKind>& suite, uint64_t seed,
                                     const ExperimentPolicy& policy) {
    if (suite.empty()) throw std::invalid_argument("induction_estimate: empty suite");
    std::vector<std::string> phases =
        (kind == 'A') ? std::vector<std::string>{"paraboloid", "sphere", "perturbed:g=cubic,eps=0.05"}
                      : std::vector<std::string>{"affine-time", "br:eps=0.2"};
    InductionEstimate out;
    Grid g;
    if (!experiment_grid(d, delta, policy, &g)) throw std::runtime_error("induction_estimate: grid budget");
    for (const std::string& pid : phases) {
        OperatorSpec spec = (kind == 'A') ? make_tdelta(parse_phase(pid, d), delta)
                                          : make_sdelta(parse_phase(pid, d), delta);
        for (WitnessKind w : suite) {
            GridFunction f = make_witness(w, g, spec, seed);
            double den = lp_norm(transform(f), p);
            if (!(den > 0.0)) continue;
            double ratio = lp_norm(op_apply(f, spec), p) / den;
            RatioSample s;
            s.delta = delta;
            s.witness = pid + "/" + witness_name(w);
            s.ratio = ratio;
            s.n_grid = g.n;
            out.detail.push_back(s);
            out.value = std::max(out.value, ratio);
        }
    }
    return out;
}

namespace {

// witness supported inside q((a, mu), eps) around the surface point (a, psi(a)):
// a tangent knapp plate plus a seeded slab patch, both confined to the cube.
GridFunction small_support_witness(const Grid& g, const OperatorSpec& spec, double eps,
                                   uint64_t seed, bool random_patch) {
    const int d = g.d;
    const double delta = spec.delta;
    const double t_c = spec.phase->time_dependent() ? 0.5 * (spec.t0 + spec.t1) : 0.0;
    Vec a(d - 1, 0.0);
    a[0] = 0.25;  // off-center so the rescaling map is nontrivial
    double mu = spec.phase->time_dependent() ? spec.phase->eval(a, t_c) : spec.phase->eval(a);
    Vec grad = spec.phase->time_dependent() ? spec.phase->grad_zeta(a, t_c) : spec.phase->grad_zeta(a);
    Rng rng(seed);
    GridFunction f(g, Rep::Frequency);
    std::vector<int> idx(d);
    Vec xi(d);
    const double w = std::min(std::sqrt(delta), 0.2 * eps);
    for (int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx.data());
        bool in_cube = true;
        for (int q = 0; q < d; ++q) {
            xi[q] = g.freq_coord(idx[q]);
            double c = (q < d - 1) ? a[q] : mu;
            if (std::abs(xi[q] - c) > 0.5 * eps) in_cube = false;
        }
        if (!in_cube) continue;
        std::span<const double> zeta(xi.data(), d - 1);
        if (random_patch) {
            double gap = xi[d - 1] - (spec.phase->time_dependent() ? spec.phase->eval(zeta, t_c)
                                                                   : spec.phase->eval(zeta));
            if (std::abs(gap) <= delta) f.v[i] = cplx(rng.normal(), rng.normal());
        } else {
            double v = 1.0, plane = mu;
            for (int q = 0; q < d - 1; ++q) {
                v *= phi_bump(2.0 * (xi[q] - a[q]) / w);
                plane += grad[q] * (xi[q] - a[q]);
            }
            f.v[i] = v * phi_bump(2.0 * (xi[d - 1] - plane) / delta);
        }
    }
    return f;
}

}  // namespace

CovarianceCheck rescale_covariance(char kind, int d, double p, double delta, double eps,
                                   uint64_t seed, const ExperimentPolicy& policy) {
    CovarianceCheck out;
    out.hypothesis_ok = (kind == 'A') ? (delta <= 1e-2 * eps * eps)
                                      : (10.0 * std::sqrt(delta) <= eps && eps <= 0.5);
    Grid g;
    if (!experiment_grid(d, delta, policy, &g)) throw std::runtime_error("rescale_covariance: grid budget");
    OperatorSpec spec = (kind == 'A') ? make_tdelta(make_paraboloid(d), delta)
                                      : make_sdelta(make_affine_time_paraboloid(d), delta);
    double best = 0.0;
    for (int patch = 0; patch < 2; ++patch) {
        GridFunction f = small_support_witness(g, spec, eps, seed + patch, patch == 1);
        double den = lp_norm(transform(f), p);
        if (!(den > 0.0)) continue;
        best = std::max(best, lp_norm(op_apply(f, spec), p) / den);
    }
    out.small_ratio = best;
    double delta_up = std::min(1.0, delta / (eps * eps));
    std::vector<WitnessKind> suite{WitnessKind::Knapp, WitnessKind::Focus, WitnessKind::RandomSlab};
    InductionEstimate base = induction_estimate(kind, d, p, delta_up, suite, seed, policy);
    out.base = (kind == 'A') ? base.value : std::pow(eps, 1.0 / p + 0.5) * base.value;
    out.quotient = out.base > 0.0 ? out.small_ratio / out.base : 0.0;
    return out;
}

}  // namespace freqlab
