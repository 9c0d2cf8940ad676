#include "freqlab/multiplier.hpp"

#include <algorithm>
#include <cmath>

namespace freqlab {

std::string op_kind_name(OpKind k) {
    switch (k) {
        case OpKind::TDelta: return "tdelta";
        case OpKind::SDelta: return "sdelta";
        case OpKind::BochnerRiesz: return "br";
        case OpKind::SteinSquare: return "stein";
        case OpKind::SphericalSquare: return "spherical";
    }
    return "?";
}

int OperatorSpec::resolved_nt() const {
    if (nt > 0) return nt;
    if (delta > 0.0) return std::max(8, static_cast<int>(std::ceil((t1 - t0) / (delta / 4.0))));
    return 256;
}

OperatorSpec make_tdelta(PhasePtr phase, double delta) {
    OperatorSpec s;
    s.kind = OpKind::TDelta;
    s.phase = std::move(phase);
    s.delta = delta;
    return s;
}

OperatorSpec make_sdelta(PhasePtr phase, double delta, EtaKind eta) {
    if (!phase->time_dependent()) throw std::invalid_argument("sdelta: time-dependent phase required");
    OperatorSpec s;
    s.kind = OpKind::SDelta;
    s.phase = std::move(phase);
    s.delta = delta;
    s.eta = eta;
    return s;
}

OperatorSpec make_spherical(double delta) {
    OperatorSpec s;
    s.kind = OpKind::SphericalSquare;
    s.delta = delta;
    s.t0 = 0.5;
    s.t1 = 2.0;
    return s;
}

OperatorSpec make_bochner_riesz(double alpha, double t) {
    if (!(alpha > 0.0)) throw std::invalid_argument("bochner_riesz: alpha must be positive");
    OperatorSpec s;
    s.kind = OpKind::BochnerRiesz;
    s.alpha = alpha;
    s.t_br = t;
    return s;
}

OperatorSpec make_stein_square(double alpha, double t0, double t1, int nt) {
    if (!(alpha > 0.0)) throw std::invalid_argument("stein_square: alpha must be positive");
    if (!(t0 > 0.0 && t1 > t0)) throw std::invalid_argument("stein_square: window must lie in (0, inf)");
    OperatorSpec s;
    s.kind = OpKind::SteinSquare;
    s.alpha = alpha;
    s.t0 = t0;
    s.t1 = t1;
    s.nt = nt;
    return s;
}

GridFunction apply_multiplier(const GridFunction& f,
                              const std::function<cplx(std::span<const double>)>& m) {
    GridFunction fh = (f.rep == Rep::Frequency) ? f : transform(f);
    const Grid& g = fh.grid;
    std::vector<int> idx(g.d);
    Vec xi(g.d);
    for (int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx.data());
        for (int a = 0; a < g.d; ++a) xi[a] = g.freq_coord(idx[a]);
        fh.v[i] *= m(xi);
    }
    return transform(fh);
}

void require_half_box_support(const GridFunction& f, double tol) {
    if (freq_mass_fraction_outside(f, 0.5) > tol)
        throw std::invalid_argument("support precondition: f-hat has mass outside (1/2)I^d");
}

namespace {

// phi(eta(xi)(tau - psi(zeta))/delta), zero outside the phase's zeta-domain.
double slab_symbol_static(const OperatorSpec& spec, std::span<const double> xi) {
    const int d = static_cast<int>(xi.size());
    std::span<const double> zeta = xi.subspan(0, d - 1);
    double r2 = 0.0;
    for (double z : zeta) r2 += z * z;
    double dr = spec.phase->domain_radius();
    if (std::isfinite(dr) && r2 >= dr * dr) return 0.0;
    double eta = eta_profile(spec.eta, xi, 0.0);
    return phi_bump(eta * (xi[d - 1] - spec.phase->eval(zeta)) / spec.delta);
}

// Per-column tau support range of nonzero frequency samples; the tau axis is
// the last (contiguous) axis.
struct ColumnSupport {
    std::vector<int> lo, hi;  // per column; lo > hi means empty
};

ColumnSupport column_support(const GridFunction& fh) {
    const Grid& g = fh.grid;
    const int n = g.n;
    const int64_t ncols = g.size() / n;
    ColumnSupport cs;
    cs.lo.assign(ncols, n);
    cs.hi.assign(ncols, -1);
    for (int64_t c = 0; c < ncols; ++c) {
        const cplx* row = fh.v.data() + c * n;
        for (int k = 0; k < n; ++k)
            if (std::norm(row[k]) > 0.0) {
                if (cs.lo[c] == n) cs.lo[c] = k;
                cs.hi[c] = k;
            }
    }
    return cs;
}

void fill_column_zeta(const Grid& g, int64_t col, Vec& zeta) {
    // col indexes the leading d-1 axes in row-major order
    for (int a = g.d - 2; a >= 0; --a) {
        zeta[a] = g.freq_coord(static_cast<int>(col % g.n));
        col /= g.n;
    }
}

std::vector<double> trapezoid_weights(int nt, double t0, double t1) {
    // nt intervals -> nt+1 nodes; weights sum to t1 - t0 exactly
    std::vector<double> w(nt + 1, (t1 - t0) / nt);
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

// tau-intervals (at most two) where the symbol can be nonzero on a column
using RowWindow =
    std::function<int(std::span<const double> zeta, double t, std::pair<double, double>*)>;

// Shared driver for the L^2_t square kinds: accumulates
// sum_j w_j |F^{-1}[ m(xi, t_j) f-hat ]|^2 over the active nodes only.
GridFunction time_square(const GridFunction& f, const OperatorSpec& spec,
                         const std::function<double(std::span<const double>, double)>& symbol,
                         const std::function<bool(const ColumnSupport&, const Grid&, double)>& node_active,
                         const std::vector<double>& extra_node_factor = {},
                         const RowWindow& row_window = {}) {
    GridFunction fh = (f.rep == Rep::Frequency) ? f : transform(f);
    const Grid& g = fh.grid;
    const int n = g.n;
    const int64_t ncols = g.size() / n;
    ColumnSupport cs = column_support(fh);

    const int nt = spec.resolved_nt();
    std::vector<double> w = trapezoid_weights(nt, spec.t0, spec.t1);

    std::vector<double> acc(static_cast<size_t>(g.size()), 0.0);
    GridFunction work(g, Rep::Frequency);
    Vec xi(g.d);
    Vec zeta(g.d - 1);
    std::pair<double, double> windows[2];
    for (int j = 0; j <= nt; ++j) {
        const double t = spec.t0 + (spec.t1 - spec.t0) * j / nt;
        if (!node_active(cs, g, t)) continue;
        bool any = false;
        std::fill(work.v.begin(), work.v.end(), cplx(0, 0));
        for (int64_t c = 0; c < ncols; ++c) {
            if (cs.lo[c] > cs.hi[c]) continue;
            fill_column_zeta(g, c, zeta);
            for (int a = 0; a < g.d - 1; ++a) xi[a] = zeta[a];
            const cplx* src = fh.v.data() + c * n;
            cplx* dst = work.v.data() + c * n;
            int nwin = 1;
            windows[0] = {g.freq_coord(cs.lo[c]), g.freq_coord(cs.hi[c])};
            if (row_window) nwin = row_window(zeta, t, windows);
            for (int wdx = 0; wdx < nwin; ++wdx) {
                int klo = std::max<int>(cs.lo[c],
                                        static_cast<int>(std::floor(windows[wdx].first / g.h)) + n / 2);
                int khi = std::min<int>(cs.hi[c],
                                        static_cast<int>(std::ceil(windows[wdx].second / g.h)) + n / 2);
                for (int k = std::max(klo, 0); k <= std::min(khi, n - 1); ++k) {
                    xi[g.d - 1] = g.freq_coord(k);
                    double m = symbol(xi, t);
                    if (m != 0.0) {
                        dst[k] = m * src[k];
                        any = true;
                    }
                }
            }
        }
        if (!any) continue;
        GridFunction gt = transform(work);
        const double wj = w[j] * (extra_node_factor.empty() ? 1.0 : extra_node_factor[j]);
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += wj * std::norm(gt.v[i]);
    }
    GridFunction out(g, Rep::Space);
    for (size_t i = 0; i < acc.size(); ++i) out.v[i] = std::sqrt(acc[i]);
    return out;
}

}  // namespace

GridFunction t_delta(const GridFunction& f, const OperatorSpec& spec) {
    if (spec.kind != OpKind::TDelta) throw std::invalid_argument("t_delta: wrong spec kind");
    if (!spec.phase || spec.phase->time_dependent())
        throw std::invalid_argument("t_delta: static phase required");
    require_half_box_support(f);
    return apply_multiplier(f, [&](std::span<const double> xi) -> cplx {
        return slab_symbol_static(spec, xi);
    });
}

GridFunction s_delta(const GridFunction& f, const OperatorSpec& spec) {
    if (spec.kind != OpKind::SDelta) throw std::invalid_argument("s_delta: wrong spec kind");
    if (!spec.phase || !spec.phase->time_dependent())
        throw std::invalid_argument("s_delta: time-dependent phase required");
    if (spec.node_spacing() > spec.delta / 4.0 + 1e-15)
        throw std::invalid_argument("t-resolution insufficient: node spacing exceeds delta/4");
    require_half_box_support(f);
    const PhaseSurface& psi = *spec.phase;
    const double delta = spec.delta;
    auto symbol = [&](std::span<const double> xi, double t) {
        std::span<const double> zeta = xi.subspan(0, xi.size() - 1);
        double eta = eta_profile(spec.eta, xi, t);
        return phi_bump(eta * (xi.back() - psi.eval(zeta, t)) / delta);
    };
    // slab |tau - psi(zeta,t)| <= 4 delta can only meet a column whose
    // tau-support window overlaps it; dt psi ~ 1 keeps this a cheap scan.
    auto active = [&](const ColumnSupport& cs, const Grid& g, double t) {
        Vec zeta(g.d - 1);
        for (int64_t c = 0; c < static_cast<int64_t>(cs.lo.size()); ++c) {
            if (cs.lo[c] > cs.hi[c]) continue;
            fill_column_zeta(g, c, zeta);
            double r2 = 0.0;
            for (double z : zeta) r2 += z * z;
            double dr = psi.domain_radius();
            if (std::isfinite(dr) && r2 >= dr * dr) continue;
            double center = psi.eval(zeta, t);
            double lo = g.freq_coord(cs.lo[c]), hi = g.freq_coord(cs.hi[c]);
            if (center + 4.0 * delta >= lo && center - 4.0 * delta <= hi) return true;
        }
        return false;
    };
    return time_square(f, spec, symbol, active);
}

GridFunction bochner_riesz(const GridFunction& f, const OperatorSpec& spec) {
    if (spec.kind != OpKind::BochnerRiesz) throw std::invalid_argument("bochner_riesz: wrong spec kind");
    const double t2 = spec.t_br * spec.t_br, alpha = spec.alpha;
    return apply_multiplier(f, [&](std::span<const double> xi) -> cplx {
        double q = 0.0;
        for (double x : xi) q += x * x;
        double s = 1.0 - q / t2;
        return s > 0.0 ? std::pow(s, alpha) : 0.0;
    });
}

GridFunction stein_square(const GridFunction& f, const OperatorSpec& spec) {
    if (spec.kind != OpKind::SteinSquare) throw std::invalid_argument("stein_square: wrong spec kind");
    OperatorSpec s2 = spec;
    if (spec.alpha < 1.0) s2.nt = 2 * spec.resolved_nt();  // singular symbol: refine quadrature
    const double alpha = spec.alpha;
    auto symbol = [&](std::span<const double> xi, double t) {
        double q = 0.0;
        for (double x : xi) q += x * x;
        double s = 1.0 - q / (t * t);
        if (s <= 0.0) return 0.0;
        // d/dt (1 - |xi|^2/t^2)_+^alpha = 2 alpha |xi|^2 t^-3 (1 - |xi|^2/t^2)^{alpha-1}
        return 2.0 * alpha * q * std::pow(t, -3.0) * std::pow(s, alpha - 1.0);
    };
    auto active = [](const ColumnSupport&, const Grid&, double) { return true; };
    const int nt = s2.resolved_nt();
    std::vector<double> tfac(nt + 1);
    for (int j = 0; j <= nt; ++j) tfac[j] = s2.t0 + (s2.t1 - s2.t0) * j / nt;  // the t dt measure
    return time_square(f, s2, symbol, active, tfac);
}

GridFunction spherical_square(const GridFunction& f, const OperatorSpec& spec) {
    if (spec.kind != OpKind::SphericalSquare) throw std::invalid_argument("spherical_square: wrong spec kind");
    if (spec.t0 < 0.5 - 1e-12 || spec.t1 > 2.0 + 1e-12)
        throw std::invalid_argument("spherical_square: window must lie in [1/2, 2]");
    if (spec.node_spacing() > spec.delta / 4.0 + 1e-15)
        throw std::invalid_argument("t-resolution insufficient: node spacing exceeds delta/4");
    const double delta = spec.delta;
    auto symbol = [&](std::span<const double> xi, double t) {
        double q = 0.0;
        for (double x : xi) q += x * x;
        return phi_bump((1.0 - std::sqrt(q) / t) / delta);
    };
    // active when the annulus |xi| in t(1 +- 2delta) meets the radial range of supp f-hat
    auto active = [&](const ColumnSupport& cs, const Grid& g, double t) {
        Vec zeta(g.d - 1);
        for (int64_t c = 0; c < static_cast<int64_t>(cs.lo.size()); ++c) {
            if (cs.lo[c] > cs.hi[c]) continue;
            fill_column_zeta(g, c, zeta);
            double r2 = 0.0;
            for (double z : zeta) r2 += z * z;
            double tlo = g.freq_coord(cs.lo[c]), thi = g.freq_coord(cs.hi[c]);
            double taumax = std::max(std::abs(tlo), std::abs(thi));
            double taumin = (tlo <= 0.0 && thi >= 0.0) ? 0.0 : std::min(std::abs(tlo), std::abs(thi));
            double rmin = std::sqrt(r2 + taumin * taumin), rmax = std::sqrt(r2 + taumax * taumax);
            if (rmax >= t * (1.0 - 2.0 * delta) && rmin <= t * (1.0 + 2.0 * delta)) return true;
        }
        return false;
    };
    // per-column row windows: the annulus t(1 +- 2delta) meets the column in
    // at most two tau-bands
    auto window = [delta](std::span<const double> zeta, double t, std::pair<double, double>* out) {
        double r2 = 0.0;
        for (double z : zeta) r2 += z * z;
        double rhi = t * (1.0 + 2.0 * delta), rlo = t * (1.0 - 2.0 * delta);
        double b2 = rhi * rhi - r2;
        if (b2 <= 0.0) return 0;
        double b = std::sqrt(b2);
        double a2 = rlo * rlo - r2;
        double a = a2 > 0.0 ? std::sqrt(a2) : 0.0;
        if (a == 0.0) {
            out[0] = {-b, b};
            return 1;
        }
        out[0] = {-b, -a};
        out[1] = {a, b};
        return 2;
    };
    return time_square(f, spec, symbol, active, {}, window);
}

GridFunction slab_kernel(const Grid& g, const OperatorSpec& spec, double sigma,
                         const std::function<double(std::span<const double>)>* chi_override) {
    if (!(g.period >= 8.0 * M_PI / spec.delta - 1e-9))
        throw std::invalid_argument("kernel wraps: period below 8*pi/delta");
    if (!spec.phase || spec.phase->time_dependent())
        throw std::invalid_argument("slab_kernel: static phase required");
    GridFunction m(g, Rep::Frequency);
    std::vector<int> idx(g.d);
    Vec xi(g.d);
    for (int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx.data());
        for (int a = 0; a < g.d; ++a) xi[a] = g.freq_coord(idx[a]);
        double chi = chi_override ? (*chi_override)(xi) : chi_kernel(xi, sigma);
        if (chi == 0.0) continue;
        m.v[i] = slab_symbol_static(spec, xi) * chi;
    }
    GridFunction k = transform(m);
    // continuum normalization (2pi)^{-d} integral m e^{ix.xi} dxi
    const double c = std::pow(g.n * g.h / (2.0 * M_PI), g.d);
    for (cplx& z : k.v) z *= c;
    return k;
}

KernelDecayFit kernel_decay_fit(const GridFunction& kernel, const OperatorSpec& spec, double sigma,
                                int m_eff) {
    const Grid& g = kernel.grid;
    if (kernel.rep != Rep::Space) throw std::invalid_argument("kernel_decay_fit: space representation required");
    const double delta = spec.delta;
    const double scale = delta * std::pow(sigma, g.d - 1);
    KernelDecayFit fit;
    fit.m_eff = m_eff;
    std::vector<int> idx(g.d);
    const int nshell = 24;
    std::vector<double> shellmax(nshell, 0.0);
    double cbest = 0.0;
    for (int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx.data());
        double r2 = 0.0;
        for (int a = 0; a < g.d; ++a) {
            double x = g.space_coord(idx[a]);
            r2 += x * x;
        }
        double r = std::sqrt(r2);
        double bound = scale * std::pow(1.0 + delta * r, -m_eff);
        double ratio = std::abs(kernel.v[i]) / bound;
        cbest = std::max(cbest, ratio);
        int shell = std::min(nshell - 1, static_cast<int>(std::floor(std::log2(1.0 + delta * r) * 4.0)));
        shellmax[shell] = std::max(shellmax[shell], ratio);
    }
    fit.constant = cbest;
    for (int s = 0; s < nshell; ++s)
        if (shellmax[s] > 0.0) fit.shell_ratios.emplace_back(std::pow(2.0, s / 4.0), shellmax[s]);

    std::vector<int> c0(g.d, g.n / 2);
    fit.k0 = std::abs(kernel.v[g.flatten(c0.data())]);

    // slab-measure prediction: (2pi)^{-d} integral of the symbol, by direct
    // midpoint quadrature over zeta with the tau integral resolved along the
    // slab (independent of the FFT path).
    const int d = g.d;
    const int nq = 256, subq = 128;
    const double step = 2.0 / nq;
    double sum = 0.0;
    std::vector<int> it(d - 1, 0);
    bool done = false;
    while (!done) {
        Vec zeta(d - 1);
        for (int a = 0; a < d - 1; ++a) zeta[a] = -1.0 + (it[a] + 0.5) * step;
        double r2 = 0.0;
        for (double z : zeta) r2 += z * z;
        double dr = spec.phase->domain_radius();
        if (!(std::isfinite(dr) && r2 >= dr * dr)) {
            double center = spec.phase->eval(zeta);
            double tsum = 0.0;
            const double tstep = 8.0 * spec.delta / subq;
            Vec full = zeta;
            full.push_back(0.0);
            for (int s = 0; s < subq; ++s) {
                full[d - 1] = center - 4.0 * spec.delta + (s + 0.5) * tstep;
                double eta = eta_profile(spec.eta, full, 0.0);
                tsum += phi_bump(eta * (full[d - 1] - center) / spec.delta) *
                        chi_kernel(std::span<const double>(full.data(), d), sigma) * tstep;
            }
            sum += tsum * std::pow(step, d - 1);
        }
        for (int a = 0;; ++a) {
            if (a == d - 1) {
                done = true;
                break;
            }
            if (++it[a] < nq) break;
            it[a] = 0;
        }
    }
    fit.k0_predicted = sum / std::pow(2.0 * M_PI, d);
    return fit;
}

}  // namespace freqlab
