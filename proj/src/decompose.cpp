#include "freqlab/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "freqlab/cutoff.hpp"
#include "freqlab/linalg.hpp"

namespace freqlab {

// ---- cube sets ---------------------------------------------------------------

CubeSet cubes_at_scale(const Grid& g, double sigma) {
    if (!(sigma > 0.0 && sigma <= 1.0)) throw std::invalid_argument("cubes_at_scale: sigma must be in (0,1]");
    double ratio = sigma / g.h;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0)
        throw std::invalid_argument("cube/lattice misalignment: h does not divide sigma");
    double cnt = 1.0 / sigma;
    if (std::abs(cnt - std::round(cnt)) > 1e-9)
        throw std::invalid_argument("cubes_at_scale: sigma must be dyadic");
    CubeSet cs;
    cs.grid = g;
    cs.sigma = sigma;
    cs.per_axis = static_cast<int>(std::round(cnt));
    return cs;
}

int64_t CubeSet::cube_of_lattice(const int* k) const {
    int64_t flat = 0;
    for (int a = 0; a < grid.d; ++a) {
        double xi = grid.freq_coord(k[a]);
        if (xi < -1.0 || xi >= 1.0) return -1;
        int cell = static_cast<int>(std::floor((xi + 1.0) / (2.0 * sigma)));
        if (cell < 0 || cell >= per_axis) return -1;
        flat = flat * per_axis + cell;
    }
    return flat;
}

void CubeSet::cell_of(int64_t cube, int* cell) const {
    for (int a = grid.d - 1; a >= 0; --a) {
        cell[a] = static_cast<int>(cube % per_axis);
        cube /= per_axis;
    }
}

Vec CubeSet::center(int64_t cube) const {
    std::vector<int> cell(grid.d);
    cell_of(cube, cell.data());
    Vec c(grid.d);
    for (int a = 0; a < grid.d; ++a) c[a] = lo(cell[a]) + sigma;
    return c;
}

double CubeSet::cube_distance(int64_t a, int64_t b) const {
    std::vector<int> ca(grid.d), cb(grid.d);
    cell_of(a, ca.data());
    cell_of(b, cb.data());
    double s = 0.0;
    for (int i = 0; i < grid.d; ++i) {
        double gap = (std::abs(ca[i] - cb[i]) - 1) * 2.0 * sigma;
        if (gap > 0.0) s += gap * gap;
    }
    return std::sqrt(s);
}

GridFunction cube_restrict(const GridFunction& f, const CubeSet& cs, int64_t cube) {
    GridFunction fh = (f.rep == Rep::Frequency) ? f : transform(f);
    const Grid& g = fh.grid;
    GridFunction out(g, Rep::Frequency);
    std::vector<int> idx(g.d);
    for (int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx.data());
        if (cs.cube_of_lattice(idx.data()) == cube) out.v[i] = fh.v[i];
    }
    return out;
}

std::pair<double, double> rubio_check(const GridFunction& f, double sigma, double p) {
    if (p < 2.0) throw std::invalid_argument("rubio_check: p must be >= 2");
    GridFunction fh = (f.rep == Rep::Frequency) ? f : transform(f);
    CubeSet cs = cubes_at_scale(fh.grid, sigma);
    double lhs_p = 0.0;
    for (int64_t q = 0; q < cs.count(); ++q) {
        GridFunction piece = cube_restrict(fh, cs, q);
        bool nonzero = false;
        for (const cplx& z : piece.v)
            if (std::norm(z) > 0.0) {
                nonzero = true;
                break;
            }
        if (!nonzero) continue;
        lhs_p += std::pow(lp_norm(transform(piece), p), p);
    }
    double rhs = lp_norm(f.rep == Rep::Space ? f : transform(fh), p);
    return {std::pow(lhs_p, 1.0 / p), rhs};
}

// ---- scattered sums ------------------------------------------------------------

namespace {

// chat(y) = (2 pi)^{-1} int_{-pi}^{pi} eta1(s) cos(y s) ds  (eta1 even)
double scattered_chat(double y) {
    const int n = 4096;
    const double a = -M_PI, b = M_PI, hstep = (b - a) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        double x = a + i * hstep;
        double w = (i == 0 || i == n) ? 0.5 : ((i % 2) ? 2.0 : 1.0);  // composite Simpson-ish
        (void)w;
        double tr = (i == 0 || i == n) ? 0.5 : 1.0;  // trapezoid (integrand vanishes at ends)
        s += tr * scattered_window_1d(x) * std::cos(y * x);
    }
    return s * hstep / (2.0 * M_PI);
}

// m1(j) = sup_{|u|<=1} |chat(u+j)|, slightly inflated for quadrature safety.
const std::vector<double>& scattered_m1_table() {
    static std::vector<double> table = [] {
        std::vector<double> t(257, 0.0);
        for (int j = 0; j <= 256; ++j) {
            double m = 0.0;
            for (int s = 0; s <= 64; ++s) m = std::max(m, std::abs(scattered_chat(j - 1.0 + 2.0 * s / 64.0)));
            t[j] = m * 1.02;
        }
        return t;
    }();
    return table;
}

double scattered_m1(int j) {
    const auto& t = scattered_m1_table();
    int a = std::abs(j);
    return a <= 256 ? t[a] : 0.0;
}

}  // namespace

double ScatteredMajorant::a_l(const std::vector<int>& j) const {
    double r2 = 0.0;
    for (int x : j) r2 += static_cast<double>(x) * x;
    return c_m * std::pow(1.0 + std::sqrt(r2), -order);
}

ScatteredMajorant scattered_majorant(int d, int order) {
    ScatteredMajorant maj;
    maj.d = d;
    maj.order = order;
    // C_M = max_j prod_i m1(j_i) (1+|j|)^M over a range beyond which both sides vanish.
    const int box = 40;
    double best = 0.0;
    std::vector<int> j(d, -box);
    bool done = false;
    while (!done) {
        double prod = 1.0, r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            prod *= scattered_m1(j[a]);
            r2 += static_cast<double>(j[a]) * j[a];
        }
        if (prod > 0.0) best = std::max(best, prod * std::pow(1.0 + std::sqrt(r2), order));
        for (int a = 0;; ++a) {
            if (a == d) {
                done = true;
                break;
            }
            if (++j[a] <= box) break;
            j[a] = -box;
        }
    }
    maj.c_m = best;
    return maj;
}

cplx eval_bandlimited(const GridFunction& fhat, const Vec& x) {
    if (fhat.rep != Rep::Frequency) throw std::invalid_argument("eval_bandlimited: frequency representation required");
    const Grid& g = fhat.grid;
    cplx s(0.0, 0.0);
    std::vector<int> idx(g.d);
    for (int64_t i = 0; i < g.size(); ++i) {
        if (std::norm(fhat.v[i]) == 0.0) continue;
        g.unflatten(i, idx.data());
        double ph = 0.0;
        for (int a = 0; a < g.d; ++a) ph += x[a] * g.freq_coord(idx[a]);
        s += fhat.v[i] * std::polar(1.0, ph);
    }
    return s / static_cast<double>(g.size());
}

double linf_bound(const GridFunction& fhat) {
    double s = 0.0;
    for (const cplx& z : fhat.v) s += std::abs(z);
    return s / static_cast<double>(fhat.grid.size());
}

namespace {

void require_band_limited(const GridFunction& fhat, double sigma) {
    // mass outside the tightest sigma-cube around the support's bounding box center
    const Grid& g = fhat.grid;
    std::vector<int> idx(g.d);
    Vec lo(g.d, 1e18), hi(g.d, -1e18);
    for (int64_t i = 0; i < g.size(); ++i) {
        if (std::norm(fhat.v[i]) == 0.0) continue;
        g.unflatten(i, idx.data());
        for (int a = 0; a < g.d; ++a) {
            double xi = g.freq_coord(idx[a]);
            lo[a] = std::min(lo[a], xi);
            hi[a] = std::max(hi[a], xi);
        }
    }
    for (int a = 0; a < g.d; ++a)
        if (hi[a] >= lo[a] && hi[a] - lo[a] > 2.0 * sigma + 1e-12)
            throw std::invalid_argument("scattered_sum: band-limit precondition violated");
}

double scattered_tail(const ScatteredMajorant& maj, int m_cut, double linf) {
    // sum over |j|_inf > m_cut of A_j <= C_M sum_{r > m_cut} #shell(r) (1+r)^{-M}
    double s = 0.0;
    for (int r = m_cut + 1; r < m_cut + 100000; ++r) {
        double shell = std::pow(2.0 * r + 1.0, maj.d) - std::pow(2.0 * r - 1.0, maj.d);
        double term = shell * std::pow(1.0 + static_cast<double>(r), -maj.order);
        s += term;
        if (term < 1e-18 * (s + 1e-300)) break;
    }
    return maj.c_m * s * linf;
}

}  // namespace

ScatteredResult scattered_sum(const GridFunction& f, double sigma, const Vec& x0,
                              const ScatteredMajorant& maj, double r_tr) {
    require_band_limited(f, sigma);
    if (!(r_tr > 0.0 && r_tr <= f.grid.period / 2.0))
        throw std::invalid_argument("scattered_sum: truncation radius must be in (0, P/2]");
    const int d = f.grid.d;
    const int m_cut = static_cast<int>(std::floor(sigma * r_tr));
    ScatteredResult out;
    std::vector<int> j(d, -m_cut);
    bool done = (m_cut < 0);
    Vec y(d);
    while (!done) {
        for (int a = 0; a < d; ++a) y[a] = x0[a] - j[a] / sigma;
        out.value += maj.a_l(j) * std::abs(eval_bandlimited(f, y));
        ++out.terms;
        for (int a = 0;; ++a) {
            if (a == d) {
                done = true;
                break;
            }
            if (++j[a] <= m_cut) break;
            j[a] = -m_cut;
        }
    }
    out.tail = scattered_tail(maj, m_cut, linf_bound(f));
    return out;
}

ScatteredResult scattered_sum_doubled(const GridFunction& f, double sigma, const Vec& x,
                                      const ScatteredMajorant& maj, double r_tr) {
    require_band_limited(f, sigma);
    const int d = f.grid.d;
    const int m_cut = static_cast<int>(std::floor(sigma * r_tr));
    ScatteredResult out;
    std::vector<int> j1(d, -m_cut);
    Vec y(d);
    bool done1 = (m_cut < 0);
    while (!done1) {
        std::vector<int> j2(d, -m_cut);
        bool done2 = false;
        while (!done2) {
            for (int a = 0; a < d; ++a) y[a] = x[a] - (j1[a] + j2[a]) / sigma;
            out.value += maj.a_l(j1) * maj.a_l(j2) * std::abs(eval_bandlimited(f, y));
            ++out.terms;
            for (int a = 0;; ++a) {
                if (a == d) {
                    done2 = true;
                    break;
                }
                if (++j2[a] <= m_cut) break;
                j2[a] = -m_cut;
            }
        }
        for (int a = 0;; ++a) {
            if (a == d) {
                done1 = true;
                break;
            }
            if (++j1[a] <= m_cut) break;
            j1[a] = -m_cut;
        }
    }
    double linf = linf_bound(f);
    double sum_a = 0.0;
    std::vector<int> j(d, -m_cut);
    bool done = (m_cut < 0);
    while (!done) {
        sum_a += maj.a_l(j);
        for (int a = 0;; ++a) {
            if (a == d) {
                done = true;
                break;
            }
            if (++j[a] <= m_cut) break;
            j[a] = -m_cut;
        }
    }
    out.tail = 2.0 * sum_a * scattered_tail(maj, m_cut, linf);
    return out;
}

// ---- direction buckets -----------------------------------------------------------

bool cube_near_graph(const CubeSet& cs, const PhaseSurface& psi, int64_t cube, double c_near) {
    Vec c = cs.center(cube);
    Vec zeta(c.begin(), c.end() - 1);
    double r2 = 0.0;
    for (double z : zeta) r2 += z * z;
    double dr = psi.domain_radius();
    if (std::isfinite(dr) && r2 >= dr * dr) return false;
    double tau = c.back();
    if (!psi.time_dependent()) return std::abs(tau - psi.eval(zeta)) <= c_near * cs.sigma;
    double lo = psi.eval(zeta, -1.0), hi = psi.eval(zeta, 1.0);
    return tau >= lo - c_near * cs.sigma && tau <= hi + c_near * cs.sigma;
}

Vec cube_normal(const CubeSet& cs, const PhaseSurface& psi, int64_t cube) {
    Vec c = cs.center(cube);
    Vec zeta(c.begin(), c.end() - 1);
    if (!psi.time_dependent()) return normal(psi, zeta);
    double lo = psi.eval(zeta, -1.0), hi = psi.eval(zeta, 1.0);
    Vec xi = c;
    xi.back() = std::clamp(c.back(), lo, hi);
    return normal_field(psi, xi);
}

std::vector<DirectionBucket> direction_buckets(const CubeSet& cs, const PhaseSurface& psi,
                                               double c_near) {
    std::vector<DirectionBucket> buckets;
    for (int64_t q = 0; q < cs.count(); ++q) {
        if (!cube_near_graph(cs, psi, q, c_near)) continue;
        Vec n = cube_normal(cs, psi, q);
        bool placed = false;
        for (DirectionBucket& b : buckets) {
            double dist = 0.0;
            for (size_t i = 0; i < n.size(); ++i) dist += (n[i] - b.theta[i]) * (n[i] - b.theta[i]);
            if (std::sqrt(dist) <= cs.sigma) {
                b.cubes.push_back(q);
                placed = true;
                break;
            }
        }
        if (!placed) buckets.push_back(DirectionBucket{n, {q}});
    }
    return buckets;
}

GridFunction bucket_square(const GridFunction& f, const CubeSet& cs, const DirectionBucket& b,
                           const OperatorSpec& spec) {
    GridFunction fh = (f.rep == Rep::Frequency) ? f : transform(f);
    GridFunction acc(fh.grid, Rep::Space);
    for (int64_t q : b.cubes) {
        GridFunction piece = s_delta(cube_restrict(fh, cs, q), spec);
        for (size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += std::norm(piece.v[i]);
    }
    for (cplx& z : acc.v) z = std::sqrt(z.real());
    return acc;
}

double bucket_square_monitor(const GridFunction& f, const CubeSet& cs, const DirectionBucket& b,
                             const OperatorSpec& spec) {
    GridFunction fh = (f.rep == Rep::Frequency) ? f : transform(f);
    GridFunction sum(fh.grid, Rep::Frequency);
    std::vector<int> idx(fh.grid.d);
    for (int64_t i = 0; i < fh.grid.size(); ++i) {
        fh.grid.unflatten(i, idx.data());
        int64_t q = cs.cube_of_lattice(idx.data());
        if (std::find(b.cubes.begin(), b.cubes.end(), q) != b.cubes.end()) sum.v[i] = fh.v[i];
    }
    GridFunction lhs = s_delta(sum, spec);
    GridFunction rhs = bucket_square(fh, cs, b, spec);
    double worst = 0.0;
    for (size_t i = 0; i < lhs.v.size(); ++i) {
        double den = rhs.v[i].real();
        if (den > 1e-14) worst = std::max(worst, lhs.v[i].real() / den);
    }
    return worst;
}

// ---- certificates ------------------------------------------------------------------

namespace {

double dichotomy_threshold(const DecomposeParams& p, int d) {
    return p.dichotomy_factor > 0.0 ? p.dichotomy_factor : std::pow(100.0, d);
}

struct SparseFreq {
    std::vector<int64_t> flat;
    std::vector<std::array<double, 4>> xi;  // up to d=4 coordinates
    std::vector<cplx> coeff;
};

SparseFreq sparsify(const GridFunction& fhat) {
    const Grid& g = fhat.grid;
    SparseFreq s;
    std::vector<int> idx(g.d);
    for (int64_t i = 0; i < g.size(); ++i) {
        if (std::norm(fhat.v[i]) == 0.0) continue;
        g.unflatten(i, idx.data());
        std::array<double, 4> xi{};
        for (int a = 0; a < g.d; ++a) xi[a] = g.freq_coord(idx[a]);
        s.flat.push_back(i);
        s.xi.push_back(xi);
        s.coeff.push_back(fhat.v[i]);
    }
    return s;
}

}  // namespace

CubeValues cube_values_at(const GridFunction& fhat, const CubeSet& cs, const OperatorSpec& spec,
                          const Vec& x) {
    if (fhat.rep != Rep::Frequency) throw std::invalid_argument("cube_values_at: frequency rep required");
    const Grid& g = fhat.grid;
    const int d = g.d;
    const PhaseSurface& psi = *spec.phase;
    SparseFreq sp = sparsify(fhat);
    const double invn = 1.0 / static_cast<double>(g.size());
    CubeValues out;
    std::vector<int> idx(d);

    if (spec.kind == OpKind::TDelta) {
        out.t_value.assign(cs.count(), cplx(0, 0));
        for (size_t e = 0; e < sp.flat.size(); ++e) {
            g.unflatten(sp.flat[e], idx.data());
            int64_t q = cs.cube_of_lattice(idx.data());
            if (q < 0) continue;
            std::span<const double> xi(sp.xi[e].data(), d);
            std::span<const double> zeta = xi.subspan(0, d - 1);
            double r2 = 0.0;
            for (double z : zeta) r2 += z * z;
            double dr = psi.domain_radius();
            if (std::isfinite(dr) && r2 >= dr * dr) continue;
            double sym = phi_bump(eta_profile(spec.eta, xi, 0.0) * (xi[d - 1] - psi.eval(zeta)) / spec.delta);
            if (sym == 0.0) continue;
            double ph = 0.0;
            for (int a = 0; a < d; ++a) ph += x[a] * xi[a];
            out.t_value[q] += sym * sp.coeff[e] * std::polar(1.0, ph);
        }
        out.mag.resize(out.t_value.size());
        for (size_t q = 0; q < out.t_value.size(); ++q) {
            out.t_value[q] *= invn;
            out.mag[q] = std::abs(out.t_value[q]);
        }
        return out;
    }

    if (spec.kind != OpKind::SDelta) throw std::invalid_argument("cube_values_at: tdelta or sdelta only");
    const int nt = spec.resolved_nt();
    std::vector<double> w(nt + 1, (spec.t1 - spec.t0) / nt);
    w.front() *= 0.5;
    w.back() *= 0.5;
    std::vector<double> acc(cs.count(), 0.0);
    std::vector<cplx> node(cs.count());
    for (int j = 0; j <= nt; ++j) {
        double t = spec.t0 + (spec.t1 - spec.t0) * j / nt;
        std::fill(node.begin(), node.end(), cplx(0, 0));
        bool any = false;
        for (size_t e = 0; e < sp.flat.size(); ++e) {
            g.unflatten(sp.flat[e], idx.data());
            int64_t q = cs.cube_of_lattice(idx.data());
            if (q < 0) continue;
            std::span<const double> xi(sp.xi[e].data(), d);
            std::span<const double> zeta = xi.subspan(0, d - 1);
            double sym = phi_bump(eta_profile(spec.eta, xi, t) * (xi[d - 1] - psi.eval(zeta, t)) / spec.delta);
            if (sym == 0.0) continue;
            double ph = 0.0;
            for (int a = 0; a < d; ++a) ph += x[a] * xi[a];
            node[q] += sym * sp.coeff[e] * std::polar(1.0, ph);
            any = true;
        }
        if (!any) continue;
        for (size_t q = 0; q < node.size(); ++q) acc[q] += w[j] * std::norm(node[q] * invn);
    }
    out.mag.resize(acc.size());
    for (size_t q = 0; q < acc.size(); ++q) out.mag[q] = std::sqrt(acc[q]);
    return out;
}

Scale1Certificate decompose_scale1(const GridFunction& f, const OperatorSpec& spec, double sigma1,
                                   const Vec& x, const DecomposeParams& params) {
    if (!(spec.delta <= 1e-2 * sigma1 * sigma1 + 1e-15))
        throw std::invalid_argument("decompose_scale1: requires delta <= 10^-2 sigma1^2");
    GridFunction fh = (f.rep == Rep::Frequency) ? f : transform(f);
    CubeSet cs = cubes_at_scale(fh.grid, sigma1);
    CubeValues vals = cube_values_at(fh, cs, spec, x);

    Scale1Certificate cert;
    cert.sigma1 = sigma1;
    cert.delta = spec.delta;
    cert.x = x;
    cert.threshold_factor = dichotomy_threshold(params, fh.grid.d);

    double total = 0.0, mstar = -1.0;
    int64_t qstar = -1;
    int64_t near_count = 0;
    for (int64_t q = 0; q < cs.count(); ++q) {
        double m = vals.mag[q];
        if (m > 0.0) cert.table.emplace_back(q, m);
        if (cube_near_graph(cs, *spec.phase, q, params.c_near)) ++near_count;
        total += m;
        if (m > mstar) {  // lexicographic tie-break: first max wins
            mstar = m;
            qstar = q;
        }
    }
    cert.total = total;
    cert.qstar = qstar;
    cert.mstar = std::max(mstar, 0.0);

    if (total <= cert.threshold_factor * cert.mstar || total == 0.0) {
        cert.branch = "max";
        cert.margin = total > 0.0 ? cert.threshold_factor * cert.mstar / total : 1.0;
        return cert;
    }
    // bilinear branch: a far cube must carry mass (pigeonhole over the near ball)
    cert.branch = "bilinear";
    double best = -1.0;
    int64_t q1 = -1;
    for (const auto& [q, m] : cert.table) {
        if (cs.cube_distance(q, qstar) < params.separation * sigma1) continue;
        if (m > best) {
            best = m;
            q1 = q;
        }
    }
    if (q1 < 0) throw std::runtime_error("decompose_scale1: dichotomy failed to find a far cube");
    cert.q1 = q1;
    cert.pair_geom = std::sqrt(best * cert.mstar);
    const int dd = fh.grid.d;
    cert.constant = static_cast<double>(std::max<int64_t>(near_count, 1)) /
                    (1.0 - std::pow(2.0, -dd));
    // branch inequality: total <= C sigma^{-(d-1)} sqrt(m1 m*)
    cert.margin = cert.constant * std::pow(sigma1, 1.0 - dd) * cert.pair_geom / total;
    return cert;
}

double tuple_volume_min(const CubeSet& cs, const PhaseSurface& psi,
                        const std::vector<int64_t>& cubes, int points_per_axis) {
    const int d = cs.grid.d;
    const int m = static_cast<int>(cubes.size());
    const int ppa = std::max(2, points_per_axis);
    // sample points per cube
    std::vector<std::vector<Vec>> normals(m);
    for (int i = 0; i < m; ++i) {
        std::vector<int> cell(d);
        cs.cell_of(cubes[i], cell.data());
        std::vector<int> it(d, 0);
        bool done = false;
        while (!done) {
            Vec xi(d);
            for (int a = 0; a < d; ++a)
                xi[a] = cs.lo(cell[a]) + 2.0 * cs.sigma * it[a] / (ppa - 1);
            Vec zeta(xi.begin(), xi.end() - 1);
            double r2 = 0.0;
            for (double z : zeta) r2 += z * z;
            double dr = psi.domain_radius();
            if (!(std::isfinite(dr) && r2 >= dr * dr)) {
                if (!psi.time_dependent()) {
                    normals[i].push_back(normal(psi, zeta));
                } else {
                    double lo = psi.eval(zeta, -1.0), hi = psi.eval(zeta, 1.0);
                    Vec p = xi;
                    p.back() = std::clamp(xi.back(), lo, hi);
                    normals[i].push_back(normal_field(psi, p));
                }
            }
            for (int a = 0;; ++a) {
                if (a == d) {
                    done = true;
                    break;
                }
                if (++it[a] < ppa) break;
                it[a] = 0;
            }
        }
        if (normals[i].empty()) normals[i].push_back(cube_normal(cs, psi, cubes[i]));
    }
    double vmin = 1e300;
    std::vector<int> pick(m, 0);
    bool done = false;
    while (!done) {
        std::vector<Vec> vs(m);
        for (int i = 0; i < m; ++i) vs[i] = normals[i][pick[i]];
        vmin = std::min(vmin, transversality_volume(vs));
        for (int i = 0;; ++i) {
            if (i == m) {
                done = true;
                break;
            }
            if (++pick[i] < static_cast<int>(normals[i].size())) break;
            pick[i] = 0;
        }
    }
    return vmin;
}

StepCertificate decompose_step(const GridFunction& f, const OperatorSpec& spec,
                               const std::vector<double>& sigmas,
                               const std::vector<int64_t>& parents, const Vec& x,
                               const DecomposeParams& params) {
    const int k = static_cast<int>(parents.size());
    if (k < 2) throw std::invalid_argument("decompose_step: need k >= 2 parent cubes");
    if (static_cast<int>(sigmas.size()) != k)
        throw std::invalid_argument("decompose_step: sigmas must list sigma_1..sigma_k");
    GridFunction fh = (f.rep == Rep::Frequency) ? f : transform(f);
    const Grid& g = fh.grid;
    const int d = g.d;
    const PhaseSurface& psi = *spec.phase;
    const double sigma_km1 = sigmas[k - 2], sigma_k = sigmas[k - 1];
    CubeSet parent_cs = cubes_at_scale(g, sigma_km1);
    CubeSet child_cs = cubes_at_scale(g, sigma_k);

    // input transversality (checked)
    double prod_upto = 1.0;
    for (int i = 0; i + 1 < k; ++i) prod_upto *= sigmas[i];
    double vin = tuple_volume_min(parent_cs, psi, parents, 2);
    if (vin < params.c_trans * prod_upto)
        throw std::invalid_argument("decompose_step: input tuple not transversal");

    StepCertificate cert;
    cert.k = k;
    cert.sigmas = sigmas;
    cert.delta = spec.delta;
    cert.parents = parents;
    cert.params = params;
    cert.sdelta = (spec.kind == OpKind::SDelta);
    cert.q_side = 2.0 / sigma_k;

    // spatial cube Q^k containing x, x0 its center
    cert.x0.resize(d);
    for (int a = 0; a < d; ++a) {
        double side = cert.q_side;
        double m = std::floor(x[a] / side);
        cert.x0[a] = (m + 0.5) * side;
        if (std::abs(x[a] - cert.x0[a]) > side / 2.0 + 1e-9)
            throw std::invalid_argument("decompose_step: x outside its spatial cube");
    }

    // children of each parent near the graph
    const int ratio = static_cast<int>(std::round(sigma_km1 / sigma_k));
    std::vector<std::vector<int64_t>> children(k);
    for (int i = 0; i < k; ++i) {
        std::vector<int> pcell(d);
        parent_cs.cell_of(parents[i], pcell.data());
        std::vector<int> it(d, 0);
        bool done = false;
        while (!done) {
            int64_t flat = 0;
            for (int a = 0; a < d; ++a) flat = flat * child_cs.per_axis + (pcell[a] * ratio + it[a]);
            if (cube_near_graph(child_cs, psi, flat, params.c_near)) children[i].push_back(flat);
            for (int a = 0;; ++a) {
                if (a == d) {
                    done = true;
                    break;
                }
                if (++it[a] < ratio) break;
                it[a] = 0;
            }
        }
    }

    CubeValues vals = cube_values_at(fh, child_cs, spec, cert.x0);
    auto cube_val = [&](int64_t q) -> cplx {
        return cert.sdelta ? cplx(vals.mag[q], 0.0) : vals.t_value[q];
    };

    // dominant child and Lambda set per family
    cert.lambda_threshold = std::pow(sigma_k, k * d);
    double dominant_max = 0.0;
    cert.dominant.resize(k);
    cert.lambda.resize(k);
    for (int i = 0; i < k; ++i) {
        int64_t best = -1;
        double bm = -1.0;
        for (int64_t q : children[i])
            if (vals.mag[q] > bm) {
                bm = vals.mag[q];
                best = q;
            }
        if (best < 0) best = children[i].empty() ? 0 : children[i][0];
        cert.dominant[i] = best;
        dominant_max = std::max(dominant_max, std::max(bm, 0.0));
    }
    for (int i = 0; i < k; ++i)
        for (int64_t q : children[i])
            if (vals.mag[q] >= cert.lambda_threshold * dominant_max && vals.mag[q] > 0.0)
                cert.lambda[i].push_back(q);

    // Pi^k from the dominant normals; N = scale-k cubes with n(q) near Pi^k
    for (int i = 0; i < k; ++i) cert.pi_normals.push_back(cube_normal(child_cs, psi, cert.dominant[i]));
    std::vector<Vec> basis = orthonormalize(cert.pi_normals);
    for (int64_t q = 0; q < child_cs.count(); ++q) {
        if (!cube_near_graph(child_cs, psi, q, params.c_near)) continue;
        Vec n = cube_normal(child_cs, psi, q);
        if (dist_to_span(n, basis) <= params.c_neighbor * sigma_k) cert.neighbors.push_back(q);
    }
    auto in_neighbors = [&](int64_t q) {
        return std::binary_search(cert.neighbors.begin(), cert.neighbors.end(), q);
    };
    std::sort(cert.neighbors.begin(), cert.neighbors.end());

    // classify all k-tuples of children
    double prod_full = prod_upto * sigma_k;
    cplx confined(0.0, 0.0);
    std::map<std::vector<int64_t>, std::pair<double, bool>> emitted;  // tuple -> (vol, accepted)
    std::vector<int> pick(k, 0);
    bool done = children[0].empty();
    for (int i = 0; i < k; ++i)
        if (children[i].empty()) done = true;
    while (!done) {
        std::vector<int64_t> tup(k);
        for (int i = 0; i < k; ++i) tup[i] = children[i][pick[i]];
        cplx prod(1.0, 0.0);
        double magprod = 1.0;
        for (int i = 0; i < k; ++i) {
            prod *= cube_val(tup[i]);
            magprod *= vals.mag[tup[i]];
        }
        bool all_lambda = true;
        for (int i = 0; i < k && all_lambda; ++i)
            all_lambda = std::find(cert.lambda[i].begin(), cert.lambda[i].end(), tup[i]) != cert.lambda[i].end();
        if (!all_lambda) {
            cert.sum_max_bucket += magprod;
        } else {
            int escape = -1;
            for (int i = 0; i < k; ++i)
                if (!in_neighbors(tup[i])) {
                    escape = i;
                    break;
                }
            if (escape < 0) {
                confined += prod;
            } else {
                cert.sum_trans += magprod;
                std::vector<int64_t> emit = cert.dominant;
                emit.push_back(tup[escape]);
                if (!emitted.count(emit)) {
                    // sampled at the verifier's density so re-verification cannot
                    // find a smaller minimum on a finer lattice
                    double v = tuple_volume_min(child_cs, psi, emit, 3);
                    emitted.emplace(emit, std::make_pair(v, v >= params.c_trans * prod_full));
                }
            }
        }
        for (int i = 0;; ++i) {
            if (i == k) {
                done = true;
                break;
            }
            if (++pick[i] < static_cast<int>(children[i].size())) break;
            pick[i] = 0;
        }
    }
    cert.sum_confined = std::abs(confined);
    for (const auto& [tup, vb] : emitted)
        if (vb.second) cert.emitted.push_back(TransTuple{tup, vb.first});

    // pointwise three-bucket bound at x0
    if (cert.sdelta) {
        double lhs = 1.0;
        CubeValues pvals = cube_values_at(fh, parent_cs, spec, cert.x0);
        for (int i = 0; i < k; ++i) lhs *= pvals.mag[parents[i]];
        cert.lhs = lhs;
    } else {
        CubeValues pvals = cube_values_at(fh, parent_cs, spec, cert.x0);
        cplx lhs(1.0, 0.0);
        for (int i = 0; i < k; ++i) lhs *= pvals.t_value[parents[i]];
        cert.lhs = std::abs(lhs);
    }
    double rhs = cert.sum_max_bucket + cert.sum_confined + cert.sum_trans;
    cert.margin = cert.lhs > 0.0 ? rhs / cert.lhs : 1.0;
    return cert;
}

MarginReport verify_certificate(const StepCertificate& cert, const GridFunction& f,
                                const OperatorSpec& spec, const Vec& x) {
    GridFunction fh = (f.rep == Rep::Frequency) ? f : transform(f);
    const Grid& g = fh.grid;
    for (int a = 0; a < g.d; ++a)
        if (std::abs(x[a] - cert.x0[a]) > cert.q_side / 2.0 + 1e-9)
            throw std::invalid_argument("verify_certificate: x outside the certificate's spatial cube");
    const PhaseSurface& psi = *spec.phase;
    const int k = cert.k;
    const double sigma_k = cert.sigmas[k - 1];
    CubeSet parent_cs = cubes_at_scale(g, cert.sigmas[k - 2]);
    CubeSet child_cs = cubes_at_scale(g, sigma_k);
    CubeValues vals = cube_values_at(fh, child_cs, spec, x);

    MarginReport rep;
    // re-evaluate buckets at x with frozen classification
    double prod_full = 1.0;
    for (double s : cert.sigmas) prod_full *= s;
    auto in_lambda = [&](int i, int64_t q) {
        return std::find(cert.lambda[i].begin(), cert.lambda[i].end(), q) != cert.lambda[i].end();
    };
    auto in_neighbors = [&](int64_t q) {
        return std::binary_search(cert.neighbors.begin(), cert.neighbors.end(), q);
    };

    // rebuild child lists from the lambda/neighbor record plus near-graph scan
    std::vector<std::vector<int64_t>> children(k);
    const int ratio = static_cast<int>(std::round(cert.sigmas[k - 2] / sigma_k));
    for (int i = 0; i < k; ++i) {
        std::vector<int> pcell(g.d);
        parent_cs.cell_of(cert.parents[i], pcell.data());
        std::vector<int> it(g.d, 0);
        bool done = false;
        while (!done) {
            int64_t flat = 0;
            for (int a = 0; a < g.d; ++a) flat = flat * child_cs.per_axis + (pcell[a] * ratio + it[a]);
            if (cube_near_graph(child_cs, psi, flat, cert.params.c_near)) children[i].push_back(flat);
            for (int a = 0;; ++a) {
                if (a == g.d) {
                    done = true;
                    break;
                }
                if (++it[a] < ratio) break;
                it[a] = 0;
            }
        }
    }

    double sum_max = 0.0, sum_trans = 0.0;
    cplx confined(0.0, 0.0);
    double confined_real = 0.0;
    std::vector<int> pick(k, 0);
    bool done = false;
    for (int i = 0; i < k; ++i)
        if (children[i].empty()) done = true;
    while (!done) {
        std::vector<int64_t> tup(k);
        for (int i = 0; i < k; ++i) tup[i] = children[i][pick[i]];
        cplx prod(1.0, 0.0);
        double magprod = 1.0;
        for (int i = 0; i < k; ++i) {
            prod *= cert.sdelta ? cplx(vals.mag[tup[i]], 0.0) : vals.t_value[tup[i]];
            magprod *= vals.mag[tup[i]];
        }
        bool all_lambda = true;
        for (int i = 0; i < k && all_lambda; ++i) all_lambda = in_lambda(i, tup[i]);
        if (!all_lambda) {
            sum_max += magprod;
        } else {
            bool esc = false;
            for (int i = 0; i < k; ++i)
                if (!in_neighbors(tup[i])) {
                    esc = true;
                    break;
                }
            if (esc) {
                sum_trans += magprod;
            } else {
                confined += prod;
                confined_real += magprod;
            }
        }
        for (int i = 0;; ++i) {
            if (i == k) {
                done = true;
                break;
            }
            if (++pick[i] < static_cast<int>(children[i].size())) break;
            pick[i] = 0;
        }
    }
    CubeValues pvals = cube_values_at(fh, parent_cs, spec, x);
    double lhs;
    if (cert.sdelta) {
        lhs = 1.0;
        for (int i = 0; i < k; ++i) lhs *= pvals.mag[cert.parents[i]];
    } else {
        cplx l(1.0, 0.0);
        for (int i = 0; i < k; ++i) l *= pvals.t_value[cert.parents[i]];
        lhs = std::abs(l);
    }
    double conf = cert.sdelta ? confined_real : std::abs(confined);
    rep.margin_at_x = lhs > 0.0 ? (sum_max + conf + sum_trans) / lhs : 1.0;

    // independent re-computation: emitted tuples on a denser sample, N distances
    rep.min_vol_ratio = 1e300;
    for (const TransTuple& t : cert.emitted) {
        double v = tuple_volume_min(child_cs, psi, t.cubes, 3);
        double req = cert.params.c_trans * prod_full;
        rep.min_vol_ratio = std::min(rep.min_vol_ratio, v / req);
        if (v < req) rep.vol_ok = false;
    }
    if (cert.emitted.empty()) rep.min_vol_ratio = 0.0;
    std::vector<Vec> basis = orthonormalize(cert.pi_normals);
    for (int64_t q : cert.neighbors) {
        double dist = dist_to_span(cube_normal(child_cs, psi, q), basis);
        rep.max_neighbor_dist = std::max(rep.max_neighbor_dist, dist);
        if (dist > cert.params.c_neighbor * sigma_k + 1e-12) rep.neighbor_ok = false;
    }
    return rep;
}

// ---- serialization -------------------------------------------------------------

namespace {
void put(std::ostringstream& os, const char* key, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << key << " " << buf << "\n";
}
}  // namespace

std::string serialize(const Scale1Certificate& c) {
    std::ostringstream os;
    os << "certificate scale1\n";
    put(os, "sigma1", c.sigma1);
    put(os, "delta", c.delta);
    os << "x";
    for (double v : c.x) os << " " << v;
    os << "\nbranch " << c.branch << "\n";
    os << "qstar " << c.qstar << "\n";
    put(os, "mstar", c.mstar);
    put(os, "total", c.total);
    put(os, "threshold", c.threshold_factor);
    if (c.branch == "bilinear") {
        os << "q1 " << c.q1 << "\n";
        put(os, "pair_geom", c.pair_geom);
        put(os, "constant", c.constant);
    }
    put(os, "margin", c.margin);
    for (const auto& [q, m] : c.table) {
        os << "cube " << q << " ";
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", m);
        os << buf << "\n";
    }
    os << "end\n";
    return os.str();
}

std::string serialize(const StepCertificate& c) {
    std::ostringstream os;
    os << "certificate step\n";
    os << "k " << c.k << "\nsigmas";
    for (double s : c.sigmas) os << " " << s;
    os << "\ndelta " << c.delta << "\nparents";
    for (int64_t p : c.parents) os << " " << p;
    os << "\nx0";
    for (double v : c.x0) os << " " << v;
    os << "\ndominant";
    for (int64_t q : c.dominant) os << " " << q;
    os << "\nneighbors";
    for (int64_t q : c.neighbors) os << " " << q;
    os << "\n";
    for (const TransTuple& t : c.emitted) {
        os << "tuple";
        for (int64_t q : t.cubes) os << " " << q;
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", t.vol_min);
        os << " vol " << buf << "\n";
    }
    put(os, "sum_max_bucket", c.sum_max_bucket);
    put(os, "sum_confined", c.sum_confined);
    put(os, "sum_trans", c.sum_trans);
    put(os, "lhs", c.lhs);
    put(os, "margin", c.margin);
    os << "end\n";
    return os.str();
}

}  // namespace freqlab
