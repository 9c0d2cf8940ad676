#include "freqlab/phase.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>

namespace freqlab {

namespace {

// ---- derivative helpers -------------------------------------------------

// Quadratic form S(z) = c + b.z + z.Q z / 2 (Q symmetric).
struct Quad {
    double c = 0.0;
    Vec b;
    Mat q;

    double eval(std::span<const double> z) const {
        double s = c;
        for (size_t i = 0; i < b.size(); ++i) s += b[i] * z[i];
        for (int i = 0; i < q.rows; ++i)
            for (int j = 0; j < q.cols; ++j) s += 0.5 * z[i] * q(i, j) * z[j];
        return s;
    }
    double d1(std::span<const double> z, const Vec& v) const {
        double s = 0.0;
        for (size_t i = 0; i < b.size(); ++i) s += b[i] * v[i];
        for (int i = 0; i < q.rows; ++i)
            for (int j = 0; j < q.cols; ++j) s += z[i] * q(i, j) * v[j];
        return s;
    }
    double d2(const Vec& v, const Vec& w) const {
        double s = 0.0;
        for (int i = 0; i < q.rows; ++i)
            for (int j = 0; j < q.cols; ++j) s += v[i] * q(i, j) * w[j];
        return s;
    }
};

// D^m(F o S)[v_1..v_m] for quadratic S: sum over partitions of the direction
// slots into singletons and pairs, F^{(#blocks)}(S(z)) * prod of block values.
double composite_dir_deriv(std::span<const double> fder,  // F, F', .. F^{(4)} at u = S(z)
                           const Quad& s, std::span<const double> z, std::span<const Vec> dirs) {
    const int m = static_cast<int>(dirs.size());
    if (m == 0) return fder[0];
    double total = 0.0;
    std::vector<int> avail(m);
    for (int i = 0; i < m; ++i) avail[i] = i;

    // recursive enumeration
    struct Walk {
        std::span<const double> fder;
        const Quad& s;
        std::span<const double> z;
        std::span<const Vec> dirs;
        double total = 0.0;
        void go(std::vector<int>& rest, double prod, int nblocks) {
            if (rest.empty()) {
                total += fder[nblocks] * prod;
                return;
            }
            int e = rest.front();
            std::vector<int> next(rest.begin() + 1, rest.end());
            go(next, prod * s.d1(z, dirs[e]), nblocks + 1);  // e as a singleton
            for (size_t i = 0; i < next.size(); ++i) {       // e paired with a later slot
                std::vector<int> nn;
                nn.reserve(next.size() - 1);
                for (size_t j = 0; j < next.size(); ++j)
                    if (j != i) nn.push_back(next[j]);
                go(nn, prod * s.d2(dirs[e], dirs[next[i]]), nblocks + 1);
            }
        }
    } w{fder, s, z, dirs};
    w.go(avail, 1.0, 0);
    total = w.total;
    return total;
}

// Derivatives of u -> kappa * (1 - sqrt(u)) through order 4.
// F^{(k)}(u) = -kappa * a_k u^{1/2-k}, a_1 = 1/2, a_{k+1} = a_k (1/2 - k).
void sqrt_family_derivs(double u, double kappa, double* out5) {
    if (!(u > 0.0)) throw std::domain_error("phase: point outside the analytic domain");
    double su = std::sqrt(u);
    out5[0] = kappa * (1.0 - su);
    double a = 0.5, pw = su / u;  // u^{-1/2}
    for (int k = 1; k <= 4; ++k) {
        out5[k] = -kappa * a * pw;
        a *= (0.5 - k);
        pw /= u;
    }
}

// ---- concrete families ---------------------------------------------------

class Paraboloid final : public PhaseSurface {
  public:
    explicit Paraboloid(int d) : PhaseSurface(d, false) {}
    std::string id() const override { return "paraboloid"; }
    double dir_deriv(std::span<const double> z, std::span<const Vec> dirs) const override {
        switch (dirs.size()) {
            case 0: {
                double s = 0.0;
                for (double x : z) s += x * x;
                return 0.5 * s;
            }
            case 1: {
                double s = 0.0;
                for (size_t i = 0; i < z.size(); ++i) s += z[i] * dirs[0][i];
                return s;
            }
            case 2: {
                double s = 0.0;
                for (size_t i = 0; i < z.size(); ++i) s += dirs[0][i] * dirs[1][i];
                return s;
            }
            default: return 0.0;
        }
    }
};

class PerturbedParaboloid final : public PhaseSurface {
  public:
    PerturbedParaboloid(int d, std::string g, double eps)
        : PhaseSurface(d, false), g_(std::move(g)), eps_(eps) {
        if (g_ != "cubic" && g_ != "sine")
            throw std::invalid_argument("perturbed paraboloid: unknown g '" + g_ + "'");
    }
    std::string id() const override {
        char buf[64];
        std::snprintf(buf, sizeof buf, "perturbed:g=%s,eps=%g", g_.c_str(), eps_);
        return buf;
    }
    double dir_deriv(std::span<const double> z, std::span<const Vec> dirs) const override {
        Paraboloid base(d_);
        double v = base.dir_deriv(z, dirs);
        const int m = static_cast<int>(dirs.size());
        double g = 0.0;
        // g separable: sum_i g1(z_i); mixed partials need all slots on one axis.
        for (size_t i = 0; i < z.size(); ++i) {
            double prod = 1.0;
            for (int s = 0; s < m; ++s) prod *= dirs[s][i];
            if (prod == 0.0 && m > 0) continue;
            g += g1_deriv(z[i], m) * prod;
        }
        return v + eps_ * g;
    }

  private:
    double g1_deriv(double x, int m) const {
        if (g_ == "cubic") {
            switch (m) {
                case 0: return x * x * x;
                case 1: return 3.0 * x * x;
                case 2: return 6.0 * x;
                case 3: return 6.0;
                default: return 0.0;
            }
        }
        // sine: g1 = sin(x) - x (flat to first order at 0)
        switch (m % 4) {
            case 0: return m == 0 ? std::sin(x) - x : std::sin(x);
            case 1: return m == 1 ? std::cos(x) - 1.0 : std::cos(x);
            case 2: return -std::sin(x);
            default: return -std::cos(x);
        }
    }
    std::string g_;
    double eps_;
};

class SphereGraph final : public PhaseSurface {
  public:
    explicit SphereGraph(int d) : PhaseSurface(d, false) {}
    std::string id() const override { return "sphere"; }
    double domain_radius() const override { return 1.0; }
    double dir_deriv(std::span<const double> z, std::span<const Vec> dirs) const override {
        Quad s;  // S = 1 - |zeta|^2
        s.c = 1.0;
        s.b.assign(z.size(), 0.0);
        s.q = Mat(static_cast<int>(z.size()), static_cast<int>(z.size()));
        for (size_t i = 0; i < z.size(); ++i) s.q(static_cast<int>(i), static_cast<int>(i)) = -2.0;
        double fder[5];
        sqrt_family_derivs(s.eval(z), 1.0, fder);
        return composite_dir_deriv(fder, s, z, dirs);
    }
};

class AffineTimeParaboloid final : public PhaseSurface {
  public:
    explicit AffineTimeParaboloid(int d) : PhaseSurface(d, true) {}
    std::string id() const override { return "affine-time"; }
    double dir_deriv(std::span<const double> z, std::span<const Vec> dirs) const override {
        // z = (zeta, t); psi = |zeta|^2/2 + t
        const size_t nz = z.size() - 1;
        switch (dirs.size()) {
            case 0: {
                double s = z[nz];
                for (size_t i = 0; i < nz; ++i) s += 0.5 * z[i] * z[i];
                return s;
            }
            case 1: {
                double s = dirs[0][nz];
                for (size_t i = 0; i < nz; ++i) s += z[i] * dirs[0][i];
                return s;
            }
            case 2: {
                double s = 0.0;
                for (size_t i = 0; i < nz; ++i) s += dirs[0][i] * dirs[1][i];
                return s;
            }
            default: return 0.0;
        }
    }
};

class BochnerRieszTime final : public PhaseSurface {
  public:
    BochnerRieszTime(int d, double eps) : PhaseSurface(d, true), eps_(eps) {
        if (!(eps > 0.0 && eps <= 0.5)) throw std::invalid_argument("br phase: eps must be in (0, 1/2]");
    }
    std::string id() const override {
        char buf[32];
        std::snprintf(buf, sizeof buf, "br:eps=%g", eps_);
        return buf;
    }
    double dir_deriv(std::span<const double> z, std::span<const Vec> dirs) const override {
        // S(zeta,t) = (1 - eps^2 t)^2 - eps^2 |zeta|^2, psi = eps^-2 (1 - sqrt S).
        const int nz = static_cast<int>(z.size()) - 1;
        const double e2 = eps_ * eps_;
        Quad s;
        s.c = 1.0;
        s.b.assign(z.size(), 0.0);
        s.b[nz] = -2.0 * e2;
        s.q = Mat(static_cast<int>(z.size()), static_cast<int>(z.size()));
        for (int i = 0; i < nz; ++i) s.q(i, i) = -2.0 * e2;
        s.q(nz, nz) = 2.0 * e2 * e2;
        double fder[5];
        sqrt_family_derivs(s.eval(z), 1.0 / e2, fder);
        return composite_dir_deriv(fder, s, z, dirs);
    }

  private:
    double eps_;
};

// Exact parabolic rescaling of a static phase:
//   psi_a^eps(zeta) = eps^-2 ( psi(a + eps M zeta) - psi(a) - eps grad(a).(M zeta) ),
// M = (sqrt H psi(a))^{-1}.
class RescaledPhase final : public PhaseSurface {
  public:
    RescaledPhase(PhasePtr base, Vec a, double eps, Mat m)
        : PhaseSurface(base->ambient_dim(), false),
          base_(std::move(base)),
          a_(std::move(a)),
          eps_(eps),
          m_(std::move(m)) {
        psi_a_ = base_->eval(a_);
        grad_a_ = base_->grad_zeta(a_);
        lineage_ = RescaleRecord{base_->id(), a_, eps_};
    }
    std::string id() const override {
        std::ostringstream os;
        os << base_->id() << "@rescale(eps=" << eps_ << ")";
        return os.str();
    }
    double domain_radius() const override {
        double r = base_->domain_radius();
        if (std::isinf(r)) return r;
        // conservative: base point offset eats into the zoomed-in domain
        double anorm = 0.0;
        for (double x : a_) anorm = std::max(anorm, std::abs(x));
        return (r - anorm) / eps_ / 2.0;
    }
    double dir_deriv(std::span<const double> z, std::span<const Vec> dirs) const override {
        Vec inner(a_);
        Vec mz = matvec(m_, Vec(z.begin(), z.end()));
        for (size_t i = 0; i < inner.size(); ++i) inner[i] += eps_ * mz[i];
        std::vector<Vec> mapped(dirs.size());
        for (size_t s = 0; s < dirs.size(); ++s) {
            mapped[s] = matvec(m_, dirs[s]);
            for (double& x : mapped[s]) x *= eps_;
        }
        double inv = 1.0 / (eps_ * eps_);
        double v = base_->dir_deriv(inner, mapped) * inv;
        if (dirs.empty()) return v - inv * psi_a_ - dot(grad_a_, mz) / eps_;
        if (dirs.size() == 1) return v - dot(grad_a_, matvec(m_, dirs[0])) / eps_;
        return v;
    }

  private:
    PhasePtr base_;
    Vec a_;
    double eps_;
    Mat m_;
    double psi_a_;
    Vec grad_a_;
};

// Time-family rescaling psi_{z0}^eps per the one-parameter normalization.
class TimeRescaledPhase final : public PhaseSurface {
  public:
    TimeRescaledPhase(PhasePtr base, Vec z0, double eps, Mat m, double dt0)
        : PhaseSurface(base->ambient_dim(), true),
          base_(std::move(base)),
          z0_(std::move(z0)),
          eps_(eps),
          m_(std::move(m)),
          dt0_(dt0) {
        Vec zeta0(z0_.begin(), z0_.end() - 1);
        psi_z0_ = base_->eval(zeta0, z0_.back());
        grad_z0_ = base_->grad_zeta(zeta0, z0_.back());
        lineage_ = RescaleRecord{base_->id(), z0_, eps_};
    }
    std::string id() const override {
        std::ostringstream os;
        os << base_->id() << "@rescale_t(eps=" << eps_ << ")";
        return os.str();
    }
    double dir_deriv(std::span<const double> z, std::span<const Vec> dirs) const override {
        const int nz = static_cast<int>(z.size()) - 1;
        Vec inner(z.size());
        Vec zz(z.begin(), z.begin() + nz);
        Vec mz = matvec(m_, zz);
        for (int i = 0; i < nz; ++i) inner[i] = z0_[i] + eps_ * mz[i];
        inner[nz] = z0_[nz] + eps_ * eps_ * z[nz] / dt0_;
        std::vector<Vec> mapped(dirs.size());
        for (size_t s = 0; s < dirs.size(); ++s) {
            Vec dz(dirs[s].begin(), dirs[s].begin() + nz);
            Vec md = matvec(m_, dz);
            mapped[s].resize(z.size());
            for (int i = 0; i < nz; ++i) mapped[s][i] = eps_ * md[i];
            mapped[s][nz] = eps_ * eps_ * dirs[s][nz] / dt0_;
        }
        double inv = 1.0 / (eps_ * eps_);
        double v = base_->dir_deriv(inner, mapped) * inv;
        if (dirs.empty()) return v - inv * psi_z0_ - dot(grad_z0_, mz) / eps_;
        if (dirs.size() == 1) {
            Vec dz(dirs[0].begin(), dirs[0].begin() + nz);
            return v - dot(grad_z0_, matvec(m_, dz)) / eps_;
        }
        return v;
    }

  private:
    PhasePtr base_;
    Vec z0_;
    double eps_;
    Mat m_;    // (sqrt H psi(.,t0)(zeta0))^{-1}
    double dt0_;  // dt psi(z0)
    double psi_z0_;
    Vec grad_z0_;
};

}  // namespace

// ---- PhaseSurface wrappers ------------------------------------------------

double PhaseSurface::eval(std::span<const double> zeta, double t) const {
    Vec z(zeta.begin(), zeta.end());
    if (time_dependent_) z.push_back(t);
    return dir_deriv(z, {});
}

Vec PhaseSurface::grad_zeta(std::span<const double> zeta, double t) const {
    Vec z(zeta.begin(), zeta.end());
    if (time_dependent_) z.push_back(t);
    const int nz = static_cast<int>(zeta.size());
    Vec g(nz);
    for (int i = 0; i < nz; ++i) {
        Vec e(z.size(), 0.0);
        e[i] = 1.0;
        std::vector<Vec> dirs{e};
        g[i] = dir_deriv(z, dirs);
    }
    return g;
}

Mat PhaseSurface::hess_zeta(std::span<const double> zeta, double t) const {
    Vec z(zeta.begin(), zeta.end());
    if (time_dependent_) z.push_back(t);
    const int nz = static_cast<int>(zeta.size());
    Mat h(nz, nz);
    for (int i = 0; i < nz; ++i)
        for (int j = i; j < nz; ++j) {
            Vec ei(z.size(), 0.0), ej(z.size(), 0.0);
            ei[i] = 1.0;
            ej[j] = 1.0;
            std::vector<Vec> dirs{ei, ej};
            h(i, j) = h(j, i) = dir_deriv(z, dirs);
        }
    return h;
}

double PhaseSurface::dt(std::span<const double> zeta, double t) const {
    if (!time_dependent_) throw std::invalid_argument("dt: phase is not time-dependent");
    Vec z(zeta.begin(), zeta.end());
    z.push_back(t);
    Vec e(z.size(), 0.0);
    e.back() = 1.0;
    std::vector<Vec> dirs{e};
    return dir_deriv(z, dirs);
}

double PhaseSurface::partial(std::span<const double> z, std::span<const int> alpha) const {
    std::vector<Vec> dirs;
    for (size_t i = 0; i < alpha.size(); ++i)
        for (int r = 0; r < alpha[i]; ++r) {
            Vec e(z.size(), 0.0);
            e[i] = 1.0;
            dirs.push_back(std::move(e));
        }
    if (dirs.size() > 4) throw std::invalid_argument("partial: order above 4 not supported");
    return dir_deriv(z, dirs);
}

// ---- factories -------------------------------------------------------------

PhasePtr make_paraboloid(int d) { return std::make_shared<Paraboloid>(d); }
PhasePtr make_sphere_graph(int d) { return std::make_shared<SphereGraph>(d); }
PhasePtr make_affine_time_paraboloid(int d) { return std::make_shared<AffineTimeParaboloid>(d); }
PhasePtr make_bochner_riesz_time(int d, double eps) { return std::make_shared<BochnerRieszTime>(d, eps); }
PhasePtr make_perturbed_paraboloid(int d, const std::string& g, double eps) {
    return std::make_shared<PerturbedParaboloid>(d, g, eps);
}

PhasePtr parse_phase(const std::string& spec, int d) {
    if (spec == "paraboloid") return make_paraboloid(d);
    if (spec == "sphere") return make_sphere_graph(d);
    if (spec == "affine-time") return make_affine_time_paraboloid(d);
    auto starts = [&](const char* p) { return spec.rfind(p, 0) == 0; };
    if (starts("br:eps=")) return make_bochner_riesz_time(d, std::stod(spec.substr(7)));
    if (starts("perturbed:")) {
        std::string rest = spec.substr(10);
        auto comma = rest.find(',');
        if (comma == std::string::npos || rest.rfind("g=", 0) != 0 || rest.find("eps=", comma) == std::string::npos)
            throw std::invalid_argument("parse_phase: bad perturbed spec '" + spec + "'");
        std::string g = rest.substr(2, comma - 2);
        double eps = std::stod(rest.substr(rest.find("eps=", comma) + 4));
        return make_perturbed_paraboloid(d, g, eps);
    }
    throw std::invalid_argument("parse_phase: unknown phase '" + spec + "'");
}

// ---- operations -------------------------------------------------------------

double cn_distance(const PhaseSurface& psi, int order, int lattice_per_axis) {
    if (order > 4) throw std::invalid_argument("cn_distance: order capped at 4");
    const int nz = psi.nvars();
    const int zdim = psi.time_dependent() ? nz - 1 : nz;
    double lim = std::min(1.0, psi.domain_radius() * (1.0 - 1e-9));

    // multi-indices with |alpha| <= order over nz variables
    std::vector<std::vector<int>> alphas;
    std::vector<int> cur(nz, 0);
    std::function<void(int, int)> gen = [&](int pos, int rem) {
        if (pos == nz) {
            alphas.push_back(cur);
            return;
        }
        for (int k = 0; k <= rem; ++k) {
            cur[pos] = k;
            gen(pos + 1, rem - k);
        }
        cur[pos] = 0;
    };
    gen(0, order);

    auto model_partial = [&](std::span<const double> z, const std::vector<int>& alpha) {
        // model is |zeta|^2/2 (+ t): nonzero partials are value, zeta_i, t, and d2/dzeta_i^2 = 1
        int total = 0;
        for (int a : alpha) total += a;
        if (total == 0) {
            double s = 0.0;
            for (int i = 0; i < zdim; ++i) s += 0.5 * z[i] * z[i];
            if (psi.time_dependent()) s += z[nz - 1];
            return s;
        }
        if (total == 1) {
            for (int i = 0; i < zdim; ++i)
                if (alpha[i] == 1) return z[i];
            if (psi.time_dependent() && alpha[nz - 1] == 1) return 1.0;
            return 0.0;
        }
        if (total == 2) {
            for (int i = 0; i < zdim; ++i)
                if (alpha[i] == 2) return 1.0;
            return 0.0;
        }
        return 0.0;
    };

    const int m = std::max(2, lattice_per_axis);
    std::vector<int> it(nz, 0);
    double worst = 0.0;
    bool done = false;
    while (!done) {
        Vec z(nz);
        bool in_domain = true;
        double r2 = 0.0;
        for (int i = 0; i < nz; ++i) {
            double lo = (i < zdim) ? -lim : -1.0, hi = (i < zdim) ? lim : 1.0;
            z[i] = lo + (hi - lo) * it[i] / (m - 1);
            if (i < zdim) r2 += z[i] * z[i];
        }
        if (std::isfinite(psi.domain_radius()) && r2 >= psi.domain_radius() * psi.domain_radius())
            in_domain = false;
        if (in_domain)
            for (const auto& alpha : alphas) {
                double gap = std::abs(psi.partial(z, alpha) - model_partial(z, alpha));
                worst = std::max(worst, gap);
            }
        for (int i = 0;; ++i) {
            if (i == nz) {
                done = true;
                break;
            }
            if (++it[i] < m) break;
            it[i] = 0;
        }
    }
    return worst;
}

PhasePtr rescale(const PhasePtr& psi, const Vec& a, double eps) {
    if (psi->time_dependent()) throw std::invalid_argument("rescale: use rescale_time for time families");
    if (static_cast<int>(a.size()) != psi->ambient_dim() - 1)
        throw std::invalid_argument("rescale: base point rank mismatch");
    for (double x : a)
        if (std::abs(x) > 0.5) throw std::invalid_argument("rescale: base point outside (1/2)I^{d-1}");
    if (!(eps > 0.0 && eps <= 0.5)) throw std::invalid_argument("rescale: eps must be in (0, 1/2]");
    if (psi->id() == "paraboloid") {
        // exact fixed point of the zoom
        auto p = make_paraboloid(psi->ambient_dim());
        p->lineage_ = RescaleRecord{psi->id(), a, eps};
        return p;
    }
    Mat h = psi->hess_zeta(a);
    Mat m = inv_sqrt_spd(h);  // throws when not positive definite
    return std::make_shared<RescaledPhase>(psi, a, eps, std::move(m));
}

PhasePtr rescale_time(const PhasePtr& psi, const Vec& z0, double eps) {
    if (!psi->time_dependent()) throw std::invalid_argument("rescale_time: static family");
    if (static_cast<int>(z0.size()) != psi->ambient_dim())
        throw std::invalid_argument("rescale_time: base point rank mismatch");
    for (double x : z0)
        if (std::abs(x) > 0.5) throw std::invalid_argument("rescale_time: base point outside (1/2)I^d");
    if (!(eps > 0.0 && eps <= 0.5)) throw std::invalid_argument("rescale_time: eps must be in (0, 1/2]");
    Vec zeta0(z0.begin(), z0.end() - 1);
    if (psi->id() == "affine-time") {
        auto p = make_affine_time_paraboloid(psi->ambient_dim());
        p->lineage_ = RescaleRecord{psi->id(), z0, eps};
        return p;
    }
    Mat h = psi->hess_zeta(zeta0, z0.back());
    Mat m = inv_sqrt_spd(h);
    double dt0 = psi->dt(zeta0, z0.back());
    return std::make_shared<TimeRescaledPhase>(psi, z0, eps, std::move(m), dt0);
}

Vec normal(const PhaseSurface& psi, std::span<const double> zeta, double t) {
    Vec g = psi.grad_zeta(zeta, t);
    Vec n(g.size() + 1);
    double s = 1.0;
    for (size_t i = 0; i < g.size(); ++i) {
        n[i] = -g[i];
        s += g[i] * g[i];
    }
    n.back() = 1.0;
    double inv = 1.0 / std::sqrt(s);
    for (double& x : n) x *= inv;
    return n;
}

Vec normal_field(const PhaseSurface& psi, std::span<const double> xi) {
    if (static_cast<int>(xi.size()) != psi.ambient_dim())
        throw std::invalid_argument("normal_field: point rank mismatch");
    Vec zeta(xi.begin(), xi.end() - 1);
    if (!psi.time_dependent()) return normal(psi, zeta);
    const double tau = xi.back();
    double lo = -2.0, hi = 2.0;  // extended time interval
    double flo = psi.eval(zeta, lo) - tau, fhi = psi.eval(zeta, hi) - tau;
    if (flo > 0.0 || fhi < 0.0) throw std::domain_error("normal field undefined at xi");
    while (hi - lo > 1e-12) {
        double mid = 0.5 * (lo + hi);
        if (psi.eval(zeta, mid) - tau <= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return normal(psi, zeta, 0.5 * (lo + hi));
}

double transversality_volume(std::span<const Vec> vs) {
    if (vs.empty()) return 1.0;
    if (vs.size() > vs[0].size())
        throw std::invalid_argument("transversality_volume: k exceeds ambient dimension");
    return parallelepiped_volume(vs);
}

}  // namespace freqlab
