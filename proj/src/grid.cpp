#include "freqlab/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>

#include "freqlab/rng.hpp"

namespace freqlab {

Grid make_grid(int d, int n, double h) {
    if (d < 1) throw std::invalid_argument("make_grid: dimension must be >= 1");
    if (n < 2 || (n & (n - 1)) != 0) throw std::invalid_argument("make_grid: n must be a power of two");
    if (!(h > 0.0)) throw std::invalid_argument("make_grid: h must be positive");
    if (n * h < 2.0) throw std::invalid_argument("make_grid: frequency box uncovered (n*h < 2)");
    Grid g;
    g.d = d;
    g.n = n;
    g.h = h;
    g.period = 2.0 * M_PI / h;
    return g;
}

namespace {

// FFTW plans are cached per (d, n, direction); plan creation is not thread-safe
// but execution on distinct buffers is.
struct PlanKey {
    int d, n, sign;
    bool operator<(const PlanKey& o) const {
        return std::tie(d, n, sign) < std::tie(o.d, o.n, o.sign);
    }
};

fftw_plan get_plan(int d, int n, int sign) {
    static std::map<PlanKey, fftw_plan> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({d, n, sign});
    if (it != cache.end()) return it->second;
    std::vector<int> dims(d, n);
    // Plan on a throwaway buffer so the caller's data is untouched, then reuse
    // via fftw_execute_dft. FFTW_ESTIMATE keeps planning deterministic.
    int64_t total = 1;
    for (int i = 0; i < d; ++i) total *= n;
    fftw_complex* tmp = fftw_alloc_complex(static_cast<size_t>(total));
    fftw_plan p = fftw_plan_dft(d, dims.data(), tmp, tmp, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(tmp);
    cache.emplace(PlanKey{d, n, sign}, p);
    return p;
}

// The centered DFT F[k] = sum_j f_j e^{-2 pi i (j-A)(k-A)/n}, A = n/2, equals
// c * (-1)^k * FFT[ (-1)^j f_j ][k] with c = e^{-i pi n/2} per axis.
void apply_checkerboard(std::vector<cplx>& v, const Grid& g) {
    const int n = g.n, d = g.d;
    for (size_t f = 0; f < v.size(); ++f) {
        int parity = 0;
        int64_t rem = static_cast<int64_t>(f);
        for (int a = d - 1; a >= 0; --a) {
            parity += static_cast<int>(rem % n);
            rem /= n;
        }
        if (parity & 1) v[f] = -v[f];
    }
}

}  // namespace

GridFunction transform(const GridFunction& f) {
    const Grid& g = f.grid;
    GridFunction out(g, f.rep == Rep::Space ? Rep::Frequency : Rep::Space);
    out.v = f.v;

    const int sign = (f.rep == Rep::Space) ? FFTW_FORWARD : FFTW_BACKWARD;
    apply_checkerboard(out.v, g);
    fftw_plan p = get_plan(g.d, g.n, sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(out.v.data()),
                     reinterpret_cast<fftw_complex*>(out.v.data()));
    apply_checkerboard(out.v, g);

    const double angle = -M_PI * (g.n / 2) * g.d;  // product of per-axis constants
    cplx c = std::polar(1.0, sign == FFTW_FORWARD ? angle : -angle);
    if (sign == FFTW_BACKWARD) c /= static_cast<double>(g.size());
    for (cplx& z : out.v) z *= c;
    return out;
}

GridFunction mode(const Grid& g, const std::vector<int>& k, cplx coeff) {
    if (static_cast<int>(k.size()) != g.d) throw std::invalid_argument("mode: index rank mismatch");
    for (int a = 0; a < g.d; ++a)
        if (k[a] < 0 || k[a] >= g.n) throw std::invalid_argument("mode: index out of range");
    GridFunction f(g, Rep::Frequency);
    f.v[g.flatten(k.data())] = coeff * static_cast<double>(g.size());
    return f;
}

double lp_norm(const GridFunction& f, double p) {
    if (f.rep != Rep::Space) throw std::invalid_argument("lp_norm: function must be in space representation");
    if (std::isinf(p)) {
        double m = 0.0;
        for (const cplx& z : f.v) m = std::max(m, std::abs(z));
        return m;
    }
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    double s = 0.0;
    if (p == 2.0) {
        for (const cplx& z : f.v) s += std::norm(z);
    } else if (p == 4.0) {
        for (const cplx& z : f.v) {
            double q = std::norm(z);
            s += q * q;
        }
    } else {
        for (const cplx& z : f.v) s += std::pow(std::abs(z), p);
    }
    return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

double mixed_norm(std::span<const GridFunction> fs, std::span<const double> weights, double p) {
    if (fs.empty()) throw std::invalid_argument("mixed_norm: empty family");
    if (fs.size() != weights.size()) throw std::invalid_argument("mixed_norm: weight count mismatch");
    const Grid& g = fs[0].grid;
    for (const GridFunction& f : fs) {
        if (!(f.grid == g)) throw std::invalid_argument("mixed_norm: mismatched grids");
        if (f.rep != Rep::Space) throw std::invalid_argument("mixed_norm: space representation required");
    }
    for (double w : weights)
        if (w < 0.0) throw std::invalid_argument("mixed_norm: negative weight");
    GridFunction acc(g, Rep::Space);
    for (size_t j = 0; j < fs.size(); ++j) {
        const double w = weights[j];
        for (size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += w * std::norm(fs[j].v[i]);
    }
    for (cplx& z : acc.v) z = std::sqrt(z.real());
    return lp_norm(acc, p);
}

GridFunction pointwise_product(const GridFunction& a, const GridFunction& b) {
    if (!(a.grid == b.grid) || a.rep != b.rep) throw std::invalid_argument("pointwise_product: mismatch");
    GridFunction out(a.grid, a.rep);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
    return out;
}

GridFunction scale(const GridFunction& f, cplx c) {
    GridFunction out = f;
    for (cplx& z : out.v) z *= c;
    return out;
}

double freq_mass_fraction_outside(const GridFunction& f, double half) {
    GridFunction fh = (f.rep == Rep::Frequency) ? f : transform(f);
    const Grid& g = fh.grid;
    double inside = 0.0, outside = 0.0;
    std::vector<int> idx(g.d);
    for (int64_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx.data());
        bool in = true;
        for (int a = 0; a < g.d; ++a)
            if (std::abs(g.freq_coord(idx[a])) > half) {
                in = false;
                break;
            }
        (in ? inside : outside) += std::norm(fh.v[i]);
    }
    double total = inside + outside;
    return total > 0.0 ? outside / total : 0.0;
}

GridFunction random_freq(const Grid& g, uint64_t seed) {
    Rng rng(seed);
    GridFunction f(g, Rep::Frequency);
    for (cplx& z : f.v) z = cplx(rng.normal(), rng.normal());
    return f;
}

}  // namespace freqlab
