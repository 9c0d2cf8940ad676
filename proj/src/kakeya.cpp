#include "freqlab/kakeya.hpp"

#include <cmath>
#include <sstream>

#include "freqlab/rng.hpp"

namespace freqlab {

bool Tube::contains(const Vec& x) const {
    double along = 0.0;
    for (size_t i = 0; i < x.size(); ++i) along += (x[i] - center[i]) * theta[i];
    if (std::isfinite(length) && std::abs(along) > length / 2.0) return false;
    double perp2 = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double r = x[i] - center[i] - along * theta[i];
        perp2 += r * r;
    }
    return perp2 <= 0.25 * width * width;
}

double Tube::clipped_length() const {
    // length of { s : |center + s theta| <= 2 }
    double along = dot(center, theta);
    double perp2 = dot(center, center) - along * along;
    if (perp2 >= 4.0) return 0.0;
    double half = std::sqrt(4.0 - perp2);
    double L = 2.0 * half;
    return std::isfinite(length) ? std::min(length, L) : L;
}

double Tube::measure(int d) const { return std::pow(width, d - 1) * clipped_length(); }

double TubeFamily::transversality() const {
    const int kk = k();
    double best = 1e300;
    std::vector<int> pick(kk, 0);
    for (const auto& fam : families)
        if (fam.empty()) return 0.0;
    bool done = false;
    while (!done) {
        std::vector<Vec> dirs(kk);
        for (int i = 0; i < kk; ++i) dirs[i] = families[i][pick[i]].theta;
        best = std::min(best, parallelepiped_volume(dirs));
        for (int i = 0;; ++i) {
            if (i == kk) {
                done = true;
                break;
            }
            if (++pick[i] < static_cast<int>(families[i].size())) break;
            pick[i] = 0;
        }
    }
    return best;
}

KakeyaResult kakeya_ratio(const TubeFamily& fam, double big_r, const Quadrature& quad) {
    const int d = fam.d, k = fam.k();
    if (k > d) throw std::invalid_argument("kakeya_ratio: k exceeds dimension");
    KakeyaResult out;
    out.sigma = fam.transversality();
    bool empty = true;
    for (const auto& f : fam.families)
        if (!f.empty()) empty = false;
    if (empty) return out;
    if (!(out.sigma > 0.0)) throw std::invalid_argument("kakeya_ratio: degenerate family (sigma = 0)");

    const double p = 1.0 / (k - 1);
    auto integrand = [&](const Vec& x) -> double {
        double prod = 1.0;
        for (int i = 0; i < k; ++i) {
            double cnt = 0.0;
            for (const Tube& t : fam.families[i])
                if (t.contains(x)) cnt += 1.0;
            prod *= cnt;
            if (prod == 0.0) return 0.0;
        }
        return std::pow(prod, p);
    };

    double integral = 0.0;
    if (quad.kind == Quadrature::GridRule) {
        int nq = quad.n_per_axis > 0 ? quad.n_per_axis
                                     : static_cast<int>(std::ceil(4.0 * std::sqrt(big_r)));
        double step = 2.0 / nq, cellvol = std::pow(step, d);
        std::vector<int> it(d, 0);
        Vec x(d);
        bool done = false;
        while (!done) {
            double r2 = 0.0;
            for (int a = 0; a < d; ++a) {
                x[a] = -1.0 + (it[a] + 0.5) * step;
                r2 += x[a] * x[a];
            }
            if (r2 <= 1.0) integral += integrand(x) * cellvol;
            for (int a = 0;; ++a) {
                if (a == d) {
                    done = true;
                    break;
                }
                if (++it[a] < nq) break;
                it[a] = 0;
            }
        }
    } else {
        // stratified Monte Carlo over [-1,1]^d restricted to the ball
        Rng rng(quad.seed);
        int strata = static_cast<int>(std::floor(std::cbrt(static_cast<double>(quad.n_samples))));
        strata = std::max(strata, 2);
        int per = std::max<int>(1, static_cast<int>(quad.n_samples / std::pow(strata, d)));
        double step = 2.0 / strata, cellvol = std::pow(step, d);
        std::vector<int> it(d, 0);
        Vec x(d);
        bool done = false;
        while (!done) {
            double acc = 0.0;
            for (int s = 0; s < per; ++s) {
                double r2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    x[a] = -1.0 + (it[a] + rng.uniform()) * step;
                    r2 += x[a] * x[a];
                }
                if (r2 <= 1.0) acc += integrand(x);
            }
            integral += acc / per * cellvol;
            for (int a = 0;; ++a) {
                if (a == d) {
                    done = true;
                    break;
                }
                if (++it[a] < strata) break;
                it[a] = 0;
            }
        }
    }
    out.lhs = std::pow(integral, k - 1.0);  // L^{1/(k-1)} quasi-norm

    double prod_meas = 1.0;
    for (int i = 0; i < k; ++i) {
        double s = 0.0;
        for (const Tube& t : fam.families[i]) s += t.measure(d);
        prod_meas *= s;
    }
    out.bound_normalizer = std::pow(big_r, 0.5 * (d - k)) / out.sigma * prod_meas;
    out.ratio = out.bound_normalizer > 0.0 ? out.lhs / out.bound_normalizer : 0.0;
    return out;
}

TubeFamily random_transversal_family(int d, int k, double sigma_target,
                                     const std::vector<int>& counts, uint64_t seed) {
    if (k > d) throw std::invalid_argument("random_transversal_family: k exceeds dimension");
    if (!(sigma_target > 0.0 && sigma_target <= 1.0))
        throw std::invalid_argument("random_transversal_family: infeasible sigma target");
    if (static_cast<int>(counts.size()) != k)
        throw std::invalid_argument("random_transversal_family: counts size mismatch");
    Rng rng(seed);

    // anchors: e_1 plus directions tilted from the remaining axes so that the
    // anchor tuple volume is close to sigma_target
    std::vector<Vec> anchors(k, Vec(d, 0.0));
    anchors[0][0] = 1.0;
    double s = std::pow(sigma_target, 1.0 / std::max(1, k - 1));
    double c = std::sqrt(std::max(0.0, 1.0 - s * s));
    for (int i = 1; i < k; ++i) {
        anchors[i][0] = c;
        anchors[i][i] = s;
    }
    const double cap = sigma_target / (10.0 * k);

    TubeFamily fam;
    fam.d = d;
    fam.families.resize(k);
    for (int i = 0; i < k; ++i)
        for (int cnum = 0; cnum < counts[i]; ++cnum) {
            Vec dir = anchors[i];
            for (int a = 0; a < d; ++a) dir[a] += cap * (2.0 * rng.uniform() - 1.0);
            double nrm = norm2(dir);
            for (double& x : dir) x /= nrm;
            // every other tube runs through the origin (bush core) so the
            // overlap functional is exercised; the rest are scattered
            Vec center(d);
            double spread = (cnum % 2 == 0) ? 0.01 : 1.0;
            for (int a = 0; a < d; ++a) center[a] = spread * (2.0 * rng.uniform() - 1.0);
            Tube t;
            t.theta = dir;
            t.center = center;
            t.width = 0.0;  // assigned by the caller from R
            fam.families[i].push_back(std::move(t));
        }
    return fam;
}

std::string serialize(const TubeFamily& fam) {
    std::ostringstream os;
    os << "# tube family d=" << fam.d << " k=" << fam.k() << "\n";
    for (int i = 0; i < fam.k(); ++i) {
        os << "family " << i << "\n";
        for (const Tube& t : fam.families[i]) {
            for (double x : t.theta) os << x << " ";
            for (double x : t.center) os << x << " ";
            os << t.width << "\n";
        }
    }
    return os.str();
}

TubeFamily parse_tube_family(const std::string& text, int d, int k) {
    TubeFamily fam;
    fam.d = d;
    fam.families.resize(k);
    std::istringstream is(text);
    std::string line;
    int cur = -1;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("family", 0) == 0) {
            cur = std::stoi(line.substr(6));
            if (cur < 0 || cur >= k) throw std::invalid_argument("parse_tube_family: bad family index");
            continue;
        }
        if (cur < 0) throw std::invalid_argument("parse_tube_family: tube before family header");
        std::istringstream ls(line);
        Tube t;
        t.theta.resize(d);
        t.center.resize(d);
        for (int a = 0; a < d; ++a) ls >> t.theta[a];
        for (int a = 0; a < d; ++a) ls >> t.center[a];
        ls >> t.width;
        if (!ls) throw std::invalid_argument("parse_tube_family: malformed tube line");
        fam.families[cur].push_back(std::move(t));
    }
    return fam;
}

}  // namespace freqlab
