#include "freqlab/linalg.hpp"

#include <algorithm>

namespace freqlab {

std::vector<double> jacobi_eigensymm(const Mat& s, Mat& v) {
    if (s.rows != s.cols) throw std::invalid_argument("jacobi: matrix not square");
    const int n = s.rows;
    Mat a = s;
    v = Mat::identity(n);
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), sn = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
    }
    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = a(i, i);
    return eig;
}

Mat inv_sqrt_spd(const Mat& s) {
    Mat v;
    std::vector<double> eig = jacobi_eigensymm(s, v);
    for (double l : eig)
        if (!(l > 0.0)) throw std::invalid_argument("inv_sqrt_spd: matrix not positive definite");
    const int n = s.rows;
    Mat out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += v(i, k) * v(j, k) / std::sqrt(eig[k]);
            out(i, j) = acc;
        }
    return out;
}

double parallelepiped_volume(std::span<const Vec> vs) {
    const int k = static_cast<int>(vs.size());
    if (k == 0) return 1.0;
    const int d = static_cast<int>(vs[0].size());
    if (k > d) throw std::invalid_argument("parallelepiped_volume: more vectors than ambient dimension");
    Mat g(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) g(i, j) = dot(vs[i], vs[j]);
    // det via Cholesky-style elimination; clamps at 0 for degenerate input.
    double det = 1.0;
    for (int i = 0; i < k; ++i) {
        double piv = g(i, i);
        if (piv <= 0.0) return 0.0;
        det *= piv;
        for (int r = i + 1; r < k; ++r) {
            double f = g(r, i) / piv;
            for (int c = i; c < k; ++c) g(r, c) -= f * g(i, c);
        }
    }
    return det > 0.0 ? std::sqrt(det) : 0.0;
}

double dist_to_span(const Vec& x, std::span<const Vec> basis) {
    Vec r = x;
    for (const Vec& b : basis) {
        double c = dot(r, b);
        for (size_t i = 0; i < r.size(); ++i) r[i] -= c * b[i];
    }
    return norm2(r);
}

std::vector<Vec> orthonormalize(std::span<const Vec> vs, double tol) {
    std::vector<Vec> basis;
    for (const Vec& v : vs) {
        Vec r = v;
        for (const Vec& b : basis) {
            double c = dot(r, b);
            for (size_t i = 0; i < r.size(); ++i) r[i] -= c * b[i];
        }
        double n = norm2(r);
        if (n > tol) {
            for (double& x : r) x /= n;
            basis.push_back(std::move(r));
        }
    }
    return basis;
}

}  // namespace freqlab
