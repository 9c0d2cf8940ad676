#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace freqlab {

using Vec = std::vector<double>;

/// Dense row-major matrix, small sizes only (dimensions here are 1..4).
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Vec matvec(const Mat& m, const Vec& v) {
    if (static_cast<int>(v.size()) != m.cols) throw std::invalid_argument("matvec: size mismatch");
    Vec out(m.rows, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

inline Mat matmul(const Mat& x, const Mat& y) {
    if (x.cols != y.rows) throw std::invalid_argument("matmul: size mismatch");
    Mat out(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            double xv = x(i, k);
            for (int j = 0; j < y.cols; ++j) out(i, j) += xv * y(k, j);
        }
    return out;
}

inline double dot(const Vec& x, const Vec& y) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues; V receives orthonormal eigenvectors as columns.
std::vector<double> jacobi_eigensymm(const Mat& s, Mat& v);

/// (sqrt S)^{-1} for symmetric positive definite S via P^{-1} D' P.
/// Throws std::invalid_argument if S is not positive definite.
Mat inv_sqrt_spd(const Mat& s);

/// k-dimensional volume of the parallelepiped spanned by vs: sqrt(det(G^T G)).
double parallelepiped_volume(std::span<const Vec> vs);

/// Euclidean distance from x to the span of an orthonormal basis (projection residual).
double dist_to_span(const Vec& x, std::span<const Vec> orthonormal_basis);

/// Gram-Schmidt; returns orthonormal basis of span(vs), dropping near-dependent vectors.
std::vector<Vec> orthonormalize(std::span<const Vec> vs, double tol = 1e-12);

}  // namespace freqlab
