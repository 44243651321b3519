#pragma once

// Dense matrices at desk scale. Symmetric spectra come from cyclic Jacobi
// rotations (off-diagonal mass driven below 1e-12 of scale); general 2-norms
// from the Gram matrix. A rational PSD check based on symmetric elimination
// backs the exact mode of the Loewner comparisons.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "eclab/rational.hpp"

namespace eclab {

struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Mat transpose() const {
        Mat t(cols, rows);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Mat operator*(const Mat& o) const {
        if (cols != o.rows) throw std::invalid_argument("matrix product shape mismatch");
        Mat r(rows, o.cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t k = 0; k < cols; ++k) {
                double x = (*this)(i, k);
                if (x == 0.0) continue;
                for (std::size_t j = 0; j < o.cols; ++j) r(i, j) += x * o(k, j);
            }
        return r;
    }

    Mat operator+(const Mat& o) const {
        Mat r = *this;
        for (std::size_t i = 0; i < a.size(); ++i) r.a[i] += o.a[i];
        return r;
    }
    Mat operator-(const Mat& o) const {
        Mat r = *this;
        for (std::size_t i = 0; i < a.size(); ++i) r.a[i] -= o.a[i];
        return r;
    }
    Mat scaled(double s) const {
        Mat r = *this;
        for (auto& x : r.a) x *= s;
        return r;
    }

    double max_abs() const {
        double m = 0;
        for (double x : a) m = std::max(m, std::fabs(x));
        return m;
    }

    double trace() const {
        double t = 0;
        for (std::size_t i = 0; i < std::min(rows, cols); ++i) t += (*this)(i, i);
        return t;
    }
};

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline std::vector<double> jacobi_eigenvalues(Mat m, double tol = 1e-12, int max_sweeps = 128) {
    if (m.rows != m.cols) throw std::invalid_argument("jacobi: matrix not square");
    std::size_t n = m.rows;
    if (n == 0) return {};
    // symmetrize to guard against roundoff asymmetry in products
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = m(j, i) = s;
        }
    double scale = m.max_abs();
    if (scale == 0.0) return std::vector<double>(n, 0.0);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off = std::max(off, std::fabs(m(i, j)));
        if (off <= tol * scale) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = m(p, q);
                if (std::fabs(apq) <= 1e-300) continue;
                double theta = (m(q, q) - m(p, p)) / (2 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
                double c = 1.0 / std::sqrt(t * t + 1), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = m(k, p), akq = m(k, q);
                    m(k, p) = c * akp - s * akq;
                    m(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = m(p, k), aqk = m(q, k);
                    m(p, k) = c * apk - s * aqk;
                    m(q, k) = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = m(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

// Eigenvalues and orthonormal eigenvectors (columns of V), ascending.
inline std::pair<std::vector<double>, Mat> jacobi_eigensystem(Mat m, double tol = 1e-12, int max_sweeps = 128) {
    if (m.rows != m.cols) throw std::invalid_argument("jacobi: matrix not square");
    std::size_t n = m.rows;
    Mat v = Mat::identity(n);
    if (n == 0) return {{}, v};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = m(j, i) = s;
        }
    double scale = m.max_abs();
    if (scale == 0.0) return {std::vector<double>(n, 0.0), v};
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off = std::max(off, std::fabs(m(i, j)));
        if (off <= tol * scale) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = m(p, q);
                if (std::fabs(apq) <= 1e-300) continue;
                double theta = (m(q, q) - m(p, p)) / (2 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
                double c = 1.0 / std::sqrt(t * t + 1), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = m(k, p), akq = m(k, q);
                    m(k, p) = c * akp - s * akq;
                    m(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = m(p, k), aqk = m(q, k);
                    m(p, k) = c * apk - s * aqk;
                    m(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m(a, a) < m(b, b); });
    std::vector<double> eig(n);
    Mat vs(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        eig[j] = m(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) vs(i, j) = v(i, order[j]);
    }
    return {eig, vs};
}

// Symmetric PSD square root; tiny negative eigenvalues are clipped to zero.
inline Mat sym_sqrt(const Mat& m) {
    auto [eig, v] = jacobi_eigensystem(m);
    std::size_t n = m.rows;
    Mat r(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        double lam = eig[k] > 0 ? std::sqrt(eig[k]) : 0.0;
        if (lam == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) r(i, j) += lam * v(i, k) * v(j, k);
    }
    return r;
}

inline double sym_eig_max(const Mat& m) {
    auto e = jacobi_eigenvalues(m);
    return e.empty() ? 0.0 : e.back();
}
inline double sym_eig_min(const Mat& m) {
    auto e = jacobi_eigenvalues(m);
    return e.empty() ? 0.0 : e.front();
}

// 2-norm of a general matrix via the smaller-side Gram matrix.
inline double spectral_norm(const Mat& b) {
    if (b.rows == 0 || b.cols == 0) return 0.0;
    Mat g = b.rows <= b.cols ? b * b.transpose() : b.transpose() * b;
    double lam = sym_eig_max(g);
    return lam <= 0 ? 0.0 : std::sqrt(lam);
}

// Largest generalized eigenvalue of (C, D) for symmetric C and nonnegative
// diagonal D, restricted to D's support: whiten by D^{-1/2} and take the top
// eigenvalue. Entries of C off the support must vanish for the restriction to
// be meaningful; they are ignored here.
inline double whitened_eig_max(const Mat& c, const std::vector<double>& diag) {
    std::vector<std::size_t> sup;
    for (std::size_t i = 0; i < diag.size(); ++i)
        if (diag[i] > 0) sup.push_back(i);
    if (sup.empty()) return 0.0;
    Mat w(sup.size(), sup.size());
    for (std::size_t i = 0; i < sup.size(); ++i)
        for (std::size_t j = 0; j < sup.size(); ++j)
            w(i, j) = c(sup[i], sup[j]) / std::sqrt(diag[sup[i]] * diag[sup[j]]);
    return sym_eig_max(w);
}

// Exact PSD test for a symmetric rational matrix, by symmetric elimination:
// a PSD matrix with a zero pivot must have the whole pivot row zero.
inline bool rat_psd(std::vector<std::vector<Rat>> m) {
    std::size_t n = m.size();
    for (std::size_t k = 0; k < n; ++k) {
        if (m[k][k] < 0) return false;
        if (m[k][k] == 0) {
            for (std::size_t j = k + 1; j < n; ++j)
                if (m[k][j] != 0) return false;
            continue;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            if (m[i][k] == 0) continue;
            Rat f = m[i][k] / m[k][k];
            for (std::size_t j = k; j < n; ++j) m[i][j] -= f * m[k][j];
        }
        for (std::size_t i = k + 1; i < n; ++i) m[k][i] = 0; // keep symmetry bookkeeping simple
    }
    return true;
}

// Loewner margin of A <= B in float: smallest eigenvalue of B - A.
inline double loewner_margin(const Mat& a, const Mat& b) { return sym_eig_min(b - a); }

} // namespace eclab
