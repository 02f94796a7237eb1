// Shared small types: error hierarchy, intervals, dense vectors/matrices for
// low-dimensional parameter spaces, and a few order-statistics helpers.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdive {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
    using Error::Error;
};
struct DomainError : Error {
    using Error::Error;
};
struct DegenerateSample : Error {
    using Error::Error;
};
struct DegenerateFit : Error {
    using Error::Error;
};
struct DegenerateGrid : Error {
    using Error::Error;
};
struct AssumptionViolation : Error {
    using Error::Error;
};
struct DatasetIntegrity : Error {
    using Error::Error;
};
struct TuningAbort : Error {
    using Error::Error;
};

// Quadrature failure; carries the worst unresolved panel estimate.
struct NumericError : Error {
    explicit NumericError(const std::string& msg, double worst = 0.0)
        : Error(msg), worst_estimate(worst) {}
    double worst_estimate;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

inline Interval interval_union(const Interval& a, const Interval& b) {
    return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

using Vector = std::vector<double>;

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Vector operator-(const Vector& x, const Vector& y) {
    Vector r(x.size());
    for (size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
    return r;
}

inline double dot(const Vector& x, const Vector& y) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const Vector& x) { return std::sqrt(dot(x, x)); }

inline double max_abs(const Vector& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

inline Matrix matmul(const Matrix& x, const Matrix& y) {
    Matrix r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const double v = x(i, k);
            if (v == 0.0) continue;
            for (int j = 0; j < y.cols; ++j) r(i, j) += v * y(k, j);
        }
    return r;
}

inline Vector matvec(const Matrix& m, const Vector& v) {
    Vector r(m.rows, 0.0);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) r[i] += m(i, j) * v[j];
    return r;
}

inline double matrix_asymmetry(const Matrix& m) {
    double worst = 0.0;
    for (int i = 0; i < m.rows; ++i)
        for (int j = i + 1; j < m.cols; ++j) worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
    return worst;
}

inline Matrix symmetrized(const Matrix& m) {
    Matrix r(m.rows, m.cols);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) r(i, j) = 0.5 * (m(i, j) + m(j, i));
    return r;
}

// Gaussian elimination with partial pivoting; p is tiny here (<= 3).
inline Vector solve(Matrix m, Vector b) {
    const int n = m.rows;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(m(r, col)) > std::abs(m(piv, col))) piv = r;
        if (std::abs(m(piv, col)) < 1e-300)
            throw NumericError("singular matrix in solve()");
        if (piv != col) {
            for (int j = 0; j < n; ++j) std::swap(m(col, j), m(piv, j));
            std::swap(b[col], b[piv]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = m(r, col) / m(col, col);
            for (int j = col; j < n; ++j) m(r, j) -= f * m(col, j);
            b[r] -= f * b[col];
        }
    }
    Vector x(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= m(i, j) * x[j];
        x[i] = s / m(i, i);
    }
    return x;
}

inline Matrix inverse(const Matrix& m) {
    const int n = m.rows;
    Matrix inv(n, n);
    for (int j = 0; j < n; ++j) {
        Vector e(n, 0.0);
        e[j] = 1.0;
        Vector col = solve(m, e);
        for (int i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return inv;
}

// Cholesky-based positive-definiteness probe for symmetric input.
inline bool is_positive_definite(const Matrix& m) {
    const int n = m.rows;
    Matrix l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s)) return false;
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return true;
}

// Order-independent summation used by the simulation aggregates.
inline double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double v : xs) s += v;
        return s;
    }
    const size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

// Median with the average-of-two-central convention for even sizes.
inline double median(std::span<const double> xs) {
    if (xs.empty()) throw InvalidInput("median of empty sample");
    std::vector<double> v(xs.begin(), xs.end());
    const size_t n = v.size();
    const size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    if (n % 2 == 1) return v[mid];
    const double hi = v[mid];
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
}

inline double median_absolute_deviation(std::span<const double> xs, double center) {
    std::vector<double> dev(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) dev[i] = std::abs(xs[i] - center);
    return median(dev);
}

inline void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw InvalidInput(std::string("non-finite ") + what);
}

}  // namespace sdive
