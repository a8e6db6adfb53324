#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "asri/core/error.hpp"

namespace asri::linalg {

// Dense row-major matrix. Dimensions here are tiny (<= a few dozen columns).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double v = 0.0) : r_(r), c_(c), a_(r * c, v) {}
    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        r_ = rows.size();
        c_ = r_ ? rows.begin()->size() : 0;
        a_.reserve(r_ * c_);
        for (auto& row : rows) {
            require(row.size() == c_, ErrorKind::parameter, "ragged matrix literal");
            a_.insert(a_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    [[nodiscard]] std::size_t rows() const { return r_; }
    [[nodiscard]] std::size_t cols() const { return c_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * c_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * c_ + j]; }
    [[nodiscard]] std::span<const double> row(std::size_t i) const { return {a_.data() + i * c_, c_}; }
    [[nodiscard]] std::span<double> row(std::size_t i) { return {a_.data() + i * c_, c_}; }
    [[nodiscard]] const std::vector<double>& data() const { return a_; }

    [[nodiscard]] std::vector<double> col(std::size_t j) const {
        std::vector<double> v(r_);
        for (std::size_t i = 0; i < r_; ++i) v[i] = (*this)(i, j);
        return v;
    }

    [[nodiscard]] Matrix transpose() const {
        Matrix t(c_, r_);
        for (std::size_t i = 0; i < r_; ++i)
            for (std::size_t j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix& operator+=(const Matrix& o) {
        require(r_ == o.r_ && c_ == o.c_, ErrorKind::parameter, "shape mismatch in +=");
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        require(r_ == o.r_ && c_ == o.c_, ErrorKind::parameter, "shape mismatch in -=");
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
        return *this;
    }
    Matrix& operator*=(double s) {
        for (double& x : a_) x *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        require(a.c_ == b.r_, ErrorKind::parameter, "shape mismatch in matrix product");
        Matrix m(a.r_, b.c_);
        for (std::size_t i = 0; i < a.r_; ++i)
            for (std::size_t k = 0; k < a.c_; ++k) {
                const double x = a(i, k);
                if (x == 0.0) continue;
                for (std::size_t j = 0; j < b.c_; ++j) m(i, j) += x * b(k, j);
            }
        return m;
    }

private:
    std::size_t r_ = 0, c_ = 0;
    std::vector<double> a_;
};

inline std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
    require(a.cols() == x.size(), ErrorKind::parameter, "shape mismatch in matvec");
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double x : a.data()) m = std::max(m, std::abs(x));
    return m;
}

// Lower Cholesky factor, or nullopt when not positive definite.
inline std::optional<Matrix> cholesky(const Matrix& a) {
    const std::size_t n = a.rows();
    require(n == a.cols(), ErrorKind::parameter, "cholesky needs a square matrix");
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

inline double log_det_from_cholesky(const Matrix& l) {
    double s = 0.0;
    for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

// Solve L z = b (forward substitution).
inline std::vector<double> forward_subst(const Matrix& l, std::span<const double> b) {
    const std::size_t n = l.rows();
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * z[k];
        z[i] = s / l(i, i);
    }
    return z;
}

// Gauss-Jordan with partial pivoting. Throws `degenerate` on a (numerically) singular input.
inline Matrix inverse(const Matrix& a) {
    const std::size_t n = a.rows();
    require(n == a.cols(), ErrorKind::parameter, "inverse needs a square matrix");
    Matrix m = a, inv = Matrix::identity(n);
    const double scale = std::max(max_abs(a), 1e-300);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(m(r, c)) > std::abs(m(p, c))) p = r;
        if (std::abs(m(p, c)) <= 1e-13 * scale) fail(ErrorKind::degenerate, "singular matrix");
        if (p != c)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(m(p, j), m(c, j));
                std::swap(inv(p, j), inv(c, j));
            }
        const double piv = m(c, c);
        for (std::size_t j = 0; j < n; ++j) {
            m(c, j) /= piv;
            inv(c, j) /= piv;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = m(r, c);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                m(r, j) -= f * m(c, j);
                inv(r, j) -= f * inv(c, j);
            }
        }
    }
    return inv;
}

inline std::vector<double> solve(const Matrix& a, std::span<const double> b) {
    return matvec(inverse(a), b);
}

struct SymEigen {
    std::vector<double> values;  // descending
    Matrix vectors;              // column k pairs with values[k]
};

// Cyclic Jacobi rotations for symmetric matrices.
inline SymEigen jacobi_eigen(const Matrix& s, double tol = 1e-12, int max_sweeps = 100) {
    const std::size_t n = s.rows();
    require(n == s.cols(), ErrorKind::parameter, "eigen needs a square matrix");
    Matrix a = s, v = Matrix::identity(n);
    const double scale = std::max(max_abs(s), 1e-300);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
        if (off <= tol * scale) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
    SymEigen out{std::vector<double>(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

// Spectral radius of a general square matrix from ||A^(2^m)||^(1/2^m), with
// renormalisation at every squaring to stay in range.
inline double spectral_radius(const Matrix& a, int squarings = 40) {
    auto fro = [](const Matrix& m) {
        double s = 0.0;
        for (double x : m.data()) s += x * x;
        return std::sqrt(s);
    };
    double nrm = fro(a);
    if (nrm == 0.0) return 0.0;
    Matrix b = a * (1.0 / nrm);
    double log_norm = std::log(nrm);  // log ||A^(2^k)|| tracked as 2^k-scaled value below
    double scaled = log_norm;         // log ||A^(2^k)|| / 2^k
    double pow2 = 1.0;
    for (int k = 0; k < squarings; ++k) {
        Matrix c = b * b;
        const double n2 = fro(c);
        if (n2 == 0.0) return 0.0;
        pow2 *= 2.0;
        // log||A^(2^(k+1))|| = 2 log||A^(2^k)|| + log||B^2||
        scaled = scaled + std::log(n2) / pow2;
        b = c * (1.0 / n2);
    }
    return std::exp(scaled);
}

struct OlsFit {
    std::vector<double> coef;
    std::vector<double> se;
    std::vector<double> residuals;
    std::size_t n = 0, k = 0;
    double rss = 0.0;
    double sigma2 = 0.0;  // rss / (n - k)
    double r2 = 0.0;
    double loglik = 0.0;
    double aic = 0.0, bic = 0.0, hq = 0.0;
    Matrix xtx_inv;
};

// Least squares through Householder QR; throws `degenerate` on collinear regressors.
inline OlsFit ols(const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.rows(), k = x.cols();
    require(y.size() == n, ErrorKind::parameter, "ols: y length differs from X rows");
    require(n > k, ErrorKind::insufficient_data, "ols: need more observations than regressors");
    Matrix r = x;
    std::vector<double> qty(y.begin(), y.end());
    std::vector<double> colnorm(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x(i, j) * x(i, j);
        colnorm[j] = std::sqrt(s);
    }
    std::vector<double> v(n);
    for (std::size_t j = 0; j < k; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < n; ++i) norm += r(i, j) * r(i, j);
        norm = std::sqrt(norm);
        if (norm <= 1e-10 * std::max(colnorm[j], 1e-300))
            fail(ErrorKind::degenerate, "ols: collinear or zero regressor column " + std::to_string(j));
        const double alpha = r(j, j) > 0 ? -norm : norm;
        for (std::size_t i = 0; i < n; ++i) v[i] = 0.0;
        v[j] = r(j, j) - alpha;
        for (std::size_t i = j + 1; i < n; ++i) v[i] = r(i, j);
        double vnorm2 = 0.0;
        for (std::size_t i = j; i < n; ++i) vnorm2 += v[i] * v[i];
        if (vnorm2 > 0.0) {
            for (std::size_t c = j; c < k; ++c) {
                double d = 0.0;
                for (std::size_t i = j; i < n; ++i) d += v[i] * r(i, c);
                const double f = 2.0 * d / vnorm2;
                for (std::size_t i = j; i < n; ++i) r(i, c) -= f * v[i];
            }
            double d = 0.0;
            for (std::size_t i = j; i < n; ++i) d += v[i] * qty[i];
            const double f = 2.0 * d / vnorm2;
            for (std::size_t i = j; i < n; ++i) qty[i] -= f * v[i];
        }
    }
    for (std::size_t j = 0; j < k; ++j)
        if (std::abs(r(j, j)) <= 1e-10 * std::max(colnorm[j], 1e-300))
            fail(ErrorKind::degenerate, "ols: collinear regressors");

    OlsFit f;
    f.n = n;
    f.k = k;
    f.coef.assign(k, 0.0);
    for (std::size_t jj = k; jj-- > 0;) {
        double s = qty[jj];
        for (std::size_t c = jj + 1; c < k; ++c) s -= r(jj, c) * f.coef[c];
        f.coef[jj] = s / r(jj, jj);
    }
    // R^{-1}
    Matrix rinv(k, k);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t ii = c + 1; ii-- > 0;) {
            double s = (ii == c) ? 1.0 : 0.0;
            for (std::size_t m = ii + 1; m <= c; ++m) s -= r(ii, m) * rinv(m, c);
            rinv(ii, c) = s / r(ii, ii);
        }
    }
    f.xtx_inv = rinv * rinv.transpose();

    f.residuals.resize(n);
    double ybar = 0.0;
    for (double yi : y) ybar += yi;
    ybar /= double(n);
    double tss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < k; ++j) fit += x(i, j) * f.coef[j];
        f.residuals[i] = y[i] - fit;
        f.rss += f.residuals[i] * f.residuals[i];
        tss += (y[i] - ybar) * (y[i] - ybar);
    }
    f.sigma2 = f.rss / double(n - k);
    f.r2 = tss > 0 ? 1.0 - f.rss / tss : 0.0;
    f.se.resize(k);
    for (std::size_t j = 0; j < k; ++j) f.se[j] = std::sqrt(std::max(0.0, f.sigma2 * f.xtx_inv(j, j)));
    const double nn = double(n);
    const double s2ml = std::max(f.rss / nn, 1e-300);
    f.loglik = -0.5 * nn * (std::log(2.0 * 3.14159265358979323846) + std::log(s2ml) + 1.0);
    f.aic = -2.0 * f.loglik + 2.0 * double(k);
    f.bic = -2.0 * f.loglik + double(k) * std::log(nn);
    f.hq = -2.0 * f.loglik + 2.0 * double(k) * std::log(std::log(nn));
    return f;
}

}  // namespace asri::linalg
