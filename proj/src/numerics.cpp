#include "robustgen/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "robustgen/errors.hpp"
#include "robustgen/prng.hpp"

namespace robustgen {

NormExponent NormExponent::finite(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) {
        throw InvalidConfigError("norm exponent must satisfy p >= 1, got " + std::to_string(p));
    }
    return NormExponent(false, p);
}

double NormExponent::value() const {
    if (infinite_) {
        throw InvalidConfigError("infinite norm exponent has no finite value");
    }
    return p_;
}

bool NormExponent::operator==(const NormExponent& other) const {
    if (infinite_ || other.infinite_) return infinite_ == other.infinite_;
    return p_ == other.p_;
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows * cols) {
        throw InvalidConfigError("matrix entry count does not match dimensions");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw InvalidConfigError("matrix product dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

std::vector<double> matvec(const Matrix& m, std::span<const double> v) {
    if (m.cols() != v.size()) throw InvalidConfigError("matvec dimension mismatch");
    std::vector<double> out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] = dot(m.row(i), v);
    return out;
}

std::vector<double> matvec_transposed(const Matrix& m, std::span<const double> v) {
    if (m.rows() != v.size()) throw InvalidConfigError("matvec dimension mismatch");
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        const auto row = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) out[j] += vi * row[j];
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

NormExponent dual_exponent(const NormExponent& p) {
    if (p.is_infinite()) return NormExponent::finite(1.0);
    const double v = p.value();
    if (v == 1.0) return NormExponent::infinity();
    return NormExponent::finite(v / (v - 1.0));
}

double lp_norm(std::span<const double> v, const NormExponent& p) {
    if (p.is_infinite()) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
    const double pv = p.value();
    if (pv == 1.0) {
        double s = 0.0;
        for (double x : v) s += std::abs(x);
        return s;
    }
    if (pv == 2.0) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    }
    double s = 0.0;
    for (double x : v) s += std::pow(std::abs(x), pv);
    return std::pow(s, 1.0 / pv);
}

double group_norm_pq(const Matrix& m, const NormExponent& p, const NormExponent& q) {
    std::vector<double> col_norms(m.cols(), 0.0);
    // Column norms accumulated row by row to stay cache friendly.
    if (p.is_infinite()) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const auto row = m.row(i);
            for (std::size_t j = 0; j < m.cols(); ++j)
                col_norms[j] = std::max(col_norms[j], std::abs(row[j]));
        }
    } else {
        const double pv = p.value();
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const auto row = m.row(i);
            for (std::size_t j = 0; j < m.cols(); ++j) {
                const double a = std::abs(row[j]);
                col_norms[j] += (pv == 1.0) ? a : (pv == 2.0 ? a * a : std::pow(a, pv));
            }
        }
        if (pv == 2.0) {
            for (double& c : col_norms) c = std::sqrt(c);
        } else if (pv != 1.0) {
            for (double& c : col_norms) c = std::pow(c, 1.0 / pv);
        }
    }
    return lp_norm(col_norms, q);
}

double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double x : m.data()) s += x * x;
    return std::sqrt(s);
}

namespace {

// Gram matrix of the smaller side: M^T M if cols <= rows, else M M^T.
// Both share the top eigenvalue sigma_max^2.
Matrix small_gram(const Matrix& m) {
    const bool by_cols = m.cols() <= m.rows();
    const std::size_t n = by_cols ? m.cols() : m.rows();
    Matrix g(n, n);
    if (by_cols) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const auto row = m.row(i);
            for (std::size_t a = 0; a < n; ++a) {
                const double ra = row[a];
                if (ra == 0.0) continue;
                for (std::size_t b = a; b < n; ++b) g(a, b) += ra * row[b];
            }
        }
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < a; ++b) g(a, b) = g(b, a);
    } else {
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a; b < n; ++b) g(a, b) = g(b, a) = dot(m.row(a), m.row(b));
    }
    return g;
}

double normalize(std::vector<double>& v) {
    double norm = lp_norm(v, NormExponent::finite(2.0));
    if (norm > 0.0)
        for (double& x : v) x /= norm;
    return norm;
}

}  // namespace

double spectral_norm(const Matrix& m, double tol, std::size_t max_iters) {
    if (m.size() == 0) return 0.0;
    double max_abs = 0.0;
    for (double x : m.data()) max_abs = std::max(max_abs, std::abs(x));
    if (max_abs == 0.0) return 0.0;

    const Matrix g = small_gram(m);
    const std::size_t n = g.rows();
    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));

    double lambda = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    bool restarted = false;
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        std::vector<double> w = matvec(g, v);
        lambda = dot(v, w);
        const double wn = normalize(w);
        if (wn == 0.0) {
            // Seed lies in the kernel; restart from a random direction.
            if (restarted) return 0.0;
            restarted = true;
            SplitMix64 rng(0x5EEDULL);
            for (double& x : v) x = rng.uniform(-1.0, 1.0);
            normalize(v);
            prev = std::numeric_limits<double>::infinity();
            continue;
        }
        v = std::move(w);
        if (std::abs(lambda - prev) <= tol * std::max(1.0, std::abs(lambda))) {
            return std::sqrt(std::max(lambda, 0.0));
        }
        // Stagnation without convergence at half budget: one random restart
        // in case the deterministic seed was orthogonal to the top eigenspace.
        if (!restarted && iter == max_iters / 2) {
            restarted = true;
            SplitMix64 rng(0x5EEDULL);
            for (double& x : v) x = rng.uniform(-1.0, 1.0);
            normalize(v);
            prev = std::numeric_limits<double>::infinity();
            continue;
        }
        prev = lambda;
    }
    throw ConvergenceError("power iteration did not converge", std::sqrt(std::max(lambda, 0.0)));
}

SymmetricEigen symmetric_eigen(const Matrix& s, bool want_vectors) {
    if (s.rows() != s.cols()) throw InvalidConfigError("symmetric_eigen requires a square matrix");
    const std::size_t n = s.rows();
    Matrix a = s;
    Matrix v = want_vectors ? Matrix::identity(n) : Matrix();

    auto off_norm = [&a, n]() {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) sum += a(i, j) * a(i, j);
        return std::sqrt(2.0 * sum);
    };

    double scale = 0.0;
    for (double x : a.data()) scale = std::max(scale, std::abs(x));
    const double threshold = std::max(scale, 1.0) * 1e-14;

    const std::size_t max_sweeps = 64;
    std::size_t sweep = 0;
    for (; sweep < max_sweeps && off_norm() > threshold; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= threshold * 1e-2) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
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
                if (want_vectors) {
                    for (std::size_t k = 0; k < n; ++k) {
                        const double vkp = v(k, p), vkq = v(k, q);
                        v(k, p) = c * vkp - sn * vkq;
                        v(k, q) = sn * vkp + c * vkq;
                    }
                }
            }
        }
    }
    if (sweep == max_sweeps && off_norm() > threshold * 10.0) {
        throw NumericalError("Jacobi eigensolver did not converge");
    }

    SymmetricEigen result;
    result.eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) result.eigenvalues[i] = a(i, i);
    result.vectors = std::move(v);
    return result;
}

double max_eigenvalue(const Matrix& s) {
    const auto eig = symmetric_eigen(s, /*want_vectors=*/false);
    return *std::max_element(eig.eigenvalues.begin(), eig.eigenvalues.end());
}

double min_eigenvalue(const Matrix& s) {
    const auto eig = symmetric_eigen(s, /*want_vectors=*/false);
    return *std::min_element(eig.eigenvalues.begin(), eig.eigenvalues.end());
}

Matrix psd_project(const Matrix& s) {
    if (s.rows() != s.cols()) throw InvalidConfigError("psd_project requires a square matrix");
    const std::size_t n = s.rows();
    double scale = 0.0;
    for (double x : s.data()) scale = std::max(scale, std::abs(x));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(s(i, j) - s(j, i)) > 1e-10 * std::max(1.0, scale))
                throw InvalidConfigError("psd_project input is not symmetric within 1e-10");

    Matrix sym(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) sym(i, j) = 0.5 * (s(i, j) + s(j, i));

    const auto eig = symmetric_eigen(sym);
    Matrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double lambda = std::max(eig.eigenvalues[k], 0.0);
        if (lambda == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const double lvik = lambda * eig.vectors(i, k);
            if (lvik == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out(i, j) += lvik * eig.vectors(j, k);
        }
    }
    // Exact symmetry despite floating-point reconstruction order.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) out(i, j) = out(j, i) = 0.5 * (out(i, j) + out(j, i));
    return out;
}

}  // namespace robustgen
