#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace robustgen {

// Extended-real norm exponent p in [1, inf]. Infinity is a distinct marker
// rather than a large float, so dual-exponent arithmetic never overflows.
class NormExponent {
public:
    static NormExponent infinity() { return NormExponent(true, 0.0); }
    static NormExponent finite(double p);

    bool is_infinite() const { return infinite_; }
    double value() const;  // throws for the infinite marker

    bool operator==(const NormExponent& other) const;

private:
    NormExponent(bool infinite, double p) : infinite_(infinite), p_(p) {}
    bool infinite_;
    double p_;
};

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    Matrix transposed() const;
    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
std::vector<double> matvec(const Matrix& m, std::span<const double> v);
// y = M^T x without forming the transpose.
std::vector<double> matvec_transposed(const Matrix& m, std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);

// Holder conjugate q with 1/p + 1/q = 1 (q=inf for p=1, q=1 for p=inf).
NormExponent dual_exponent(const NormExponent& p);

// lp norm of a vector; p=inf returns the max absolute entry.
double lp_norm(std::span<const double> v, const NormExponent& p);

// (p,q) group norm: lq norm of the vector of lp column norms.
// The (2,2) case coincides with the Frobenius norm.
double group_norm_pq(const Matrix& m, const NormExponent& p, const NormExponent& q);

double frobenius_norm(const Matrix& m);

struct PowerIterationOptions {
    double tol = 1e-12;
    std::size_t max_iters = 20000;
};

// Largest singular value via power iteration on the Gram matrix, seeded
// from the normalized all-ones vector with one random restart if stagnant.
// Throws ConvergenceError (carrying the last estimate) past max_iters.
double spectral_norm(const Matrix& m, double tol = 1e-12, std::size_t max_iters = 20000);

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// eigenvalues are not sorted; vectors.col(j) pairs with eigenvalues[j]
// (stored row-major, so vectors(i, j) is component i of eigenvector j).
struct SymmetricEigen {
    std::vector<double> eigenvalues;
    Matrix vectors;
};
SymmetricEigen symmetric_eigen(const Matrix& s, bool want_vectors = true);

double max_eigenvalue(const Matrix& s);
double min_eigenvalue(const Matrix& s);

// Nearest PSD matrix in Frobenius norm: symmetrize, eigendecompose, clamp
// negative eigenvalues to zero, reconstruct. Input must be symmetric to
// within 1e-10.
Matrix psd_project(const Matrix& s);

}  // namespace robustgen
