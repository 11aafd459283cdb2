#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "helpers.hpp"
#include "robustgen/errors.hpp"
#include "robustgen/numerics.hpp"

using namespace robustgen;

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
}

double eigen_spectral_norm(const Matrix& m) {
    const Eigen::MatrixXd e = to_eigen(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e.transpose() * e);
    return std::sqrt(std::max(solver.eigenvalues().maxCoeff(), 0.0));
}

}  // namespace

TEST_CASE("dual exponent on the pinned cases") {
    CHECK(dual_exponent(NormExponent::finite(1.0)).is_infinite());
    CHECK(dual_exponent(NormExponent::finite(2.0)).value() == doctest::Approx(2.0));
    CHECK(dual_exponent(NormExponent::finite(4.0)).value() == doctest::Approx(4.0 / 3.0));
    CHECK(dual_exponent(NormExponent::infinity()).value() == doctest::Approx(1.0));
    CHECK_THROWS_AS(NormExponent::finite(0.5), InvalidConfigError);
}

TEST_CASE("dual exponent is an involution") {
    const NormExponent ps[] = {NormExponent::finite(1.0), NormExponent::finite(1.5),
                               NormExponent::finite(2.0), NormExponent::finite(4.0),
                               NormExponent::infinity()};
    for (const auto& p : ps) {
        const NormExponent q = dual_exponent(dual_exponent(p));
        CHECK(q.is_infinite() == p.is_infinite());
        if (!p.is_infinite()) CHECK(q.value() == doctest::Approx(p.value()).epsilon(1e-12));
    }
}

TEST_CASE("lp norms on the pinned cases") {
    const std::vector<double> a{3.0, 4.0};
    CHECK(lp_norm(a, NormExponent::finite(2.0)) == doctest::Approx(5.0));
    const std::vector<double> b{1.0, -1.0};
    CHECK(lp_norm(b, NormExponent::finite(1.0)) == doctest::Approx(2.0));
    const std::vector<double> c{1.0, -2.0, 0.5};
    CHECK(lp_norm(c, NormExponent::infinity()) == doctest::Approx(2.0));
}

TEST_CASE("lp norm is nonincreasing in p") {
    const NormExponent ps[] = {NormExponent::finite(1.0), NormExponent::finite(1.5),
                               NormExponent::finite(2.0), NormExponent::finite(4.0),
                               NormExponent::infinity()};
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const auto v = testutil::random_vector(7, 100 + seed);
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& p : ps) {
            const double norm = lp_norm(v, p);
            CHECK(norm <= prev + 1e-12);
            prev = norm;
        }
    }
}

TEST_CASE("group norms on the pinned cases") {
    const Matrix eye = Matrix::identity(2);
    CHECK(group_norm_pq(eye, NormExponent::finite(2.0), NormExponent::finite(1.0)) ==
          doctest::Approx(2.0));
    CHECK(group_norm_pq(eye, NormExponent::finite(2.0), NormExponent::finite(2.0)) ==
          doctest::Approx(std::sqrt(2.0)));
    Matrix m(2, 2);
    m(0, 0) = 3.0;
    m(1, 0) = 4.0;
    CHECK(group_norm_pq(m, NormExponent::finite(2.0), NormExponent::infinity()) ==
          doctest::Approx(5.0));
}

TEST_CASE("group (2,2) norm equals the entrywise l2 norm") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix m = testutil::random_matrix(5, 7, 200 + seed);
        CHECK(group_norm_pq(m, NormExponent::finite(2.0), NormExponent::finite(2.0)) ==
              doctest::Approx(frobenius_norm(m)).epsilon(1e-14));
    }
}

TEST_CASE("spectral norm: identity and diagonal") {
    CHECK(spectral_norm(Matrix::identity(6)) == doctest::Approx(1.0));
    Matrix d(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    CHECK(spectral_norm(d) == doctest::Approx(3.0));
    CHECK(spectral_norm(Matrix(4, 3)) == 0.0);
}

TEST_CASE("spectral norm matches the dense eigensolve oracle") {
    SplitMix64 shapes(42);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const std::size_t rows = 1 + shapes.uniform_index(50);
        const std::size_t cols = 1 + shapes.uniform_index(50);
        const Matrix m = testutil::random_matrix(rows, cols, 300 + seed);
        CHECK(spectral_norm(m) == doctest::Approx(eigen_spectral_norm(m)).epsilon(1e-9));
    }
}

TEST_CASE("spectral norm is below the Frobenius norm, equal on rank one") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix m = testutil::random_matrix(6, 4, 400 + seed);
        CHECK(spectral_norm(m) <=
              group_norm_pq(m, NormExponent::finite(2.0), NormExponent::finite(2.0)) + 1e-10);

        const auto u = testutil::random_vector(6, 500 + seed);
        const auto v = testutil::random_vector(4, 600 + seed);
        Matrix r1(6, 4);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 4; ++j) r1(i, j) = u[i] * v[j];
        CHECK(spectral_norm(r1) ==
              doctest::Approx(group_norm_pq(r1, NormExponent::finite(2.0), NormExponent::finite(2.0)))
                  .epsilon(1e-8));
    }
}

TEST_CASE("symmetric eigenvalues match the oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix s = testutil::random_symmetric(6, 700 + seed);
        auto mine = symmetric_eigen(s, false).eigenvalues;
        std::sort(mine.begin(), mine.end());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(to_eigen(s));
        for (std::size_t i = 0; i < 6; ++i)
            CHECK(mine[i] == doctest::Approx(solver.eigenvalues()(static_cast<long>(i)))
                                 .epsilon(1e-10));
    }
}

TEST_CASE("psd_project fixes PSD inputs") {
    Matrix a = testutil::random_matrix(4, 3, 800);
    // A A^T is PSD by construction.
    Matrix psd(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) psd(i, j) = dot(a.row(i), a.row(j));
    const Matrix out = psd_project(psd);
    for (std::size_t i = 0; i < psd.size(); ++i)
        CHECK(out.data()[i] == doctest::Approx(psd.data()[i]).epsilon(1e-10));
}

TEST_CASE("psd_project clamps negative eigenvalues") {
    Matrix s(2, 2);
    s(0, 0) = 1.0;
    s(1, 1) = -2.0;
    const Matrix out = psd_project(s);
    CHECK(out(0, 0) == doctest::Approx(1.0));
    CHECK(out(1, 1) == doctest::Approx(0.0));
    CHECK(out(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("psd_project is closer than random PSD samples") {
    const Matrix s = testutil::random_symmetric(4, 900);
    const Matrix p = psd_project(s);
    double base = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double diff = s.data()[i] - p.data()[i];
        base += diff * diff;
    }
    SplitMix64 rng(901);
    for (int trial = 0; trial < 1000; ++trial) {
        const Matrix a = testutil::random_matrix(4, 4, rng.next_u64());
        Matrix z(4, 4);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) z(i, j) = dot(a.row(i), a.row(j));
        double dist = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double diff = s.data()[i] - z.data()[i];
            dist += diff * diff;
        }
        CHECK(base <= dist + 1e-12);
    }
}

TEST_CASE("psd_project output has no eigenvalue below -1e-10") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix out = psd_project(testutil::random_symmetric(5, 1000 + seed));
        CHECK(min_eigenvalue(out) >= -1e-10);
    }
}

TEST_CASE("psd_project rejects asymmetric input") {
    Matrix s(2, 2);
    s(0, 1) = 1.0;
    CHECK_THROWS_AS(psd_project(s), InvalidConfigError);
}
