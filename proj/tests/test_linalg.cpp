#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "linimpute/matrix.hpp"
#include "linimpute/rng.hpp"

using namespace linimpute;
using Catch::Matchers::WithinAbs;

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = rng.next_normal();
    return m;
}

double penalized_ls_objective(const Matrix& x, const std::vector<double>& y,
                              const std::vector<double>& beta, double lambda) {
    double sum = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double fit = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) fit += x(r, c) * beta[c];
        sum += (fit - y[r]) * (fit - y[r]);
    }
    for (std::size_t c = 0; c + 1 < x.cols(); ++c) sum += lambda * beta[c] * beta[c];
    return sum;
}

} // namespace

TEST_CASE("cholesky identity") {
    const Matrix l = cholesky(Matrix::identity(3));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            REQUIRE_THAT(l(i, j), WithinAbs(i == j ? 1.0 : 0.0, 1e-14));
}

TEST_CASE("cholesky 2x2 correlation matrix") {
    Matrix s(2, 2);
    s(0, 0) = 1.0; s(0, 1) = 0.7;
    s(1, 0) = 0.7; s(1, 1) = 1.0;
    const Matrix l = cholesky(s);
    REQUIRE_THAT(l(0, 0), WithinAbs(1.0, 1e-14));
    REQUIRE_THAT(l(0, 1), WithinAbs(0.0, 1e-14));
    REQUIRE_THAT(l(1, 0), WithinAbs(0.7, 1e-14));
    REQUIRE_THAT(l(1, 1), WithinAbs(std::sqrt(0.51), 1e-14));

    const Matrix back = multiply(l, transpose(l));
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) REQUIRE_THAT(back(i, j), WithinAbs(s(i, j), 1e-8));
}

TEST_CASE("cholesky rejects indefinite matrix") {
    Matrix s(2, 2);
    s(0, 0) = 1.0; s(0, 1) = 2.0;
    s(1, 0) = 2.0; s(1, 1) = 1.0; // eigenvalues 3 and -1
    REQUIRE_THROWS_AS(cholesky(s), SingularMatrixError);
}

TEST_CASE("cholesky rejects asymmetric input") {
    Matrix s(2, 2);
    s(0, 0) = 1.0; s(0, 1) = 0.5;
    s(1, 0) = 0.2; s(1, 1) = 1.0;
    REQUIRE_THROWS_AS(cholesky(s), std::invalid_argument);
}

TEST_CASE("cholesky reconstructs random positive definite matrices") {
    Rng rng(7);
    for (const std::size_t n : {2u, 5u, 17u, 50u}) {
        const Matrix r = random_matrix(rng, n, n);
        Matrix s = multiply(r, transpose(r));
        for (std::size_t i = 0; i < n; ++i) s(i, i) += 0.1;
        const Matrix l = cholesky(s);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) REQUIRE(l(i, j) == 0.0);
        const Matrix back = multiply(l, transpose(l));
        double max_err = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                max_err = std::max(max_err, std::abs(back(i, j) - s(i, j)));
        REQUIRE(max_err <= 1e-8);
    }
}

TEST_CASE("least_squares exact fit") {
    Matrix x(2, 1);
    x(0, 0) = 1.0;
    x(1, 0) = 2.0;
    const auto beta = least_squares(x, {2.0, 4.0});
    REQUIRE(beta.size() == 1);
    REQUIRE_THAT(beta[0], WithinAbs(2.0, 1e-12));
}

TEST_CASE("least_squares with orthonormal columns collapses to X^T y") {
    const double c = std::cos(0.3), s = std::sin(0.3);
    Matrix x(2, 2);
    x(0, 0) = c;  x(0, 1) = -s;
    x(1, 0) = s;  x(1, 1) = c;
    const std::vector<double> y{1.5, -0.25};
    const auto beta = least_squares(x, y);
    REQUIRE_THAT(beta[0], WithinAbs(c * y[0] + s * y[1], 1e-12));
    REQUIRE_THAT(beta[1], WithinAbs(-s * y[0] + c * y[1], 1e-12));
}

TEST_CASE("least_squares duplicated column: singular without ridge, solvable with it") {
    Rng rng(11);
    Matrix x(20, 2);
    std::vector<double> y(20);
    for (std::size_t r = 0; r < 20; ++r) {
        const double v = rng.next_normal();
        x(r, 0) = v;
        x(r, 1) = v;
        y[r] = 3.0 * v + 0.1 * rng.next_normal();
    }
    REQUIRE_THROWS_AS(least_squares(x, y, 0.0), SingularMatrixError);

    const double lambda = 1e-6;
    const auto beta = least_squares(x, y, lambda);
    REQUIRE(std::isfinite(beta[0]));
    REQUIRE(std::isfinite(beta[1]));

    // brute-force the 2-parameter penalized objective around the solution
    const double best = penalized_ls_objective(x, y, beta, lambda);
    double grid_best = best;
    for (double b0 = -5.0; b0 <= 5.0; b0 += 0.01)
        for (double b1 = -5.0; b1 <= 5.0; b1 += 0.01)
            grid_best = std::min(grid_best, penalized_ls_objective(x, y, {b0, b1}, lambda));
    REQUIRE(best <= grid_best + 1e-9);
}

TEST_CASE("least_squares residual is orthogonal to the columns") {
    Rng rng(23);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 10 + rng.below(40), p = 1 + rng.below(5);
        const Matrix x = random_matrix(rng, n, p);
        std::vector<double> y(n);
        for (auto& v : y) v = rng.next_normal();
        const auto beta = least_squares(x, y);
        double scale = 0.0;
        for (std::size_t r = 0; r < n; ++r) scale = std::max(scale, std::abs(y[r]));
        for (std::size_t c = 0; c < p; ++c) {
            double dot = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                double fit = 0.0;
                for (std::size_t k = 0; k < p; ++k) fit += x(r, k) * beta[k];
                dot += x(r, c) * (fit - y[r]);
            }
            REQUIRE(std::abs(dot) <= 1e-7 * std::max(1.0, scale) * static_cast<double>(n));
        }
    }
}

TEST_CASE("least_squares coefficient norm shrinks as lambda grows") {
    Rng rng(31);
    const Matrix x = random_matrix(rng, 40, 4);
    std::vector<double> y(40);
    for (auto& v : y) v = rng.next_normal();

    double previous = std::numeric_limits<double>::infinity();
    for (const double lambda : {0.0, 0.01, 0.1, 1.0, 10.0, 1000.0}) {
        const auto beta = least_squares(x, y, lambda);
        double norm = 0.0;
        for (std::size_t c = 0; c + 1 < x.cols(); ++c) norm += beta[c] * beta[c];
        REQUIRE(norm <= previous + 1e-12);
        previous = norm;
    }
}

TEST_CASE("least_squares huge lambda zeroes non-intercept coefficients") {
    Rng rng(37);
    Matrix x(30, 3);
    std::vector<double> y(30);
    double mean = 0.0;
    for (std::size_t r = 0; r < 30; ++r) {
        x(r, 0) = rng.next_normal();
        x(r, 1) = rng.next_normal();
        x(r, 2) = 1.0;
        y[r] = 2.0 + x(r, 0);
        mean += y[r];
    }
    mean /= 30.0;
    const auto beta = least_squares(x, y, 1e12);
    REQUIRE_THAT(beta[0], WithinAbs(0.0, 1e-9));
    REQUIRE_THAT(beta[1], WithinAbs(0.0, 1e-9));
    REQUIRE_THAT(beta[2], WithinAbs(mean, 1e-9));
}

TEST_CASE("solve_linear_system basics") {
    const std::vector<double> b{4.0, -1.0, 0.5};
    const auto x = solve_linear_system(Matrix::identity(3), b);
    for (std::size_t i = 0; i < 3; ++i) REQUIRE_THAT(x[i], WithinAbs(b[i], 1e-14));

    Matrix d(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 4.0;
    const auto x2 = solve_linear_system(d, {2.0, 8.0});
    REQUIRE_THAT(x2[0], WithinAbs(1.0, 1e-14));
    REQUIRE_THAT(x2[1], WithinAbs(2.0, 1e-14));
}

TEST_CASE("solve_linear_system rejects singular input") {
    Matrix a(2, 2);
    a(0, 0) = 1.0; a(0, 1) = 1.0;
    a(1, 0) = 2.0; a(1, 1) = 2.0;
    REQUIRE_THROWS_AS(solve_linear_system(a, {1.0, 2.0}), SingularMatrixError);
}

TEST_CASE("solve_linear_system satisfies its residual bound") {
    Rng rng(43);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 1 + rng.below(12);
        Matrix a = random_matrix(rng, n, n);
        for (std::size_t i = 0; i < n; ++i) a(i, i) += 3.0; // keep well-conditioned
        std::vector<double> b(n);
        for (auto& v : b) v = rng.next_normal();
        const auto x = solve_linear_system(a, b);
        double res = 0.0, bnorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double ax = 0.0;
            for (std::size_t j = 0; j < n; ++j) ax += a(i, j) * x[j];
            res += (ax - b[i]) * (ax - b[i]);
            bnorm += b[i] * b[i];
        }
        REQUIRE(std::sqrt(res) <= 1e-8 * (1.0 + std::sqrt(bnorm)));
    }
}

TEST_CASE("solve_linear_system agrees with least_squares on square systems") {
    Rng rng(47);
    Matrix a = random_matrix(rng, 5, 5);
    for (std::size_t i = 0; i < 5; ++i) a(i, i) += 2.5;
    std::vector<double> b(5);
    for (auto& v : b) v = rng.next_normal();
    const auto direct = solve_linear_system(a, b);
    const auto via_ls = least_squares(a, b, 0.0);
    for (std::size_t i = 0; i < 5; ++i) REQUIRE_THAT(direct[i], WithinAbs(via_ls[i], 1e-8));
}
