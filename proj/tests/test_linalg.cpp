#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "crosslayer/linalg.hpp"

using namespace crosslayer;
using Catch::Approx;

TEST_CASE("eig_extrema on identity and diagonal", "[linalg]") {
    auto e = eig_extrema(SymMatrix::identity(3));
    CHECK(e.min_eig == Approx(1.0));
    CHECK(e.max_eig == Approx(1.0));

    Vector d(2);
    d << 2.0, -1.0;
    auto e2 = eig_extrema(SymMatrix::diag(d));
    CHECK(e2.min_eig == Approx(-1.0));
    CHECK(e2.max_eig == Approx(2.0));
    CHECK(e2.min_eig <= e2.max_eig);
}

TEST_CASE("eig_extrema rejects non-finite entries", "[linalg]") {
    Matrix m = Matrix::Identity(2, 2);
    m(0, 1) = m(1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(SymMatrix(m), InvalidInputError);
}

TEST_CASE("SymMatrix rejects asymmetry beyond tolerance", "[linalg]") {
    Matrix m = Matrix::Identity(2, 2);
    m(0, 1) = 0.1;
    CHECK_THROWS_AS(SymMatrix(m), InvalidInputError);
}

TEST_CASE("invert on trivial cases", "[linalg]") {
    SymMatrix i4 = SymMatrix::identity(4);
    CHECK((invert(i4).m() - Matrix::Identity(4, 4)).norm() < 1e-12);

    Vector d(2);
    d << 2.0, 4.0;
    SymMatrix inv = invert(SymMatrix::diag(d));
    CHECK(inv(0, 0) == Approx(0.5));
    CHECK(inv(1, 1) == Approx(0.25));
}

TEST_CASE("invert reports conditioning error on near-singular input", "[linalg]") {
    Vector d(2);
    d << 1.0, 1e-15;
    try {
        invert(SymMatrix::diag(d));
        FAIL("expected ConditioningError");
    } catch (const ConditioningError& e) {
        CHECK(e.condition_estimate() > 1e9);
    }
}

TEST_CASE("invert is an involution on well-conditioned inputs", "[linalg][property]") {
    std::mt19937 rng(7);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        Matrix a(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) a(i, j) = g(rng);
        SymMatrix p(symmetrize(a * a.transpose()) + Matrix::Identity(4, 4));
        SymMatrix back = invert(invert(p));
        CHECK((back.m() - p.m()).norm() / p.m().norm() < 1e-8);
        CHECK((p.m() * invert(p).m() - Matrix::Identity(4, 4)).norm() < 1e-8);
    }
}

TEST_CASE("is_psd boundary behavior", "[linalg]") {
    CHECK(is_psd(SymMatrix::zero(3), 0.0));
    Vector d1(2);
    d1 << -1e-12, 1.0;
    CHECK(is_psd(SymMatrix::diag(d1), 1e-8));
    Vector d2(2);
    d2 << -1.0, 1.0;
    CHECK_FALSE(is_psd(SymMatrix::diag(d2), 1e-8));
    CHECK_THROWS_AS(is_psd(SymMatrix::identity(2), -1.0), InvalidInputError);
}

TEST_CASE("Rayleigh quotient bounded by eig_extrema", "[linalg][property]") {
    std::mt19937 rng(11);
    std::normal_distribution<double> g;
    Matrix a(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) a(i, j) = g(rng);
    SymMatrix m(symmetrize(a));
    auto ex = eig_extrema(m);
    for (int trial = 0; trial < 100; ++trial) {
        Vector v(5);
        for (int i = 0; i < 5; ++i) v(i) = g(rng);
        const double q = v.dot(m.m() * v) / v.squaredNorm();
        CHECK(q >= ex.min_eig - 1e-9);
        CHECK(q <= ex.max_eig + 1e-9);
    }
}
