#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qptorus/error.hpp"
#include "qptorus/tensorkit.hpp"
#include "support.hpp"

#include <array>
#include <numeric>

using namespace qpt;
using qpt::testing::random_matrix;

TEST_CASE("kron with identity gives block diagonal") {
    DenseMatrix j(2, 2);
    j << 0, 1, -1, 0;
    const DenseMatrix k = tensorkit::kron(DenseMatrix::Identity(2, 2), j);
    DenseMatrix expect = DenseMatrix::Zero(4, 4);
    expect.block(0, 0, 2, 2) = j;
    expect.block(2, 2, 2, 2) = j;
    CHECK(k == expect);
}

TEST_CASE("kron with a scalar factor scales") {
    const DenseMatrix m = random_matrix(3, 4);
    CHECK(tensorkit::kron(DenseMatrix::Constant(1, 1, 2.0), m) == 2.0 * m);
}

TEST_CASE("kron mixed-product property") {
    const DenseMatrix A = random_matrix(3, 3), B = random_matrix(3, 3), C = random_matrix(3, 3), D = random_matrix(3, 3);
    const DenseMatrix lhs = tensorkit::kron(A, B) * tensorkit::kron(C, D);
    const DenseMatrix rhs = tensorkit::kron(A * C, B * D);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kron is associative exactly on integers") {
    DenseMatrix A(2, 2), B(2, 3), C(3, 1);
    A << 1, 2, 3, 4;
    B << 0, -1, 2, 5, 1, 1;
    C << 2, -3, 7;
    CHECK(tensorkit::kron(tensorkit::kron(A, B), C) == tensorkit::kron(A, tensorkit::kron(B, C)));
}

TEST_CASE("kron refuses oversize results") {
    const DenseMatrix a = DenseMatrix::Ones(10, 10);
    CHECK_THROWS_AS((void)tensorkit::kron(a, a, 50), Error);
    try {
        (void)tensorkit::kron(a, a, 50);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionTooLarge);
    }
}

TEST_CASE("kron_apply matches the materialized product") {
    const DenseMatrix A = random_matrix(2, 3), B = random_matrix(4, 2), C = random_matrix(3, 5);
    const DenseMatrix x = random_matrix(3 * 2 * 5, 2);
    const std::array<const DenseMatrix*, 3> f{&A, &B, &C};
    const DenseMatrix got = tensorkit::kron_apply(f, x);
    const DenseMatrix want = tensorkit::kron(tensorkit::kron(A, B), C) * x;
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("relayout identity and transpose") {
    const DenseMatrix m = random_matrix(2, 3);
    const std::array<std::size_t, 2> id{0, 1}, swap{1, 0};
    CHECK(tensorkit::relayout(m, {2, 3}, id, 2, 3) == m);
    CHECK(tensorkit::relayout(m, {2, 3}, swap, 3, 2) == DenseMatrix(m.transpose()));
}

TEST_CASE("relayout rejects shape mismatches") {
    const DenseMatrix m = random_matrix(2, 3);
    const std::array<std::size_t, 2> id{0, 1};
    CHECK_THROWS_AS((void)tensorkit::relayout(m, {2, 2}, id, 2, 3), Error);
    const std::array<std::size_t, 2> bad{0, 0};
    CHECK_THROWS_AS((void)tensorkit::relayout(m, {2, 3}, bad, 2, 3), Error);
}

TEST_CASE("relayout forward and inverse chains are a bijection") {
    // n*S x U  ->  U x n*S relayout as used by the transforms, then back.
    for (auto [n, S, U] : {std::array<std::size_t, 3>{1, 4, 3}, {3, 5, 7}, {2, 8, 11}}) {
        std::vector<double> data(n * S * U);
        std::iota(data.begin(), data.end(), 0.0);
        const std::array<std::size_t, 3> fwd{2, 0, 1}, inv{1, 2, 0};
        const auto moved = tensorkit::relayout(data, {n, S, U}, fwd, {U, n * S});
        const auto back = tensorkit::relayout(moved, {U, n, S}, inv, {n * S, U});
        CHECK(back == data);
        // every element appears exactly once
        auto sorted = moved;
        std::sort(sorted.begin(), sorted.end());
        CHECK(sorted == data);
    }
}

TEST_CASE("relayout of a 3-tensor moves single elements correctly") {
    const tensorkit::Tensor3 t(2, 3, 4, [] {
        std::vector<double> v(24);
        std::iota(v.begin(), v.end(), 0.0);
        return v;
    }());
    const std::array<std::size_t, 3> perm{2, 0, 1};
    const auto out = tensorkit::relayout(t.data, {2, 3, 4}, perm, {4, 2, 3});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 4; ++k) CHECK(out[k + 4 * (i + 2 * j)] == t(i, j, k));
}

TEST_CASE("mode_product on an interior axis") {
    const DenseMatrix m = random_matrix(5, 3);
    std::vector<double> x(2 * 3 * 4);
    for (auto& v : x) v = random_matrix(1, 1)(0, 0);
    Shape dims{2, 3, 4};
    const auto y = tensorkit::mode_product(x, dims, 1, m);
    CHECK(dims == Shape{2, 5, 4});
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t r = 0; r < 5; ++r)
            for (std::size_t b = 0; b < 4; ++b) {
                double s = 0;
                for (std::size_t l = 0; l < 3; ++l) s += m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l)) * x[a + 2 * (l + 3 * b)];
                CHECK(y[a + 2 * (r + 5 * b)] == doctest::Approx(s).epsilon(1e-14));
            }
}

TEST_CASE("diag_expand") {
    tensorkit::Tensor3 p(2, 1, 1, {3.0, -4.0});
    const auto d = tensorkit::diag_expand(p);
    CHECK(d.dims == std::array<std::size_t, 3>{2, 2, 1});
    CHECK(d(0, 0, 0) == 3.0);
    CHECK(d(1, 1, 0) == -4.0);
    CHECK(d(0, 1, 0) == 0.0);
    CHECK(d(1, 0, 0) == 0.0);

    const auto z = tensorkit::diag_expand(tensorkit::Tensor3(3, 1, 2));
    for (double v : z.data) CHECK(v == 0.0);

    const DenseMatrix r = random_matrix(4, 3);
    tensorkit::Tensor3 q(4, 1, 3, std::vector<double>(r.data(), r.data() + r.size()));
    const auto e = tensorkit::diag_expand(q);
    for (std::size_t k = 0; k < 3; ++k) {
        double trace = 0.0, sum = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            trace += e(i, i, k);
            sum += q(i, 0, k);
            for (std::size_t j = 0; j < 4; ++j)
                if (i != j) CHECK(e(i, j, k) == 0.0);
        }
        CHECK(trace == doctest::Approx(sum));
    }
    CHECK_THROWS_AS((void)tensorkit::diag_expand(tensorkit::Tensor3(2, 2, 1)), Error);
}
