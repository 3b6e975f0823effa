#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "support.hpp"
#include "rotcert/qla.hpp"

using namespace rotcert;

TEST_CASE("tensor matches the index formula") {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const auto a = support::random_matrix(1 + rng.below(3), 1 + rng.below(3), rng);
        const auto b = support::random_matrix(1 + rng.below(4), 1 + rng.below(3), rng);
        const auto got = support::to_oracle(tensor(a, b));
        const auto want = oracle::kron(support::to_oracle(a), support::to_oracle(b));
        CHECK(oracle::max_diff(got, want) == 0.0);
    }
}

TEST_CASE("matrix product and adjoint agree with the oracle") {
    Rng rng(4);
    const auto a = support::random_matrix(3, 4, rng);
    const auto b = support::random_matrix(4, 2, rng);
    CHECK(oracle::max_diff(support::to_oracle(a * b),
                           oracle::mul(support::to_oracle(a), support::to_oracle(b))) <
          1e-12);
    CHECK(oracle::max_diff(support::to_oracle(a.adjoint()),
                           oracle::dagger(support::to_oracle(a))) == 0.0);
    CHECK_THROWS_AS(a * a, DimensionError);
}

TEST_CASE("eigenvalues are the roots of the characteristic polynomial") {
    Rng rng(5);
    for (std::size_t d = 1; d <= 6; ++d) {
        for (int rep = 0; rep < 5; ++rep) {
            const auto h = support::random_hermitian(d, rng);
            const auto got = hermitian_eigenvalues(h);
            const auto want = oracle::poly_roots(oracle::char_poly(support::to_oracle(h)));
            REQUIRE(got.size() == d);
            for (std::size_t i = 0; i < d; ++i) {
                CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("eigendecomposition reconstructs the matrix") {
    Rng rng(6);
    for (std::size_t d : {2u, 5u, 16u, 32u}) {
        const auto h = support::random_hermitian(d, rng);
        const auto e = hermitian_eigen(h);
        for (std::size_t i = 1; i < d; ++i) {
            CHECK(e.values[i - 1] <= e.values[i]);
        }
        std::vector<complex_t> diag(e.values.begin(), e.values.end());
        const auto rebuilt = e.vectors * ComplexMatrix::diagonal(diag) * e.vectors.adjoint();
        CHECK(max_abs_diff(rebuilt, h) < 1e-10 * std::max(1.0, h.max_abs()));
        CHECK(max_abs_diff(e.vectors.adjoint() * e.vectors, ComplexMatrix::identity(d)) <
              1e-10);
    }
}

TEST_CASE("degenerate spectrum") {
    const auto e = hermitian_eigen(ComplexMatrix::identity(4) * complex_t{2.0});
    for (double v : e.values) {
        CHECK(v == doctest::Approx(2.0));
    }
}

TEST_CASE("non-Hermitian input is rejected") {
    ComplexMatrix m(2, 2, {1.0, 2.0, 0.0, 1.0});
    CHECK_FALSE(is_hermitian(m));
    CHECK_THROWS_AS(hermitian_eigen(m), std::invalid_argument);
}

TEST_CASE("state validation") {
    CHECK_THROWS(StateVector(1, {1.0, 1.0}));
    CHECK_THROWS_AS(StateVector(2, {1.0, 0.0}), DimensionError);
    CHECK_NOTHROW(StateVector(1, {std::sqrt(0.5), complex_t(0, std::sqrt(0.5))}));

    CHECK_THROWS(DensityMatrix(1, ComplexMatrix(2, 2, {0.6, 0.0, 0.0, 0.6})));
    CHECK_THROWS(DensityMatrix(1, ComplexMatrix(2, 2, {1.2, 0.0, 0.0, -0.2})));
    CHECK_THROWS(DensityMatrix(1, ComplexMatrix(2, 2, {0.5, 0.3, 0.1, 0.5})));
    CHECK_NOTHROW(DensityMatrix(1, ComplexMatrix(2, 2, {0.5, 0.5, 0.5, 0.5})));
    CHECK_THROWS_AS(checked_dim(kMaxQubits + 1), DimensionError);
    CHECK(checked_dim(3) == 8);
}

TEST_CASE("trace distance of known pairs") {
    const auto zero = DensityMatrix::basis(1, 0);
    const auto one = DensityMatrix::basis(1, 1);
    const double r = std::sqrt(0.5);
    const auto plus = DensityMatrix::from_pure(StateVector(1, {r, r}));
    CHECK(trace_distance(zero, zero) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(trace_distance(zero, one) == doctest::Approx(1.0));
    // pure states: sqrt(1 - |<a|b>|^2)
    CHECK(trace_distance(zero, plus) == doctest::Approx(std::sqrt(0.5)));
    CHECK(trace_distance(zero, DensityMatrix::maximally_mixed(1)) == doctest::Approx(0.5));
    CHECK(trace_distance(zero, mix(zero, one, 0.3)) == doctest::Approx(0.3));
}

TEST_CASE("partial trace of a product state returns the factors") {
    Rng rng(8);
    const auto a = support::random_state(1, rng);
    const auto b = support::random_state(2, rng);
    const auto ab = a.tensor(b);
    const std::size_t keep_a[] = {0};
    const std::size_t keep_b[] = {1, 2};
    CHECK(max_abs_diff(partial_trace(ab, keep_a).matrix(), a.matrix()) < 1e-12);
    CHECK(max_abs_diff(partial_trace(ab, keep_b).matrix(), b.matrix()) < 1e-12);

    const double r = std::sqrt(0.5);
    const auto bell = DensityMatrix::from_pure(StateVector(2, {r, 0.0, 0.0, r}));
    const std::size_t keep1[] = {1};
    CHECK(max_abs_diff(partial_trace(bell, keep1).matrix(),
                       DensityMatrix::maximally_mixed(1).matrix()) < 1e-12);

    const std::size_t bad_range[] = {3};
    const std::size_t dup[] = {0, 0};
    CHECK_THROWS(partial_trace(ab, bad_range));
    CHECK_THROWS(partial_trace(ab, dup));
    CHECK_THROWS(partial_trace(ab, std::span<const std::size_t>{}));
}

TEST_CASE("mix stays a state and rejects bad weights") {
    const auto zero = DensityMatrix::basis(1, 0);
    const auto one = DensityMatrix::basis(1, 1);
    const auto m = mix(zero, one, 0.25);
    CHECK(m(0, 0).real() == doctest::Approx(0.75));
    CHECK_THROWS(mix(zero, one, 1.5));
    CHECK_THROWS(mix(zero, DensityMatrix::basis(2, 0), 0.5));
}
