#include <doctest.h>

#include <cmath>

#include "sketchlra/testmatrices.hpp"

using namespace sketchlra;

TEST_CASE("svd-spectrum input: norms, condition number, numerical rank") {
    const int n = 256, r = 8;
    DenseMatrix M = gen_svd_spectrum(n, r, RngStream(5));
    std::vector<double> sv = singular_values(M);
    CHECK(sv[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sv[7] == doctest::Approx(0.125).epsilon(1e-10));
    CHECK(sv[8] == doctest::Approx(1e-10).epsilon(1e-4));
    CHECK(sv[0] / sv[n - 1] == doctest::Approx(1e10).epsilon(1e-4));
    CHECK(numerical_rank(M, 1e-5) == r);
    // deterministic per seed
    DenseMatrix M2 = gen_svd_spectrum(n, r, RngStream(5));
    CHECK(frobenius_norm(sub(M, M2)) == 0.0);
}

TEST_CASE("laplacian input: rank 3, unit norm, circulant symmetry") {
    DenseMatrix M = gen_laplacian(200);
    CHECK(numerical_rank(M, 1e-6) == 3);
    CHECK(numerical_rank(M, 1e-5) == 3);
    CHECK(spectral_norm(M) == doctest::Approx(1.0).epsilon(1e-9));
    // invariance under simultaneous cyclic shift
    for (int i : {0, 17, 100})
        for (int j : {3, 50}) {
            CHECK(M.at(i, j) ==
                  doctest::Approx(M.at((i + 1) % 200, (j + 1) % 200)).epsilon(1e-12));
        }
}

TEST_CASE("finite-difference inverse: pinned numerical ranks") {
    // the small case in the unit suite; all three run in acceptance
    DenseMatrix B = gen_fd_inverse(88, 160);
    CHECK(numerical_rank(B, 1e-6) == 5);
    DenseMatrix B2 = gen_fd_inverse(88, 160);
    CHECK(frobenius_norm(sub(B, B2)) == 0.0);
    CHECK_THROWS_AS(gen_fd_inverse(100, 100), DimensionNotSupported);
}

TEST_CASE("factor gaussian: exact rank, noise below tolerance, full-rank case") {
    RngStream rng(7);
    DenseMatrix M = gen_factor_gaussian(60, 40, 5, 0.0, rng.fork(0));
    std::vector<double> sv = singular_values(M);
    CHECK(sv[4] > 1e-6 * sv[0]);
    CHECK(sv[5] < 1e-12 * sv[0]);

    const double sr = sv[4];
    DenseMatrix Mn = gen_factor_gaussian(60, 40, 5, 1e-10 * sr, rng.fork(0));
    CHECK(numerical_rank(Mn, 1e-5 * sr) == 5);

    DenseMatrix Mf = gen_factor_gaussian(20, 30, 20, 0.0, rng.fork(1));
    std::vector<double> svf = singular_values(Mf);
    CHECK(svf[19] > 1e-8 * svf[0]);
}

TEST_CASE("adversarial input: identity block under a permutation") {
    std::vector<int> perm{2, 0, 3, 1, 4, 5};
    DenseMatrix M = gen_adversarial(6, 6, 2, perm);
    CHECK(M.at(0, 2) == 1.0);
    CHECK(M.at(1, 0) == 1.0);
    CHECK(frobenius_norm(M) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("input class parse/print round trip") {
    InputClass c = parse_input_class("fd:m=208,n=400");
    CHECK(c.kind == InputClass::Kind::FdInverse);
    CHECK(c.m == 208);
    InputClass c2 = parse_input_class(to_string(c));
    CHECK(c2.m == c.m);
    CHECK(c2.n == c.n);
    CHECK_THROWS_AS(parse_input_class("nope:n=3"), ParseError);
}
