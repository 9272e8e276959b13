#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "sketchlra/hss.hpp"

using namespace sketchlra;

namespace {

double rel_err(const DenseMatrix& A, const DenseMatrix& B) {
    return frobenius_norm(sub(A, B)) / std::max(1e-300, frobenius_norm(B));
}

} // namespace

TEST_CASE("block-diagonal input compresses exactly with zero generators") {
    const int n = 64;
    RngStream rng(3);
    DenseMatrix M(n, n);
    for (int blk = 0; blk < 4; ++blk) {
        DenseMatrix D = gaussian_matrix(rng.fork(blk), 16, 16);
        D = add(D, transpose(D));
        M.set_block(16 * blk, 16 * blk, D);
    }
    HssMatrix H = hss_compress(M, 2, 1e-10, HssSketch::Gaussian, RngStream(5));
    CHECK(rel_err(H.reconstruct_dense(), M) < 1e-12);
    for (const auto& g : H.generators())
        CHECK(frobenius_norm(matmul(g.F, g.H)) < 1e-10 * frobenius_norm(M));
}

TEST_CASE("diagonal plus rank-one compresses at r = 1, including nonsymmetric") {
    const int n = 64;
    RngStream rng(7);
    for (bool symmetric : {true, false}) {
        DenseMatrix u = gaussian_matrix(rng.fork(symmetric ? 0 : 10), n, 1);
        DenseMatrix v = symmetric ? u : gaussian_matrix(rng.fork(11), n, 1);
        DenseMatrix M = matmul_nt(u, v);
        for (int i = 0; i < n; ++i) M.at(i, i) += 4.0 + i * 0.01;
        HssMatrix H = hss_compress(M, 1, 1e-9, HssSketch::Gaussian, RngStream(9));
        CHECK(H.nested() == symmetric);
        CHECK(rel_err(H.reconstruct_dense(), M) < 1e-9);
        std::vector<double> x(n);
        RngStream xs(13);
        for (auto& t : x) t = xs.next_normal();
        std::vector<double> y = H.matvec(x);
        std::vector<double> yd(n);
        matvec(M, x.data(), yd.data());
        double err = 0.0, ref = 0.0;
        for (int i = 0; i < n; ++i) {
            err += (y[i] - yd[i]) * (y[i] - yd[i]);
            ref += yd[i] * yd[i];
        }
        CHECK(std::sqrt(err) <= 1e-8 * std::sqrt(ref) + 1e-12);
    }
}

TEST_CASE("strongly concentrated spd input: every partition block is rank r") {
    const int n = 128, r = 3;
    DenseMatrix M = gen_concentrated(n, r, 1e-9, RngStream(11), true);
    // off-diagonal submatrices drawn from the partition have nrank <= r
    const double scale = spectral_norm(M);
    for (int off : {0, 32, 64}) {
        DenseMatrix blk = M.block(off, (off + 64) % n, 32, 32);
        CHECK(numerical_rank(blk, 10.0 * 1e-9 * scale) <= r);
    }
    HssMatrix H = hss_compress(M, r, 1e-8, HssSketch::Gaussian, RngStream(13));
    CHECK(H.nested());
    CHECK(rel_err(H.reconstruct_dense(), M) < 1e-7);
}

TEST_CASE("gen_concentrated r = 0 is almost a scaled identity") {
    DenseMatrix M = gen_concentrated(48, 0, 1e-10, RngStream(17), true);
    for (int i = 0; i < 48; ++i)
        for (int j = 0; j < 48; ++j)
            if (i != j) CHECK(std::fabs(M.at(i, j)) < 1e-10);
}

TEST_CASE("generator rank violation is detected") {
    RngStream rng(19);
    DenseMatrix G = gaussian_matrix(rng, 64, 64);
    DenseMatrix M = add(G, transpose(G)); // full-rank off-diagonal blocks
    CHECK_THROWS_AS(hss_compress(M, 2, 1e-8, HssSketch::Gaussian, RngStream(21)),
                    GeneratorRankExceeded);
}

TEST_CASE("hss matvec flop count: linear scaling and sub-dense cost") {
    const int r = 4;
    long long prev = 0;
    for (int n : {256, 512}) {
        DenseMatrix M = gen_concentrated(n, r, 1e-10, RngStream(23, n), true);
        HssMatrix H = hss_compress(M, r, 1e-8, HssSketch::Gaussian, RngStream(25, n));
        std::vector<double> x(n, 1.0);
        FlopCount fc;
        (void)H.matvec(x, &fc);
        const long long dense = 2LL * n * n - n;
        if (n >= 512) CHECK(fc.total() < dense / 10); // the published budget size
        CHECK(fc.total() <= 8LL * n * (r + H.leaf_size()));
        if (prev > 0) CHECK(fc.total() <= prev * 2.4); // roughly linear in n
        prev = fc.total();
    }
}

TEST_CASE("neutered block column rank arithmetic: rank(N) <= rank(B-) + rank(B+)") {
    const int n = 64, r = 2;
    DenseMatrix M = gen_concentrated(n, r, 1e-10, RngStream(27), true);
    // block column of the 16-wide block at offset 16: union of the parts
    // above and below the diagonal block
    DenseMatrix above = M.block(0, 16, 16, 16);
    DenseMatrix below = M.block(32, 16, 32, 16);
    DenseMatrix full(48, 16);
    full.set_block(0, 0, above);
    full.set_block(16, 0, below);
    const double tol = 1e-8 * spectral_norm(M);
    CHECK(numerical_rank(full, tol) <=
          numerical_rank(above, tol) + numerical_rank(below, tol));
}

TEST_CASE("cg: identity, clustered spectra, and distinct-eigenvalue bound") {
    const int n = 40;
    std::vector<double> b(n, 1.0);
    auto ident = [&](const double* x, double* y) { std::copy(x, x + n, y); };
    CgResult r1 = cg_solve(ident, n, b, 1e-12, 5);
    CHECK(r1.converged);
    CHECK(r1.iterations == 1);

    // exactly 5 distinct eigenvalues: convergence in <= 5 iterations
    DenseMatrix D(n, n);
    RngStream rng(29);
    for (int i = 0; i < n; ++i) D.at(i, i) = 1.0 + static_cast<double>(i % 5);
    auto applyd = [&](const double* x, double* y) { matvec(D, x, y); };
    CgResult r2 = cg_solve(applyd, n, b, 1e-12, 10);
    CHECK(r2.converged);
    CHECK(r2.iterations <= 5);

    // strongly (6, 1e-10)-concentrated: residual small within r+1 iterations
    const int m = 96;
    DenseMatrix M = gen_concentrated(m, 6, 1e-10, rng.fork(1), true);
    std::vector<double> bm(m);
    for (auto& v : bm) v = rng.next_normal();
    auto applym = [&](const double* x, double* y) { matvec(M, x, y); };
    CgResult r3 = cg_solve(applym, m, bm, 1e-8, 7);
    CHECK(r3.converged);
    CHECK(r3.iterations <= 7);
}

TEST_CASE("cg normal equations match the direct solve") {
    RngStream rng(31);
    const int n = 60;
    // orthogonal A: both normal-equation variants converge immediately
    DenseMatrix Q = orthogonalize(gaussian_matrix(rng.fork(0), n, n)).Q;
    std::vector<double> b(n);
    for (auto& v : b) v = rng.next_normal();
    CgResult r1 = cg_normal_equations(Q, b, 1e-12, 3, NormalEquations::Error);
    CHECK(r1.iterations <= 2);

    // well-conditioned random system vs the pseudo-inverse solve
    DenseMatrix A = add(scale(DenseMatrix::identity(n), 8.0),
                        gaussian_matrix(rng.fork(1), n, n));
    std::vector<double> xd(n), ad(n);
    DenseMatrix Ap = pseudo_inverse(A);
    matvec(Ap, b.data(), xd.data());
    CgResult r2 = cg_normal_equations(A, b, 1e-10, 400, NormalEquations::Error);
    CgResult r3 = cg_normal_equations(A, b, 1e-10, 400, NormalEquations::Residual);
    double e2 = 0.0, e3 = 0.0, ref = 0.0;
    for (int i = 0; i < n; ++i) {
        e2 += (r2.x[i] - xd[i]) * (r2.x[i] - xd[i]);
        e3 += (r3.x[i] - xd[i]) * (r3.x[i] - xd[i]);
        ref += xd[i] * xd[i];
    }
    CHECK(std::sqrt(e2 / ref) < 1e-6);
    CHECK(std::sqrt(e3 / ref) < 1e-6);

    // spd input: plain CG agrees with both variants
    DenseMatrix S = gen_concentrated(n, 4, 1e-9, rng.fork(2), true);
    auto applys = [&](const double* x, double* y) { matvec(S, x, y); };
    CgResult plain = cg_solve(applys, n, b, 1e-10, 200);
    CgResult ne = cg_normal_equations(S, b, 1e-10, 400, NormalEquations::Error);
    double diff = 0.0;
    for (int i = 0; i < n; ++i) diff += (plain.x[i] - ne.x[i]) * (plain.x[i] - ne.x[i]);
    CHECK(std::sqrt(diff / ref) < 1e-6);
}

TEST_CASE("accelerated cg: hss pipeline matches dense cg") {
    const int n = 512, r = 4;
    RngStream rng(37);
    DenseMatrix M = gen_concentrated(n, r, 1e-10, rng.fork(0), true);
    std::vector<double> b(n);
    for (auto& v : b) v = rng.next_normal();

    AcceleratedCgReport rep =
        accelerated_cg(M, r, 1e-8, b, 1e-10, r + 4, HssSketch::Gaussian, rng.fork(1));
    CHECK(rep.cg.converged);
    CHECK(rep.cg.iterations <= r + 2);
    CHECK(rep.matvec_flops < rep.dense_matvec_flops / 10);

    auto applym = [&](const double* x, double* y) { matvec(M, x, y); };
    CgResult dense = cg_solve(applym, n, b, 1e-10, r + 4);
    double diff = 0.0, ref = 0.0;
    for (int i = 0; i < n; ++i) {
        diff += (rep.cg.x[i] - dense.x[i]) * (rep.cg.x[i] - dense.x[i]);
        ref += dense.x[i] * dense.x[i];
    }
    CHECK(std::sqrt(diff / ref) < 10.0 * 1e-7);

    // r = 0 case: essentially a scaled identity, one iteration
    DenseMatrix M0 = gen_concentrated(n, 0, 1e-12, rng.fork(2), true);
    AcceleratedCgReport rep0 =
        accelerated_cg(M0, 0, 1e-8, b, 1e-10, 4, HssSketch::Gaussian, rng.fork(3));
    CHECK(rep0.cg.converged);
    CHECK(rep0.cg.iterations <= 2);

    // hadamard vs gaussian sketches: same iteration counts, close histories
    AcceleratedCgReport reph =
        accelerated_cg(M, r, 1e-8, b, 1e-10, r + 4, HssSketch::Hadamard, rng.fork(4));
    CHECK(reph.cg.iterations == rep.cg.iterations);
    for (std::size_t i = 0; i < rep.cg.residual_history.size(); ++i)
        CHECK(std::fabs(reph.cg.residual_history[i] - rep.cg.residual_history[i]) < 1e-6);
}

TEST_CASE("hss save/load round trip") {
    const int n = 128, r = 3;
    DenseMatrix M = gen_concentrated(n, r, 1e-10, RngStream(41), true);
    HssMatrix H = hss_compress(M, r, 1e-8, HssSketch::Gaussian, RngStream(43));
    const std::string dir = std::filesystem::temp_directory_path() / "sketchlra_hss_test";
    H.save(dir);
    HssMatrix L = HssMatrix::load(dir);
    CHECK(L.n() == H.n());
    CHECK(L.rank() == H.rank());
    CHECK(L.nested() == H.nested());
    CHECK(rel_err(L.reconstruct_dense(), H.reconstruct_dense()) < 1e-15);
    std::vector<double> x(n);
    RngStream xs(47);
    for (auto& v : x) v = xs.next_normal();
    std::vector<double> y1 = H.matvec(x), y2 = L.matvec(x);
    for (int i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-12));
    std::filesystem::remove_all(dir);
}
