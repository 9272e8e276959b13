#include "sketchlra/rangefinder.hpp"

#include <cmath>

#include "sketchlra/detail/jacobi.hpp"
#include "sketchlra/testmatrices.hpp"

namespace sketchlra {

namespace {

// delta = ||Q Q^H M - M||, exact (dense residual) or Frievalds lower estimate
double residual_norm(const DenseMatrix& M, const DenseMatrix& Q, const DenseMatrix& QtM,
                     DeltaMode mode, RngStream rng) {
    if (mode.kind == DeltaMode::Kind::Exact) {
        DenseMatrix E = sub(matmul(Q, QtM), M);
        return spectral_norm(E);
    }
    const int n = M.cols();
    double best = 0.0;
    const bool cx = Q.is_complex();
    std::vector<double> x(n);
    for (int t = 0; t < mode.probes; ++t) {
        double nx = 0.0;
        for (int j = 0; j < n; ++j) {
            x[j] = rng.next_normal();
            nx += x[j] * x[j];
        }
        nx = std::sqrt(nx);
        // e = Q (QtM x) - M x
        if (!cx) {
            std::vector<double> z(QtM.rows()), e(M.rows()), mx(M.rows());
            matvec(QtM, x.data(), z.data());
            matvec(Q, z.data(), e.data());
            matvec(M, x.data(), mx.data());
            double ne = 0.0;
            for (int i = 0; i < M.rows(); ++i) ne += (e[i] - mx[i]) * (e[i] - mx[i]);
            best = std::max(best, std::sqrt(ne) / nx);
        } else {
            std::vector<double> xc(2 * n, 0.0);
            for (int j = 0; j < n; ++j) xc[2 * j] = x[j];
            std::vector<double> z(2 * QtM.rows()), e(2 * M.rows());
            matvec(QtM, xc.data(), z.data());
            matvec(Q, z.data(), e.data());
            std::vector<double> mx(M.rows());
            matvec(M, x.data(), mx.data());
            double ne = 0.0;
            for (int i = 0; i < M.rows(); ++i) {
                const double re = e[2 * i] - mx[i], im = e[2 * i + 1];
                ne += re * re + im * im;
            }
            best = std::max(best, std::sqrt(ne) / nx);
        }
    }
    return best;
}

// orthonormalize between applications of M^H and M, preserving the range
DenseMatrix power_scheme(const DenseMatrix& M, DenseMatrix Y, int q) {
    for (int t = 0; t < q; ++t) {
        Y = orthogonalize(Y).Q;
        DenseMatrix Z = matmul_tn(M, Y);
        Z = orthogonalize(Z).Q;
        Y = matmul(M, Z);
    }
    return Y;
}

RangeResult finish_from_sketch(const DenseMatrix& M, DenseMatrix Y, double tau,
                               int power_iters, DeltaMode mode, RngStream delta_rng,
                               std::vector<std::string> provenance) {
    if (power_iters > 0) Y = power_scheme(M, Y, power_iters);
    OrthResult orth = orthogonalize(Y);
    RangeResult res;
    res.Q = std::move(orth.Q);
    res.QtM = matmul_tn(res.Q, M);
    res.reduced_rank = orth.reduced_rank;
    res.l_used = res.Q.cols();
    res.power_iterations = power_iters;
    res.delta = residual_norm(M, res.Q, res.QtM, mode, delta_rng);
    res.success = res.delta <= tau;
    res.provenance = std::move(provenance);
    return res;
}

} // namespace

RangeResult range_find(const DenseMatrix& M, const FastMultiplier& mult, double tau,
                       int power_iters, DeltaMode mode) {
    if (mult.n() != M.cols()) throw DimensionMismatch("range_find: multiplier size");
    if (tau < 0.0) throw Error("range_find: tau must be nonnegative");
    DenseMatrix Y = mult.apply_right(M);
    return finish_from_sketch(M, std::move(Y), tau, power_iters, mode,
                              RngStream(0xde17a, 1), {mult.provenance()});
}

RangeResult range_find(const DenseMatrix& M, const MultiplierSpec& spec, double tau,
                       RngStream rng, int power_iters, DeltaMode mode) {
    return range_find(M, build(spec, rng), tau, power_iters, mode);
}

RangeResult range_find_recursive(const DenseMatrix& M, const RecursiveSchedule& schedule,
                                 double tau, RngStream rng, bool reuse, int power_iters,
                                 DeltaMode mode) {
    const int n = M.cols();
    if (schedule.base.n != n) throw DimensionMismatch("recursive: base size != n");
    int total = 0;
    for (int w : schedule.widths) {
        if (w <= 0) throw Error("recursive: nonpositive block width");
        total += w;
    }
    if (total > n) throw DimensionMismatch("recursive: widths exceed n");

    MultiplierSpec full = schedule.base;
    full.cols = ColumnSelection::leftmost(total);
    FastMultiplier mult = build(full, rng);
    // one structured application covers every stage: stage i reads the
    // leading l^(i) columns of M B
    DenseMatrix MB = mult.apply_right(M);

    RangeResult res;
    std::vector<double> stage_deltas;
    DenseMatrix Qacc; // accumulated basis when reusing projections
    int lcum = 0;
    for (std::size_t stage = 0; stage < schedule.widths.size(); ++stage) {
        const int w = schedule.widths[stage];
        const int lprev = lcum;
        lcum += w;
        if (power_iters > 0 || !reuse) {
            DenseMatrix Yi = MB.columns(0, lcum);
            res = finish_from_sketch(M, std::move(Yi), tau, power_iters, mode,
                                     RngStream(0xde17a, 2 + stage), {mult.provenance()});
        } else {
            // orthogonalize the new block against the accumulated basis
            // (block Gram-Schmidt, one reorthogonalization pass)
            DenseMatrix Ynew = MB.columns(lprev, w);
            if (Qacc.cols() > 0) {
                for (int pass = 0; pass < 2; ++pass) {
                    DenseMatrix C = matmul_tn(Qacc, Ynew);
                    Ynew = sub(Ynew, matmul(Qacc, C));
                }
            }
            OrthResult o = orthogonalize(Ynew);
            if (Qacc.cols() == 0) {
                Qacc = o.Q;
            } else {
                // near-dependent blocks can surface normalization-amplified
                // leakage into the accumulated basis; measure and fall back to
                // a joint factorization when the invariant is at risk
                double leak = 0.0;
                DenseMatrix C2 = matmul_tn(Qacc, o.Q);
                for (int a = 0; a < C2.rows(); ++a)
                    for (int b = 0; b < C2.cols(); ++b)
                        leak = std::max(leak, std::abs(C2.cat(a, b)));
                if (o.reduced_rank || leak > 1e-12) {
                    DenseMatrix joint(M.rows(), Qacc.cols() + Ynew.cols(),
                                      Qacc.is_complex());
                    joint.set_block(0, 0, Qacc);
                    joint.set_block(0, Qacc.cols(), Ynew);
                    Qacc = orthogonalize(joint).Q;
                } else {
                    DenseMatrix merged(M.rows(), Qacc.cols() + o.Q.cols(),
                                       Qacc.is_complex());
                    merged.set_block(0, 0, Qacc);
                    merged.set_block(0, Qacc.cols(), o.Q);
                    Qacc = std::move(merged);
                }
            }
            res.Q = Qacc;
            res.QtM = matmul_tn(Qacc, M);
            res.reduced_rank = o.reduced_rank;
            res.l_used = lcum;
            res.power_iterations = 0;
            res.delta = residual_norm(M, res.Q, res.QtM, mode, RngStream(0xde17a, 2 + stage));
            res.success = res.delta <= tau;
            res.provenance = {mult.provenance()};
        }
        res.l_used = lcum;
        stage_deltas.push_back(res.delta);
        res.stage_deltas = stage_deltas;
        if (res.success) return res;
    }
    if (total < n)
        throw ScheduleExhausted("recursive range finder failed at l = " +
                                std::to_string(total) + " < n = " + std::to_string(n));
    return res; // l reached n; report the last stage as-is
}

RangeResult expand_compress(const DenseMatrix& M, const MultiplierSpec& sparse_spec,
                            int l, double tau, RngStream rng, int power_iters,
                            DeltaMode mode) {
    FastMultiplier wide = build(sparse_spec, rng.fork(1));
    const int l_plus = wide.l();
    if (l > l_plus) throw DimensionMismatch("expand_compress: l > l_plus");
    DenseMatrix MB = wide.apply_right(M);
    DenseMatrix G = gaussian_matrix(rng.fork(2), l_plus, l);
    DenseMatrix Y = matmul(MB, G);
    return finish_from_sketch(M, std::move(Y), tau, power_iters, mode, rng.fork(3),
                              {wide.provenance(), "compress: gaussian l=" + std::to_string(l)});
}

RangeResult amend_combine(const DenseMatrix& M, const std::vector<MultiplierSpec>& failed,
                          double tau, RngStream rng, bool random_signs, int power_iters,
                          DeltaMode mode) {
    if (failed.size() < 2) throw Error("amend_combine: needs at least two multipliers");
    Composite sum;
    const int n = failed.front().n;
    ColumnSelection cols = failed.front().cols;
    for (const auto& s : failed) {
        MultiplierSpec t = s;
        t.cols = ColumnSelection(); // selection applies to the combined matrix
        sum.terms.push_back(std::move(t));
    }
    if (random_signs) {
        RngStream signs = rng.fork(9);
        sum.coeffs.resize(failed.size());
        for (auto& c : sum.coeffs) c = signs.next_sign();
    }
    MultiplierSpec combined;
    combined.n = n;
    combined.cols = cols;
    combined.body = std::move(sum);
    return range_find(M, combined, tau, rng.fork(1), power_iters, mode);
}

double frievalds_norm(const std::function<void(const std::vector<double>&,
                                               std::vector<double>&)>& apply,
                      int n, int t, RngStream rng) {
    if (t < 1) throw Error("frievalds_norm: t >= 1");
    double best = 0.0;
    std::vector<double> x(n), y;
    for (int k = 0; k < t; ++k) {
        double nx = 0.0;
        for (int j = 0; j < n; ++j) {
            x[j] = rng.next_normal();
            nx += x[j] * x[j];
        }
        nx = std::sqrt(nx);
        apply(x, y);
        double ny = 0.0;
        for (double v : y) ny += v * v;
        best = std::max(best, std::sqrt(ny) / nx);
    }
    return best;
}

ErrorBoundReport error_bound_report(const DenseMatrix& M, const DenseMatrix& B,
                                    const RangeResult& result, int r) {
    const int n = M.cols();
    SvdFactors f = svd(M, -1.0); // keep the full spectrum
    if (static_cast<int>(f.sigma.size()) < r)
        throw RankDeficientSketch("error_bound_report: rank(M) < r");
    ErrorBoundReport rep;
    rep.sigma_r1 = (r < static_cast<int>(f.sigma.size())) ? f.sigma[r] : 0.0;
    rep.delta = result.delta;

    // M_r and E = M - M_r
    DenseMatrix SrS(M.rows(), r);
    for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < r; ++j) SrS.at(i, j) = f.S.at(i, j) * f.sigma[j];
    DenseMatrix Tr = f.T.columns(0, r);
    DenseMatrix Mr = matmul_nt(SrS, Tr);
    DenseMatrix MrB = matmul(Mr, B);
    std::vector<double> sv = singular_values(MrB);
    const double tol = default_rank_tol(MrB, sv.empty() ? 0.0 : sv[0]);
    int rank = 0;
    for (double s : sv)
        if (s > tol) ++rank;
    if (rank < r) throw RankDeficientSketch("error_bound_report: rank(M_r B) < r");
    const double pinv_norm = 1.0 / sv[r - 1];
    const double bf = frobenius_norm(B);

    rep.lhs = std::fabs(rep.delta - rep.sigma_r1);
    rep.rhs = std::sqrt(8.0 * (n - r)) * rep.sigma_r1 * bf * pinv_norm;
    rep.guard = 10.0 * rep.sigma_r1 * rep.sigma_r1 * pinv_norm * pinv_norm * bf * bf;
    rep.holds = rep.lhs <= rep.rhs + rep.guard + 1e-14;

    DenseMatrix E = sub(M, Mr);
    rep.eb_lhs = frobenius_norm(matmul(E, B));
    rep.eb_rhs = bf * rep.sigma_r1 * std::sqrt(static_cast<double>(n - r));
    rep.eq4_holds = rep.eb_lhs <= rep.eb_rhs * (1.0 + 1e-12) + 1e-300;
    return rep;
}

PrimalDualSummary primal_dual_statistics(const PrimalDualConfig& cfg) {
    const int m = cfg.m, n = cfg.n, r = cfg.r, l = cfg.l;
    PrimalDualSummary out;
    out.trials = cfg.trials;
    out.p = l - r;
    const double e = 2.718281828459045;
    const double root8nr = std::sqrt(8.0 * (n - r));

    // primal: fixed input of numerical rank r, Gaussian multipliers;
    // f = sqrt(8(n-r)) nu_F(B) nu+(T_r^T B) / sigma_r
    {
        RngStream rng(cfg.seed, 101);
        DenseMatrix M = gen_svd_spectrum(n, r, rng.fork(0));
        SvdFactors fm = svd(M, -1.0);
        const double sigma_r = fm.sigma[r - 1];
        DenseMatrix Trt = transpose(fm.T.columns(0, r));
        double sum_f = 0.0;
        for (int t = 0; t < cfg.trials; ++t) {
            DenseMatrix B = gaussian_matrix(rng.fork(1 + t), n, l);
            const double nu_f = frobenius_norm(B);
            std::vector<double> sg = singular_values(matmul(Trt, B));
            const double nu_plus = 1.0 / sg[r - 1];
            sum_f += root8nr * nu_f * nu_plus / sigma_r;
        }
        out.mean_f = sum_f / cfg.trials;
        out.bound_f = e * std::sqrt(8.0 * (n - r) * r * l) *
                      (1.0 + std::sqrt(static_cast<double>(n)) +
                       std::sqrt(static_cast<double>(l))) /
                      (std::max(out.p, 1) * sigma_r);
        out.primal_asserted = out.p >= 1;
        out.primal_ok = !out.primal_asserted || out.mean_f <= out.bound_f * cfg.primal_slack;
    }

    // dual: factor-Gaussian inputs, fixed scaled-orthogonal multiplier (3-AH);
    // f_d = sqrt(8(n-r)l) nu+_{r,l} nu+_{m,r} kappa(B)
    {
        RngStream rng(cfg.seed, 202);
        MultiplierSpec bs;
        bs.n = n;
        bs.cols = ColumnSelection::leftmost(l);
        bs.body = AbridgedHadamard{3, PermDesc::none(), DiagDesc::none()};
        DenseMatrix B = build(bs, rng.fork(0)).materialize();
        std::vector<double> svb = singular_values(B);
        const double kappa = svb.front() / svb[l - 1];
        SvdFactors fb = svd(B, -1.0);
        double sum_fd = 0.0;
        const double root8nrl = std::sqrt(8.0 * (n - r) * l);
        for (int t = 0; t < cfg.trials; ++t) {
            DenseMatrix U = gaussian_matrix(rng.fork(1 + 2 * t), m, r);
            DenseMatrix V = gaussian_matrix(rng.fork(2 + 2 * t), r, n);
            std::vector<double> su = singular_values(U);
            const double nu_mr = 1.0 / su[r - 1];
            SvdFactors fu = svd(U, -1.0);
            DenseMatrix G = matmul(matmul_tn(fu.T, V), fb.S);
            std::vector<double> sg = singular_values(G);
            const double nu_rl = 1.0 / sg[r - 1];
            sum_fd += root8nrl * nu_rl * nu_mr * kappa;
        }
        out.mean_fd = sum_fd / cfg.trials;
        const double common = e * e * root8nrl * kappa / ((m - r) * std::max(out.p, 1));
        out.bound_fd_stated = common * r;
        out.bound_fd_corrected = common * std::sqrt(static_cast<double>(r) * m);
        out.dual_asserted = out.p >= 1;
        out.dual_ok =
            !out.dual_asserted || out.mean_fd <= out.bound_fd_corrected * cfg.dual_slack;
        out.dual_stated_ok = out.mean_fd <= out.bound_fd_stated * cfg.dual_slack;
    }
    return out;
}

DenseMatrix power_iterate(const DenseMatrix& M, int q) {
    DenseMatrix P = M;
    for (int t = 0; t < q; ++t) P = matmul(M, matmul_tn(M, P));
    return P;
}

PowerSchemeReport power_scheme_check(const DenseMatrix& M, int i, double sigma_floor,
                                     double rel_tol) {
    if (M.is_complex()) throw Error("power_scheme_check: real input only");
    PowerSchemeReport rep;
    rep.iterations = i;
    const int m = M.rows(), n = M.cols();

    using ld = long double;
    auto to_ld = [&](const DenseMatrix& A) {
        std::vector<std::vector<ld>> X(A.rows(), std::vector<ld>(A.cols()));
        for (int a = 0; a < A.rows(); ++a)
            for (int b = 0; b < A.cols(); ++b) X[a][b] = A.at(a, b);
        return X;
    };
    auto matmul_ld = [](const std::vector<std::vector<ld>>& A,
                        const std::vector<std::vector<ld>>& B) {
        const int ra = static_cast<int>(A.size()), ca = static_cast<int>(A[0].size());
        const int cb = static_cast<int>(B[0].size());
        std::vector<std::vector<ld>> C(ra, std::vector<ld>(cb, ld(0)));
        for (int a = 0; a < ra; ++a)
            for (int k = 0; k < ca; ++k) {
                const ld v = A[a][k];
                if (v == ld(0)) continue;
                for (int b = 0; b < cb; ++b) C[a][b] += v * B[k][b];
            }
        return C;
    };
    auto transpose_ld = [](const std::vector<std::vector<ld>>& A) {
        std::vector<std::vector<ld>> T(A[0].size(), std::vector<ld>(A.size()));
        for (std::size_t a = 0; a < A.size(); ++a)
            for (std::size_t b = 0; b < A[0].size(); ++b) T[b][a] = A[a][b];
        return T;
    };
    auto sv_ld = [](const std::vector<std::vector<ld>>& A) {
        // jacobi operates on columns stored as rows
        std::vector<std::vector<ld>> cols(A[0].size(), std::vector<ld>(A.size()));
        for (std::size_t a = 0; a < A.size(); ++a)
            for (std::size_t b = 0; b < A[0].size(); ++b) cols[b][a] = A[a][b];
        std::vector<std::vector<ld>> v;
        return detail::jacobi_svd_rows(cols, v, false);
    };

    auto Ml = to_ld(M);
    std::vector<ld> sig_m = sv_ld(Ml);

    auto P = Ml;
    if (i > 0) {
        auto Mt = transpose_ld(Ml);
        for (int t = 0; t < i; ++t) P = matmul_ld(Ml, matmul_ld(Mt, P));
    }
    std::vector<ld> sig_p = sv_ld(P);

    const int kmax = std::min(m, n);
    for (int j = 0; j < kmax; ++j) {
        if (static_cast<double>(sig_m[j]) < sigma_floor) break;
        ld want = 1;
        for (int t = 0; t < 2 * i + 1; ++t) want *= sig_m[j];
        const double rel =
            static_cast<double>(std::abs(sig_p[j] - want) / std::max(want, ld(1e-300)));
        rep.max_rel_err = std::max(rep.max_rel_err, rel);
        ++rep.values_checked;
    }
    rep.holds = rep.max_rel_err <= rel_tol;
    return rep;
}

} // namespace sketchlra
