#include "sketchlra/lsr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sketchlra {

namespace {

std::vector<double> pinv_solve(const DenseMatrix& A, const std::vector<double>& b,
                               bool* rank_deficient = nullptr) {
    SvdFactors f = svd(A);
    if (rank_deficient) *rank_deficient = static_cast<int>(f.sigma.size()) < A.cols();
    // x = T diag(1/sigma) S^T b
    std::vector<double> sb(f.sigma.size(), 0.0);
    for (std::size_t j = 0; j < f.sigma.size(); ++j) {
        double s = 0.0;
        for (int i = 0; i < A.rows(); ++i) s += f.S.at(i, static_cast<int>(j)) * b[i];
        sb[j] = s / f.sigma[j];
    }
    std::vector<double> x(A.cols(), 0.0);
    for (int i = 0; i < A.cols(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < f.sigma.size(); ++j)
            s += f.T.at(i, static_cast<int>(j)) * sb[j];
        x[i] = s;
    }
    return x;
}

} // namespace

std::vector<double> solve_exact(const LsrProblem& p) {
    if (p.A.rows() != static_cast<int>(p.b.size()))
        throw DimensionMismatch("solve_exact: size mismatch");
    if (p.A.rows() <= p.A.cols()) throw DimensionMismatch("solve_exact: needs m > d");
    return pinv_solve(p.A, p.b);
}

double residual_norm(const LsrProblem& p, const std::vector<double>& x) {
    std::vector<double> ax(p.A.rows());
    matvec(p.A, x.data(), ax.data());
    double s = 0.0;
    for (int i = 0; i < p.A.rows(); ++i) s += (ax[i] - p.b[i]) * (ax[i] - p.b[i]);
    return std::sqrt(s);
}

DenseMatrix make_sketch(SketchKind kind, int k, int m, RngStream rng) {
    if (k < 1 || k > m) throw DimensionMismatch("make_sketch: need 1 <= k <= m");
    switch (kind) {
        case SketchKind::Gaussian: {
            DenseMatrix F = gaussian_matrix(rng.fork(0), k, m);
            return scale(F, 1.0 / std::sqrt(static_cast<double>(k)));
        }
        case SketchKind::HadamardRows: {
            // greedy binary split of m into powers of two
            std::vector<int> sizes;
            int rest = m;
            while (rest > 0) {
                int p2 = 1;
                while (2 * p2 <= rest) p2 *= 2;
                sizes.push_back(p2);
                rest -= p2;
            }
            RngStream rows_rng = rng.fork(1), sign_rng = rng.fork(2), perm_rng = rng.fork(3);
            // random distinct global rows
            std::vector<int> rows(m);
            std::iota(rows.begin(), rows.end(), 0);
            for (int i = 0; i < k; ++i)
                std::swap(rows[i], rows[i + static_cast<int>(rows_rng.next_index(m - i))]);
            rows.resize(k);
            // column signs and permutation
            std::vector<double> colsign(m);
            for (auto& s : colsign) s = sign_rng.next_sign();
            std::vector<int> colperm(m);
            std::iota(colperm.begin(), colperm.end(), 0);
            for (int i = m - 1; i > 0; --i)
                std::swap(colperm[i], colperm[static_cast<int>(perm_rng.next_index(i + 1))]);

            DenseMatrix F(k, m);
            for (int t = 0; t < k; ++t) {
                const int gr = rows[t];
                // locate the block containing this row
                int off = 0, bs = sizes[0];
                for (int s : sizes) {
                    if (gr < off + s) { bs = s; break; }
                    off += s;
                }
                const int i = gr - off;
                const double sc = 1.0 / std::sqrt(static_cast<double>(bs));
                for (int j = 0; j < bs; ++j) {
                    const double h = (__builtin_popcount(static_cast<unsigned>(i & j)) & 1)
                                         ? -1.0
                                         : 1.0;
                    const int col = colperm[off + j];
                    F.at(t, col) = h * sc * colsign[col];
                }
            }
            return F;
        }
        case SketchKind::CountSketch: {
            RngStream s = rng.fork(4);
            DenseMatrix F(k, m);
            for (int j = 0; j < m; ++j)
                F.at(static_cast<int>(s.next_index(k)), j) = s.next_sign();
            return F;
        }
    }
    throw Error("unknown sketch kind");
}

SketchedSolution solve_sketched(const LsrProblem& p, int k, SketchKind kind,
                                RngStream rng) {
    const int m = p.A.rows(), d = p.A.cols();
    if (!(d < k && k <= m)) throw DimensionMismatch("solve_sketched: need d < k <= m");
    DenseMatrix F = make_sketch(kind, k, m, rng);
    DenseMatrix FA = matmul(F, p.A);
    std::vector<double> fb(k);
    matvec(F, p.b.data(), fb.data());
    SketchedSolution sol;
    sol.k = k;
    sol.sketch = (kind == SketchKind::Gaussian
                      ? "gaussian"
                      : (kind == SketchKind::HadamardRows ? "hadamard-rows" : "countsketch"));
    sol.x = pinv_solve(FA, fb, &sol.sketch_rank_deficient);
    sol.residual = residual_norm(p, sol.x);
    sol.opt_residual = residual_norm(p, solve_exact(p));
    return sol;
}

DistortionSummary distortion_check(const DenseMatrix& M, const DenseMatrix& F,
                                   int trials, RngStream rng, double limit,
                                   const std::vector<std::vector<double>>& designated) {
    if (F.cols() != M.rows()) throw DimensionMismatch("distortion_check: F cols != M rows");
    const int d1 = M.cols(); // d + 1
    DistortionSummary sum;
    sum.limit = limit;
    sum.min_ratio = std::numeric_limits<double>::infinity();
    auto probe = [&](const std::vector<double>& y) {
        std::vector<double> my(M.rows());
        matvec(M, y.data(), my.data());
        double nmy = 0.0;
        for (double v : my) nmy += v * v;
        nmy = std::sqrt(nmy);
        if (nmy == 0.0) return;
        std::vector<double> fmy(F.rows());
        matvec(F, my.data(), fmy.data());
        double nf = 0.0;
        for (double v : fmy) nf += v * v;
        const double ratio = std::sqrt(nf) / nmy;
        sum.max_ratio = std::max(sum.max_ratio, ratio);
        sum.min_ratio = std::min(sum.min_ratio, ratio);
        ++sum.samples;
    };
    std::vector<double> y(d1);
    for (int t = 0; t < trials; ++t) {
        for (int i = 0; i < d1 - 1; ++i) y[i] = rng.next_normal();
        y[d1 - 1] = -1.0; // theorem normalization
        probe(y);
    }
    for (const auto& v : designated)
        if (static_cast<int>(v.size()) == d1) probe(v);
    if (limit > 0.0) sum.ok = sum.max_ratio <= limit;
    return sum;
}

} // namespace sketchlra
