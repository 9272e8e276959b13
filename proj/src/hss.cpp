#include "sketchlra/hss.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "sketchlra/io.hpp"

namespace sketchlra {

namespace {

bool nearly_symmetric(const DenseMatrix& M) {
    if (M.rows() != M.cols()) return false;
    double diff = 0.0, scale = 0.0;
    for (int i = 0; i < M.rows(); ++i)
        for (int j = i + 1; j < M.cols(); ++j) {
            diff = std::max(diff, std::fabs(M.at(i, j) - M.at(j, i)));
            scale = std::max(scale, std::fabs(M.at(i, j)));
        }
    return diff <= 1e-12 * std::max(scale, 1.0);
}

// top-r left singular directions of a small dense matrix; also reports the
// first discarded singular value and the leading one
DenseMatrix top_left_vectors(const DenseMatrix& Z, int r, double& sigma_keep,
                             double& sigma_drop) {
    SvdFactors f = svd(Z, -1.0);
    const int have = static_cast<int>(f.sigma.size());
    sigma_keep = have > 0 ? f.sigma[0] : 0.0;
    sigma_drop = have > r ? f.sigma[r] : 0.0;
    DenseMatrix U(Z.rows(), r);
    for (int i = 0; i < Z.rows(); ++i)
        for (int j = 0; j < std::min(r, have); ++j) U.at(i, j) = f.S.at(i, j);
    // pad orthonormally if the block had rank below r
    if (have < r) {
        OrthResult o = orthogonalize(U);
        U = o.Q;
    }
    return U;
}

long long gemm_flops(long long m, long long n, long long k) { return 2 * m * n * k; }

} // namespace

long long HssMatrix::stored_diagonal_entries() const {
    long long s = 0;
    for (const auto& d : diag_) s += static_cast<long long>(d.rows()) * d.cols();
    return s;
}

// ---- compression ---------------------------------------------------------------

HssMatrix hss_compress(const DenseMatrix& M, int r, double xi, HssSketch sketch,
                       RngStream rng) {
    const int n = M.rows();
    if (M.rows() != M.cols()) throw DimensionMismatch("hss_compress: square input only");
    if (M.is_complex()) throw Error("hss_compress: real input only");
    if (r < 0 || r >= n) throw DimensionMismatch("hss_compress: rank out of range");

    HssMatrix H;
    H.n_ = n;
    H.r_ = r;
    H.xi_ = xi;
    H.leaf_ = std::max(2 * r, 16);
    H.levels_ = 0;
    while ((n >> (H.levels_ + 1)) >= H.leaf_) ++H.levels_;
    if (H.levels_ == 0) {
        // degenerate: single dense block
        H.spans_ = {{0, n}};
        H.diag_ = {M};
        return H;
    }
    const int nodes = (2 << H.levels_) - 1;
    H.spans_.resize(nodes);
    H.spans_[0] = {0, n};
    for (int p = 0; p < nodes / 2; ++p) {
        const auto [off, len] = H.spans_[p];
        H.spans_[2 * p + 1] = {off, len / 2};
        H.spans_[2 * p + 2] = {off + len / 2, len - len / 2};
    }
    const int leaves = H.num_leaves();
    H.diag_.resize(leaves);
    for (int i = 0; i < leaves; ++i) {
        const auto [off, len] = H.spans_[H.leaf_node(i)];
        H.diag_[i] = M.block(off, off, len, len);
    }

    const int l = r + 4; // oversampled sketch width
    const bool symmetric = nearly_symmetric(M);

    if (!symmetric) {
        // level-wise generators, each neutered block column compressed on its own
        RngStream blocks_rng = rng.fork(17);
        int slot = 0;
        for (int p = 0; p < nodes / 2; ++p) {
            const auto c1 = H.spans_[2 * p + 1];
            const auto c2 = H.spans_[2 * p + 2];
            for (int side = 0; side < 2; ++side) {
                const auto rows = side == 0 ? c2 : c1;
                const auto cols = side == 0 ? c1 : c2;
                DenseMatrix N = M.block(rows.off, cols.off, rows.len, cols.len);
                DenseMatrix G = gaussian_matrix(blocks_rng.fork(slot++),
                                                cols.len, std::min(l, cols.len));
                OrthResult q = orthogonalize(matmul(N, G));
                DenseMatrix Z = matmul_tn(q.Q, N);
                double skeep, sdrop;
                DenseMatrix u = top_left_vectors(Z, std::min(r, Z.rows()), skeep, sdrop);
                HssMatrix::Generator g;
                g.row_off = rows.off;
                g.row_len = rows.len;
                g.col_off = cols.off;
                g.col_len = cols.len;
                g.F = matmul(q.Q, u);
                if (g.F.cols() < r) { // pad to the declared generator length
                    DenseMatrix Fp(g.F.rows(), r);
                    Fp.set_block(0, 0, g.F);
                    g.F = std::move(Fp);
                }
                g.H = matmul_tn(g.F, N);
                const double nn = frobenius_norm(N);
                const double err = frobenius_norm(sub(N, matmul(g.F, g.H)));
                if (err > xi * nn + 1e-13 * frobenius_norm(M))
                    throw GeneratorRankExceeded(
                        "hss_compress: block at (" + std::to_string(rows.off) + "," +
                        std::to_string(cols.off) + ") is not rank-" + std::to_string(r) +
                        " at xi");
                H.gens_.push_back(std::move(g));
            }
        }
        return H;
    }

    // symmetric input: nested bases from one global sketch
    H.nested_ = true;
    MultiplierSpec bs;
    bs.n = n;
    bs.cols = ColumnSelection::leftmost(l);
    if (sketch == HssSketch::Hadamard) {
        int k = 0;
        while ((1 << k) < n) ++k;
        if ((1 << k) != n) throw DimensionNotSupported("hadamard sketch needs n = 2^k");
        bs.body = AbridgedHadamard{std::min(3, k), PermDesc::random(), DiagDesc::random_sign()};
    } else {
        bs.body = GaussianDense{};
    }
    FastMultiplier mult = build(bs, rng.fork(1));
    DenseMatrix Bmat = mult.materialize();
    DenseMatrix Y = mult.apply_right(M); // n x l

    const int internal = nodes / 2;
    std::vector<DenseMatrix> row_image(nodes); // S = U~^T M[span, :], r x n
    std::vector<DenseMatrix> basis(nodes);     // materialized U~ per node
    H.leaf_u_.resize(leaves);
    H.trans_r_.resize(internal);
    H.coup_b_.resize(internal);

    const double norm_m = frobenius_norm(M);
    auto check_drop = [&](double sdrop, double skeep, int off) {
        if (sdrop > xi * skeep + 1e-13 * norm_m)
            throw GeneratorRankExceeded("hss_compress: block row at offset " +
                                        std::to_string(off) + " exceeds rank " +
                                        std::to_string(r) + " at xi");
    };

    // leaves: column basis of the off-diagonal block row
    for (int i = 0; i < leaves; ++i) {
        const int node = H.leaf_node(i);
        const auto [off, len] = H.spans_[node];
        // Y_i = (M B)[rows] - D_i B[rows]
        DenseMatrix Yi = Y.block(off, 0, len, Y.cols());
        DenseMatrix corr = matmul(H.diag_[i], Bmat.block(off, 0, len, Bmat.cols()));
        Yi = sub(Yi, corr);
        OrthResult q = orthogonalize(Yi);
        // project the full block row, diagonal columns zeroed
        DenseMatrix Z = matmul_tn(q.Q, M.block(off, 0, len, n));
        for (int a = 0; a < Z.rows(); ++a)
            for (int b = off; b < off + len; ++b) Z.at(a, b) = 0.0;
        double skeep, sdrop;
        DenseMatrix u = top_left_vectors(Z, r, skeep, sdrop);
        check_drop(sdrop, skeep, off);
        H.leaf_u_[i] = matmul(q.Q, u); // len x r
        basis[node] = H.leaf_u_[i];
        row_image[node] = matmul_tn(H.leaf_u_[i], M.block(off, 0, len, n)); // r x n
    }

    // internal nodes bottom-up: translations from stacked child row images
    for (int p = internal - 1; p >= 0; --p) {
        const int c1 = 2 * p + 1, c2 = 2 * p + 2;
        const auto [off, len] = H.spans_[p];
        const int rc = row_image[c1].rows();
        DenseMatrix W(2 * rc, n);
        W.set_block(0, 0, row_image[c1]);
        W.set_block(rc, 0, row_image[c2]);
        if (p > 0) {
            DenseMatrix Wz = W;
            for (int a = 0; a < W.rows(); ++a)
                for (int b = off; b < off + len; ++b) Wz.at(a, b) = 0.0;
            double skeep, sdrop;
            DenseMatrix u = top_left_vectors(Wz, r, skeep, sdrop);
            check_drop(sdrop, skeep, off);
            H.trans_r_[p] = u; // 2r x r
            row_image[p] = matmul_tn(u, W);
            DenseMatrix Bc(basis[c1].rows() + basis[c2].rows(), r);
            Bc.set_block(0, 0, matmul(basis[c1], u.block(0, 0, rc, r)));
            Bc.set_block(basis[c1].rows(), 0, matmul(basis[c2], u.block(rc, 0, rc, r)));
            basis[p] = std::move(Bc);
        }
        // sibling coupling B12 = U~_c1^T M[c1, c2] U~_c2 = S_c1[:, c2] U~_c2
        const auto s2 = H.spans_[c2];
        H.coup_b_[p] = matmul(row_image[c1].block(0, s2.off, rc, s2.len), basis[c2]);
    }

    // export flat generator pairs and validate the per-block contract
    for (int p = 0; p < internal; ++p) {
        const int c1 = 2 * p + 1, c2 = 2 * p + 2;
        const auto s1 = H.spans_[c1];
        const auto s2 = H.spans_[c2];
        for (int side = 0; side < 2; ++side) {
            HssMatrix::Generator g;
            const auto rows = side == 0 ? s2 : s1;
            const auto cols = side == 0 ? s1 : s2;
            // M[c2, c1] = U~_c2 B12^T U~_c1^T, M[c1, c2] = U~_c1 B12 U~_c2^T
            if (side == 0) {
                g.F = matmul_nt(basis[c2], H.coup_b_[p]); // transpose of B12
                g.H = transpose(basis[c1]);
            } else {
                g.F = matmul(basis[c1], H.coup_b_[p]);
                g.H = transpose(basis[c2]);
            }
            g.row_off = rows.off;
            g.row_len = rows.len;
            g.col_off = cols.off;
            g.col_len = cols.len;
            DenseMatrix N = M.block(rows.off, cols.off, rows.len, cols.len);
            const double err = frobenius_norm(sub(N, matmul(g.F, g.H)));
            if (err > xi * frobenius_norm(N) + 1e-13 * frobenius_norm(M))
                throw GeneratorRankExceeded("hss_compress: generator residual above xi at (" +
                                            std::to_string(rows.off) + "," +
                                            std::to_string(cols.off) + ")");
            H.gens_.push_back(std::move(g));
        }
    }
    return H;
}

// ---- matvec ----------------------------------------------------------------------

void HssMatrix::flat_matvec(const std::vector<double>& x, std::vector<double>& y,
                            FlopCount* fc) const {
    for (const auto& g : gens_) {
        const int r = g.F.cols();
        std::vector<double> t(r, 0.0);
        for (int a = 0; a < r; ++a) {
            double s = 0.0;
            const double* hrow = g.H.row(a);
            for (int b = 0; b < g.col_len; ++b) s += hrow[b] * x[g.col_off + b];
            t[a] = s;
        }
        for (int i = 0; i < g.row_len; ++i) {
            const double* frow = g.F.row(i);
            double s = 0.0;
            for (int a = 0; a < r; ++a) s += frow[a] * t[a];
            y[g.row_off + i] += s;
        }
        if (fc) {
            fc->mults += static_cast<long long>(r) * (g.col_len + g.row_len);
            fc->adds += static_cast<long long>(r) * (g.col_len + g.row_len);
        }
    }
}

void HssMatrix::nested_matvec(const std::vector<double>& x, std::vector<double>& y,
                              FlopCount* fc) const {
    const int nodes = static_cast<int>(spans_.size());
    const int internal = nodes / 2;
    const int leaves = num_leaves();
    std::vector<std::vector<double>> xt(nodes), yt(nodes);
    // upward: compress x into the nested bases
    for (int i = 0; i < leaves; ++i) {
        const int node = leaf_node(i);
        const auto [off, len] = spans_[node];
        xt[node].assign(r_, 0.0);
        for (int a = 0; a < r_; ++a) {
            double s = 0.0;
            for (int b = 0; b < len; ++b) s += leaf_u_[i].at(b, a) * x[off + b];
            xt[node][a] = s;
        }
        if (fc) {
            fc->mults += static_cast<long long>(r_) * len;
            fc->adds += static_cast<long long>(r_) * len;
        }
    }
    for (int p = internal - 1; p >= 1; --p) {
        const int c1 = 2 * p + 1, c2 = 2 * p + 2;
        xt[p].assign(r_, 0.0);
        for (int a = 0; a < r_; ++a) {
            double s = 0.0;
            for (int b = 0; b < r_; ++b) {
                s += trans_r_[p].at(b, a) * xt[c1][b];
                s += trans_r_[p].at(r_ + b, a) * xt[c2][b];
            }
            xt[p][a] = s;
        }
        if (fc) {
            fc->mults += 2LL * r_ * r_;
            fc->adds += 2LL * r_ * r_;
        }
    }
    // sibling interactions
    for (int p = 0; p < internal; ++p) {
        const int c1 = 2 * p + 1, c2 = 2 * p + 2;
        yt[c1].assign(r_, 0.0);
        yt[c2].assign(r_, 0.0);
        for (int a = 0; a < r_; ++a) {
            double s1 = 0.0, s2 = 0.0;
            for (int b = 0; b < r_; ++b) {
                s1 += coup_b_[p].at(a, b) * xt[c2][b]; // B12 x~_c2
                s2 += coup_b_[p].at(b, a) * xt[c1][b]; // B12^T x~_c1
            }
            yt[c1][a] = s1;
            yt[c2][a] = s2;
        }
        if (fc) {
            fc->mults += 2LL * r_ * r_;
            fc->adds += 2LL * r_ * r_;
        }
    }
    // downward: pass accumulated contributions to the children
    for (int p = 1; p < internal; ++p) {
        const int c1 = 2 * p + 1, c2 = 2 * p + 2;
        if (yt[p].empty()) continue;
        for (int b = 0; b < r_; ++b) {
            double s1 = 0.0, s2 = 0.0;
            for (int a = 0; a < r_; ++a) {
                s1 += trans_r_[p].at(b, a) * yt[p][a];
                s2 += trans_r_[p].at(r_ + b, a) * yt[p][a];
            }
            yt[c1][b] += s1;
            yt[c2][b] += s2;
        }
        if (fc) {
            fc->mults += 2LL * r_ * r_;
            fc->adds += 2LL * r_ * r_;
        }
    }
    // leaves: diagonal block plus expanded low-rank contribution
    for (int i = 0; i < leaves; ++i) {
        const int node = leaf_node(i);
        const auto [off, len] = spans_[node];
        for (int a = 0; a < len; ++a) {
            double s = 0.0;
            const double* drow = diag_[i].row(a);
            for (int b = 0; b < len; ++b) s += drow[b] * x[off + b];
            const double* urow = leaf_u_[i].row(a);
            for (int b = 0; b < r_; ++b) s += urow[b] * yt[node][b];
            y[off + a] = s;
        }
        if (fc) {
            fc->mults += static_cast<long long>(len) * (len + r_);
            fc->adds += static_cast<long long>(len) * (len + r_);
        }
    }
}

std::vector<double> HssMatrix::matvec(const std::vector<double>& x, FlopCount* fc) const {
    if (static_cast<int>(x.size()) != n_) throw DimensionMismatch("hss matvec: length");
    std::vector<double> y(n_, 0.0);
    if (levels_ == 0) {
        sketchlra::matvec(diag_[0], x.data(), y.data());
        return y;
    }
    if (nested_) {
        nested_matvec(x, y, fc);
        return y;
    }
    // diagonal blocks
    for (std::size_t i = 0; i < diag_.size(); ++i) {
        const auto [off, len] = spans_[leaf_node(static_cast<int>(i))];
        for (int a = 0; a < len; ++a) {
            double s = 0.0;
            const double* drow = diag_[i].row(a);
            for (int b = 0; b < len; ++b) s += drow[b] * x[off + b];
            y[off + a] = s;
        }
        if (fc) {
            fc->mults += static_cast<long long>(len) * len;
            fc->adds += static_cast<long long>(len) * len;
        }
    }
    flat_matvec(x, y, fc);
    return y;
}

DenseMatrix HssMatrix::reconstruct_dense() const {
    DenseMatrix M(n_, n_);
    for (std::size_t i = 0; i < diag_.size(); ++i) {
        const auto [off, len] = spans_[leaf_node(static_cast<int>(i))];
        M.set_block(off, off, diag_[i]);
    }
    for (const auto& g : gens_) {
        DenseMatrix blk = matmul(g.F, g.H);
        for (int i = 0; i < g.row_len; ++i)
            for (int j = 0; j < g.col_len; ++j)
                M.at(g.row_off + i, g.col_off + j) = blk.at(i, j);
    }
    return M;
}

// ---- serialization -----------------------------------------------------------------

void HssMatrix::save(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ostringstream man;
    man << "n=" << n_ << "\nr=" << r_ << "\nxi=" << xi_ << "\nleaf=" << leaf_
        << "\nlevels=" << levels_ << "\nnested=" << (nested_ ? 1 : 0)
        << "\ngenerators=" << gens_.size() << "\n";
    for (std::size_t g = 0; g < gens_.size(); ++g)
        man << "gen" << g << "=" << gens_[g].row_off << "," << gens_[g].row_len << ","
            << gens_[g].col_off << "," << gens_[g].col_len << "\n";
    write_text_file(dir + "/manifest.txt", man.str());
    for (std::size_t i = 0; i < diag_.size(); ++i)
        write_dmat(dir + "/diag_" + std::to_string(i) + ".dmat", diag_[i]);
    for (std::size_t g = 0; g < gens_.size(); ++g) {
        write_dmat(dir + "/gen_" + std::to_string(g) + "_F.dmat", gens_[g].F);
        write_dmat(dir + "/gen_" + std::to_string(g) + "_H.dmat", gens_[g].H);
    }
    if (nested_) {
        for (std::size_t i = 0; i < leaf_u_.size(); ++i)
            write_dmat(dir + "/u_" + std::to_string(i) + ".dmat", leaf_u_[i]);
        for (std::size_t p = 1; p < trans_r_.size(); ++p)
            write_dmat(dir + "/r_" + std::to_string(p) + ".dmat", trans_r_[p]);
        for (std::size_t p = 0; p < coup_b_.size(); ++p)
            write_dmat(dir + "/b_" + std::to_string(p) + ".dmat", coup_b_[p]);
    }
}

HssMatrix HssMatrix::load(const std::string& dir) {
    KvConfig man = read_kv_file(dir + "/manifest.txt");
    HssMatrix H;
    H.n_ = static_cast<int>(man.get_int("n", 0));
    H.r_ = static_cast<int>(man.get_int("r", 0));
    H.xi_ = man.get_num("xi", 0.0);
    H.leaf_ = static_cast<int>(man.get_int("leaf", 0));
    H.levels_ = static_cast<int>(man.get_int("levels", 0));
    H.nested_ = man.get_int("nested", 0) != 0;
    const int nodes = (2 << H.levels_) - 1;
    H.spans_.resize(nodes);
    H.spans_[0] = {0, H.n_};
    for (int p = 0; p < nodes / 2; ++p) {
        const auto [off, len] = H.spans_[p];
        H.spans_[2 * p + 1] = {off, len / 2};
        H.spans_[2 * p + 2] = {off + len / 2, len - len / 2};
    }
    const int leaves = H.num_leaves();
    H.diag_.resize(leaves);
    for (int i = 0; i < leaves; ++i)
        H.diag_[i] = read_dmat(dir + "/diag_" + std::to_string(i) + ".dmat");
    const int ng = static_cast<int>(man.get_int("generators", 0));
    H.gens_.resize(ng);
    for (int g = 0; g < ng; ++g) {
        auto parts = KvConfig{{{"v", man.get("gen" + std::to_string(g))}}}.get_list("v");
        H.gens_[g].row_off = std::stoi(parts[0]);
        H.gens_[g].row_len = std::stoi(parts[1]);
        H.gens_[g].col_off = std::stoi(parts[2]);
        H.gens_[g].col_len = std::stoi(parts[3]);
        H.gens_[g].F = read_dmat(dir + "/gen_" + std::to_string(g) + "_F.dmat");
        H.gens_[g].H = read_dmat(dir + "/gen_" + std::to_string(g) + "_H.dmat");
    }
    if (H.nested_) {
        const int internal = nodes / 2;
        H.leaf_u_.resize(leaves);
        for (int i = 0; i < leaves; ++i)
            H.leaf_u_[i] = read_dmat(dir + "/u_" + std::to_string(i) + ".dmat");
        H.trans_r_.resize(internal);
        for (int p = 1; p < internal; ++p)
            H.trans_r_[p] = read_dmat(dir + "/r_" + std::to_string(p) + ".dmat");
        H.coup_b_.resize(internal);
        for (int p = 0; p < internal; ++p)
            H.coup_b_[p] = read_dmat(dir + "/b_" + std::to_string(p) + ".dmat");
    }
    return H;
}

// ---- generators of test inputs and CG ----------------------------------------------

DenseMatrix gen_concentrated(int n, int r, double xi, RngStream rng, bool strong) {
    if (r >= n) throw DimensionMismatch("gen_concentrated: r < n required");
    DenseMatrix U = orthogonalize(gaussian_matrix(rng.fork(0), n, n)).Q;
    std::vector<double> lam(n);
    const double center = 1.0;
    if (strong) {
        // the proof construction: the big cluster sits exactly at the center
        for (int i = r; i < n; ++i) lam[i] = center;
        for (int i = 0; i < r; ++i) lam[i] = 2.0 + i; // separated outliers
    } else {
        RngStream s = rng.fork(1);
        for (int i = 0; i < n; ++i) {
            const int cluster = static_cast<int>(s.next_index(r + 1));
            lam[i] = (1.0 + cluster) + xi * s.next_uniform();
        }
    }
    DenseMatrix UD(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) UD.at(i, j) = U.at(i, j) * lam[j];
    return matmul_nt(UD, U);
}

CgResult cg_solve(const std::function<void(const double*, double*)>& apply, int n,
                  const std::vector<double>& b, double tol, int max_iters) {
    CgResult res;
    res.x.assign(n, 0.0);
    std::vector<double> rvec = b, p = b, ap(n);
    double nb = 0.0;
    for (double v : b) nb += v * v;
    nb = std::sqrt(nb);
    if (nb == 0.0) {
        res.converged = true;
        return res;
    }
    double rr = nb * nb;
    res.residual_history.push_back(1.0);
    for (int it = 0; it < max_iters; ++it) {
        apply(p.data(), ap.data());
        double pap = 0.0;
        for (int i = 0; i < n; ++i) pap += p[i] * ap[i];
        if (pap <= 0.0) throw Error("cg_solve: operator is not positive definite");
        const double alpha = rr / pap;
        for (int i = 0; i < n; ++i) {
            res.x[i] += alpha * p[i];
            rvec[i] -= alpha * ap[i];
        }
        double rr_new = 0.0;
        for (double v : rvec) rr_new += v * v;
        res.iterations = it + 1;
        res.residual_history.push_back(std::sqrt(rr_new) / nb);
        if (std::sqrt(rr_new) <= tol * nb) {
            res.converged = true;
            return res;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (int i = 0; i < n; ++i) p[i] = rvec[i] + beta * p[i];
    }
    throw NotConverged("cg_solve: no convergence in " + std::to_string(max_iters) +
                       " iterations");
}

CgResult cg_normal_equations(const DenseMatrix& A, const std::vector<double>& b,
                             double tol, int max_iters, NormalEquations variant) {
    const int m = A.rows(), n = A.cols();
    if (variant == NormalEquations::Error) {
        // A^T A x = A^T b
        std::vector<double> rhs(n);
        matvec_t(A, b.data(), rhs.data());
        std::vector<double> tmp(m);
        auto apply = [&](const double* x, double* y) {
            matvec(A, x, tmp.data());
            matvec_t(A, tmp.data(), y);
        };
        return cg_solve(apply, n, rhs, tol, max_iters);
    }
    // A A^T y = b, x = A^T y
    std::vector<double> tmp(n);
    auto apply = [&](const double* x, double* y) {
        matvec_t(A, x, tmp.data());
        matvec(A, tmp.data(), y);
    };
    CgResult res = cg_solve(apply, m, b, tol, max_iters);
    std::vector<double> x(n);
    matvec_t(A, res.x.data(), x.data());
    res.x = std::move(x);
    return res;
}

AcceleratedCgReport accelerated_cg(const DenseMatrix& M, int r, double xi,
                                   const std::vector<double>& b, double tol,
                                   int max_iters, HssSketch sketch, RngStream rng) {
    const int n = M.rows();
    AcceleratedCgReport rep;
    rep.rank = r;
    rep.xi = xi;
    // compression cost estimate: the sketch product plus per-node projections
    const int l = r + 4;
    rep.compress_flops = gemm_flops(n, l, n) + gemm_flops(r, n, n); // sketch + row images
    HssMatrix H = hss_compress(M, r, xi, sketch, rng);
    FlopCount fc;
    std::vector<double> probe(n, 1.0);
    (void)H.matvec(probe, &fc);
    rep.matvec_flops = fc.total();
    rep.dense_matvec_flops = 2LL * n * n - n;
    auto apply = [&](const double* x, double* y) {
        std::vector<double> xin(x, x + n);
        std::vector<double> out = H.matvec(xin);
        std::copy(out.begin(), out.end(), y);
    };
    rep.cg = cg_solve(apply, n, b, tol, max_iters);
    return rep;
}

} // namespace sketchlra
