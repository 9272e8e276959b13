#include "sketchlra/dense.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace sketchlra {

namespace {

// ---- packed blocked GEMM, row-major, C += A*B ------------------------------

constexpr int MR = 4, NR = 8, KC = 256, MC = 128, NC = 512;

void pack_a(const double* A, int lda, int mc, int kc, double* to) {
    for (int i0 = 0; i0 < mc; i0 += MR) {
        const int mr = std::min(MR, mc - i0);
        for (int p = 0; p < kc; ++p) {
            for (int i = 0; i < mr; ++i) *to++ = A[static_cast<std::size_t>(i0 + i) * lda + p];
            for (int i = mr; i < MR; ++i) *to++ = 0.0;
        }
    }
}

void pack_b(const double* B, int ldb, int kc, int nc, double* to) {
    for (int j0 = 0; j0 < nc; j0 += NR) {
        const int nr = std::min(NR, nc - j0);
        for (int p = 0; p < kc; ++p) {
            for (int j = 0; j < nr; ++j) *to++ = B[static_cast<std::size_t>(p) * ldb + j0 + j];
            for (int j = nr; j < NR; ++j) *to++ = 0.0;
        }
    }
}

void microkernel(int kc, const double* a, const double* b, double* C, int ldc,
                 int mr, int nr) {
    double acc[MR][NR];
    for (int i = 0; i < MR; ++i)
        for (int j = 0; j < NR; ++j) acc[i][j] = 0.0;
    for (int p = 0; p < kc; ++p) {
        const double* bp = b + static_cast<std::size_t>(p) * NR;
        const double* ap = a + static_cast<std::size_t>(p) * MR;
        for (int i = 0; i < MR; ++i) {
            const double ai = ap[i];
            for (int j = 0; j < NR; ++j) acc[i][j] += ai * bp[j];
        }
    }
    for (int i = 0; i < mr; ++i)
        for (int j = 0; j < nr; ++j) C[static_cast<std::size_t>(i) * ldc + j] += acc[i][j];
}

// C (m x n, ldc) += A (m x k, lda) * B (k x n, ldb)
void gemm_accum(int m, int n, int k, const double* A, int lda, const double* B,
                int ldb, double* C, int ldc) {
    if (m == 0 || n == 0 || k == 0) return;
    // small problems: plain loops beat the packing overhead
    if (static_cast<long long>(m) * n * k < 64LL * 64 * 64) {
        for (int i = 0; i < m; ++i) {
            double* ci = C + static_cast<std::size_t>(i) * ldc;
            for (int p = 0; p < k; ++p) {
                const double aip = A[static_cast<std::size_t>(i) * lda + p];
                if (aip == 0.0) continue;
                const double* bp = B + static_cast<std::size_t>(p) * ldb;
                for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
            }
        }
        return;
    }
    std::vector<double> Bp(static_cast<std::size_t>(KC) * NC + 8);
#pragma omp parallel
    {
        std::vector<double> Ap(static_cast<std::size_t>(MC) * KC + 8);
        for (int pc = 0; pc < k; pc += KC) {
            const int kc = std::min(KC, k - pc);
            for (int jc = 0; jc < n; jc += NC) {
                const int nc = std::min(NC, n - jc);
#pragma omp single
                pack_b(B + static_cast<std::size_t>(pc) * ldb + jc, ldb, kc, nc, Bp.data());
#pragma omp for nowait
                for (int ic = 0; ic < m; ic += MC) {
                    const int mc = std::min(MC, m - ic);
                    pack_a(A + static_cast<std::size_t>(ic) * lda + pc, lda, mc, kc, Ap.data());
                    for (int i0 = 0; i0 < mc; i0 += MR) {
                        const int mr = std::min(MR, mc - i0);
                        for (int j0 = 0; j0 < nc; j0 += NR) {
                            const int nr = std::min(NR, nc - j0);
                            microkernel(kc, Ap.data() + static_cast<std::size_t>(i0) * kc,
                                        Bp.data() + static_cast<std::size_t>(j0) * kc,
                                        C + static_cast<std::size_t>(ic + i0) * ldc + jc + j0,
                                        ldc, mr, nr);
                        }
                    }
                }
#pragma omp barrier
            }
        }
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw DimensionMismatch(what);
}

} // namespace

// ---- DenseMatrix ------------------------------------------------------------

DenseMatrix DenseMatrix::identity(int n) {
    DenseMatrix I(n, n);
    for (int i = 0; i < n; ++i) I.at(i, i) = 1.0;
    return I;
}

DenseMatrix DenseMatrix::from_data(int rows, int cols, std::vector<double> data,
                                   bool complex_entries) {
    DenseMatrix M(rows, cols, complex_entries);
    if (data.size() != M.a_.size()) throw DimensionMismatch("from_data: size mismatch");
    M.a_ = std::move(data);
    if (!M.all_finite()) throw Error("from_data: non-finite entry");
    return M;
}

bool DenseMatrix::all_finite() const {
    for (double v : a_)
        if (!std::isfinite(v)) return false;
    return true;
}

DenseMatrix DenseMatrix::to_complex() const {
    if (complex_) return *this;
    DenseMatrix C(rows_, cols_, true);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) C.cset(i, j, cd(at(i, j), 0.0));
    return C;
}

DenseMatrix DenseMatrix::real_part() const {
    if (!complex_) return *this;
    DenseMatrix R(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) R.at(i, j) = cat(i, j).real();
    return R;
}

DenseMatrix DenseMatrix::block(int i0, int j0, int m, int n) const {
    require(i0 >= 0 && j0 >= 0 && i0 + m <= rows_ && j0 + n <= cols_, "block out of range");
    DenseMatrix B(m, n, complex_);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) B.cset(i, j, cat(i0 + i, j0 + j));
    return B;
}

void DenseMatrix::set_block(int i0, int j0, const DenseMatrix& B) {
    require(i0 + B.rows() <= rows_ && j0 + B.cols() <= cols_, "set_block out of range");
    for (int i = 0; i < B.rows(); ++i)
        for (int j = 0; j < B.cols(); ++j) cset(i0 + i, j0 + j, B.cat(i, j));
}

// ---- transpose / add / scale -----------------------------------------------

DenseMatrix transpose(const DenseMatrix& A) {
    DenseMatrix T(A.cols(), A.rows(), A.is_complex());
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j) T.cset(j, i, A.cat(i, j));
    return T;
}

DenseMatrix conj_transpose(const DenseMatrix& A) {
    if (!A.is_complex()) return transpose(A);
    DenseMatrix T(A.cols(), A.rows(), true);
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j) T.cset(j, i, std::conj(A.cat(i, j)));
    return T;
}

DenseMatrix add(const DenseMatrix& A, const DenseMatrix& B) {
    require(A.rows() == B.rows() && A.cols() == B.cols(), "add: shape mismatch");
    const bool cx = A.is_complex() || B.is_complex();
    DenseMatrix C(A.rows(), A.cols(), cx);
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j) C.cset(i, j, A.cat(i, j) + B.cat(i, j));
    return C;
}

DenseMatrix sub(const DenseMatrix& A, const DenseMatrix& B) {
    require(A.rows() == B.rows() && A.cols() == B.cols(), "sub: shape mismatch");
    const bool cx = A.is_complex() || B.is_complex();
    DenseMatrix C(A.rows(), A.cols(), cx);
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j) C.cset(i, j, A.cat(i, j) - B.cat(i, j));
    return C;
}

DenseMatrix scale(const DenseMatrix& A, double s) {
    DenseMatrix C = A;
    for (int i = 0; i < C.rows(); ++i)
        for (int j = 0; j < C.cols(); ++j) C.cset(i, j, C.cat(i, j) * s);
    return C;
}

// ---- matmul -----------------------------------------------------------------

DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B) {
    require(A.cols() == B.rows(), "matmul: inner dimension mismatch");
    if (!A.is_complex() && !B.is_complex()) {
        DenseMatrix C(A.rows(), B.cols());
        gemm_accum(A.rows(), B.cols(), A.cols(), A.data(), A.cols(), B.data(),
                   B.cols(), C.data(), C.cols());
        return C;
    }
    DenseMatrix C(A.rows(), B.cols(), true);
    const int m = A.rows(), n = B.cols(), k = A.cols();
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            const cd aip = A.cat(i, p);
            if (aip == cd(0.0, 0.0)) continue;
            for (int j = 0; j < n; ++j) C.cset(i, j, C.cat(i, j) + aip * B.cat(p, j));
        }
    return C;
}

DenseMatrix matmul_tn(const DenseMatrix& A, const DenseMatrix& B) {
    require(A.rows() == B.rows(), "matmul_tn: dimension mismatch");
    if (!A.is_complex() && !B.is_complex()) {
        // C = A^T B without forming A^T: accumulate rank-1 contributions
        DenseMatrix At = transpose(A);
        DenseMatrix C(A.cols(), B.cols());
        gemm_accum(At.rows(), B.cols(), At.cols(), At.data(), At.cols(), B.data(),
                   B.cols(), C.data(), C.cols());
        return C;
    }
    return matmul(conj_transpose(A), B);
}

DenseMatrix matmul_nt(const DenseMatrix& A, const DenseMatrix& B) {
    require(A.cols() == B.cols(), "matmul_nt: dimension mismatch");
    if (!A.is_complex() && !B.is_complex()) {
        DenseMatrix Bt = transpose(B);
        DenseMatrix C(A.rows(), B.rows());
        gemm_accum(A.rows(), Bt.cols(), A.cols(), A.data(), A.cols(), Bt.data(),
                   Bt.cols(), C.data(), C.cols());
        return C;
    }
    return matmul(A, conj_transpose(B));
}

void matvec(const DenseMatrix& A, const double* x, double* y) {
    const int m = A.rows(), n = A.cols();
    if (!A.is_complex()) {
#pragma omp parallel for schedule(static) if (static_cast<long long>(m) * n > 65536)
        for (int i = 0; i < m; ++i) {
            const double* ai = A.row(i);
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += ai[j] * x[j];
            y[i] = s;
        }
    } else {
#pragma omp parallel for schedule(static) if (static_cast<long long>(m) * n > 32768)
        for (int i = 0; i < m; ++i) {
            const double* ai = A.row(i);
            double sr = 0.0, si = 0.0;
            for (int j = 0; j < n; ++j) {
                const double ar = ai[2 * j], aim = ai[2 * j + 1];
                const double xr = x[2 * j], xi = x[2 * j + 1];
                sr += ar * xr - aim * xi;
                si += ar * xi + aim * xr;
            }
            y[2 * i] = sr;
            y[2 * i + 1] = si;
        }
    }
}

void matvec_t(const DenseMatrix& A, const double* x, double* y) {
    const int m = A.rows(), n = A.cols();
    if (!A.is_complex()) {
        std::fill(y, y + n, 0.0);
        for (int i = 0; i < m; ++i) {
            const double* ai = A.row(i);
            const double xi = x[i];
            if (xi == 0.0) continue;
            for (int j = 0; j < n; ++j) y[j] += ai[j] * xi;
        }
    } else {
        std::fill(y, y + 2 * n, 0.0);
        for (int i = 0; i < m; ++i) {
            const double* ai = A.row(i);
            const double xr = x[2 * i], xi = x[2 * i + 1];
            for (int j = 0; j < n; ++j) {
                const double ar = ai[2 * j], aim = -ai[2 * j + 1]; // conjugate
                y[2 * j] += ar * xr - aim * xi;
                y[2 * j + 1] += ar * xi + aim * xr;
            }
        }
    }
}

DenseMatrix gaussian_matrix(RngStream rng, int m, int n) {
    DenseMatrix G(m, n);
    const std::size_t total = static_cast<std::size_t>(m) * n;
#pragma omp parallel for schedule(static) if (total > 16384)
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            G.at(i, j) = rng.normal_at(static_cast<std::uint64_t>(i) * n + j);
    return G;
}

// ---- norms ------------------------------------------------------------------

double frobenius_norm(const DenseMatrix& A) {
    // scaled accumulation to dodge overflow
    double scale = 0.0, ssq = 1.0;
    const std::size_t total =
        static_cast<std::size_t>(A.rows()) * A.cols() * (A.is_complex() ? 2 : 1);
    const double* p = A.data();
    for (std::size_t k = 0; k < total; ++k) {
        const double v = std::fabs(p[k]);
        if (v == 0.0) continue;
        if (scale < v) {
            ssq = 1.0 + ssq * (scale / v) * (scale / v);
            scale = v;
        } else {
            ssq += (v / scale) * (v / scale);
        }
    }
    return scale * std::sqrt(ssq);
}

double spectral_norm(const DenseMatrix& A) {
    const int m = A.rows(), n = A.cols();
    if (m == 0 || n == 0) return 0.0;
    const double nf = frobenius_norm(A);
    if (nf == 0.0) return 0.0;
    const int nsc = A.is_complex() ? 2 : 1;
    RngStream rng(0x5ca1ab1e, 17);
    std::vector<double> v(static_cast<std::size_t>(n) * nsc), w(static_cast<std::size_t>(m) * nsc);
    for (auto& x : v) x = rng.next_normal();
    auto norm2 = [](const std::vector<double>& z) {
        double s = 0.0;
        for (double t : z) s += t * t;
        return std::sqrt(s);
    };
    double est = 0.0, prev = -1.0;
    const int max_iter = 300;
    for (int it = 0; it < max_iter; ++it) {
        double nv = norm2(v);
        if (nv == 0.0) { v[0] = 1.0; nv = 1.0; }
        for (auto& x : v) x /= nv;
        matvec(A, v.data(), w.data());
        est = norm2(w);
        if (est == 0.0) return 0.0;
        matvec_t(A, w.data(), v.data());
        if (it > 4 && std::fabs(est - prev) <= 1e-10 * est) return est;
        prev = est;
    }
    // slow spectral gap: fall back to the SVD oracle
    std::vector<double> sv = singular_values(A);
    return sv.empty() ? est : sv.front();
}

double condition_number(const DenseMatrix& A) {
    SvdFactors f = svd(A);
    if (f.sigma.empty()) return std::numeric_limits<double>::infinity();
    return f.sigma.front() / f.sigma.back();
}

double default_rank_tol(const DenseMatrix& A, double sigma1) {
    return std::max(A.rows(), A.cols()) * std::numeric_limits<double>::epsilon() * sigma1;
}

int numerical_rank(const DenseMatrix& A, double xi) {
    if (xi <= 0.0) throw Error("numerical_rank: xi must be positive");
    std::vector<double> sv = singular_values(A);
    int r = 0;
    for (double s : sv)
        if (s > xi) ++r;
    return r;
}

// ---- orthogonalize ----------------------------------------------------------

namespace {

// complex modified Gram-Schmidt with one reorthogonalization pass
OrthResult orth_complex(const DenseMatrix& A) {
    const int m = A.rows(), l = A.cols();
    std::vector<std::vector<cd>> q(l, std::vector<cd>(m));
    for (int j = 0; j < l; ++j)
        for (int i = 0; i < m; ++i) q[j][i] = A.cat(i, j);

    OrthResult out;
    out.Q = DenseMatrix(m, l, true);
    double max_norm = 0.0;
    for (int j = 0; j < l; ++j) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += std::norm(q[j][i]);
        max_norm = std::max(max_norm, std::sqrt(s));
    }
    const double tol = std::max(m, l) * std::numeric_limits<double>::epsilon() * max_norm;

    int eff = 0;
    for (int j = 0; j < l; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (int k = 0; k < j; ++k) {
                cd h(0.0, 0.0);
                for (int i = 0; i < m; ++i) h += std::conj(q[k][i]) * q[j][i];
                for (int i = 0; i < m; ++i) q[j][i] -= h * q[k][i];
            }
        }
        double nj = 0.0;
        for (int i = 0; i < m; ++i) nj += std::norm(q[j][i]);
        nj = std::sqrt(nj);
        if (nj <= tol) {
            out.reduced_rank = true;
            // substitute a fixed pseudo-random direction (see qr_panel)
            RngStream filler(0x0f111e5, static_cast<std::uint64_t>(j));
            for (int i = 0; i < m; ++i)
                q[j][i] = cd(filler.normal_at(2 * i), filler.normal_at(2 * i + 1));
            for (int pass = 0; pass < 2; ++pass)
                for (int k = 0; k < j; ++k) {
                    cd h(0.0, 0.0);
                    for (int i = 0; i < m; ++i) h += std::conj(q[k][i]) * q[j][i];
                    for (int i = 0; i < m; ++i) q[j][i] -= h * q[k][i];
                }
            nj = 0.0;
            for (int i = 0; i < m; ++i) nj += std::norm(q[j][i]);
            nj = std::sqrt(nj);
        } else {
            ++eff;
        }
        for (int i = 0; i < m; ++i) q[j][i] /= nj;
        for (int i = 0; i < m; ++i) out.Q.cset(i, j, q[j][i]);
    }
    out.effective_rank = eff;
    return out;
}

} // namespace

namespace {

// Householder panel factorization of columns [j0, j0+nb) of R, rows j0..m.
// Reflector vectors stay below the diagonal (v0 = 1 implicit).
void qr_panel(DenseMatrix& R, int m, int j0, int nb, double tol,
              std::vector<double>& tau, bool& reduced, int& eff) {
    for (int j = j0; j < j0 + nb; ++j) {
        double xnorm = 0.0;
        for (int i = j; i < m; ++i) xnorm += R.at(i, j) * R.at(i, j);
        xnorm = std::sqrt(xnorm);
        bool filler_col = false;
        if (xnorm <= tol) {
            // numerically dependent column: substitute a fixed pseudo-random
            // direction so the output basis stays orthonormal without favoring
            // any canonical axis
            reduced = true;
            filler_col = true;
            RngStream filler(0x0f111e5, static_cast<std::uint64_t>(j));
            for (int i = j; i < m; ++i) R.at(i, j) = filler.normal_at(i);
            xnorm = 0.0;
            for (int i = j; i < m; ++i) xnorm += R.at(i, j) * R.at(i, j);
            xnorm = std::sqrt(xnorm);
        }
        {
            if (!filler_col) ++eff;
            const double alpha = R.at(j, j);
            const double beta = (alpha >= 0.0) ? -xnorm : xnorm;
            const double v0 = alpha - beta;
            tau[j] = -v0 / beta;
            const double inv_v0 = 1.0 / v0;
            R.at(j, j) = beta;
            for (int i = j + 1; i < m; ++i) R.at(i, j) *= inv_v0;
        }
        // apply reflector to the rest of the panel
        for (int c = j + 1; c < j0 + nb; ++c) {
            if (tau[j] == 0.0) break;
            double s = R.at(j, c);
            for (int i = j + 1; i < m; ++i) s += R.at(i, j) * R.at(i, c);
            s *= tau[j];
            R.at(j, c) -= s;
            for (int i = j + 1; i < m; ++i) R.at(i, c) -= s * R.at(i, j);
        }
    }
}

// compact WY factor T for panel [j0, j0+nb): H_{j0}...H_{j0+nb-1} = I - V T V^T
void build_wy_t(const DenseMatrix& R, int m, int j0, int nb,
                const std::vector<double>& tau, std::vector<double>& T) {
    T.assign(static_cast<std::size_t>(nb) * nb, 0.0);
    for (int k = 0; k < nb; ++k) {
        const int jk = j0 + k;
        T[static_cast<std::size_t>(k) * nb + k] = tau[jk];
        if (tau[jk] == 0.0) continue;
        // w = V_{0:k}^T v_k  (v's unit-lower, stored below diagonal)
        std::vector<double> w(k, 0.0);
        for (int c = 0; c < k; ++c) {
            const int jc = j0 + c;
            double s = (jk < m) ? R.at(jk, jc) : 0.0; // v_c entry at row jk
            for (int i = jk + 1; i < m; ++i) s += R.at(i, jc) * R.at(i, jk);
            w[c] = s;
        }
        for (int r = 0; r < k; ++r) {
            double s = 0.0;
            for (int c = r; c < k; ++c) s += T[static_cast<std::size_t>(r) * nb + c] * w[c];
            T[static_cast<std::size_t>(r) * nb + k] = -tau[jk] * s;
        }
    }
}

// C(rows j0.., cols [c0, c1)) <- (I - V T' V^T) C, with trans selecting T or T^T.
// Streams C row-major in column tiles; V is unit lower, stored in R below the
// panel diagonal.
void apply_wy(DenseMatrix& C, const DenseMatrix& R, int m, int j0, int nb,
              const std::vector<double>& T, bool transpose_t, int c0, int c1) {
    if (c1 <= c0) return;
    const int TILE = 192;
#pragma omp parallel for schedule(dynamic, 1)
    for (int t0 = c0; t0 < c1; t0 += TILE) {
        const int t1 = std::min(c1, t0 + TILE);
        const int w = t1 - t0;
        std::vector<double> W(static_cast<std::size_t>(nb) * w, 0.0);
        std::vector<double> TW(static_cast<std::size_t>(nb) * w, 0.0);
        // W = V^T C
        for (int i = j0; i < m; ++i) {
            const double* vrow = R.row(i) + j0;
            const double* crow = C.row(i) + t0;
            const int kmax = std::min(nb, i - j0 + 1);
            for (int k = 0; k < kmax; ++k) {
                const double vik = (k == i - j0) ? 1.0 : vrow[k];
                if (vik == 0.0) continue;
                double* wk = W.data() + static_cast<std::size_t>(k) * w;
                for (int c = 0; c < w; ++c) wk[c] += vik * crow[c];
            }
        }
        // TW = T' W
        for (int r = 0; r < nb; ++r)
            for (int k = 0; k < nb; ++k) {
                const double t = transpose_t ? T[static_cast<std::size_t>(k) * nb + r]
                                             : T[static_cast<std::size_t>(r) * nb + k];
                if (t == 0.0) continue;
                const double* wk = W.data() + static_cast<std::size_t>(k) * w;
                double* twr = TW.data() + static_cast<std::size_t>(r) * w;
                for (int c = 0; c < w; ++c) twr[c] += t * wk[c];
            }
        // C <- C - V TW
        for (int i = j0; i < m; ++i) {
            const double* vrow = R.row(i) + j0;
            double* crow = C.row(i) + t0;
            const int kmax = std::min(nb, i - j0 + 1);
            for (int k = 0; k < kmax; ++k) {
                const double vik = (k == i - j0) ? 1.0 : vrow[k];
                if (vik == 0.0) continue;
                const double* twk = TW.data() + static_cast<std::size_t>(k) * w;
                for (int c = 0; c < w; ++c) crow[c] -= vik * twk[c];
            }
        }
    }
}

} // namespace

OrthResult orthogonalize(const DenseMatrix& A) {
    const int m = A.rows(), l = A.cols();
    if (m < l) throw DimensionMismatch("orthogonalize: requires rows >= cols");
    if (l == 0) return {DenseMatrix(m, 0), false, 0};
    if (A.is_complex()) return orth_complex(A);

    DenseMatrix R = A;
    std::vector<double> tau(l, 0.0);
    const double tol = std::max(m, l) * std::numeric_limits<double>::epsilon() *
                       frobenius_norm(A);

    OrthResult out;
    const int NB = 48;
    std::vector<double> T;
    std::vector<std::vector<double>> panel_t;
    std::vector<int> panel_j0, panel_nb;

    for (int j0 = 0; j0 < l; j0 += NB) {
        const int nb = std::min(NB, l - j0);
        qr_panel(R, m, j0, nb, tol, tau, out.reduced_rank, out.effective_rank);
        build_wy_t(R, m, j0, nb, tau, T);
        apply_wy(R, R, m, j0, nb, T, true, j0 + nb, l); // trailing update with T^T
        panel_t.push_back(T);
        panel_j0.push_back(j0);
        panel_nb.push_back(nb);
    }

    // Q = H_0 H_1 ... H_{l-1} [I_l; 0], panels applied back to front
    DenseMatrix Q(m, l);
    for (int j = 0; j < l; ++j) Q.at(j, j) = 1.0;
    for (int p = static_cast<int>(panel_j0.size()) - 1; p >= 0; --p)
        apply_wy(Q, R, m, panel_j0[p], panel_nb[p], panel_t[p], false,
                 panel_j0[p], l);
    out.Q = std::move(Q);
    return out;
}

// ---- pseudo inverse / perturbation ------------------------------------------

DenseMatrix pseudo_inverse(const DenseMatrix& A) {
    if (A.is_complex()) throw Error("pseudo_inverse: real matrices only");
    SvdFactors f = svd(A);
    const int rho = static_cast<int>(f.sigma.size());
    DenseMatrix TS(A.cols(), rho);
    for (int i = 0; i < A.cols(); ++i)
        for (int j = 0; j < rho; ++j) TS.at(i, j) = f.T.at(i, j) / f.sigma[j];
    return matmul_nt(TS, f.S);
}

InversePerturbationReport inverse_perturbation_check(const DenseMatrix& C,
                                                     const DenseMatrix& E) {
    if (C.rows() != C.cols() || E.rows() != E.cols() || C.rows() != E.rows())
        throw DimensionMismatch("inverse_perturbation_check: need equal square shapes");
    DenseMatrix Cinv = pseudo_inverse(C);
    InversePerturbationReport rep;
    rep.theta = spectral_norm(matmul(Cinv, E));
    if (rep.theta >= 1.0) throw ThetaTooLarge("inverse_perturbation_check: theta >= 1");
    DenseMatrix CEinv = pseudo_inverse(add(C, E));
    rep.lhs = spectral_norm(sub(CEinv, Cinv));
    rep.bound = rep.theta / (1.0 - rep.theta) * spectral_norm(Cinv);
    rep.holds = rep.lhs <= rep.bound + 1e-12 * rep.bound + 1e-15;
    return rep;
}

} // namespace sketchlra
