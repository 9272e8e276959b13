#include <algorithm>
#include <cmath>
#include <limits>

#include "sketchlra/dense.hpp"
#include "sketchlra/detail/jacobi.hpp"

namespace sketchlra {

namespace {

constexpr int kJacobiMaxCols = 512; // one-sided Jacobi below, bidiag QR above

struct FullSvd {
    DenseMatrix U;              // m x k, k = min(m,n)
    std::vector<double> sigma;  // length k, non-increasing, >= 0
    DenseMatrix V;              // n x k
};

FullSvd svd_jacobi(const DenseMatrix& A) {
    const int m = A.rows(), n = A.cols();
    std::vector<std::vector<double>> w(n, std::vector<double>(m));
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) w[j][i] = A.at(i, j);
    std::vector<std::vector<double>> v;
    std::vector<double> sigma = detail::jacobi_svd_rows(w, v, true);

    FullSvd f;
    f.sigma = sigma;
    f.U = DenseMatrix(m, n);
    f.V = DenseMatrix(n, n);
    for (int j = 0; j < n; ++j) {
        if (sigma[j] > 0.0) {
            const double inv = 1.0 / sigma[j];
            for (int i = 0; i < m; ++i) f.U.at(i, j) = w[j][i] * inv;
        } else {
            f.U.at(j % m, j) = 1.0; // placeholder for a null direction
        }
        for (int i = 0; i < n; ++i) f.V.at(i, j) = v[j][i];
    }
    return f;
}

// ---- Golub-Kahan: bidiagonalization + implicit-shift QR iteration ----------

struct Rotation { double c, s; };

inline Rotation make_rot(double a, double b, double& r) {
    if (b == 0.0) { r = a; return {1.0, 0.0}; }
    if (a == 0.0) { r = b; return {0.0, 1.0}; }
    const double h = std::hypot(a, b);
    r = h;
    return {a / h, b / h};
}

// rows of X are the vectors being rotated (X stores the transpose)
inline void rotate_rows(std::vector<std::vector<double>>& X, int p, int q,
                        double c, double s) {
    double* xp = X[p].data();
    double* xq = X[q].data();
    const std::size_t len = X[p].size();
    for (std::size_t i = 0; i < len; ++i) {
        const double a = xp[i], b = xq[i];
        xp[i] = c * a + s * b;
        xq[i] = -s * a + c * b;
    }
}

FullSvd svd_golub_kahan(const DenseMatrix& A) {
    const int m = A.rows(), n = A.cols(); // m >= n
    DenseMatrix B = A;
    std::vector<double> taul(n, 0.0), taur(n, 0.0);

    // Householder bidiagonalization
    for (int j = 0; j < n; ++j) {
        double xnorm = 0.0;
        for (int i = j; i < m; ++i) xnorm += B.at(i, j) * B.at(i, j);
        xnorm = std::sqrt(xnorm);
        if (xnorm > 0.0) {
            const double alpha = B.at(j, j);
            const double beta = (alpha >= 0.0) ? -xnorm : xnorm;
            const double v0 = alpha - beta;
            taul[j] = -v0 / beta;
            B.at(j, j) = beta;
            const double inv = 1.0 / v0;
            for (int i = j + 1; i < m; ++i) B.at(i, j) *= inv;
#pragma omp parallel for schedule(static) if ((m - j) * (n - j) > 65536)
            for (int c = j + 1; c < n; ++c) {
                double sdot = B.at(j, c);
                for (int i = j + 1; i < m; ++i) sdot += B.at(i, j) * B.at(i, c);
                sdot *= taul[j];
                B.at(j, c) -= sdot;
                for (int i = j + 1; i < m; ++i) B.at(i, c) -= sdot * B.at(i, j);
            }
        }
        if (j < n - 2) {
            double ynorm = 0.0;
            for (int c = j + 1; c < n; ++c) ynorm += B.at(j, c) * B.at(j, c);
            ynorm = std::sqrt(ynorm);
            if (ynorm > 0.0) {
                const double alpha = B.at(j, j + 1);
                const double beta = (alpha >= 0.0) ? -ynorm : ynorm;
                const double v0 = alpha - beta;
                taur[j] = -v0 / beta;
                B.at(j, j + 1) = beta;
                const double inv = 1.0 / v0;
                for (int c = j + 2; c < n; ++c) B.at(j, c) *= inv;
#pragma omp parallel for schedule(static) if ((m - j) * (n - j) > 65536)
                for (int i = j + 1; i < m; ++i) {
                    double sdot = B.at(i, j + 1);
                    for (int c = j + 2; c < n; ++c) sdot += B.at(j, c) * B.at(i, c);
                    sdot *= taur[j];
                    B.at(i, j + 1) -= sdot;
                    for (int c = j + 2; c < n; ++c) B.at(i, c) -= sdot * B.at(j, c);
                }
            }
        }
    }

    std::vector<double> d(n), e(n, 0.0);
    for (int j = 0; j < n; ++j) {
        d[j] = B.at(j, j);
        if (j + 1 < n) e[j] = B.at(j, j + 1);
    }

    // accumulate U (m x n) and V (n x n) from the reflectors; store transposed
    // so Givens updates touch contiguous rows
    std::vector<std::vector<double>> Ut(n, std::vector<double>(m, 0.0));
    std::vector<std::vector<double>> Vt(n, std::vector<double>(n, 0.0));
    {
        DenseMatrix Q(m, n);
        for (int j = 0; j < n; ++j) Q.at(j, j) = 1.0;
        for (int j = n - 1; j >= 0; --j) {
            if (taul[j] == 0.0) continue;
            for (int c = j; c < n; ++c) {
                double sdot = Q.at(j, c);
                for (int i = j + 1; i < m; ++i) sdot += B.at(i, j) * Q.at(i, c);
                sdot *= taul[j];
                Q.at(j, c) -= sdot;
                for (int i = j + 1; i < m; ++i) Q.at(i, c) -= sdot * B.at(i, j);
            }
        }
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < m; ++i) Ut[j][i] = Q.at(i, j);

        DenseMatrix P = DenseMatrix::identity(n);
        for (int j = n - 3; j >= 0; --j) {
            if (taur[j] == 0.0) continue;
            for (int c = j + 1; c < n; ++c) {
                double sdot = P.at(j + 1, c);
                for (int i = j + 2; i < n; ++i) sdot += B.at(j, i) * P.at(i, c);
                sdot *= taur[j];
                P.at(j + 1, c) -= sdot;
                for (int i = j + 2; i < n; ++i) P.at(i, c) -= sdot * B.at(j, i);
            }
        }
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) Vt[j][i] = P.at(i, j);
    }

    // implicit-shift QR on the bidiagonal (d, e)
    const double eps = std::numeric_limits<double>::epsilon();
    int iter_budget = 60 * n;
    int hi = n - 1;
    while (hi > 0) {
        if (--iter_budget < 0) throw NoConvergence("bidiagonal QR: iteration cap");
        if (std::abs(e[hi - 1]) <= eps * (std::abs(d[hi - 1]) + std::abs(d[hi]))) {
            e[hi - 1] = 0.0;
            --hi;
            continue;
        }
        int lo = hi;
        while (lo > 0 &&
               std::abs(e[lo - 1]) > eps * (std::abs(d[lo - 1]) + std::abs(d[lo])))
            --lo;
        if (lo > 0) e[lo - 1] = 0.0;

        // a zero diagonal inside the block: rotate its row away to split
        bool zero_diag = false;
        for (int k = lo; k < hi; ++k) {
            const double neigh = std::abs(e[k]) + (k > lo ? std::abs(e[k - 1]) : 0.0);
            if (std::abs(d[k]) <= eps * neigh) {
                d[k] = 0.0;
                double f = e[k];
                e[k] = 0.0;
                for (int i = k + 1; i <= hi; ++i) {
                    double r;
                    const Rotation g = make_rot(d[i], f, r);
                    d[i] = r;
                    rotate_rows(Ut, i, k, g.c, g.s);
                    if (i < hi) {
                        f = -g.s * e[i];
                        e[i] = g.c * e[i];
                    }
                }
                zero_diag = true;
                break;
            }
        }
        if (zero_diag) continue;

        // Wilkinson shift from the trailing 2x2 of B^T B
        const double dm = d[hi - 1], dn = d[hi];
        const double em = e[hi - 1], el = (hi - 1 > lo) ? e[hi - 2] : 0.0;
        const double tmm = dm * dm + el * el;
        const double tnn = dn * dn + em * em;
        const double tmn = dm * em;
        const double tr = tmm + tnn, det = tmm * tnn - tmn * tmn;
        const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
        const double mu1 = tr / 2.0 - disc, mu2 = tr / 2.0 + disc;
        const double mu = (std::abs(tnn - mu1) <= std::abs(tnn - mu2)) ? mu1 : mu2;

        // bulge chase
        double y = d[lo] * d[lo] - mu;
        double z = d[lo] * e[lo];
        for (int k = lo; k < hi; ++k) {
            double r;
            Rotation rot = make_rot(y, z, r); // right rotation, columns (k, k+1)
            if (k > lo) e[k - 1] = r;
            const double f = rot.c * d[k] + rot.s * e[k];
            e[k] = -rot.s * d[k] + rot.c * e[k];
            const double z1 = rot.s * d[k + 1];
            d[k + 1] = rot.c * d[k + 1];
            rotate_rows(Vt, k, k + 1, rot.c, rot.s);

            rot = make_rot(f, z1, r); // left rotation, rows (k, k+1)
            d[k] = r;
            const double enew = rot.c * e[k] + rot.s * d[k + 1];
            d[k + 1] = -rot.s * e[k] + rot.c * d[k + 1];
            e[k] = enew;
            if (k < hi - 1) {
                z = rot.s * e[k + 1];
                e[k + 1] = rot.c * e[k + 1];
                y = e[k];
            }
            rotate_rows(Ut, k, k + 1, rot.c, rot.s);
        }
    }

    // signs and ordering
    std::vector<int> order(n);
    for (int j = 0; j < n; ++j) {
        if (d[j] < 0.0) {
            d[j] = -d[j];
            for (double& x : Ut[j]) x = -x;
        }
        order[j] = j;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return d[a] > d[b]; });

    FullSvd fsv;
    fsv.sigma.resize(n);
    fsv.U = DenseMatrix(m, n);
    fsv.V = DenseMatrix(n, n);
    for (int j = 0; j < n; ++j) {
        const int o = order[j];
        fsv.sigma[j] = d[o];
        for (int i = 0; i < m; ++i) fsv.U.at(i, j) = Ut[o][i];
        for (int i = 0; i < n; ++i) fsv.V.at(i, j) = Vt[o][i];
    }
    return fsv;
}

FullSvd full_svd(const DenseMatrix& A) {
    if (A.is_complex()) throw Error("svd: real matrices only");
    if (!A.all_finite()) throw Error("svd: non-finite entry");
    if (A.rows() < A.cols()) {
        FullSvd f = full_svd(transpose(A));
        std::swap(f.U, f.V);
        return f;
    }
    if (A.cols() == 0) return {DenseMatrix(A.rows(), 0), {}, DenseMatrix(0, 0)};
    return (A.cols() <= kJacobiMaxCols) ? svd_jacobi(A) : svd_golub_kahan(A);
}

} // namespace

std::vector<double> singular_values(const DenseMatrix& A) {
    if (A.is_complex()) throw Error("singular_values: real matrices only");
    if (A.rows() == 0 || A.cols() == 0) return {};
    if (A.rows() < A.cols()) return singular_values(transpose(A));
    if (A.cols() <= kJacobiMaxCols) {
        std::vector<std::vector<double>> w(A.cols(), std::vector<double>(A.rows()));
        for (int j = 0; j < A.cols(); ++j)
            for (int i = 0; i < A.rows(); ++i) w[j][i] = A.at(i, j);
        std::vector<std::vector<double>> v;
        return detail::jacobi_svd_rows(w, v, false);
    }
    return full_svd(A).sigma;
}

SvdFactors svd(const DenseMatrix& A, double rank_tol) {
    FullSvd f = full_svd(A);
    int rho = 0;
    while (rho < static_cast<int>(f.sigma.size()) && f.sigma[rho] > rank_tol) ++rho;
    SvdFactors out;
    out.sigma.assign(f.sigma.begin(), f.sigma.begin() + rho);
    out.S = f.U.columns(0, rho);
    out.T = f.V.columns(0, rho);
    return out;
}

SvdFactors svd(const DenseMatrix& A) {
    FullSvd f = full_svd(A);
    const double sigma1 = f.sigma.empty() ? 0.0 : f.sigma.front();
    const double tol = default_rank_tol(A, sigma1);
    int rho = 0;
    while (rho < static_cast<int>(f.sigma.size()) && f.sigma[rho] > tol) ++rho;
    SvdFactors out;
    out.sigma.assign(f.sigma.begin(), f.sigma.begin() + rho);
    out.S = f.U.columns(0, rho);
    out.T = f.V.columns(0, rho);
    return out;
}

} // namespace sketchlra
