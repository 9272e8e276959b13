#ifndef SKETCHLRA_DETAIL_JACOBI_HPP
#define SKETCHLRA_DETAIL_JACOBI_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "sketchlra/error.hpp"

namespace sketchlra::detail {

// One-sided Jacobi SVD of a tall matrix given as n rows of length m
// (i.e. columns of the m x n input, stored contiguously). Rotates row
// pairs until all mutual inner products are negligible. High relative
// accuracy for the small singular values, which the verification
// oracles rely on.
//
// On return: w[j] = sigma_j * s_j (left vectors scaled), v[j] = right
// vectors, both sorted by decreasing sigma. Returns sigma.
template <typename T>
std::vector<T> jacobi_svd_rows(std::vector<std::vector<T>>& w,
                               std::vector<std::vector<T>>& v,
                               bool accumulate_v) {
    const int n = static_cast<int>(w.size());
    const std::size_t m = n ? w[0].size() : 0;
    // dimension-scaled threshold: the strict eps criterion can cycle on
    // structured inputs while rotations reintroduce ulp-level correlations
    const T eps = std::numeric_limits<T>::epsilon() *
                  std::sqrt(static_cast<T>(std::max<std::size_t>(m, 1)));

    if (accumulate_v) {
        v.assign(n, std::vector<T>(n, T(0)));
        for (int j = 0; j < n; ++j) v[j][j] = T(1);
    }

    std::vector<T> sq(n);
    T maxsq = T(0);
    for (int j = 0; j < n; ++j) {
        sq[j] = std::inner_product(w[j].begin(), w[j].end(), w[j].begin(), T(0));
        maxsq = std::max(maxsq, sq[j]);
    }
    // columns this small carry no reliable direction; leave them alone
    const T negligible = maxsq * eps * eps * T(m);

    const int max_sweeps = 60;
    bool converged = false;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        converged = true;
        for (int j = 0; j < n; ++j)
            sq[j] = std::inner_product(w[j].begin(), w[j].end(), w[j].begin(), T(0));
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const T app = sq[p], aqq = sq[q];
                if (app <= negligible || aqq <= negligible) continue;
                T apq = std::inner_product(w[p].begin(), w[p].end(), w[q].begin(), T(0));
                const T denom = std::sqrt(app * aqq);
                if (std::abs(apq) <= eps * denom) continue;
                converged = false;
                const T zeta = (aqq - app) / (T(2) * apq);
                const T t = (zeta >= T(0) ? T(1) : T(-1)) /
                            (std::abs(zeta) + std::sqrt(T(1) + zeta * zeta));
                const T cs = T(1) / std::sqrt(T(1) + t * t);
                const T sn = cs * t;
                T* wp = w[p].data();
                T* wq = w[q].data();
                for (std::size_t i = 0; i < m; ++i) {
                    const T a = wp[i], b = wq[i];
                    wp[i] = cs * a - sn * b;
                    wq[i] = sn * a + cs * b;
                }
                sq[p] = app - t * apq;
                sq[q] = aqq + t * apq;
                if (accumulate_v) {
                    T* vp = v[p].data();
                    T* vq = v[q].data();
                    for (int i = 0; i < n; ++i) {
                        const T a = vp[i], b = vq[i];
                        vp[i] = cs * a - sn * b;
                        vq[i] = sn * a + cs * b;
                    }
                }
            }
        }
    }
    if (!converged) throw NoConvergence("jacobi_svd: sweep cap reached");

    std::vector<T> sigma(n);
    for (int j = 0; j < n; ++j)
        sigma[j] = std::sqrt(
            std::inner_product(w[j].begin(), w[j].end(), w[j].begin(), T(0)));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return sigma[a] > sigma[b]; });
    std::vector<T> sig_sorted(n);
    std::vector<std::vector<T>> w_sorted(n), v_sorted;
    if (accumulate_v) v_sorted.resize(n);
    for (int j = 0; j < n; ++j) {
        sig_sorted[j] = sigma[order[j]];
        w_sorted[j] = std::move(w[order[j]]);
        if (accumulate_v) v_sorted[j] = std::move(v[order[j]]);
    }
    w = std::move(w_sorted);
    if (accumulate_v) v = std::move(v_sorted);
    return sig_sorted;
}

} // namespace sketchlra::detail

#endif
