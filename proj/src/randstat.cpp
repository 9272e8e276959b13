#include "sketchlra/randstat.hpp"

#include <algorithm>
#include <cmath>

namespace sketchlra {

NormSample sample_norms(RngStream rng, int m, int n) {
    DenseMatrix G = gaussian_matrix(rng, m, n);
    std::vector<double> sv = singular_values(G);
    NormSample s;
    s.m = m;
    s.n = n;
    s.nu = sv.front();
    s.nu_plus = 1.0 / sv.back();
    s.nu_f = frobenius_norm(G);
    return s;
}

FullRankReport full_rank_check(RngStream rng, int m, int n, int r, int trials) {
    if (r > std::min(m, n)) throw DimensionMismatch("full_rank_check: r too large");
    FullRankReport rep;
    rep.trials = trials;
    // fixed full-rank A: truncated identity
    DenseMatrix A(m, n);
    for (int i = 0; i < std::min(m, n); ++i) A.at(i, i) = 1.0;
    for (int t = 0; t < trials; ++t) {
        DenseMatrix F = gaussian_matrix(rng.fork(2 * t), r, m);
        DenseMatrix H = gaussian_matrix(rng.fork(2 * t + 1), n, r);
        DenseMatrix FA = matmul(F, A);
        DenseMatrix AH = matmul(A, H);
        std::vector<double> s1 = singular_values(FA);
        std::vector<double> s2 = singular_values(AH);
        const double tol1 = default_rank_tol(FA, s1.front());
        const double tol2 = default_rank_tol(AH, s2.front());
        if (s1[r - 1] <= tol1 || s2[r - 1] <= tol2) ++rep.failures;
    }
    return rep;
}

FullRankReport full_rank_check_pm1(RngStream rng, int m, int n, int r, int trials) {
    FullRankReport rep;
    rep.trials = trials;
    DenseMatrix A(m, n);
    for (int i = 0; i < std::min(m, n); ++i) A.at(i, i) = 1.0;
    for (int t = 0; t < trials; ++t) {
        RngStream s = rng.fork(t);
        DenseMatrix H(n, r);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < r; ++j) H.at(i, j) = s.next_sign();
        DenseMatrix AH = matmul(A, H);
        std::vector<double> sv = singular_values(AH);
        if (sv[r - 1] <= default_rank_tol(AH, sv.front())) ++rep.failures;
    }
    return rep;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t na = a.size(), nb = b.size();
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < na && j < nb) {
        if (a[i] <= b[j]) ++i;
        else ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na -
                                  static_cast<double>(j) / nb));
    }
    return d;
}

RotationReport rotational_invariance_check(RngStream rng, int k, int m, int n,
                                           int trials) {
    if (k > m) throw DimensionMismatch("rotational_invariance_check: k > m");
    // fixed orthogonal S from the QR of a Gaussian sample
    DenseMatrix S = transpose(orthogonalize(gaussian_matrix(rng.fork(0), m, k)).Q);
    std::vector<double> rotated, fresh;
    rotated.reserve(static_cast<std::size_t>(trials) * k * n);
    fresh.reserve(rotated.capacity());
    for (int t = 0; t < trials; ++t) {
        DenseMatrix G = gaussian_matrix(rng.fork(2 * t + 1), m, n);
        DenseMatrix SG = matmul(S, G);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < n; ++j) rotated.push_back(SG.at(i, j));
        DenseMatrix Gf = gaussian_matrix(rng.fork(2 * t + 2), k, n);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < n; ++j) fresh.push_back(Gf.at(i, j));
    }
    RotationReport rep;
    rep.ks_statistic = ks_two_sample(rotated, fresh);
    const double ntot = static_cast<double>(rotated.size());
    // 0.999 quantile: c(alpha) = sqrt(-ln(alpha/2)/2), alpha = 0.001
    rep.threshold = std::sqrt(-std::log(0.0005) / 2.0) * std::sqrt(2.0 / ntot);
    rep.passes = rep.ks_statistic <= rep.threshold;
    return rep;
}

NormStatistics norm_statistics(RngStream rng, int m, int n, int trials,
                               double nu_plus_slack) {
    if (trials < 30) throw Error("norm_statistics: needs at least 30 trials");
    NormStatistics rep;
    rep.m = m;
    rep.n = n;
    rep.trials = trials;
    double sum_nu = 0.0, sum_plus = 0.0;
    for (int t = 0; t < trials; ++t) {
        NormSample s = sample_norms(rng.fork(t), m, n);
        sum_nu += s.nu;
        sum_plus += s.nu_plus;
    }
    rep.mean_nu = sum_nu / trials;
    rep.mean_nu_plus = sum_plus / trials;
    rep.bound_nu = 1.0 + std::sqrt(static_cast<double>(m)) + std::sqrt(static_cast<double>(n));
    rep.nu_ok = rep.mean_nu < rep.bound_nu;
    if (m != n) {
        const double e = 2.718281828459045;
        rep.bound_nu_plus =
            e * std::sqrt(static_cast<double>(std::max(m, n))) / std::abs(m - n) *
            nu_plus_slack;
        rep.nu_plus_asserted = true;
        rep.nu_plus_ok = rep.mean_nu_plus < rep.bound_nu_plus;
    } else {
        // expectation undefined for square Gaussian; report the tail bound
        // P(nu+ >= x) <= 2.35 sqrt(n)/x at a probe point instead
        rep.nu_plus_asserted = false;
        rep.nu_plus_ok = true;
        const double x = 10.0 * std::sqrt(static_cast<double>(n));
        rep.tail_bound_square = 2.35 * std::sqrt(static_cast<double>(n)) / x;
        int exceed = 0;
        for (int t = 0; t < trials; ++t)
            if (sample_norms(rng.fork(100000 + t), m, n).nu_plus >= x) ++exceed;
        rep.tail_freq_square = static_cast<double>(exceed) / trials;
    }
    return rep;
}

MomentReport gaussian_moment_check(RngStream rng, int samples, double tol) {
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double z = rng.next_normal();
        s1 += z;
        s2 += z * z;
    }
    MomentReport rep;
    rep.mean = s1 / samples;
    rep.variance = s2 / samples - rep.mean * rep.mean;
    rep.ok = std::fabs(rep.mean) < tol && std::fabs(rep.variance - 1.0) < tol;
    return rep;
}

TailReport norm_tail_check(RngStream rng, int m, int n, double t, int trials) {
    TailReport rep;
    rep.trials = trials;
    const double cut = 1.0 + std::sqrt(static_cast<double>(m)) +
                       std::sqrt(static_cast<double>(n)) + t;
    for (int k = 0; k < trials; ++k)
        if (sample_norms(rng.fork(k), m, n).nu > cut) ++rep.exceed;
    rep.bound_freq = std::exp(-t * t / 2.0);
    rep.ok = static_cast<double>(rep.exceed) / trials <= rep.bound_freq + 0.01;
    return rep;
}

} // namespace sketchlra
