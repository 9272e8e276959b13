#ifndef SKETCHLRA_RANDSTAT_HPP
#define SKETCHLRA_RANDSTAT_HPP

#include "sketchlra/dense.hpp"

namespace sketchlra {

// Monte Carlo verifiers for the Gaussian random-matrix facts the range
// finder guarantees lean on. All of them are deterministic for a fixed
// stream so the test suite has stable pass/fail behavior.

struct NormSample {
    int m = 0, n = 0;
    double nu = 0.0;       // ||G||
    double nu_plus = 0.0;  // ||G^+||
    double nu_f = 0.0;     // ||G||_F
};

NormSample sample_norms(RngStream rng, int m, int n);

struct FullRankReport {
    int trials = 0;
    int failures = 0;      // rank(FA) or rank(AH) below r at rank_tol
};

// F (r x m) and H (n x r) Gaussian against a fixed full-rank A
FullRankReport full_rank_check(RngStream rng, int m, int n, int r, int trials);

// same sampling with entries drawn uniformly from a +-1 set; the theorem
// gives failure probability at most r/|S|, reported rather than asserted
FullRankReport full_rank_check_pm1(RngStream rng, int m, int n, int r, int trials);

struct RotationReport {
    double ks_statistic = 0.0;
    double threshold = 0.0;  // 0.999 quantile of the two-sample statistic
    bool passes = false;
};

// entries of S G (S fixed k x m orthogonal) against fresh Gaussian samples
RotationReport rotational_invariance_check(RngStream rng, int k, int m, int n,
                                           int trials);

struct NormStatistics {
    int m = 0, n = 0, trials = 0;
    double mean_nu = 0.0;
    double bound_nu = 0.0;        // 1 + sqrt(m) + sqrt(n)
    double mean_nu_plus = 0.0;
    double bound_nu_plus = 0.0;   // e sqrt(max(m,n)) / |m-n| * slack, 0 if m == n
    bool nu_ok = false;
    bool nu_plus_ok = false;      // true (vacuously) when m == n
    bool nu_plus_asserted = false;
    double tail_freq_square = 0.0;    // empirical P(nu+_{n,n} >= x) at the probe x
    double tail_bound_square = 0.0;   // 2.35 sqrt(n) / x
};

NormStatistics norm_statistics(RngStream rng, int m, int n, int trials,
                               double nu_plus_slack = 1.5);

struct MomentReport {
    double mean = 0.0;
    double variance = 0.0;
    bool ok = false;
};

// sample mean/variance of single Gaussian draws against the CLT band
MomentReport gaussian_moment_check(RngStream rng, int samples, double tol = 0.02);

// frequency of ||G|| exceeding 1 + sqrt(m) + sqrt(n) + t (tail bound exp(-t^2/2))
struct TailReport {
    int trials = 0;
    int exceed = 0;
    double bound_freq = 0.0;
    bool ok = false;
};
TailReport norm_tail_check(RngStream rng, int m, int n, double t, int trials);

// two-sample Kolmogorov-Smirnov statistic (sorted sweep)
double ks_two_sample(std::vector<double> a, std::vector<double> b);

} // namespace sketchlra

#endif
