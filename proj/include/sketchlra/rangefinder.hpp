#ifndef SKETCHLRA_RANGEFINDER_HPP
#define SKETCHLRA_RANGEFINDER_HPP

#include <functional>
#include <string>
#include <vector>

#include "sketchlra/dense.hpp"
#include "sketchlra/multipliers.hpp"

namespace sketchlra {

struct DeltaMode {
    enum class Kind { Exact, Frievalds } kind = Kind::Exact;
    int probes = 8;
    static DeltaMode exact() { return {}; }
    static DeltaMode frievalds(int t = 8) { return {Kind::Frievalds, t}; }
};

struct RangeResult {
    DenseMatrix Q;     // m x l, orthonormal columns
    DenseMatrix QtM;   // l x n, Q^H M
    double delta = 0.0;
    bool success = false;
    int l_used = 0;
    int power_iterations = 0;
    bool reduced_rank = false; // sketch had numerically dependent columns
    std::vector<double> stage_deltas; // recursive mode: delta per stage tried
    std::vector<std::string> provenance;
};

// basic range finder: Q = orth(M_q B), delta = ||Q Q^H M - M|| (or its
// Frievalds estimate), SUCCESS iff delta <= tau
RangeResult range_find(const DenseMatrix& M, const MultiplierSpec& spec, double tau,
                       RngStream rng, int power_iters = 0,
                       DeltaMode mode = DeltaMode::exact());
RangeResult range_find(const DenseMatrix& M, const FastMultiplier& mult, double tau,
                       int power_iters = 0, DeltaMode mode = DeltaMode::exact());

struct RecursiveSchedule {
    std::vector<int> widths;  // l_1, ..., l_h with增 increasing prefix sums <= n
    MultiplierSpec base;      // n x n matrix partitioned into column blocks
};

RangeResult range_find_recursive(const DenseMatrix& M, const RecursiveSchedule& schedule,
                                 double tau, RngStream rng, bool reuse,
                                 int power_iters = 0, DeltaMode mode = DeltaMode::exact());

// sketch with a wide sparse multiplier (l_plus columns), compress the product
// with a Gaussian l_plus x l factor, then proceed as the basic range finder
RangeResult expand_compress(const DenseMatrix& M, const MultiplierSpec& sparse_spec,
                            int l, double tau, RngStream rng, int power_iters = 0,
                            DeltaMode mode = DeltaMode::exact());

// retry with the sum (optionally +-1-signed) of previously failed multipliers
RangeResult amend_combine(const DenseMatrix& M, const std::vector<MultiplierSpec>& failed,
                          double tau, RngStream rng, bool random_signs = false,
                          int power_iters = 0, DeltaMode mode = DeltaMode::exact());

// lower estimate of the spectral norm of a linear operator from t random probes
double frievalds_norm(const std::function<void(const std::vector<double>&,
                                               std::vector<double>&)>& apply,
                      int n, int t, RngStream rng);

struct ErrorBoundReport {
    double delta = 0.0;
    double sigma_r1 = 0.0;
    double lhs = 0.0;        // |delta - sigma_{r+1}|
    double rhs = 0.0;        // sqrt(8(n-r)) sigma_{r+1} ||B||_F ||(M_r B)^+||
    double guard = 0.0;      // 10 sigma_{r+1}^2 ||(M_r B)^+||^2 ||B||_F^2
    bool holds = false;
    double eb_lhs = 0.0;     // ||E B||_F
    double eb_rhs = 0.0;     // ||B||_F sigma_{r+1} sqrt(n-r)
    bool eq4_holds = false;
};

ErrorBoundReport error_bound_report(const DenseMatrix& M, const DenseMatrix& B,
                                    const RangeResult& result, int r);

struct PrimalDualConfig {
    int m = 256, n = 256, r = 8, l = 12;
    int trials = 200;
    std::uint64_t seed = 1;
    double primal_slack = 1.0;
    double dual_slack = 1.25;
};

struct PrimalDualSummary {
    int trials = 0;
    int p = 0;
    // primal: fixed M, Gaussian B
    double mean_f = 0.0;
    double bound_f = 0.0;      // e sqrt(8(n-r)rl) (1+sqrt n+sqrt l)/(p sigma_r)
    bool primal_ok = false;
    bool primal_asserted = false;
    // dual: factor-Gaussian M, fixed well-conditioned B
    double mean_fd = 0.0;
    double bound_fd_stated = 0.0;    // e^2 sqrt(8(n-r)l) kappa(B) r/((m-r)p)
    double bound_fd_corrected = 0.0; // same with sqrt(r m) in place of r
    bool dual_ok = false;            // against the corrected bound
    bool dual_stated_ok = false;     // observed vs the stated bound, reported only
    bool dual_asserted = false;
};

PrimalDualSummary primal_dual_statistics(const PrimalDualConfig& cfg);

struct PowerSchemeReport {
    int iterations = 0;
    int values_checked = 0;
    double max_rel_err = 0.0;
    bool holds = false;
};

// sigma_j((M^T M)^i M) = sigma_j(M)^(2i+1), checked in extended precision
PowerSchemeReport power_scheme_check(const DenseMatrix& M, int i,
                                     double sigma_floor = 1e-2, double rel_tol = 1e-6);

// (M M^T)^q M formed by repeated products, double precision (bench utility)
DenseMatrix power_iterate(const DenseMatrix& M, int q);

} // namespace sketchlra

#endif
