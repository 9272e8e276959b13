#ifndef SKETCHLRA_LSR_HPP
#define SKETCHLRA_LSR_HPP

#include <string>
#include <vector>

#include "sketchlra/dense.hpp"

namespace sketchlra {

struct LsrProblem {
    DenseMatrix A;          // m x d, m > d
    std::vector<double> b;  // length m
};

// minimum-norm least squares via the SVD pseudo-inverse
std::vector<double> solve_exact(const LsrProblem& p);

double residual_norm(const LsrProblem& p, const std::vector<double>& x);

enum class SketchKind { Gaussian, HadamardRows, CountSketch };

// k x m sketching operator; Gaussian is scaled by 1/sqrt(k), HadamardRows has
// exactly orthonormal rows (random rows of a block-scaled, sign-flipped,
// column-permuted Walsh-Hadamard matrix), CountSketch places one +-1 per
// column (rows orthogonal only when collision-free)
DenseMatrix make_sketch(SketchKind kind, int k, int m, RngStream rng);

struct SketchedSolution {
    std::vector<double> x;
    int k = 0;
    std::string sketch;
    double residual = 0.0;      // ||A x - b||
    double opt_residual = 0.0;  // ||A x* - b||
    bool sketch_rank_deficient = false;
};

SketchedSolution solve_sketched(const LsrProblem& p, int k, SketchKind kind,
                                RngStream rng);

struct DistortionSummary {
    int samples = 0;
    double max_ratio = 0.0;
    double min_ratio = 0.0;
    double limit = 0.0;   // asserted upper bound on the max ratio (0: report only)
    bool ok = true;
};

// distortion of ||F M y|| / ||M y|| over random y with y_d = -1, plus any
// designated vectors the caller supplies
DistortionSummary distortion_check(const DenseMatrix& M, const DenseMatrix& F,
                                   int trials, RngStream rng, double limit = 0.0,
                                   const std::vector<std::vector<double>>& designated = {});

} // namespace sketchlra

#endif
