#ifndef SKETCHLRA_TESTMATRICES_HPP
#define SKETCHLRA_TESTMATRICES_HPP

#include <string>

#include "sketchlra/dense.hpp"

namespace sketchlra {

// SVD-spectrum input: M = S diag(sigma) T^T with orthogonalized Gaussian
// factors, sigma_j = 1/j for j <= r and 1e-10 beyond, so ||M|| = 1 and
// kappa(M) = 1e10.
DenseMatrix gen_svd_spectrum(int n, int r, RngStream rng);

// Discretized single-layer potential between the unit circle and a
// concentric target circle, row-circulant, normalized to ||M|| = 1.
// The target radius is a grid parameter chosen so the numerical rank at
// xi = 1e-6 (and 1e-5) is 3, matching the reported experiments.
DenseMatrix gen_laplacian(int n);
double laplacian_target_radius();

// Submatrix of the inverse of a 5-point-stencil Laplacian on a strip,
// mapping the first n grid nodes to the last m, the two regions separated
// by a gap. Supported shapes (88,160), (208,400), (408,800); grid widths,
// gaps and the output scaling are pinned so nrank(., 1e-6) = 5, 43, 64.
DenseMatrix gen_fd_inverse(int m, int n);

// factor-Gaussian of expected rank r plus a Gaussian perturbation of
// spectral norm `noise`
DenseMatrix gen_factor_gaussian(int m, int n, int r, double noise, RngStream rng);

// Example-1 adversarial input: diag(I_r, O) P for a permutation P
DenseMatrix gen_adversarial(int m, int n, int r, const std::vector<int>& perm);

// declarative input class for the bench harness and the gen subcommand
struct InputClass {
    enum class Kind { SvdSpectrum, Laplacian, FdInverse, FactorGaussian, Adversarial }
        kind = Kind::SvdSpectrum;
    int m = 0, n = 0, r = 0;
    double noise = 0.0;
    std::uint64_t seed = 0;
};

DenseMatrix generate(const InputClass& cls, std::uint64_t trial = 0);
InputClass parse_input_class(const std::string& text); // e.g. "svd:n=256,r=8"
std::string to_string(const InputClass& cls);

} // namespace sketchlra

#endif
