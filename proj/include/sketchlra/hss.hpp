#ifndef SKETCHLRA_HSS_HPP
#define SKETCHLRA_HSS_HPP

#include <functional>
#include <string>
#include <vector>

#include "sketchlra/dense.hpp"
#include "sketchlra/multipliers.hpp"

namespace sketchlra {

enum class HssSketch { Gaussian, Hadamard };

// Hierarchically semiseparable form over a perfect binary partition tree.
// Stores dense leaf diagonal blocks plus, for every neutered block column of
// every split, a rank-r generator pair (F, H) with N ~= F H. For symmetric
// input the compression additionally derives nested (telescoping) bases so a
// matrix-vector product costs O(n (r + leaf)) instead of O(n r log n).
class HssMatrix {
public:
    struct Generator {
        int row_off = 0, row_len = 0, col_off = 0, col_len = 0;
        DenseMatrix F; // row_len x r
        DenseMatrix H; // r x col_len
    };

    int n() const { return n_; }
    int rank() const { return r_; }
    double xi() const { return xi_; }
    int leaf_size() const { return leaf_; }
    int levels() const { return levels_; }
    bool nested() const { return nested_; }

    const std::vector<Generator>& generators() const { return gens_; }
    const std::vector<DenseMatrix>& diagonal_blocks() const { return diag_; }
    long long stored_diagonal_entries() const;

    std::vector<double> matvec(const std::vector<double>& x,
                               FlopCount* fc = nullptr) const;
    DenseMatrix reconstruct_dense() const;

    void save(const std::string& dir) const;
    static HssMatrix load(const std::string& dir);

private:
    friend HssMatrix hss_compress(const DenseMatrix&, int, double, HssSketch, RngStream);

    // tree node: intervals per level, heap-ordered (node 0 = root)
    struct NodeSpan {
        int off = 0, len = 0;
    };
    std::vector<NodeSpan> spans_;   // 2^(levels+1) - 1 nodes
    std::vector<DenseMatrix> diag_; // per leaf
    std::vector<Generator> gens_;   // two per internal node (both children)

    // nested representation (symmetric inputs)
    bool nested_ = false;
    std::vector<DenseMatrix> leaf_u_;   // per leaf: s x r
    std::vector<DenseMatrix> trans_r_;  // per internal node: 2r x r
    std::vector<DenseMatrix> coup_b_;   // per internal node: r x r (B12)

    int n_ = 0, r_ = 0, leaf_ = 0, levels_ = 0;
    double xi_ = 0.0;

    int num_leaves() const { return 1 << levels_; }
    int leaf_node(int i) const { return (1 << levels_) - 1 + i; }
    void flat_matvec(const std::vector<double>& x, std::vector<double>& y,
                     FlopCount* fc) const;
    void nested_matvec(const std::vector<double>& x, std::vector<double>& y,
                       FlopCount* fc) const;
};

// Randomized compression: one structured sketch of the whole matrix plus
// per-block projections; generator length r with oversampling p = 4 inside
// the sketch. Throws GeneratorRankExceeded if a neutered block column is not
// numerically rank-r at the requested tolerance.
HssMatrix hss_compress(const DenseMatrix& M, int r, double xi,
                       HssSketch sketch = HssSketch::Gaussian,
                       RngStream rng = RngStream(0x55AA));

// spd test input: n - r eigenvalues exactly at the cluster center (strong) or
// r+1 clusters of width xi, eigenvectors from the QR of a Gaussian matrix
DenseMatrix gen_concentrated(int n, int r, double xi, RngStream rng, bool strong);

struct CgResult {
    std::vector<double> x;
    int iterations = 0;
    std::vector<double> residual_history; // relative residuals
    bool converged = false;
};

CgResult cg_solve(const std::function<void(const double*, double*)>& apply, int n,
                  const std::vector<double>& b, double tol, int max_iters);

enum class NormalEquations { Error, Residual };

// CG on A^T A x = A^T b (Error) or A A^T y = b, x = A^T y (Residual); the
// product matrix is never formed
CgResult cg_normal_equations(const DenseMatrix& A, const std::vector<double>& b,
                             double tol, int max_iters, NormalEquations variant);

struct AcceleratedCgReport {
    CgResult cg;
    long long compress_flops = 0;       // gamma(M)
    long long matvec_flops = 0;         // per CG iteration
    long long dense_matvec_flops = 0;   // 2 n^2 - n reference
    int rank = 0;
    double xi = 0.0;
};

AcceleratedCgReport accelerated_cg(const DenseMatrix& M, int r, double xi,
                                   const std::vector<double>& b, double tol,
                                   int max_iters,
                                   HssSketch sketch = HssSketch::Gaussian,
                                   RngStream rng = RngStream(0x55AB));

} // namespace sketchlra

#endif
