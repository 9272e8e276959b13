#ifndef SKETCHLRA_DENSE_HPP
#define SKETCHLRA_DENSE_HPP

#include <complex>
#include <cstddef>
#include <vector>

#include "sketchlra/error.hpp"
#include "sketchlra/rng.hpp"

namespace sketchlra {

using cd = std::complex<double>;

// Row-major dense matrix, real or complex (interleaved re,im).
// Immutable by convention once handed to an algorithm; constructors and
// file readers reject non-finite entries.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(int rows, int cols, bool complex_entries = false)
        : rows_(rows), cols_(cols), complex_(complex_entries),
          a_(static_cast<std::size_t>(rows) * cols * (complex_entries ? 2 : 1), 0.0) {
        if (rows < 0 || cols < 0) throw DimensionMismatch("negative matrix dimension");
    }

    static DenseMatrix identity(int n);
    // validating constructor: throws on NaN/Inf
    static DenseMatrix from_data(int rows, int cols, std::vector<double> data,
                                 bool complex_entries = false);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool is_complex() const { return complex_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double& at(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
    double at(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

    cd cat(int i, int j) const {
        const std::size_t k = static_cast<std::size_t>(i) * cols_ + j;
        return complex_ ? cd(a_[2 * k], a_[2 * k + 1]) : cd(a_[k], 0.0);
    }
    void cset(int i, int j, cd z) {
        const std::size_t k = static_cast<std::size_t>(i) * cols_ + j;
        if (complex_) { a_[2 * k] = z.real(); a_[2 * k + 1] = z.imag(); }
        else at(i, j) = z.real();
    }

    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }
    double* row(int i) { return a_.data() + static_cast<std::size_t>(i) * cols_ * (complex_ ? 2 : 1); }
    const double* row(int i) const { return a_.data() + static_cast<std::size_t>(i) * cols_ * (complex_ ? 2 : 1); }

    bool all_finite() const;
    DenseMatrix to_complex() const;          // widen storage
    DenseMatrix real_part() const;
    DenseMatrix block(int i0, int j0, int m, int n) const;
    void set_block(int i0, int j0, const DenseMatrix& B);
    DenseMatrix columns(int j0, int n) const { return block(0, j0, rows_, n); }

private:
    int rows_ = 0, cols_ = 0;
    bool complex_ = false;
    std::vector<double> a_;
};

// ---- arithmetic -----------------------------------------------------------

DenseMatrix transpose(const DenseMatrix& A);
DenseMatrix conj_transpose(const DenseMatrix& A);
DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B);       // A*B
DenseMatrix matmul_tn(const DenseMatrix& A, const DenseMatrix& B);    // A^H * B
DenseMatrix matmul_nt(const DenseMatrix& A, const DenseMatrix& B);    // A * B^H
DenseMatrix add(const DenseMatrix& A, const DenseMatrix& B);
DenseMatrix sub(const DenseMatrix& A, const DenseMatrix& B);
DenseMatrix scale(const DenseMatrix& A, double s);

// y = A*x and y = A^H*x on raw vectors (real or complex A, complex x allowed)
void matvec(const DenseMatrix& A, const double* x, double* y);
void matvec_t(const DenseMatrix& A, const double* x, double* y);

DenseMatrix gaussian_matrix(RngStream rng, int m, int n);

// ---- norms and rank -------------------------------------------------------

double frobenius_norm(const DenseMatrix& A);
double spectral_norm(const DenseMatrix& A);       // power iteration, SVD fallback
double condition_number(const DenseMatrix& A);    // sigma_1 / sigma_rho
int numerical_rank(const DenseMatrix& A, double xi);
double default_rank_tol(const DenseMatrix& A, double sigma1);

// ---- factorizations (real only) -------------------------------------------

struct OrthResult {
    DenseMatrix Q;          // m x l, orthonormal columns
    bool reduced_rank = false;
    int effective_rank = 0; // columns with non-negligible pivot
};

// Householder QR based for real input; modified Gram-Schmidt with
// reorthogonalization for complex input. range(Q) = range(A) when A has
// full column rank; ReducedRank is a signal, not an error.
OrthResult orthogonalize(const DenseMatrix& A);

struct SvdFactors {
    DenseMatrix S;              // m x rho
    std::vector<double> sigma;  // non-increasing, > 0
    DenseMatrix T;              // n x rho
};

// compact SVD, values below rank_tol (default max(m,n)*eps*sigma_1) dropped
SvdFactors svd(const DenseMatrix& A);
SvdFactors svd(const DenseMatrix& A, double rank_tol);
std::vector<double> singular_values(const DenseMatrix& A);  // all min(m,n)

DenseMatrix pseudo_inverse(const DenseMatrix& A);

struct InversePerturbationReport {
    double theta = 0.0;   // ||C^-1 E||
    double lhs = 0.0;     // ||(C+E)^-1 - C^-1||
    double bound = 0.0;   // theta/(1-theta) * ||C^-1||
    bool holds = false;
};

InversePerturbationReport inverse_perturbation_check(const DenseMatrix& C,
                                                     const DenseMatrix& E);

} // namespace sketchlra

#endif
