#ifndef SKETCHLRA_MULTIPLIERS_HPP
#define SKETCHLRA_MULTIPLIERS_HPP

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sketchlra/dense.hpp"

namespace sketchlra {

// ---- randomization descriptors ---------------------------------------------
// A spec stays declarative ("random permutation"); build() resolves it from
// the stream and the (spec, seed) pair replays the exact multiplier.

struct PermDesc {
    enum class Kind { None, Random, Explicit } kind = Kind::None;
    std::vector<int> perm; // Explicit: y[i] = x[perm[i]]
    static PermDesc none() { return {}; }
    static PermDesc random() { return {Kind::Random, {}}; }
    static PermDesc explicit_(std::vector<int> p) { return {Kind::Explicit, std::move(p)}; }
};

struct DiagDesc {
    enum class Kind { None, RandomSign, RandomUnitPhase, RandomScaleSet, Constant,
                      Explicit } kind = Kind::None;
    std::vector<cd> d;              // Explicit
    std::vector<double> scale_set;  // RandomScaleSet values, or the Constant value
    static DiagDesc none() { return {}; }
    static DiagDesc random_sign() { return {Kind::RandomSign, {}, {}}; }
    static DiagDesc random_phase() { return {Kind::RandomUnitPhase, {}, {}}; }
    static DiagDesc random_scale(std::vector<double> set) {
        return {Kind::RandomScaleSet, {}, std::move(set)};
    }
    static DiagDesc constant(double v) { return {Kind::Constant, {}, {v}}; }
    static DiagDesc explicit_(std::vector<cd> v) { return {Kind::Explicit, std::move(v), {}}; }
};

// ---- primitive types (also usable as standalone multipliers) ---------------

struct PermutationPrim { PermDesc perm; };
struct UnitDiagonalPrim { DiagDesc diag; };       // resolved entries must be unit modulus
struct ShiftPrim { cd f = 0.0; bool transposed = false; };
struct HadamardPrim { int s = 1; };               // 2s x 2s block [[I,I],[I,-I]]

// ---- multiplier families ----------------------------------------------------

// depth-d abridged Walsh-Hadamard, optionally scaled (D) and/or permuted (P):
// B = P D H_{n,d}
struct AbridgedHadamard {
    int depth = 1;
    PermDesc perm;
    DiagDesc diag;
};

// depth-d abridged Fourier, optionally scaled/permuted: B = P D Omega_{n,d}
struct AbridgedFourier {
    int depth = 1;
    PermDesc perm;
    DiagDesc diag;
};

// f-circulant defined by its first column; sparse (q nonzeros) or full
struct FCirculant {
    cd f = 1.0;
    enum class Values { PlusMinusOne, Gaussian, Explicit } values = Values::PlusMinusOne;
    int q = 0;                      // nonzeros when sparse; q == n means full
    std::vector<int> support;       // Explicit placement (else drawn)
    std::vector<cd> vals;           // Explicit values
};

// abridged f-circulant: B = Df^-1 A^H D A Df with A the depth-d abridged DFT
struct AbridgedFCirculant {
    int depth = 1;
    cd f = 1.0;
    DiagDesc diag;                  // the middle diagonal D
};

// inverse of a bidiagonal-type matrix: B = (main I + D Z^k)^-1 (lower) or
// (main I + (Z^T)^k D)^-1 (upper); optional row permutation applied after
struct InverseBidiagonal {
    double main = 1.0;              // nonzero; +-1 in the unit-cost families
    int offset = 1;                 // which sub/super diagonal carries D
    bool lower = true;
    DiagDesc diag;                  // defaults to random signs
    PermDesc perm;
    DiagDesc left_scale;            // optional diagonal factor applied after
};

// dense n x l Gaussian
struct GaussianDense {};

// dense with i.i.d. entries from {-1, 0, +1}, each with probability 1/3
struct SignZeroDense {};

// Gaussian Toeplitz (t_{i-j}), 2n-1 parameters
struct GaussianToeplitz {};

struct ExplicitDense { DenseMatrix B; };

struct MultiplierSpec;

struct Composite {
    bool product = false;                     // sum otherwise
    std::vector<MultiplierSpec> terms;
    std::vector<double> coeffs;               // optional per-term (sums only)
};

using MultiplierBody =
    std::variant<AbridgedHadamard, AbridgedFourier, FCirculant, AbridgedFCirculant,
                 InverseBidiagonal, GaussianDense, SignZeroDense, GaussianToeplitz,
                 ExplicitDense, Composite, PermutationPrim, UnitDiagonalPrim,
                 ShiftPrim, HadamardPrim>;

struct ColumnSelection {
    enum class Kind { Leftmost, Random } kind = Kind::Leftmost;
    int l = 0;
    static ColumnSelection leftmost(int l) { return {Kind::Leftmost, l}; }
    static ColumnSelection random(int l) { return {Kind::Random, l}; }
};

struct MultiplierSpec {
    int n = 0;
    ColumnSelection cols;                 // l == 0 means all n columns
    std::vector<int> block_split;         // powers of two summing to n, for
                                          // transform families at non-2^k n
    MultiplierBody body;
};

// serialization (fixed grammar, see docs in multipliers.cpp)
std::string to_string(const MultiplierSpec& spec);
MultiplierSpec parse_multiplier(const std::string& text);

struct MultiplierRecord {
    MultiplierSpec spec;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};
std::string to_string(const MultiplierRecord& rec);
MultiplierRecord parse_multiplier_record(const std::string& text);

// ---- built multiplier --------------------------------------------------------

struct FlopCount {
    long long adds = 0;
    long long mults = 0;
    long long total() const { return adds + mults; }
};

class FastMultiplier {
public:
    struct Node; // plan node, defined in multipliers.cpp

    int n() const { return n_; }
    int l() const { return l_; }
    bool complex_output() const { return complex_; }
    const MultiplierRecord& record() const { return record_; }
    std::string provenance() const { return to_string(record_); }

    // y = B_hat * x over the full n x n matrix (x length n)
    void apply_vec(std::vector<cd>& x, FlopCount* fc = nullptr) const;
    void apply_vec(std::vector<double>& x, FlopCount* fc = nullptr) const; // real families only

    // M * B restricted to the selected columns
    DenseMatrix apply_right(const DenseMatrix& M, FlopCount* fc = nullptr) const;

    // dense n x l oracle
    DenseMatrix materialize() const;
    // dense n x n (ignores column selection)
    DenseMatrix materialize_square() const;

    const std::vector<int>& selected_columns() const { return cols_; }

private:
    friend FastMultiplier build(const MultiplierSpec&, RngStream);
    std::shared_ptr<const Node> root_;
    std::vector<int> cols_;
    MultiplierRecord record_;
    int n_ = 0, l_ = 0;
    bool complex_ = false;
};

FastMultiplier build(const MultiplierSpec& spec, RngStream rng);

// Table-of-flop-budgets entry for the audited families; nullopt when the
// family has no published budget
std::optional<long long> flop_budget(const MultiplierSpec& spec);

struct AuditReport {
    long long measured = 0;
    long long budget = -1;   // -1: no budget defined
    bool within = true;
};
AuditReport flops_audit(const FastMultiplier& mult);

// scaling constant c with c * B^H B = I for the unitary-up-to-scaling families
std::optional<double> unitary_scale(const MultiplierSpec& spec);

// ---- verification reports -----------------------------------------------------

struct CirculantDiagReport {
    double lhs_norm = 0.0;   // ||Z_g(v) - Df^-1 F^H D F Df|| (normalized DFT)
    double rel = 0.0;
    bool holds = false;
};
CirculantDiagReport circulant_diagonalization_check(cd f, const std::vector<cd>& v);

struct ConditionBoundReport {
    int trials = 0;
    double kappa_max = 0.0;
    double kappa_min = 0.0;
    double bound = 0.0;      // sqrt(2n)
    int violations = 0;      // samples with kappa > bound
    bool holds = false;
};
// kappa of (I + D Z)^-1 over random unit diagonals against the sqrt(2n) claim
ConditionBoundReport condition_bound_check(int n, int trials, RngStream rng);

} // namespace sketchlra

#endif
