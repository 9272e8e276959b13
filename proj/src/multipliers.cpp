#include "sketchlra/multipliers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

// Multiplier plans.
//
// Transform families are applied as contiguous in-place butterfly/twiddle
// stages followed by one gather permutation (the composed interleavings of
// the recursive definition), then optional diagonal scaling and a row
// permutation. Circulants use shift-and-add for sparse first columns and the
// DFT diagonalization for dense ones. Inverses of bidiagonals are applied by
// substitution. Flops are counted where the arithmetic happens; one complex
// addition or multiplication counts as one flop.

namespace sketchlra {

namespace {
constexpr double kTwoPi = 6.28318530717958647692528676655900577;
}

// ---- plan node ---------------------------------------------------------------

struct FastMultiplier::Node {
    enum class Kind {
        Transform,   // abridged Hadamard / Fourier with optional D, P
        Circulant,   // f-circulant from first column
        AbrCirc,     // Df^-1 A^H D A Df
        InvBidiag,
        Dense,       // gaussian / sign-zero / toeplitz / explicit payload
        Sum,
        Product,
        Perm,
        Diag,
        Shift,
        HadPrim
    } kind = Kind::Transform;

    int n = 0;
    bool complex_out = false;

    // Transform
    bool fourier = false;
    int depth = 0;
    std::vector<int> block_off, block_size;
    std::vector<std::vector<cd>> tw;     // per block: top-level twiddle table
    std::vector<int> tr_perm;            // out[j] = arith[tr_perm[j]]
    std::vector<cd> diag;                // post scale (Transform) / middle D (AbrCirc)
    bool diag_signs = false;             // diag entries are +-1
    bool diag_real = false;
    std::vector<int> perm;               // row permutation: y[j] = x[perm[j]]

    // Circulant / AbrCirc
    cd f = 1.0;
    std::vector<int> support;
    std::vector<cd> vals;
    bool vals_pm1 = false;
    std::vector<cd> fft_eigs;            // diag(Omega D_phi v)/n for the dense path
    cd phi = 1.0;                        // n-th root of f for the dense path
    std::vector<cd> dfpow;               // phi^i (or f^i for AbrCirc)

    // InvBidiag
    double main_diag = 1.0;
    int offset = 1;
    bool lower = true;

    // Shift
    bool shift_transposed = false;

    // Dense
    enum class DenseKind { Explicit, Gaussian, SignZero, Toeplitz } dense_kind = DenseKind::Explicit;
    DenseMatrix payload;                 // n x l (columns pre-selected) at top level
    RngStream draw;                      // to regenerate the square matrix

    int hadprim_s = 0;

    // Composite
    std::vector<std::shared_ptr<const Node>> children;
    std::vector<double> coeffs;
};

namespace {

using Node = FastMultiplier::Node;

// ---- stage kernels (templated over double / complex) -------------------------

template <class S>
void butterfly(S* x, int n, int half, FlopCount* fc) {
    for (int b = 0; b < n; b += 2 * half)
        for (int i = 0; i < half; ++i) {
            const S u = x[b + i], v = x[b + half + i];
            x[b + i] = u + v;
            x[b + half + i] = u - v;
        }
    if (fc) fc->adds += n;
}

// multiply the odd half of every block of size `sz` by the twiddles of that size
void twiddle(cd* x, int n, int sz, const std::vector<cd>& top, int top_sz, FlopCount* fc) {
    const int half = sz / 2;
    const int stride = top_sz / sz;
    for (int b = 0; b < n; b += sz)
        for (int j = 0; j < half; ++j) x[b + half + j] *= top[static_cast<std::size_t>(j) * stride];
    if (fc) fc->mults += static_cast<long long>(n) / 2;
}

void twiddle_conj(cd* x, int n, int sz, const std::vector<cd>& top, int top_sz, FlopCount* fc) {
    const int half = sz / 2;
    const int stride = top_sz / sz;
    for (int b = 0; b < n; b += sz)
        for (int j = 0; j < half; ++j)
            x[b + half + j] *= std::conj(top[static_cast<std::size_t>(j) * stride]);
    if (fc) fc->mults += static_cast<long long>(n) / 2;
}

// composed interleaving permutation of the recursive transform definition
void sim_interleave(std::vector<int>& idx, int off, int size, int levels,
                    std::vector<int>& tmp) {
    if (levels <= 1) return;
    const int half = size / 2;
    sim_interleave(idx, off, half, levels - 1, tmp);
    sim_interleave(idx, off + half, half, levels - 1, tmp);
    for (int t = 0; t < half; ++t) {
        tmp[2 * t] = idx[off + t];
        tmp[2 * t + 1] = idx[off + half + t];
    }
    std::copy(tmp.begin(), tmp.begin() + size, idx.begin() + off);
}

template <class S>
void gather(std::vector<S>& x, const std::vector<int>& map, std::vector<S>& scratch) {
    scratch.resize(x.size());
    for (std::size_t j = 0; j < map.size(); ++j) scratch[j] = x[map[j]];
    x.swap(scratch);
}

template <class S>
void scatter(std::vector<S>& x, const std::vector<int>& map, std::vector<S>& scratch) {
    scratch.resize(x.size());
    for (std::size_t j = 0; j < map.size(); ++j) scratch[map[j]] = x[j];
    x.swap(scratch);
}

// ---- transform node arithmetic ------------------------------------------------

enum class Dir { Forward, Transposed, Adjoint };

template <class S>
void transform_stages(const Node& nd, std::vector<S>& x, Dir dir, FlopCount* fc) {
    for (std::size_t b = 0; b < nd.block_off.size(); ++b) {
        S* xb = x.data() + nd.block_off[b];
        const int sz = nd.block_size[b];
        if (dir == Dir::Forward) {
            for (int t = 0; t < nd.depth; ++t) {
                const int bs = sz >> t;
                butterfly(xb, sz, bs / 2, fc);
                if (nd.fourier && t < nd.depth - 1) {
                    if constexpr (std::is_same_v<S, cd>)
                        twiddle(xb, sz, bs, nd.tw[b], sz, fc);
                }
            }
        } else {
            for (int t = nd.depth - 1; t >= 0; --t) {
                const int bs = sz >> t;
                if (nd.fourier && t < nd.depth - 1) {
                    if constexpr (std::is_same_v<S, cd>) {
                        if (dir == Dir::Transposed)
                            twiddle(xb, sz, bs, nd.tw[b], sz, fc);
                        else
                            twiddle_conj(xb, sz, bs, nd.tw[b], sz, fc);
                    }
                }
                butterfly(xb, sz, bs / 2, fc);
            }
        }
    }
}

template <class S>
void apply_diag(const std::vector<cd>& d, bool signs, std::vector<S>& x, bool conj_d,
                FlopCount* fc) {
    if (d.empty()) return;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if constexpr (std::is_same_v<S, cd>) {
            x[i] *= conj_d ? std::conj(d[i]) : d[i];
        } else {
            x[i] *= d[i].real();
        }
    }
    if (fc && !signs) fc->mults += static_cast<long long>(x.size());
}

// forward declarations
template <class S>
void node_apply(const Node& nd, std::vector<S>& x, Dir dir, FlopCount* fc,
                std::vector<S>& scratch);

template <class S>
void transform_apply(const Node& nd, std::vector<S>& x, Dir dir, FlopCount* fc,
                     std::vector<S>& scratch) {
    if (dir == Dir::Forward) {
        transform_stages(nd, x, dir, fc);
        if (!nd.tr_perm.empty()) gather(x, nd.tr_perm, scratch);
        apply_diag(nd.diag, nd.diag_signs, x, false, fc);
        if (!nd.perm.empty()) gather(x, nd.perm, scratch);
    } else {
        if (!nd.perm.empty()) scatter(x, nd.perm, scratch);
        apply_diag(nd.diag, nd.diag_signs, x, dir == Dir::Adjoint, fc);
        if (!nd.tr_perm.empty()) scatter(x, nd.tr_perm, scratch);
        transform_stages(nd, x, dir, fc);
    }
}

// ---- circulant --------------------------------------------------------------

// y = sum_i v_i Z_f^i x by shifted accumulation
template <class S>
void circulant_shift_add(const Node& nd, std::vector<S>& x, Dir dir, FlopCount* fc) {
    const int n = nd.n;
    std::vector<S> y(n, S(0));
    const bool fwd = (dir == Dir::Forward);
    for (std::size_t t = 0; t < nd.support.size(); ++t) {
        const int i = nd.support[t];
        cd v = nd.vals[t];
        if (dir == Dir::Adjoint) v = std::conj(v);
        for (int j = 0; j < n; ++j) {
            // forward: y_j += v * (Z^i x)_j, wrap entries pick up f
            int src;
            bool wrapped;
            if (fwd) {
                wrapped = j < i;
                src = wrapped ? j - i + n : j - i;
            } else {
                wrapped = j >= n - i && i > 0;
                src = wrapped ? j + i - n : j + i;
            }
            cd c = v;
            if (wrapped && i > 0) c *= (dir == Dir::Adjoint) ? std::conj(nd.f) : nd.f;
            if constexpr (std::is_same_v<S, cd>) {
                y[j] += c * x[src];
            } else {
                y[j] += c.real() * x[src];
            }
        }
        if (fc) {
            fc->adds += (t == 0) ? 0 : n;
            if (!nd.vals_pm1) fc->mults += n;
        }
    }
    x.swap(y);
}

// Z_f(v) = D_phi^-1 Omega^H diag(Omega D_phi v / n) Omega D_phi with phi^n = f.
// The adjoint keeps the chain and conjugates the spectrum; the transpose swaps
// the two DFT factors and the outer scalings.
void circulant_fft(const Node& nd, std::vector<cd>& x, Dir dir, FlopCount* fc,
                   std::vector<cd>& scratch) {
    const int n = nd.n;
    const bool has_phi = nd.phi != cd(1.0, 0.0);
    auto scale_by = [&](bool invert) {
        for (int i = 0; i < n; ++i) x[i] *= invert ? std::conj(nd.dfpow[i]) : nd.dfpow[i];
        if (fc) fc->mults += n;
    };
    auto spectrum = [&](bool conj_it) {
        for (int i = 0; i < n; ++i)
            x[i] *= conj_it ? std::conj(nd.fft_eigs[i]) : nd.fft_eigs[i];
        if (fc) fc->mults += n;
    };
    auto dft_fwd = [&]() { // Omega = P S
        transform_stages(nd, x, Dir::Forward, fc);
        gather(x, nd.tr_perm, scratch);
    };
    auto dft_adj = [&]() { // Omega^H = S^H P^T
        scatter(x, nd.tr_perm, scratch);
        transform_stages(nd, x, Dir::Adjoint, fc);
    };
    auto dft_trans = [&]() { // Omega^T = S^T P^T
        scatter(x, nd.tr_perm, scratch);
        transform_stages(nd, x, Dir::Transposed, fc);
    };
    auto dft_conj = [&]() { // conj(Omega) x = conj(Omega conj x)
        for (auto& z : x) z = std::conj(z);
        transform_stages(nd, x, Dir::Forward, fc);
        gather(x, nd.tr_perm, scratch);
        for (auto& z : x) z = std::conj(z);
    };

    if (dir == Dir::Forward || dir == Dir::Adjoint) {
        if (has_phi) scale_by(false);
        dft_fwd();
        spectrum(dir == Dir::Adjoint);
        dft_adj();
        if (has_phi) scale_by(true);
    } else {
        // Z^T = D_phi Omega diag conj(Omega) D_phi^-1
        if (has_phi) scale_by(true);
        dft_conj();
        spectrum(false);
        dft_trans();
        if (has_phi) scale_by(false);
    }
}

// ---- abridged f-circulant -----------------------------------------------------

void abrcirc_apply(const Node& nd, std::vector<cd>& x, Dir dir, FlopCount* fc,
                   std::vector<cd>& scratch) {
    const int n = nd.n;
    const bool has_f = nd.f != cd(1.0, 0.0);
    auto df = [&](bool invert, bool conj_it) {
        for (int i = 0; i < n; ++i) {
            cd c = nd.dfpow[i];
            if (invert) c = std::conj(c); // |f| = 1
            if (conj_it) c = std::conj(c);
            x[i] *= c;
        }
        if (fc) fc->mults += n;
    };
    auto mid = [&](bool conj_it) { apply_diag(nd.diag, false, x, conj_it, fc); };
    auto A = [&](Dir d2) {
        if (d2 == Dir::Forward) {
            transform_stages(nd, x, Dir::Forward, fc);
            gather(x, nd.tr_perm, scratch);
        } else {
            scatter(x, nd.tr_perm, scratch);
            transform_stages(nd, x, d2, fc);
        }
    };
    auto A_conj = [&]() { // conj(A) x = conj(A conj(x))
        for (auto& z : x) z = std::conj(z);
        transform_stages(nd, x, Dir::Forward, fc);
        gather(x, nd.tr_perm, scratch);
        for (auto& z : x) z = std::conj(z);
    };

    if (dir == Dir::Forward) {
        if (has_f) df(false, false);
        A(Dir::Forward);
        mid(false);
        A(Dir::Adjoint);
        if (has_f) df(true, false);
    } else if (dir == Dir::Transposed) {
        // (Df^-1 A^H D A Df)^T = Df A^T D conj(A) Df^-1
        if (has_f) df(true, false);
        A_conj();
        mid(false);
        A(Dir::Transposed);
        if (has_f) df(false, false);
    } else {
        // adjoint: Df^-1(with conj) ... symmetric chain, conjugated pieces
        if (has_f) df(false, true);
        A(Dir::Forward);
        mid(true);
        A(Dir::Adjoint);
        if (has_f) df(true, true);
    }
}

// ---- inverse bidiagonal -------------------------------------------------------

// lower family: B = (main I + D Z^k)^-1 with d_i at (i, i-k);
// upper family: B = (main I + (Z^T)^k D)^-1 with d_{i+k} at (i, i+k).
// Transposition swaps the two patterns (same diagonal entries).
template <class S>
void invbidiag_apply(const Node& nd, std::vector<S>& x, Dir dir, FlopCount* fc) {
    const int n = nd.n, k = nd.offset;
    const double inv_main = 1.0 / nd.main_diag;
    const bool unit_main = (nd.main_diag == 1.0 || nd.main_diag == -1.0);
    bool solve_lower = nd.lower;
    if (dir == Dir::Transposed || dir == Dir::Adjoint) solve_lower = !solve_lower;
    const bool cj = (dir == Dir::Adjoint);
    auto dval = [&](int i) -> cd {
        cd c = nd.diag[i];
        return cj ? std::conj(c) : c;
    };
    if (solve_lower) {
        for (int i = 0; i < n; ++i) {
            S acc = x[i];
            if (i >= k) {
                if constexpr (std::is_same_v<S, cd>) acc -= dval(i) * x[i - k];
                else acc -= dval(i).real() * x[i - k];
            }
            x[i] = unit_main ? acc * nd.main_diag : acc * inv_main;
        }
    } else {
        for (int i = n - 1; i >= 0; --i) {
            S acc = x[i];
            if (i + k < n) {
                if constexpr (std::is_same_v<S, cd>) acc -= dval(i + k) * x[i + k];
                else acc -= dval(i + k).real() * x[i + k];
            }
            x[i] = unit_main ? acc * nd.main_diag : acc * inv_main;
        }
    }
    if (fc) {
        fc->adds += n - k;
        if (!nd.diag_signs) fc->mults += n - k;
        if (!unit_main) fc->mults += n;
    }
}

// ---- shift / hadamard primitive ------------------------------------------------

template <class S>
void shift_apply(const Node& nd, std::vector<S>& x, Dir dir, FlopCount* fc) {
    const int n = nd.n;
    bool down = !nd.shift_transposed;
    if (dir == Dir::Transposed || dir == Dir::Adjoint) down = !down;
    cd f = nd.f;
    if (dir == Dir::Adjoint) f = std::conj(f);
    std::vector<S> y(n, S(0));
    if (down) {
        // y_0 = f x_{n-1}; y_i = x_{i-1}
        for (int i = 1; i < n; ++i) y[i] = x[i - 1];
        if constexpr (std::is_same_v<S, cd>) y[0] = f * x[n - 1];
        else y[0] = f.real() * x[n - 1];
    } else {
        for (int i = 0; i + 1 < n; ++i) y[i] = x[i + 1];
        if constexpr (std::is_same_v<S, cd>) y[n - 1] = f * x[0];
        else y[n - 1] = f.real() * x[0];
    }
    x.swap(y);
    if (fc && nd.f != cd(0.0, 0.0) && nd.f != cd(1.0, 0.0) && nd.f != cd(-1.0, 0.0))
        fc->mults += 1;
}

// ---- node dispatch --------------------------------------------------------------

template <class S>
void node_apply(const Node& nd, std::vector<S>& x, Dir dir, FlopCount* fc,
                std::vector<S>& scratch) {
    switch (nd.kind) {
        case Node::Kind::Transform:
            transform_apply(nd, x, dir, fc, scratch);
            break;
        case Node::Kind::Circulant:
            if (!nd.fft_eigs.empty()) {
                if constexpr (std::is_same_v<S, cd>) {
                    circulant_fft(nd, x, dir, fc, scratch);
                } else {
                    // real result through the complex path
                    std::vector<cd> z(x.begin(), x.end());
                    std::vector<cd> zs;
                    circulant_fft(nd, z, dir, fc, zs);
                    for (int i = 0; i < nd.n; ++i) x[i] = z[i].real();
                }
            } else {
                circulant_shift_add(nd, x, dir, fc);
            }
            break;
        case Node::Kind::AbrCirc:
            if constexpr (std::is_same_v<S, cd>) {
                abrcirc_apply(nd, x, dir, fc, scratch);
            } else {
                std::vector<cd> z(x.begin(), x.end());
                std::vector<cd> zs;
                abrcirc_apply(nd, z, dir, fc, zs);
                for (int i = 0; i < nd.n; ++i) x[i] = z[i].real();
            }
            break;
        case Node::Kind::InvBidiag:
            invbidiag_apply(nd, x, dir, fc);
            break;
        case Node::Kind::Perm:
            if (dir == Dir::Forward) gather(x, nd.perm, scratch);
            else scatter(x, nd.perm, scratch);
            break;
        case Node::Kind::Diag:
            apply_diag(nd.diag, nd.diag_signs, x, dir == Dir::Adjoint, fc);
            break;
        case Node::Kind::Shift:
            shift_apply(nd, x, dir, fc);
            break;
        case Node::Kind::HadPrim:
            butterfly(x.data(), nd.n, nd.hadprim_s, fc);
            break;
        case Node::Kind::Dense: {
            // payload is the square matrix for in-composite use
            const DenseMatrix& B = nd.payload;
            std::vector<S> y(nd.n, S(0));
            for (int i = 0; i < nd.n; ++i)
                for (int j = 0; j < nd.n; ++j) {
                    const cd b = (dir == Dir::Forward)
                                     ? B.cat(i, j)
                                     : (dir == Dir::Transposed ? B.cat(j, i)
                                                               : std::conj(B.cat(j, i)));
                    if constexpr (std::is_same_v<S, cd>) y[i] += b * x[j];
                    else y[i] += b.real() * x[j];
                }
            x.swap(y);
            if (fc) {
                fc->mults += static_cast<long long>(nd.n) * nd.n;
                fc->adds += static_cast<long long>(nd.n) * (nd.n - 1);
            }
            break;
        }
        case Node::Kind::Sum: {
            std::vector<S> acc(nd.n, S(0));
            std::vector<S> term;
            for (std::size_t t = 0; t < nd.children.size(); ++t) {
                term = x;
                node_apply(*nd.children[t], term, dir, fc, scratch);
                const double c = nd.coeffs.empty() ? 1.0 : nd.coeffs[t];
                if (c == 1.0) {
                    for (int i = 0; i < nd.n; ++i) acc[i] += term[i];
                } else if (c == -1.0) {
                    for (int i = 0; i < nd.n; ++i) acc[i] -= term[i];
                } else {
                    for (int i = 0; i < nd.n; ++i) acc[i] += c * term[i];
                    if (fc) fc->mults += nd.n;
                }
                if (fc && t > 0) fc->adds += nd.n;
            }
            x.swap(acc);
            break;
        }
        case Node::Kind::Product: {
            // forward applies right-to-left: B = B_0 B_1 ... B_{T-1}
            if (dir == Dir::Forward) {
                for (auto it = nd.children.rbegin(); it != nd.children.rend(); ++it)
                    node_apply(**it, x, dir, fc, scratch);
            } else {
                for (const auto& ch : nd.children) node_apply(*ch, x, dir, fc, scratch);
            }
            break;
        }
    }
}

} // namespace
} // namespace sketchlra

// ---- resolution: spec + stream -> plan ----------------------------------------

namespace sketchlra {
namespace {

bool is_pow2(int x) { return x > 0 && (x & (x - 1)) == 0; }
int log2i(int x) { int k = 0; while ((1 << k) < x) ++k; return k; }

std::vector<int> random_permutation(int n, RngStream& rng) {
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    for (int i = n - 1; i > 0; --i)
        std::swap(p[i], p[static_cast<int>(rng.next_index(i + 1))]);
    return p;
}

std::vector<int> resolve_perm(const PermDesc& pd, int n, RngStream& rng, int& slot) {
    switch (pd.kind) {
        case PermDesc::Kind::None: return {};
        case PermDesc::Kind::Random: {
            RngStream s = rng.fork(slot++);
            return random_permutation(n, s);
        }
        case PermDesc::Kind::Explicit: {
            if (static_cast<int>(pd.perm.size()) != n)
                throw DimensionMismatch("permutation length != n");
            std::vector<char> seen(n, 0);
            for (int v : pd.perm) {
                if (v < 0 || v >= n || seen[v]) throw Error("not a permutation");
                seen[v] = 1;
            }
            return pd.perm;
        }
    }
    return {};
}

struct ResolvedDiag {
    std::vector<cd> d;
    bool signs = false;
    bool real = false;
};

ResolvedDiag resolve_diag(const DiagDesc& dd, int n, RngStream& rng, int& slot) {
    ResolvedDiag out;
    switch (dd.kind) {
        case DiagDesc::Kind::None: return out;
        case DiagDesc::Kind::RandomSign: {
            RngStream s = rng.fork(slot++);
            out.d.resize(n);
            for (int i = 0; i < n; ++i) out.d[i] = s.next_sign();
            out.signs = out.real = true;
            return out;
        }
        case DiagDesc::Kind::RandomUnitPhase: {
            RngStream s = rng.fork(slot++);
            out.d.resize(n);
            for (int i = 0; i < n; ++i) {
                const double th = kTwoPi * s.next_uniform();
                out.d[i] = cd(std::cos(th), std::sin(th));
            }
            return out;
        }
        case DiagDesc::Kind::RandomScaleSet: {
            RngStream s = rng.fork(slot++);
            if (dd.scale_set.empty()) throw Error("empty scale set");
            out.d.resize(n);
            for (int i = 0; i < n; ++i)
                out.d[i] = dd.scale_set[s.next_index(dd.scale_set.size())];
            out.real = true;
            return out;
        }
        case DiagDesc::Kind::Constant: {
            const double v = dd.scale_set.at(0);
            out.d.assign(n, cd(v, 0.0));
            out.real = true;
            out.signs = (v == 1.0 || v == -1.0);
            return out;
        }
        case DiagDesc::Kind::Explicit: {
            if (static_cast<int>(dd.d.size()) != n)
                throw DimensionMismatch("diagonal length != n");
            out.d = dd.d;
            out.real = true;
            out.signs = true;
            for (cd z : out.d) {
                if (z.imag() != 0.0) out.real = false;
                if (z != cd(1.0, 0.0) && z != cd(-1.0, 0.0)) out.signs = false;
            }
            return out;
        }
    }
    return out;
}

void setup_transform_blocks(Node& nd, const MultiplierSpec& spec, int depth) {
    const int n = spec.n;
    std::vector<int> sizes;
    if (spec.block_split.empty()) {
        if (!is_pow2(n))
            throw DimensionNotSupported(
                "transform families need n = 2^k or an explicit block split");
        sizes = {n};
    } else {
        int total = 0;
        for (int k : spec.block_split) {
            const int s = 1 << k;
            sizes.push_back(s);
            total += s;
        }
        if (total != n) throw DimensionNotSupported("block split does not sum to n");
    }
    int off = 0;
    for (int s : sizes) {
        if (depth > log2i(s))
            throw DimensionNotSupported("abridging depth exceeds a block size");
        nd.block_off.push_back(off);
        nd.block_size.push_back(s);
        off += s;
    }
    nd.depth = depth;
    // composed interleaving permutation, per block
    nd.tr_perm.resize(n);
    std::iota(nd.tr_perm.begin(), nd.tr_perm.end(), 0);
    std::vector<int> tmp(n);
    for (std::size_t b = 0; b < nd.block_off.size(); ++b)
        if (nd.fourier)
            sim_interleave(nd.tr_perm, nd.block_off[b], nd.block_size[b], depth, tmp);
    bool identity = true;
    for (int i = 0; i < n; ++i)
        if (nd.tr_perm[i] != i) { identity = false; break; }
    if (identity) nd.tr_perm.clear();
    if (nd.fourier) {
        nd.tw.resize(nd.block_size.size());
        for (std::size_t b = 0; b < nd.block_size.size(); ++b) {
            const int s = nd.block_size[b];
            nd.tw[b].resize(s / 2);
            for (int j = 0; j < s / 2; ++j)
                nd.tw[b][j] = cd(std::cos(kTwoPi * j / s), std::sin(kTwoPi * j / s));
        }
    }
}

DenseMatrix draw_dense(Node::DenseKind kind, int n, const std::vector<int>& cols,
                       RngStream s) {
    const int l = static_cast<int>(cols.size());
    DenseMatrix B(n, l);
    switch (kind) {
        case Node::DenseKind::Gaussian:
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < l; ++j)
                    B.at(i, j) = s.normal_at(static_cast<std::uint64_t>(i) * n + cols[j]);
            break;
        case Node::DenseKind::SignZero:
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < l; ++j) {
                    const std::uint64_t u =
                        s.u64_at(static_cast<std::uint64_t>(i) * n + cols[j]) % 3;
                    B.at(i, j) = static_cast<double>(static_cast<long long>(u) - 1);
                }
            break;
        case Node::DenseKind::Toeplitz:
            // t_{i-j}, parameters indexed by (i-j) + n-1 in [0, 2n-2]
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < l; ++j)
                    B.at(i, j) = s.normal_at(static_cast<std::uint64_t>(i - cols[j] + n - 1));
            break;
        case Node::DenseKind::Explicit:
            throw Error("draw_dense: explicit payload has no generator");
    }
    return B;
}

std::shared_ptr<Node> resolve(const MultiplierSpec& spec, RngStream& rng, int& slot);

std::shared_ptr<Node> resolve_body(const MultiplierSpec& spec, RngStream& rng, int& slot) {
    auto nd = std::make_shared<Node>();
    nd->n = spec.n;

    if (auto* ah = std::get_if<AbridgedHadamard>(&spec.body)) {
        nd->kind = Node::Kind::Transform;
        nd->fourier = false;
        setup_transform_blocks(*nd, spec, ah->depth);
        nd->perm = resolve_perm(ah->perm, spec.n, rng, slot);
        ResolvedDiag d = resolve_diag(ah->diag, spec.n, rng, slot);
        nd->diag = std::move(d.d);
        nd->diag_signs = d.signs;
        nd->complex_out = !d.real && !nd->diag.empty();
    } else if (auto* af = std::get_if<AbridgedFourier>(&spec.body)) {
        nd->kind = Node::Kind::Transform;
        nd->fourier = true;
        setup_transform_blocks(*nd, spec, af->depth);
        nd->perm = resolve_perm(af->perm, spec.n, rng, slot);
        ResolvedDiag d = resolve_diag(af->diag, spec.n, rng, slot);
        nd->diag = std::move(d.d);
        nd->diag_signs = d.signs;
        // depth-1 abridged DFT is the (real) Hadamard primitive
        nd->complex_out = (af->depth > 1) || (!d.real && !nd->diag.empty());
    } else if (auto* fc = std::get_if<FCirculant>(&spec.body)) {
        nd->kind = Node::Kind::Circulant;
        nd->f = fc->f;
        if (std::abs(std::abs(nd->f) - 1.0) > 1e-12)
            throw Error("f-circulant needs |f| = 1");
        const int q = (fc->q == 0) ? spec.n : fc->q;
        if (q < 1 || q > spec.n) throw DimensionMismatch("circulant q out of range");
        if (!fc->support.empty()) {
            nd->support = fc->support;
            nd->vals = fc->vals;
            if (nd->vals.size() != nd->support.size())
                throw DimensionMismatch("circulant support/values length mismatch");
        } else {
            RngStream s = rng.fork(slot++);
            // q distinct positions
            std::vector<int> pos(spec.n);
            std::iota(pos.begin(), pos.end(), 0);
            for (int i = 0; i < q; ++i)
                std::swap(pos[i], pos[i + static_cast<int>(s.next_index(spec.n - i))]);
            pos.resize(q);
            std::sort(pos.begin(), pos.end());
            nd->support = pos;
            nd->vals.resize(q);
            for (int i = 0; i < q; ++i)
                nd->vals[i] = (fc->values == FCirculant::Values::Gaussian)
                                  ? cd(s.next_normal(), 0.0)
                                  : cd(s.next_sign(), 0.0);
        }
        nd->vals_pm1 = true;
        bool real_vals = true;
        for (cd v : nd->vals) {
            if (v != cd(1.0, 0.0) && v != cd(-1.0, 0.0)) nd->vals_pm1 = false;
            if (v.imag() != 0.0) real_vals = false;
        }
        nd->complex_out = (nd->f.imag() != 0.0) || !real_vals;
        // dense first column: use the DFT diagonalization when n is a power of 2
        if (q > 64 && is_pow2(spec.n)) {
            nd->fourier = true;
            MultiplierSpec full = spec;
            full.block_split.clear();
            setup_transform_blocks(*nd, full, log2i(spec.n));
            const double arg = std::atan2(nd->f.imag(), nd->f.real());
            nd->phi = cd(std::cos(arg / spec.n), std::sin(arg / spec.n));
            nd->dfpow.resize(spec.n);
            std::vector<cd> v(spec.n, cd(0.0, 0.0));
            for (int i = 0; i < q; ++i) v[nd->support[i]] = nd->vals[i];
            for (int i = 0; i < spec.n; ++i) {
                const double th = arg * i / spec.n;
                nd->dfpow[i] = cd(std::cos(th), std::sin(th));
                v[i] *= nd->dfpow[i];
            }
            std::vector<cd> scratch;
            transform_stages(*nd, v, Dir::Forward, nullptr);
            gather(v, nd->tr_perm, scratch);
            nd->fft_eigs.resize(spec.n);
            for (int i = 0; i < spec.n; ++i) nd->fft_eigs[i] = v[i] / double(spec.n);
        }
    } else if (auto* ac = std::get_if<AbridgedFCirculant>(&spec.body)) {
        nd->kind = Node::Kind::AbrCirc;
        nd->fourier = true;
        nd->f = ac->f;
        if (std::abs(std::abs(nd->f) - 1.0) > 1e-12)
            throw Error("abridged f-circulant needs |f| = 1");
        setup_transform_blocks(*nd, spec, ac->depth);
        DiagDesc dd = ac->diag;
        if (dd.kind == DiagDesc::Kind::None) dd = DiagDesc::random_phase();
        ResolvedDiag d = resolve_diag(dd, spec.n, rng, slot);
        nd->diag = std::move(d.d);
        nd->dfpow.resize(spec.n);
        const double arg = std::atan2(nd->f.imag(), nd->f.real());
        for (int i = 0; i < spec.n; ++i) {
            const double th = arg * i;
            nd->dfpow[i] = cd(std::cos(th), std::sin(th));
        }
        nd->complex_out = true;
    } else if (auto* ib = std::get_if<InverseBidiagonal>(&spec.body)) {
        nd->kind = Node::Kind::InvBidiag;
        if (ib->main == 0.0) throw Error("inverse bidiagonal: zero main diagonal");
        nd->main_diag = ib->main;
        nd->offset = ib->offset;
        nd->lower = ib->lower;
        if (ib->offset < 1 || ib->offset >= spec.n)
            throw DimensionMismatch("inverse bidiagonal offset out of range");
        DiagDesc dd = ib->diag;
        if (dd.kind == DiagDesc::Kind::None) dd = DiagDesc::random_sign();
        ResolvedDiag d = resolve_diag(dd, spec.n, rng, slot);
        nd->diag = std::move(d.d);
        nd->diag_signs = d.signs;
        nd->complex_out = !d.real;
        const std::vector<int> perm = resolve_perm(ib->perm, spec.n, rng, slot);
        ResolvedDiag ls = resolve_diag(ib->left_scale, spec.n, rng, slot);
        if (!perm.empty() || !ls.d.empty()) {
            // optional P and diagonal factors wrap the solve as a product
            std::vector<std::shared_ptr<const Node>> chain;
            if (!perm.empty()) {
                auto pn = std::make_shared<Node>();
                pn->kind = Node::Kind::Perm;
                pn->n = spec.n;
                pn->perm = perm;
                chain.push_back(pn);
            }
            if (!ls.d.empty()) {
                auto dn = std::make_shared<Node>();
                dn->kind = Node::Kind::Diag;
                dn->n = spec.n;
                dn->diag = std::move(ls.d);
                dn->diag_signs = ls.signs;
                chain.push_back(dn);
            }
            auto prod = std::make_shared<Node>();
            prod->kind = Node::Kind::Product;
            prod->n = spec.n;
            prod->complex_out = nd->complex_out || !ls.real;
            chain.push_back(nd);
            prod->children = std::move(chain);
            return prod;
        }
    } else if (std::get_if<GaussianDense>(&spec.body)) {
        nd->kind = Node::Kind::Dense;
        nd->dense_kind = Node::DenseKind::Gaussian;
        nd->draw = rng.fork(slot++);
    } else if (std::get_if<SignZeroDense>(&spec.body)) {
        nd->kind = Node::Kind::Dense;
        nd->dense_kind = Node::DenseKind::SignZero;
        nd->draw = rng.fork(slot++);
    } else if (std::get_if<GaussianToeplitz>(&spec.body)) {
        nd->kind = Node::Kind::Dense;
        nd->dense_kind = Node::DenseKind::Toeplitz;
        nd->draw = rng.fork(slot++);
    } else if (auto* ex = std::get_if<ExplicitDense>(&spec.body)) {
        nd->kind = Node::Kind::Dense;
        nd->dense_kind = Node::DenseKind::Explicit;
        nd->payload = ex->B;
        nd->complex_out = ex->B.is_complex();
        if (ex->B.rows() != spec.n) throw DimensionMismatch("explicit dense: rows != n");
    } else if (auto* co = std::get_if<Composite>(&spec.body)) {
        nd->kind = co->product ? Node::Kind::Product : Node::Kind::Sum;
        nd->coeffs = co->coeffs;
        if (!nd->coeffs.empty() && nd->coeffs.size() != co->terms.size())
            throw DimensionMismatch("composite coefficient count mismatch");
        for (const auto& t : co->terms) {
            if (t.n != spec.n) throw DimensionMismatch("composite term dimension mismatch");
            auto ch = resolve(t, rng, slot);
            nd->complex_out = nd->complex_out || ch->complex_out;
            nd->children.push_back(std::move(ch));
        }
        if (nd->children.empty()) throw Error("empty composite");
    } else if (auto* pp = std::get_if<PermutationPrim>(&spec.body)) {
        nd->kind = Node::Kind::Perm;
        PermDesc pd = pp->perm;
        if (pd.kind == PermDesc::Kind::None) pd = PermDesc::random();
        nd->perm = resolve_perm(pd, spec.n, rng, slot);
    } else if (auto* ud = std::get_if<UnitDiagonalPrim>(&spec.body)) {
        nd->kind = Node::Kind::Diag;
        DiagDesc dd = ud->diag;
        if (dd.kind == DiagDesc::Kind::None) dd = DiagDesc::random_sign();
        ResolvedDiag d = resolve_diag(dd, spec.n, rng, slot);
        for (cd z : d.d)
            if (std::abs(std::abs(z) - 1.0) > 1e-12)
                throw Error("unit diagonal primitive needs |d_i| = 1");
        nd->diag = std::move(d.d);
        nd->diag_signs = d.signs;
        nd->complex_out = !d.real;
    } else if (auto* sh = std::get_if<ShiftPrim>(&spec.body)) {
        nd->kind = Node::Kind::Shift;
        nd->f = sh->f;
        nd->shift_transposed = sh->transposed;
        if (sh->f != cd(0.0, 0.0) && std::abs(std::abs(sh->f) - 1.0) > 1e-12)
            throw Error("shift primitive needs f = 0 or |f| = 1");
        nd->complex_out = sh->f.imag() != 0.0;
    } else if (auto* hp = std::get_if<HadamardPrim>(&spec.body)) {
        nd->kind = Node::Kind::HadPrim;
        if (2 * hp->s != spec.n)
            throw DimensionMismatch("hadamard primitive: n must equal 2s");
        nd->hadprim_s = hp->s;
    } else {
        throw Error("unknown multiplier family");
    }
    return nd;
}

std::shared_ptr<Node> resolve(const MultiplierSpec& spec, RngStream& rng, int& slot) {
    if (spec.n < 1) throw DimensionMismatch("multiplier: n < 1");
    return resolve_body(spec, rng, slot);
}

} // namespace

// ---- build / apply -------------------------------------------------------------

FastMultiplier build(const MultiplierSpec& spec, RngStream rng) {
    FastMultiplier m;
    m.record_.spec = spec;
    m.record_.seed = rng.seed();
    m.record_.stream = rng.stream_id();
    m.n_ = spec.n;
    int slot = 0;
    RngStream local = rng;
    auto root = resolve(spec, local, slot);

    int l = spec.cols.l > 0 ? spec.cols.l : spec.n;
    if (l > spec.n) throw DimensionMismatch("column selection l > n");
    m.l_ = l;
    if (spec.cols.kind == ColumnSelection::Kind::Random && l < spec.n) {
        RngStream s = local.fork(100000 + slot);
        std::vector<int> pos(spec.n);
        std::iota(pos.begin(), pos.end(), 0);
        for (int i = 0; i < l; ++i)
            std::swap(pos[i], pos[i + static_cast<int>(s.next_index(spec.n - i))]);
        pos.resize(l);
        std::sort(pos.begin(), pos.end());
        m.cols_ = std::move(pos);
    } else {
        m.cols_.resize(l);
        std::iota(m.cols_.begin(), m.cols_.end(), 0);
    }

    // dense families materialize the selected columns once
    if (root->kind == Node::Kind::Dense && root->dense_kind != Node::DenseKind::Explicit)
        root->payload = draw_dense(root->dense_kind, spec.n, m.cols_, root->draw);
    m.complex_ = root->complex_out;
    m.root_ = std::move(root);
    return m;
}

void FastMultiplier::apply_vec(std::vector<cd>& x, FlopCount* fc) const {
    if (static_cast<int>(x.size()) != n_) throw DimensionMismatch("apply_vec: length != n");
    std::vector<cd> scratch;
    if (root_->kind == Node::Kind::Dense && root_->payload.cols() != n_) {
        // payload holds selected columns only; rebuild the square on demand
        DenseMatrix sq = materialize_square();
        std::vector<cd> y(n_, cd(0, 0));
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) y[i] += sq.cat(i, j) * x[j];
        x.swap(y);
        if (fc) {
            fc->mults += static_cast<long long>(n_) * n_;
            fc->adds += static_cast<long long>(n_) * (n_ - 1);
        }
        return;
    }
    node_apply(*root_, x, Dir::Forward, fc, scratch);
}

void FastMultiplier::apply_vec(std::vector<double>& x, FlopCount* fc) const {
    if (complex_) throw Error("apply_vec: multiplier has complex output");
    if (static_cast<int>(x.size()) != n_) throw DimensionMismatch("apply_vec: length != n");
    if (root_->kind == Node::Kind::Dense && root_->payload.cols() != n_) {
        DenseMatrix sq = materialize_square();
        std::vector<double> y(n_, 0.0);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) y[i] += sq.at(i, j) * x[j];
        x.swap(y);
        if (fc) {
            fc->mults += static_cast<long long>(n_) * n_;
            fc->adds += static_cast<long long>(n_) * (n_ - 1);
        }
        return;
    }
    std::vector<double> scratch;
    node_apply(*root_, x, Dir::Forward, fc, scratch);
}

DenseMatrix FastMultiplier::apply_right(const DenseMatrix& M, FlopCount* fc) const {
    if (M.cols() != n_) throw DimensionMismatch("apply_right: M.cols != n");
    const int m = M.rows();

    // dense payload: plain matrix product on the selected columns
    if (root_->kind == Node::Kind::Dense &&
        static_cast<int>(cols_.size()) == root_->payload.cols()) {
        DenseMatrix out = matmul(M, root_->payload);
        if (fc) {
            fc->mults += static_cast<long long>(m) * n_ * l_;
            fc->adds += static_cast<long long>(m) * (n_ - 1) * l_;
        }
        return out;
    }

    const bool cx = complex_ || M.is_complex();
    DenseMatrix out(m, l_, cx);
    FlopCount total;
#pragma omp parallel
    {
        FlopCount local;
        if (cx) {
            std::vector<cd> row(n_), scratch;
#pragma omp for schedule(static)
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < n_; ++j) row[j] = M.cat(i, j);
                node_apply(*root_, row, Dir::Transposed, fc ? &local : nullptr, scratch);
                for (int j = 0; j < l_; ++j) out.cset(i, j, row[cols_[j]]);
            }
        } else {
            std::vector<double> row(n_), scratch;
#pragma omp for schedule(static)
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < n_; ++j) row[j] = M.at(i, j);
                node_apply(*root_, row, Dir::Transposed, fc ? &local : nullptr, scratch);
                for (int j = 0; j < l_; ++j) out.at(i, j) = row[cols_[j]];
            }
        }
#pragma omp critical
        {
            total.adds += local.adds;
            total.mults += local.mults;
        }
    }
    if (fc) {
        fc->adds += total.adds;
        fc->mults += total.mults;
    }
    return out;
}

DenseMatrix FastMultiplier::materialize() const {
    if (root_->kind == Node::Kind::Dense &&
        static_cast<int>(cols_.size()) == root_->payload.cols() &&
        root_->dense_kind != Node::DenseKind::Explicit)
        return root_->payload;
    DenseMatrix B(n_, l_, complex_);
    std::vector<cd> col(n_), scratch;
    for (int j = 0; j < l_; ++j) {
        std::fill(col.begin(), col.end(), cd(0.0, 0.0));
        col[cols_[j]] = cd(1.0, 0.0);
        node_apply(*root_, col, Dir::Forward, nullptr, scratch);
        for (int i = 0; i < n_; ++i) B.cset(i, j, col[i]);
    }
    return complex_ ? B : B.real_part();
}

DenseMatrix FastMultiplier::materialize_square() const {
    if (root_->kind == Node::Kind::Dense && root_->dense_kind != Node::DenseKind::Explicit) {
        std::vector<int> all(n_);
        std::iota(all.begin(), all.end(), 0);
        return draw_dense(root_->dense_kind, n_, all, root_->draw);
    }
    if (root_->kind == Node::Kind::Dense) {
        if (root_->payload.cols() != n_)
            throw DimensionMismatch("explicit dense payload is not square");
        return root_->payload;
    }
    DenseMatrix B(n_, n_, complex_);
    std::vector<cd> col(n_), scratch;
    for (int j = 0; j < n_; ++j) {
        std::fill(col.begin(), col.end(), cd(0.0, 0.0));
        col[j] = cd(1.0, 0.0);
        node_apply(*root_, col, Dir::Forward, nullptr, scratch);
        for (int i = 0; i < n_; ++i) B.cset(i, j, col[i]);
    }
    return complex_ ? B : B.real_part();
}

} // namespace sketchlra

// ---- audit budgets and unitarity ------------------------------------------------

namespace sketchlra {

std::optional<long long> flop_budget(const MultiplierSpec& spec) {
    const long long n = spec.n;
    if (auto* ah = std::get_if<AbridgedHadamard>(&spec.body)) {
        const bool scaled = ah->diag.kind != DiagDesc::Kind::None;
        return (ah->depth + (scaled ? 1 : 0)) * n; // AH: dn, ASPH: (d+1)n
    }
    if (auto* af = std::get_if<AbridgedFourier>(&spec.body)) {
        const bool scaled = af->diag.kind != DiagDesc::Kind::None;
        // AF: 1.5dn, ASPF: (1.5d+1)n
        return static_cast<long long>((1.5 * af->depth + (scaled ? 1.0 : 0.0)) * n);
    }
    if (auto* fc = std::get_if<FCirculant>(&spec.body)) {
        const long long q = (fc->q == 0) ? n : fc->q;
        const bool real_pm1 = fc->values == FCirculant::Values::PlusMinusOne &&
                              fc->f.imag() == 0.0;
        return real_pm1 ? q * n : (2 * q - 1) * n;
    }
    if (auto* ac = std::get_if<AbridgedFCirculant>(&spec.body))
        return (3 * static_cast<long long>(ac->depth) + 2) * n;
    if (auto* ib = std::get_if<InverseBidiagonal>(&spec.body)) {
        const bool real_case = ib->diag.kind == DiagDesc::Kind::RandomSign ||
                               ib->diag.kind == DiagDesc::Kind::None;
        return real_case ? (n - 1) : (2 * n - 1);
    }
    return std::nullopt;
}

AuditReport flops_audit(const FastMultiplier& mult) {
    AuditReport rep;
    FlopCount fc;
    RngStream probe(0xA0D17, 3);
    if (mult.complex_output()) {
        std::vector<cd> x(mult.n());
        for (auto& z : x) z = cd(probe.next_normal(), probe.next_normal());
        mult.apply_vec(x, &fc);
    } else {
        std::vector<double> x(mult.n());
        for (auto& z : x) z = probe.next_normal();
        mult.apply_vec(x, &fc);
    }
    rep.measured = fc.total();
    auto budget = flop_budget(mult.record().spec);
    if (budget) {
        rep.budget = *budget;
        rep.within = rep.measured <= rep.budget + 4; // O(1) slack
    }
    return rep;
}

std::optional<double> unitary_scale(const MultiplierSpec& spec) {
    if (auto* ah = std::get_if<AbridgedHadamard>(&spec.body)) {
        if (ah->diag.kind == DiagDesc::Kind::None ||
            ah->diag.kind == DiagDesc::Kind::RandomSign ||
            ah->diag.kind == DiagDesc::Kind::RandomUnitPhase)
            return std::pow(2.0, -ah->depth);
        return std::nullopt; // general scaling breaks unitarity
    }
    if (auto* af = std::get_if<AbridgedFourier>(&spec.body)) {
        if (af->diag.kind == DiagDesc::Kind::None ||
            af->diag.kind == DiagDesc::Kind::RandomSign ||
            af->diag.kind == DiagDesc::Kind::RandomUnitPhase)
            return std::pow(2.0, -af->depth);
        return std::nullopt;
    }
    if (auto* ac = std::get_if<AbridgedFCirculant>(&spec.body))
        return std::pow(4.0, -ac->depth);
    if (std::get_if<PermutationPrim>(&spec.body)) return 1.0;
    if (std::get_if<UnitDiagonalPrim>(&spec.body)) return 1.0;
    if (auto* hp = std::get_if<HadamardPrim>(&spec.body)) { (void)hp; return 0.5; }
    return std::nullopt;
}

// ---- serialization ----------------------------------------------------------------
//
// Grammar (one record per line):
//   record  := "n=" int "; cols=" ("leftmost"|"random") ":" int
//              ["; split=" int("+"int)*] "; seed=" u64 "/" u64 "; spec=" expr
//   expr    := fam "(" [kv ("," kv)*] ")" | "sum(" terms ")" | "prod(" exprs ")"
//   terms   := [coef "@"] expr (";" [coef "@"] expr)*
//   fams    := gaussian | b10 | toeplitz | ah | af | circ | acirc | ibd |
//              perm | udiag | shift | hprim
// Randomized parameters serialize as descriptors (rand / sign / phase / set{...});
// the seed replays the drawn values exactly.

namespace {

std::string perm_str(const PermDesc& p) {
    switch (p.kind) {
        case PermDesc::Kind::None: return "none";
        case PermDesc::Kind::Random: return "rand";
        case PermDesc::Kind::Explicit: return "explicit";
    }
    return "none";
}

std::string diag_str(const DiagDesc& d) {
    switch (d.kind) {
        case DiagDesc::Kind::None: return "none";
        case DiagDesc::Kind::RandomSign: return "sign";
        case DiagDesc::Kind::RandomUnitPhase: return "phase";
        case DiagDesc::Kind::RandomScaleSet: {
            std::ostringstream os;
            os << "set{";
            for (std::size_t i = 0; i < d.scale_set.size(); ++i)
                os << (i ? "," : "") << d.scale_set[i];
            os << "}";
            return os.str();
        }
        case DiagDesc::Kind::Constant: {
            std::ostringstream os;
            os.precision(17);
            os << "const:" << d.scale_set.at(0);
            return os.str();
        }
        case DiagDesc::Kind::Explicit: return "explicit";
    }
    return "none";
}

std::string f_str(cd f) {
    std::ostringstream os;
    os.precision(17);
    if (f.imag() == 0.0) os << f.real();
    else os << "c:" << f.real() << ":" << f.imag();
    return os.str();
}

void body_str(std::ostringstream& os, const MultiplierBody& body) {
    os.precision(17);
    if (auto* ah = std::get_if<AbridgedHadamard>(&body)) {
        os << "ah(d=" << ah->depth << ",perm=" << perm_str(ah->perm)
           << ",scale=" << diag_str(ah->diag) << ")";
    } else if (auto* af = std::get_if<AbridgedFourier>(&body)) {
        os << "af(d=" << af->depth << ",perm=" << perm_str(af->perm)
           << ",scale=" << diag_str(af->diag) << ")";
    } else if (auto* fc = std::get_if<FCirculant>(&body)) {
        os << "circ(f=" << f_str(fc->f) << ",q=" << fc->q << ",vals="
           << (fc->values == FCirculant::Values::Gaussian ? "gauss" : "pm1") << ")";
    } else if (auto* ac = std::get_if<AbridgedFCirculant>(&body)) {
        os << "acirc(d=" << ac->depth << ",f=" << f_str(ac->f)
           << ",diag=" << diag_str(ac->diag) << ")";
    } else if (auto* ib = std::get_if<InverseBidiagonal>(&body)) {
        os << "ibd(main=" << ib->main << ",off=" << ib->offset
           << ",side=" << (ib->lower ? "lo" : "up") << ",diag=" << diag_str(ib->diag)
           << ",perm=" << perm_str(ib->perm);
        if (ib->left_scale.kind != DiagDesc::Kind::None)
            os << ",lscale=" << diag_str(ib->left_scale);
        os << ")";
    } else if (std::get_if<GaussianDense>(&body)) {
        os << "gaussian()";
    } else if (std::get_if<SignZeroDense>(&body)) {
        os << "b10()";
    } else if (std::get_if<GaussianToeplitz>(&body)) {
        os << "toeplitz()";
    } else if (std::get_if<ExplicitDense>(&body)) {
        os << "dense()"; // payload is not textual; not replayable from the record
    } else if (auto* co = std::get_if<Composite>(&body)) {
        os << (co->product ? "prod(" : "sum(");
        for (std::size_t i = 0; i < co->terms.size(); ++i) {
            if (i) os << ";";
            if (!co->coeffs.empty() && !co->product && co->coeffs[i] != 1.0)
                os << co->coeffs[i] << "@";
            body_str(os, co->terms[i].body);
        }
        os << ")";
    } else if (auto* pp = std::get_if<PermutationPrim>(&body)) {
        os << "perm(p=" << perm_str(pp->perm) << ")";
    } else if (auto* ud = std::get_if<UnitDiagonalPrim>(&body)) {
        os << "udiag(d=" << diag_str(ud->diag) << ")";
    } else if (auto* sh = std::get_if<ShiftPrim>(&body)) {
        os << "shift(f=" << f_str(sh->f) << ",t=" << (sh->transposed ? 1 : 0) << ")";
    } else if (auto* hp = std::get_if<HadamardPrim>(&body)) {
        os << "hprim(s=" << hp->s << ")";
    }
}

// minimal recursive-descent parser for the same grammar
struct Parser {
    const std::string& s;
    std::size_t p = 0;

    explicit Parser(const std::string& str) : s(str) {}

    void ws() { while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p; }
    bool eat(char c) {
        ws();
        if (p < s.size() && s[p] == c) { ++p; return true; }
        return false;
    }
    void expect(char c) {
        if (!eat(c)) throw ParseError(std::string("expected '") + c + "' in multiplier spec");
    }
    bool peek_word(const char* w) {
        ws();
        return s.compare(p, std::strlen(w), w) == 0;
    }
    std::string ident() {
        ws();
        std::size_t q = p;
        while (q < s.size() && (std::isalnum(static_cast<unsigned char>(s[q])) || s[q] == '_'))
            ++q;
        std::string out = s.substr(p, q - p);
        p = q;
        return out;
    }
    double number() {
        ws();
        std::size_t used = 0;
        double v = std::stod(s.substr(p), &used);
        p += used;
        return v;
    }
    long long integer() { return static_cast<long long>(number()); }

    PermDesc perm_desc() {
        std::string w = ident();
        if (w == "none") return PermDesc::none();
        if (w == "rand") return PermDesc::random();
        throw ParseError("unknown permutation descriptor: " + w);
    }
    DiagDesc diag_desc() {
        if (peek_word("set{")) {
            p += 4;
            std::vector<double> set;
            while (true) {
                set.push_back(number());
                if (!eat(',')) break;
            }
            expect('}');
            return DiagDesc::random_scale(std::move(set));
        }
        if (peek_word("const:")) {
            p += 6;
            return DiagDesc::constant(number());
        }
        std::string w = ident();
        if (w == "none") return DiagDesc::none();
        if (w == "sign") return DiagDesc::random_sign();
        if (w == "phase") return DiagDesc::random_phase();
        throw ParseError("unknown diagonal descriptor: " + w);
    }
    cd f_value() {
        if (peek_word("phase:")) {
            p += 6;
            const double turns = number();
            return cd(std::cos(kTwoPi * turns), std::sin(kTwoPi * turns));
        }
        if (peek_word("c:")) {
            p += 2;
            const double re = number();
            expect(':');
            const double im = number();
            return cd(re, im);
        }
        return cd(number(), 0.0);
    }

    MultiplierBody expr(int n);
    MultiplierBody fam_call(int n, const std::string& name);
};

MultiplierBody Parser::fam_call(int n, const std::string& name) {
    expect('(');
    auto next_kv = [&](std::string& key) {
        ws();
        if (eat(')')) return false;
        eat(',');
        ws();
        key = ident();
        expect('=');
        return true;
    };
    if (name == "gaussian") { expect(')'); return GaussianDense{}; }
    if (name == "b10") { expect(')'); return SignZeroDense{}; }
    if (name == "toeplitz") { expect(')'); return GaussianToeplitz{}; }
    if (name == "ah" || name == "af") {
        int d = 1;
        PermDesc perm;
        DiagDesc diag;
        std::string key;
        while (next_kv(key)) {
            if (key == "d") d = static_cast<int>(integer());
            else if (key == "perm") perm = perm_desc();
            else if (key == "scale") diag = diag_desc();
            else throw ParseError("unknown key " + key);
        }
        if (name == "ah") return AbridgedHadamard{d, perm, diag};
        return AbridgedFourier{d, perm, diag};
    }
    if (name == "circ") {
        FCirculant fc;
        std::string key;
        while (next_kv(key)) {
            if (key == "f") fc.f = f_value();
            else if (key == "q") fc.q = static_cast<int>(integer());
            else if (key == "vals") {
                std::string w = ident();
                fc.values = (w == "gauss") ? FCirculant::Values::Gaussian
                                           : FCirculant::Values::PlusMinusOne;
            } else throw ParseError("unknown key " + key);
        }
        return fc;
    }
    if (name == "acirc") {
        AbridgedFCirculant ac;
        std::string key;
        while (next_kv(key)) {
            if (key == "d") ac.depth = static_cast<int>(integer());
            else if (key == "f") ac.f = f_value();
            else if (key == "diag") ac.diag = diag_desc();
            else throw ParseError("unknown key " + key);
        }
        return ac;
    }
    if (name == "ibd") {
        InverseBidiagonal ib;
        std::string key;
        while (next_kv(key)) {
            if (key == "main") ib.main = number();
            else if (key == "off") ib.offset = static_cast<int>(integer());
            else if (key == "side") ib.lower = (ident() == "lo");
            else if (key == "diag") ib.diag = diag_desc();
            else if (key == "perm") ib.perm = perm_desc();
            else if (key == "lscale") ib.left_scale = diag_desc();
            else throw ParseError("unknown key " + key);
        }
        return ib;
    }
    if (name == "perm") {
        PermutationPrim pp;
        std::string key;
        while (next_kv(key)) {
            if (key == "p") pp.perm = perm_desc();
            else throw ParseError("unknown key " + key);
        }
        return pp;
    }
    if (name == "udiag") {
        UnitDiagonalPrim ud;
        std::string key;
        while (next_kv(key)) {
            if (key == "d") ud.diag = diag_desc();
            else throw ParseError("unknown key " + key);
        }
        return ud;
    }
    if (name == "shift") {
        ShiftPrim sh;
        std::string key;
        while (next_kv(key)) {
            if (key == "f") sh.f = f_value();
            else if (key == "t") sh.transposed = integer() != 0;
            else throw ParseError("unknown key " + key);
        }
        return sh;
    }
    if (name == "hprim") {
        HadamardPrim hp;
        std::string key;
        while (next_kv(key)) {
            if (key == "s") hp.s = static_cast<int>(integer());
            else throw ParseError("unknown key " + key);
        }
        return hp;
    }
    throw ParseError("unknown multiplier family: " + name);
}

MultiplierBody Parser::expr(int n) {
    ws();
    std::string name = ident();
    if (name == "sum" || name == "prod") {
        expect('(');
        Composite co;
        co.product = (name == "prod");
        bool any_coef = false;
        while (true) {
            ws();
            double coef = 1.0;
            // optional "coef @" prefix in sums
            std::size_t save = p;
            if (!co.product) {
                try {
                    const double c = number();
                    if (eat('@')) { coef = c; any_coef = true; }
                    else p = save;
                } catch (...) { p = save; }
            }
            MultiplierSpec term;
            term.n = n;
            term.body = expr(n);
            co.terms.push_back(std::move(term));
            co.coeffs.push_back(coef);
            if (!eat(';')) break;
        }
        expect(')');
        if (!any_coef) co.coeffs.clear();
        return co;
    }
    return fam_call(n, name);
}

} // namespace

std::string to_string(const MultiplierSpec& spec) {
    std::ostringstream os;
    os << "n=" << spec.n << "; cols="
       << (spec.cols.kind == ColumnSelection::Kind::Random ? "random" : "leftmost") << ":"
       << (spec.cols.l > 0 ? spec.cols.l : spec.n);
    if (!spec.block_split.empty()) {
        os << "; split=";
        for (std::size_t i = 0; i < spec.block_split.size(); ++i)
            os << (i ? "+" : "") << spec.block_split[i];
    }
    os << "; spec=";
    body_str(os, spec.body);
    return os.str();
}

std::string to_string(const MultiplierRecord& rec) {
    std::ostringstream os;
    const std::string s = to_string(rec.spec);
    const std::size_t at = s.find("; spec=");
    os << s.substr(0, at) << "; seed=" << rec.seed << "/" << rec.stream << s.substr(at);
    return os.str();
}

namespace {

MultiplierSpec parse_spec_fields(const std::string& text, std::uint64_t* seed,
                                 std::uint64_t* stream) {
    MultiplierSpec spec;
    Parser ps(text);
    auto field = [&](const char* key) {
        ps.ws();
        if (!ps.peek_word(key)) return false;
        ps.p += std::strlen(key);
        return true;
    };
    while (true) {
        ps.ws();
        if (ps.p >= text.size()) break;
        if (field("n=")) {
            spec.n = static_cast<int>(ps.integer());
        } else if (field("cols=")) {
            std::string kind = ps.ident();
            ps.expect(':');
            const int l = static_cast<int>(ps.integer());
            spec.cols = (kind == "random") ? ColumnSelection::random(l)
                                           : ColumnSelection::leftmost(l);
        } else if (field("split=")) {
            while (true) {
                spec.block_split.push_back(static_cast<int>(ps.integer()));
                if (!ps.eat('+')) break;
            }
        } else if (field("seed=")) {
            const auto sd = static_cast<std::uint64_t>(ps.integer());
            ps.expect('/');
            const auto st = static_cast<std::uint64_t>(ps.integer());
            if (seed) *seed = sd;
            if (stream) *stream = st;
        } else if (field("spec=")) {
            spec.body = ps.expr(spec.n);
            break;
        } else {
            throw ParseError("unrecognized field in multiplier record");
        }
        ps.eat(';');
    }
    if (spec.n <= 0) throw ParseError("multiplier record is missing n");
    return spec;
}

} // namespace

MultiplierSpec parse_multiplier(const std::string& text) {
    return parse_spec_fields(text, nullptr, nullptr);
}

MultiplierRecord parse_multiplier_record(const std::string& text) {
    MultiplierRecord rec;
    rec.spec = parse_spec_fields(text, &rec.seed, &rec.stream);
    return rec;
}

// ---- verification checks -----------------------------------------------------------

CirculantDiagReport circulant_diagonalization_check(cd f, const std::vector<cd>& v) {
    const int n = static_cast<int>(v.size());
    if (!is_pow2(n)) throw DimensionNotSupported("check requires n = 2^k");
    if (std::abs(std::abs(f) - 1.0) > 1e-12) throw Error("check requires |f| = 1");
    // g = f^n; lhs = sum v_i Z_g^i
    cd g = 1.0;
    for (int i = 0; i < n; ++i) g *= f;
    DenseMatrix lhs(n, n, true);
    for (int i = 0; i < n; ++i) {
        // column j of Z_g^i has entry at row (j+i) mod n, with g on wraps
        for (int j = 0; j < n; ++j) {
            const int r = (j + i) % n;
            cd val = v[i];
            if (j + i >= n) val *= g;
            lhs.cset(r, j, lhs.cat(r, j) + val);
        }
    }
    // rhs = Df^-1 F^H diag(F Df v) F Df with F = Omega/sqrt(n)
    DenseMatrix Om(n, n, true);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double th = kTwoPi * static_cast<double>((static_cast<long long>(i) * j) % n) / n;
            Om.cset(i, j, cd(std::cos(th), std::sin(th)));
        }
    DenseMatrix Df(n, n, true);
    cd fp = 1.0;
    for (int i = 0; i < n; ++i) {
        Df.cset(i, i, fp);
        fp *= f;
    }
    std::vector<cd> dfv(n);
    for (int i = 0; i < n; ++i) dfv[i] = Df.cat(i, i) * v[i];
    std::vector<cd> d(n, cd(0, 0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d[i] += Om.cat(i, j) * dfv[j];
    DenseMatrix D(n, n, true);
    for (int i = 0; i < n; ++i) D.cset(i, i, d[i]);
    DenseMatrix DfInv(n, n, true);
    for (int i = 0; i < n; ++i) DfInv.cset(i, i, cd(1.0, 0.0) / Df.cat(i, i));
    DenseMatrix rhs = matmul(DfInv, matmul(conj_transpose(Om), matmul(D, matmul(Om, Df))));
    rhs = scale(rhs, 1.0 / n);

    CirculantDiagReport rep;
    rep.lhs_norm = frobenius_norm(sub(lhs, rhs));
    const double base = frobenius_norm(lhs);
    rep.rel = (base > 0) ? rep.lhs_norm / base : rep.lhs_norm;
    rep.holds = rep.rel <= 1e-10;
    return rep;
}

ConditionBoundReport condition_bound_check(int n, int trials, RngStream rng) {
    ConditionBoundReport rep;
    rep.trials = trials;
    rep.bound = std::sqrt(2.0 * n);
    rep.kappa_min = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        MultiplierSpec spec;
        spec.n = n;
        InverseBidiagonal ib;
        ib.main = 1.0;
        ib.offset = 1;
        ib.lower = true;
        ib.diag = (t % 2 == 0) ? DiagDesc::random_sign() : DiagDesc::random_phase();
        spec.body = ib;
        FastMultiplier m = build(spec, rng.fork(t));
        DenseMatrix B = m.materialize_square();
        double kappa;
        if (B.is_complex()) {
            // unit-modulus diagonal conjugation preserves singular values; use
            // the absolute-value pattern, which is real
            DenseMatrix R(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) R.at(i, j) = std::abs(B.cat(i, j));
            kappa = condition_number(R);
        } else {
            kappa = condition_number(B);
        }
        rep.kappa_max = std::max(rep.kappa_max, kappa);
        rep.kappa_min = std::min(rep.kappa_min, kappa);
        if (kappa > rep.bound) ++rep.violations;
    }
    rep.holds = rep.violations == 0;
    return rep;
}

} // namespace sketchlra
