// Command-line harness: input generation, low-rank approximation runs,
// experiment tables, verifier suites, sketched least squares, and the
// HSS/CG pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "sketchlra/bench.hpp"
#include "sketchlra/hss.hpp"
#include "sketchlra/io.hpp"
#include "sketchlra/lsr.hpp"
#include "sketchlra/rangefinder.hpp"

using namespace sketchlra;

namespace {

std::vector<double> column_of(const DenseMatrix& M) {
    if (M.cols() != 1) throw DimensionMismatch("expected a column vector DMAT");
    std::vector<double> v(M.rows());
    for (int i = 0; i < M.rows(); ++i) v[i] = M.at(i, 0);
    return v;
}

int run_gen(const std::string& cls, const std::string& out) {
    DenseMatrix M = generate(parse_input_class(cls));
    write_dmat(out, M);
    std::printf("wrote %dx%d matrix to %s\n", M.rows(), M.cols(), out.c_str());
    return 0;
}

int run_approx(const std::string& in, const std::string& mult_text, double tau,
               int power_iters, int frievalds, std::uint64_t seed,
               const std::string& out_prefix) {
    DenseMatrix M = read_dmat(in);
    MultiplierSpec spec = parse_multiplier(mult_text);
    if (spec.n != M.cols())
        throw DimensionMismatch("multiplier n does not match the input columns");
    DeltaMode mode =
        frievalds > 0 ? DeltaMode::frievalds(frievalds) : DeltaMode::exact();
    RangeResult res = range_find(M, spec, tau, RngStream(seed), power_iters, mode);
    write_dmat(out_prefix + "_Q.dmat", res.Q);
    write_dmat(out_prefix + "_QtM.dmat", res.QtM);
    std::string side = "status=" + std::string(res.success ? "SUCCESS" : "FAILURE") +
                       "\ndelta=" + std::to_string(res.delta) +
                       "\nl_used=" + std::to_string(res.l_used) +
                       "\npower_iterations=" + std::to_string(res.power_iterations) +
                       "\n";
    for (const auto& p : res.provenance) side += "multiplier=" + p + "\n";
    write_text_file(out_prefix + "_provenance.txt", side);
    std::printf("%s  delta=%.6e  (Q: %dx%d)\n", res.success ? "SUCCESS" : "FAILURE",
                res.delta, res.Q.rows(), res.Q.cols());
    return res.success ? 0 : 1;
}

int run_bench(const std::string& config_path, const std::string& out_dir,
              std::uint64_t seed_override, int trials_override, bool no_timing) {
    ExperimentConfig cfg = parse_experiment_config(read_text_file(config_path));
    if (seed_override) cfg.seed = seed_override;
    if (trials_override > 0) cfg.trials = trials_override;
    if (no_timing) cfg.timing = false;
    std::vector<TableRow> rows = run_experiment(cfg);
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir + "/results.csv", to_csv(rows));
    write_text_file(out_dir + "/results.plotdata", to_plotdata(rows));
    std::printf("%s\n", to_csv(rows).c_str());
    std::printf("wrote %s/results.csv and results.plotdata\n", out_dir.c_str());
    return 0;
}

int run_verify(const std::string& suite, std::uint64_t seed) {
    std::vector<std::string> suites;
    if (suite == "all")
        suites = {"appendixB", "multipliers", "bounds", "lsr", "hss"};
    else
        suites = {suite};
    int failures = 0;
    for (const auto& s : suites) {
        VerifierReport rep = run_verifiers(s, seed);
        std::printf("suite %s: %d checks, %d failures\n", s.c_str(), rep.checks,
                    rep.failures);
        for (const auto& line : rep.lines) std::printf("  %s\n", line.c_str());
        failures += rep.failures;
    }
    return failures == 0 ? 0 : 1;
}

int run_lsr(const std::string& a_path, const std::string& b_path, int k,
            const std::string& sketch, std::uint64_t seed) {
    LsrProblem p{read_dmat(a_path), column_of(read_dmat(b_path))};
    if (k <= 0) {
        std::vector<double> x = solve_exact(p);
        std::printf("exact residual %.9e\n", residual_norm(p, x));
        for (double v : x) std::printf("%.17g\n", v);
        return 0;
    }
    SketchKind kind = SketchKind::Gaussian;
    if (sketch == "hadamard") kind = SketchKind::HadamardRows;
    else if (sketch == "countsketch") kind = SketchKind::CountSketch;
    else if (sketch != "gaussian") throw ParseError("unknown sketch: " + sketch);
    SketchedSolution s = solve_sketched(p, k, kind, RngStream(seed));
    std::printf("sketch=%s k=%d residual=%.9e optimal=%.9e ratio=%.4f%s\n",
                s.sketch.c_str(), s.k, s.residual, s.opt_residual,
                s.residual / std::max(s.opt_residual, 1e-300),
                s.sketch_rank_deficient ? " (sketch rank deficient)" : "");
    for (double v : s.x) std::printf("%.17g\n", v);
    return 0;
}

int run_hss(const std::string& in, int r, double xi, const std::string& sketch,
            std::uint64_t seed, const std::string& out_dir) {
    DenseMatrix M = read_dmat(in);
    HssSketch sk = (sketch == "hadamard") ? HssSketch::Hadamard : HssSketch::Gaussian;
    HssMatrix H = hss_compress(M, r, xi, sk, RngStream(seed));
    const double rec = frobenius_norm(sub(H.reconstruct_dense(), M)) /
                       std::max(frobenius_norm(M), 1e-300);
    FlopCount fc;
    std::vector<double> probe(M.rows(), 1.0);
    (void)H.matvec(probe, &fc);
    std::printf("hss: n=%d r=%d leaf=%d levels=%d nested=%d\n", H.n(), H.rank(),
                H.leaf_size(), H.levels(), H.nested() ? 1 : 0);
    std::printf("reconstruction rel error %.3e; matvec %lld flops (dense %lld)\n", rec,
                fc.total(), 2LL * M.rows() * M.rows() - M.rows());
    if (!out_dir.empty()) {
        H.save(out_dir);
        std::printf("saved to %s\n", out_dir.c_str());
    }
    return 0;
}

int run_cg(const std::string& in, const std::string& b_path, double tol, int max_iters,
           int hss_r, double hss_xi, std::uint64_t seed) {
    DenseMatrix M = read_dmat(in);
    std::vector<double> b = column_of(read_dmat(b_path));
    CgResult res;
    if (hss_r >= 0) {
        AcceleratedCgReport rep = accelerated_cg(M, hss_r, hss_xi, b, tol, max_iters,
                                                 HssSketch::Gaussian, RngStream(seed));
        res = rep.cg;
        std::printf("accelerated cg: per-iteration %lld flops vs dense %lld\n",
                    rep.matvec_flops, rep.dense_matvec_flops);
    } else {
        auto apply = [&](const double* x, double* y) { matvec(M, x, y); };
        res = cg_solve(apply, M.rows(), b, tol, max_iters);
    }
    std::printf("cg: %s in %d iterations, final relative residual %.3e\n",
                res.converged ? "converged" : "stopped", res.iterations,
                res.residual_history.empty() ? 0.0 : res.residual_history.back());
    for (double v : res.x) std::printf("%.17g\n", v);
    return res.converged ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"randomized low-rank approximation with structured sparse multipliers"};
    app.require_subcommand(1);

    std::string cls = "svd:n=256,r=8", out = "out.dmat";
    auto* gen = app.add_subcommand("gen", "generate a test input matrix");
    gen->add_option("--class", cls, "input class, e.g. svd:n=256,r=8 | laplacian:n=200 | "
                                    "fd:m=88,n=160 | factor-gaussian:n=256,r=8 | "
                                    "adversarial:n=64,r=4");
    gen->add_option("--out", out, "output DMAT path");

    std::string in, mult = "n=256; cols=leftmost:8; spec=gaussian()", prefix = "approx";
    double tau = 1e-6;
    int power = 0, frievalds = 0;
    std::uint64_t seed = 1;
    auto* ap = app.add_subcommand("approx", "run the range finder on a DMAT input");
    ap->add_option("--in", in, "input matrix (DMAT)")->required();
    ap->add_option("--mult", mult, "multiplier record (see README grammar)");
    ap->add_option("--tau", tau, "success tolerance on the residual norm");
    ap->add_option("--power-iters", power, "power-scheme iterations");
    ap->add_option("--frievalds", frievalds, "estimate delta with this many probes");
    ap->add_option("--seed", seed, "randomization seed");
    ap->add_option("--out-prefix", prefix, "prefix for Q/QtM/provenance outputs");

    std::string config, bench_out = "bench_out";
    std::uint64_t bseed = 0;
    int btrials = 0;
    bool no_timing = false;
    auto* be = app.add_subcommand("bench", "reproduce experiment tables from a config");
    be->add_option("--config", config, "key=value config file")->required();
    be->add_option("--out", bench_out, "output directory");
    be->add_option("--seed", bseed, "master seed override");
    be->add_option("--trials", btrials, "trial count override");
    be->add_flag("--no-timing", no_timing, "zero the time column (byte-reproducible)");

    std::string suite = "all";
    std::uint64_t vseed = 1;
    auto* ve = app.add_subcommand("verify", "run a verifier suite");
    ve->add_option("--suite", suite, "appendixB|multipliers|bounds|lsr|hss|all");
    ve->add_option("--seed", vseed, "seed");

    std::string apath, bpath, sketch = "gaussian";
    int k = 0;
    std::uint64_t lseed = 1;
    auto* ls = app.add_subcommand("lsr", "least squares, exact or sketched");
    ls->add_option("--A", apath, "matrix (DMAT)")->required();
    ls->add_option("--b", bpath, "right-hand side (DMAT column)")->required();
    ls->add_option("--k", k, "sketch rows (0 = exact solve)");
    ls->add_option("--sketch", sketch, "gaussian|hadamard|countsketch");
    ls->add_option("--seed", lseed, "seed");

    std::string hin, hout;
    int hr = 4;
    double hxi = 1e-8;
    std::string hsketch = "gaussian";
    std::uint64_t hseed = 1;
    auto* hs = app.add_subcommand("hss", "compress a matrix into HSS form");
    hs->add_option("--in", hin, "input matrix (DMAT)")->required();
    hs->add_option("--r", hr, "generator rank");
    hs->add_option("--xi", hxi, "approximation tolerance");
    hs->add_option("--sketch", hsketch, "gaussian|hadamard");
    hs->add_option("--seed", hseed, "seed");
    hs->add_option("--out", hout, "directory for the serialized form");

    std::string cin_, cb;
    double ctol = 1e-10;
    int citers = 200, chssr = -1;
    double chssxi = 1e-8;
    std::uint64_t cseed = 1;
    auto* cg = app.add_subcommand("cg", "conjugate gradient solve (spd input)");
    cg->add_option("--in", cin_, "matrix (DMAT)")->required();
    cg->add_option("--b", cb, "right-hand side (DMAT column)")->required();
    cg->add_option("--tol", ctol, "relative residual tolerance");
    cg->add_option("--max-iters", citers, "iteration cap");
    cg->add_option("--hss-r", chssr, "accelerate through HSS at this rank (-1: dense)");
    cg->add_option("--hss-xi", chssxi, "HSS tolerance");
    cg->add_option("--seed", cseed, "seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return run_gen(cls, out);
        if (ap->parsed()) return run_approx(in, mult, tau, power, frievalds, seed, prefix);
        if (be->parsed()) return run_bench(config, bench_out, bseed, btrials, no_timing);
        if (ve->parsed()) return run_verify(suite, vseed);
        if (ls->parsed()) return run_lsr(apath, bpath, k, sketch, lseed);
        if (hs->parsed()) return run_hss(hin, hr, hxi, hsketch, hseed, hout);
        if (cg->parsed()) return run_cg(cin_, cb, ctol, citers, chssr, chssxi, cseed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
