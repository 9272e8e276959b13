#ifndef SKETCHLRA_BENCH_HPP
#define SKETCHLRA_BENCH_HPP

#include <array>
#include <string>
#include <vector>

#include "sketchlra/multipliers.hpp"
#include "sketchlra/testmatrices.hpp"

namespace sketchlra {

// named multiplier classes of the experiment suite (gaussian, 3-ah, 3-asph,
// 3-aph, 3-apf, b10, toeplitz, circulant, circulant-pm1, sparse-circ10,
// set3, combo1..combo8, class0..class17)
MultiplierSpec multiplier_class(const std::string& name, int n, int l);
std::vector<std::string> known_multiplier_classes();

struct ExperimentConfig {
    InputClass input;                        // kind template; sizes below
    std::vector<std::array<int, 3>> sizes;   // (m, n, r)
    std::vector<std::string> classes;
    int l_extra = 0;                         // l = r + l_extra
    int trials = 100;
    std::uint64_t seed = 1;
    int power_iters = 0;
    double xi = 1e-5;
    double tau_factor = 10.0;                // tau = tau_factor * xi * ||M||
    bool timing = true;                      // wall-time column; off for
                                             // byte-reproducible output
};

ExperimentConfig parse_experiment_config(const std::string& text);

struct TableRow {
    std::string cls;
    int n = 0, r = 0;
    double mean = 0.0, stddev = 0.0, maxv = 0.0;
    double time_ms = 0.0;
    double flops = 0.0; // one structured vector application
};

std::vector<TableRow> run_experiment(const ExperimentConfig& cfg);

std::string to_csv(const std::vector<TableRow>& rows);
std::vector<TableRow> parse_csv(const std::string& text);
std::string to_plotdata(const std::vector<TableRow>& rows);

struct VerifierReport {
    std::vector<std::string> lines;
    int checks = 0;
    int failures = 0;
    bool ok() const { return failures == 0; }
};

// suite names: appendixB | bounds | multipliers | lsr | hss
VerifierReport run_verifiers(const std::string& suite, std::uint64_t seed = 1);

} // namespace sketchlra

#endif
