#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kpo/classical.hpp"
#include "kpo/evolve.hpp"
#include "kpo/readout.hpp"

namespace kpo {

// Effective settings for one experiment run; defaults are filled in by the
// CLI per subcommand and echoed into the output directory.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    int instances = 50;
    int truncation = 12;
    double xi0 = 0.5;
    double kerr = 1.0;
    double delta = 1.0;        // single-oscillator detuning
    double p_final = 7.0;
    double duration = 700.0;
    double duration_short = 200.0;  // second ramp of the two-spin experiment
    double dt = 1e-3;
    int runs = 1000;           // classical ensemble repeats
    int workers = 1;
    bool even_sector = true;   // network evolutions only
    bool verbose = false;      // per-instance progress on stderr
    std::filesystem::path out_dir = "out";
    std::filesystem::path instance_file;
};

void echo_config(const ExperimentConfig& cfg, const std::string& kind);

// Dispatch fn(0..n-1) over a small thread pool; results are collected by
// index, so aggregation order never depends on scheduling.
void parallel_for_ordered(int n, int workers, const std::function<void(int)>& fn);

// --- Single-oscillator study: bifurcation diagram, ramp trajectory, phase
// portraits, and Wigner functions below/above threshold. ---
struct SingleKpoSummary {
    double final_abs_x = 0.0;          // classical ramp endpoint
    double stable_branch = 0.0;        // sqrt((p_final - Delta)/K)
    double wigner_low_peak_x = 0.0;    // argmax of W at the below-threshold snapshot
    double wigner_final_min = 0.0;     // most negative W value at the end
    double wigner_final_peak_x = 0.0;  // |x| of the final W maximum
    double cat_fidelity = 0.0;         // final state vs even cat target
    double max_norm_drift = 0.0;
    double max_parity_drift = 0.0;
};

SingleKpoSummary run_single_kpo(const ExperimentConfig& cfg);

// --- Two-oscillator ferromagnetic instance: F(t) = |<ECS(p(t))|psi(t)>|^2
// for a long and a short ramp. ---
struct TwoSpinSummary {
    double final_f_long = 0.0;
    double final_f_short = 0.0;
    double max_norm_drift = 0.0;
    double max_parity_drift = 0.0;
    std::vector<std::pair<double, double>> trace_long, trace_short;
};

TwoSpinSummary run_two_spin_fidelity(const ExperimentConfig& cfg);

// --- Single-instance solvers ---
struct QuantumSolveResult {
    RunReport report;
    OracleResult oracle;
    double max_norm_drift = 0.0;
    double max_parity_drift = 0.0;
};

QuantumSolveResult quantum_solve(const ExperimentConfig& cfg, const IsingProblem& problem,
                                 bool write_files = true);

EnsembleReport classical_solve(const ExperimentConfig& cfg, const IsingProblem& problem,
                               bool write_files = true);

// --- Random-instance benchmark: quantum run vs classical ensemble per
// instance, with histograms and hard-instance flags. ---
struct InstanceResult {
    int id = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    long degeneracy = 0;
    double min_energy = 0.0;
    double lambda_min = 0.0;
    bool hard = false;  // relaxation sign pattern differs from the optimum
    double quantum_success = 0.0, quantum_residual = 0.0;
    double classical_success = 0.0, classical_residual = 0.0;
    int classical_diverged = 0;
};

struct BenchmarkSummary {
    std::vector<InstanceResult> rows;
    int completed = 0;
    int failed = 0;
    int degenerate_excluded = 0;  // reported but left out of the histograms
    double mean_quantum_success = 0.0, mean_classical_success = 0.0;
    double mean_quantum_residual = 0.0, mean_classical_residual = 0.0;
};

BenchmarkSummary run_benchmark(const ExperimentConfig& cfg);

void emit_energy_landscape(const IsingProblem& problem, const OracleResult& oracle,
                           const std::filesystem::path& path);

// --- Hard-instance search (classical trap, quantum pass-through) ---
struct HardInstance {
    IsingProblem problem;
    std::uint64_t seed = 0;
    OracleResult oracle;
    RelaxationSolution relaxation;
};

// Scans random 4-spin instances for one whose lambda_min eigenvector sign
// pattern is a nonglobal single-flip local minimum, then confirms with a
// screening classical ensemble that the trap actually captures the flow.
// min_energy_gap keeps the trap separated from the optimum, which the
// quantum adiabatic passage needs to resolve the two within a finite ramp.
std::optional<HardInstance> find_hard_instance(std::uint64_t seed_start, int max_seeds,
                                               const ExperimentConfig& cfg,
                                               double min_lambda = 0.2,
                                               double min_energy_gap = 0.0,
                                               int screening_runs = 100,
                                               double max_classical_success = 0.05);

// --- Truncation convergence probe: same network evolved at n_max and
// n_max+2; observables should move by less than `tolerance`. ---
struct TruncationConvergence {
    double max_probability_shift = 0.0;
    bool converged = false;
};

TruncationConvergence truncation_convergence_check(const NetworkSpec& spec,
                                                   const PumpSchedule& schedule, double dt,
                                                   int truncation, bool even_sector = true,
                                                   double tolerance = 1e-4);

}  // namespace kpo
