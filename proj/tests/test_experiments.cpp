#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kpo/experiments.hpp"

using namespace kpo;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("kpo_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ExperimentConfig tiny_benchmark_config(const fs::path& out) {
    ExperimentConfig cfg;
    cfg.seed = 3;
    cfg.instances = 2;
    cfg.truncation = 6;
    cfg.p_final = 2.0;
    cfg.duration = 2.0;
    cfg.dt = 1e-3;
    cfg.runs = 5;
    cfg.workers = 1;
    cfg.out_dir = out;
    return cfg;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(KPO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("parallel_for_ordered covers every index exactly once") {
    std::vector<std::atomic<int>> hits(37);
    parallel_for_ordered(37, 4, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);
}

TEST_CASE("config echo lists the effective settings") {
    const fs::path out = temp_dir("echo");
    ExperimentConfig cfg;
    cfg.out_dir = out;
    cfg.p_final = 6.5;
    echo_config(cfg, "benchmark");
    const std::string text = slurp(out / "config.echo");
    CHECK(text.find("kind=benchmark") != std::string::npos);
    CHECK(text.find("p-final=6.5") != std::string::npos);
    CHECK(text.find("seed=1") != std::string::npos);
    fs::remove_all(out);
}

TEST_CASE("energy landscape rows cover the pair space") {
    const IsingProblem problem = random_instance(4, 9);
    const OracleResult oracle = brute_force_solve(problem);
    const fs::path out = temp_dir("landscape");
    emit_energy_landscape(problem, oracle, out / "landscape.csv");

    std::ifstream in(out / "landscape.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "config_bits,ising_energy,distance_to_optimum");
    int rows = 0;
    bool optimum_row = false;
    while (std::getline(in, line)) {
        ++rows;
        const auto last_comma = line.rfind(',');
        if (std::stod(line.substr(last_comma + 1)) == 0.0) optimum_row = true;
    }
    CHECK(rows == 8);
    CHECK(optimum_row);
    fs::remove_all(out);
}

TEST_CASE("single-oscillator study emits its artifacts and is reproducible") {
    ExperimentConfig cfg;
    cfg.truncation = 10;
    cfg.p_final = 3.0;
    cfg.duration = 2.0;  // short ramp: artifact check, not physics
    cfg.dt = 1e-3;
    cfg.out_dir = temp_dir("single_a");
    run_single_kpo(cfg);
    for (const char* name :
         {"bifurcation_diagram.csv", "classical_trajectory.csv", "phase_portrait_low.csv",
          "phase_portrait_high.csv", "wigner_low.csv", "wigner_final.csv",
          "quantum_monitors.csv", "summary.json", "config.echo"})
        CHECK(fs::exists(cfg.out_dir / name));

    ExperimentConfig again = cfg;
    again.out_dir = temp_dir("single_b");
    run_single_kpo(again);
    CHECK(slurp(cfg.out_dir / "classical_trajectory.csv") ==
          slurp(again.out_dir / "classical_trajectory.csv"));
    CHECK(slurp(cfg.out_dir / "wigner_final.csv") == slurp(again.out_dir / "wigner_final.csv"));
    fs::remove_all(cfg.out_dir);
    fs::remove_all(again.out_dir);
}

TEST_CASE("two-spin fidelity starts at one and writes both traces") {
    ExperimentConfig cfg;
    cfg.truncation = 8;
    cfg.p_final = 2.0;
    cfg.duration = 30.0;
    cfg.duration_short = 12.0;
    cfg.dt = 1e-3;
    cfg.out_dir = temp_dir("twospin");
    const TwoSpinSummary summary = run_two_spin_fidelity(cfg);
    CHECK(summary.trace_long.front().second == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(summary.trace_short.front().second == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fs::exists(cfg.out_dir / "fidelity_T30.csv"));
    CHECK(fs::exists(cfg.out_dir / "fidelity_T12.csv"));
    CHECK(summary.max_norm_drift <= 1e-6);
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("quantum and classical solvers agree on an easy instance") {
    Eigen::MatrixXd j(2, 2);
    j << 0, 1, 1, 0;
    const IsingProblem ferro(2, j);

    ExperimentConfig cfg;
    cfg.truncation = 12;
    cfg.p_final = 5.0;
    cfg.duration = 100.0;  // measured success 0.966; T = 50 is diabatic
    cfg.dt = 1e-3;
    cfg.runs = 50;
    cfg.out_dir = temp_dir("solve");
    cfg.even_sector = true;

    const QuantumSolveResult q = quantum_solve(cfg, ferro, true);
    CHECK(q.report.success_probability >= 0.9);
    CHECK(q.oracle.min_energy == doctest::Approx(-1.0));
    CHECK(fs::exists(cfg.out_dir / "report.json"));
    CHECK(fs::exists(cfg.out_dir / "distribution.csv"));

    cfg.duration = 500.0;
    const EnsembleReport c = classical_solve(cfg, ferro, true);
    CHECK(c.report.success_probability >= 0.95);
    CHECK(c.diverged_runs == 0);
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("tiny benchmark produces consistent books") {
    const fs::path out = temp_dir("bench_a");
    const BenchmarkSummary summary = run_benchmark(tiny_benchmark_config(out));
    CHECK(summary.completed + summary.failed == 2);
    CHECK(summary.failed == 0);
    for (const char* name :
         {"per_instance.csv", "success_hist_quantum.csv", "success_hist_classical.csv",
          "residual_hist_quantum.csv", "residual_hist_classical.csv", "summary.json"})
        CHECK(fs::exists(out / name));
    CHECK(fs::exists(out / "instances" / "instance_000.json"));
    CHECK(fs::exists(out / "reports" / "instance_001_quantum.csv"));

    // byte-identical rerun
    const fs::path out_b = temp_dir("bench_b");
    run_benchmark(tiny_benchmark_config(out_b));
    CHECK(slurp(out / "per_instance.csv") == slurp(out_b / "per_instance.csv"));
    fs::remove_all(out);
    fs::remove_all(out_b);
}

TEST_CASE("benchmark quarantines failing instances and keeps counting") {
    const fs::path out = temp_dir("bench_q");
    ExperimentConfig cfg = tiny_benchmark_config(out);
    cfg.truncation = 44;  // capacity error per instance
    const BenchmarkSummary summary = run_benchmark(cfg);
    CHECK(summary.completed == 0);
    CHECK(summary.failed == 2);
    for (const InstanceResult& row : summary.rows) {
        CHECK_FALSE(row.ok);
        CHECK(row.error.find("limit") != std::string::npos);
    }
    CHECK(fs::exists(out / "per_instance.csv"));
    fs::remove_all(out);
}

TEST_CASE("truncation convergence probe settles on an easy ramp") {
    Eigen::MatrixXd j(2, 2);
    j << 0, 1, 1, 0;
    const NetworkSpec spec = NetworkSpec::with_rule_detunings(IsingProblem(2, j), 0.5);
    const TruncationConvergence conv =
        truncation_convergence_check(spec, PumpSchedule(2.0, 20.0), 1e-3, 10);
    CHECK(conv.converged);
    CHECK(conv.max_probability_shift <= 1e-4);
}

TEST_CASE("hard instance search rejects easy instances and reports the trap") {
    ExperimentConfig cfg;
    cfg.xi0 = 0.5;
    cfg.p_final = 7.0;
    cfg.duration = 700.0;
    cfg.dt = 1e-3;
    cfg.workers = 1;
    // Loose screening keeps this cheap; seed 25 is the first structural hit.
    const auto hard = find_hard_instance(1, 30, cfg, 0.2, 0.0, 10, 1.0);
    REQUIRE(hard.has_value());
    CHECK(hard->seed == 25);
    const OracleResult oracle = brute_force_solve(hard->problem);
    CHECK(distance(hard->relaxation.signs, oracle.optimal_pair) != 0);
    CHECK(energy(hard->problem, hard->relaxation.signs) > oracle.min_energy);
}

TEST_CASE("CLI maps failures onto the documented exit codes") {
    const fs::path out = temp_dir("cli");
    const fs::path inst = out / "ferro.json";
    Eigen::MatrixXd j(2, 2);
    j << 0, 1, 1, 0;
    write_instance_json(IsingProblem(2, j), inst);

    CHECK(run_cli("landscape " + inst.string() + " --out " + (out / "l").string()) == 0);
    CHECK(fs::exists(out / "l" / "landscape.csv"));

    CHECK(run_cli("landscape " + (out / "missing.json").string() + " --out " +
                  (out / "l2").string()) == 1);
    CHECK(run_cli("bogus-subcommand") == 1);

    CHECK(run_cli("quantum-solve " + inst.string() + " --truncation 2100 --duration 1 --out " +
                  (out / "q").string()) == 3);

    // config file < command line precedence
    const fs::path cfg_file = out / "run.cfg";
    std::ofstream(cfg_file) << "duration=2.0\np-final=1.0\ntruncation=6\n";
    CHECK(run_cli("quantum-solve " + inst.string() + " --config " + cfg_file.string() +
                  " --p-final 2.0 --out " + (out / "qc").string()) == 0);
    const std::string echo = slurp(out / "qc" / "config.echo");
    CHECK(echo.find("p-final=2") != std::string::npos);   // CLI wins
    CHECK(echo.find("duration=2") != std::string::npos);  // file fills the rest
    CHECK(echo.find("truncation=6") != std::string::npos);
    fs::remove_all(out);
}

}  // TEST_SUITE
