// kpolab: experiment runner for the KPO-network Ising laboratory.
//
// Subcommands mirror the studies the library supports: single-kpo,
// two-spin-fidelity, quantum-solve, classical-solve, benchmark, landscape.
// Exit codes: 0 success, 1 configuration error, 2 numerical failure,
// 3 capacity exceeded.

#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>

#include "kpo/experiments.hpp"

namespace {

struct CommonOptions {
    kpo::ExperimentConfig cfg;
    std::string out_dir;
    std::string instance_file;
    std::string config_file;
};

// Flat key=value file; '#' starts a comment. Precedence is command line
// over file over built-in defaults, so only options not given on the
// command line are filled from the file.
void apply_config_file(CLI::App* cmd, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw kpo::IoError("cannot open config file " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw kpo::ValidationError("config line " + std::to_string(line_no) +
                                       " is not key=value");
        auto trim = [](std::string v) {
            const auto b = v.find_first_not_of(" \t");
            const auto e = v.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr)
            throw kpo::ValidationError("unknown config key '" + key + "' for subcommand " +
                                       cmd->get_name());
        if (opt->count() > 0) continue;  // command line wins
        try {
            opt->add_result(value);
            opt->run_callback();
        } catch (const CLI::Error&) {
            throw kpo::ValidationError("bad value for config key '" + key + "'");
        }
    }
}

void add_common_options(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_file, "flat key=value configuration file");
    cmd->add_option("--seed", opts.cfg.seed, "base RNG seed");
    cmd->add_option("--truncation", opts.cfg.truncation, "per-mode photon cutoff n_max");
    cmd->add_option("--xi0", opts.cfg.xi0, "coupling strength xi0 (units of K)");
    cmd->add_option("--kerr", opts.cfg.kerr, "Kerr coefficient K");
    cmd->add_option("--p-final", opts.cfg.p_final, "final pump amplitude (units of K)");
    cmd->add_option("--duration", opts.cfg.duration, "ramp duration (units of 1/K)");
    cmd->add_option("--dt", opts.cfg.dt, "integrator step (units of 1/K)");
    cmd->add_option("--workers", opts.cfg.workers, "parallel worker count");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_flag("!--no-even-sector", opts.cfg.even_sector,
                  "disable the even-parity sector restriction");
}

kpo::IsingProblem load_instance(const CommonOptions& opts) {
    if (opts.instance_file.empty())
        throw kpo::ValidationError("an instance file is required");
    return kpo::read_instance_json(opts.instance_file);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kerr-parametric-oscillator network laboratory"};
    app.require_subcommand(1);

    CommonOptions single, two_spin, qsolve, csolve, bench, landscape;

    CLI::App* cmd_single = app.add_subcommand("single-kpo", "single-oscillator study");
    single.cfg.truncation = 20;
    single.cfg.p_final = 5.0;
    single.cfg.duration = 500.0;
    single.out_dir = "out/single-kpo";
    add_common_options(cmd_single, single);
    cmd_single->add_option("--delta", single.cfg.delta, "detuning Delta (units of K)");

    CLI::App* cmd_two = app.add_subcommand("two-spin-fidelity",
                                           "ferromagnetic pair, target-state fidelity");
    two_spin.cfg.truncation = 20;
    two_spin.cfg.p_final = 5.0;
    two_spin.cfg.duration = 500.0;
    two_spin.cfg.duration_short = 200.0;
    two_spin.out_dir = "out/two-spin-fidelity";
    add_common_options(cmd_two, two_spin);
    cmd_two->add_option("--duration-short", two_spin.cfg.duration_short,
                        "second, faster ramp duration");

    CLI::App* cmd_q = app.add_subcommand("quantum-solve", "solve one instance quantum-mechanically");
    qsolve.out_dir = "out/quantum-solve";
    add_common_options(cmd_q, qsolve);
    cmd_q->add_option("instance", qsolve.instance_file, "instance JSON file")->required();

    CLI::App* cmd_c = app.add_subcommand("classical-solve", "mean-field ensemble on one instance");
    csolve.out_dir = "out/classical-solve";
    add_common_options(cmd_c, csolve);
    cmd_c->add_option("instance", csolve.instance_file, "instance JSON file")->required();
    cmd_c->add_option("--runs", csolve.cfg.runs, "ensemble repeats");

    CLI::App* cmd_b = app.add_subcommand("benchmark", "random-instance quantum vs classical batch");
    bench.out_dir = "out/benchmark";
    add_common_options(cmd_b, bench);
    cmd_b->add_option("--instances", bench.cfg.instances, "number of random instances");
    cmd_b->add_option("--runs", bench.cfg.runs, "classical repeats per instance");

    CLI::App* cmd_l = app.add_subcommand("landscape", "energy/distance table of one instance");
    landscape.out_dir = "out/landscape";
    add_common_options(cmd_l, landscape);
    cmd_l->add_option("instance", landscape.instance_file, "instance JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    auto finalize = [](CLI::App* cmd, CommonOptions& opts) {
        apply_config_file(cmd, opts.config_file);
        opts.cfg.out_dir = opts.out_dir;
        opts.cfg.instance_file = opts.instance_file;
        if (opts.cfg.workers < 1)
            opts.cfg.workers = std::max(1u, std::thread::hardware_concurrency());
    };

    try {
        if (cmd_single->parsed()) {
            finalize(cmd_single, single);
            const auto summary = kpo::run_single_kpo(single.cfg);
            std::cout << "final |x| = " << summary.final_abs_x
                      << " (stable branch " << summary.stable_branch << ")\n"
                      << "cat fidelity = " << summary.cat_fidelity
                      << ", Wigner minimum = " << summary.wigner_final_min << '\n';
        } else if (cmd_two->parsed()) {
            finalize(cmd_two, two_spin);
            const auto summary = kpo::run_two_spin_fidelity(two_spin.cfg);
            std::cout << "final fidelity: T=" << two_spin.cfg.duration << " -> "
                      << summary.final_f_long << ", T=" << two_spin.cfg.duration_short
                      << " -> " << summary.final_f_short << '\n';
        } else if (cmd_q->parsed()) {
            finalize(cmd_q, qsolve);
            kpo::echo_config(qsolve.cfg, "quantum-solve");
            const auto result = kpo::quantum_solve(qsolve.cfg, load_instance(qsolve));
            std::cout << "success probability = " << result.report.success_probability
                      << ", residual energy = " << result.report.residual_energy << '\n';
        } else if (cmd_c->parsed()) {
            finalize(cmd_c, csolve);
            kpo::echo_config(csolve.cfg, "classical-solve");
            const auto report = kpo::classical_solve(csolve.cfg, load_instance(csolve));
            std::cout << "success probability = " << report.report.success_probability
                      << ", residual energy = " << report.report.residual_energy
                      << " (" << report.diverged_runs << " diverged)\n";
        } else if (cmd_b->parsed()) {
            finalize(cmd_b, bench);
            const auto summary = kpo::run_benchmark(bench.cfg);
            std::cout << "instances completed " << summary.completed << ", failed "
                      << summary.failed << '\n'
                      << "mean success: quantum " << summary.mean_quantum_success
                      << " vs classical " << summary.mean_classical_success << '\n'
                      << "mean residual: quantum " << summary.mean_quantum_residual
                      << " vs classical " << summary.mean_classical_residual << '\n';
        } else if (cmd_l->parsed()) {
            finalize(cmd_l, landscape);
            kpo::echo_config(landscape.cfg, "landscape");
            const kpo::IsingProblem problem = load_instance(landscape);
            const kpo::OracleResult oracle = kpo::brute_force_solve(problem);
            kpo::emit_energy_landscape(problem, oracle,
                                       landscape.cfg.out_dir / "landscape.csv");
            std::cout << "min energy = " << oracle.min_energy << ", degeneracy = "
                      << oracle.degeneracy << '\n';
        }
    } catch (const kpo::CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << '\n';
        return 3;
    } catch (const kpo::IntegrationError& e) {
        std::cerr << "integration failure: " << e.what() << '\n';
        return 2;
    } catch (const kpo::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
