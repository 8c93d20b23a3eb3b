#include "kpo/experiments.hpp"

#include <atomic>
#include <iostream>
#include <sstream>
#include <cmath>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "kpo/io.hpp"

namespace kpo {

namespace {

std::string instance_name(int id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "instance_%03d", id);
    return buf;
}

void write_histogram_csv(const std::vector<double>& values, double lo, double bin_width,
                         int bins, const std::filesystem::path& path) {
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        int b = static_cast<int>(std::floor((v - lo) / bin_width));
        b = std::clamp(b, 0, bins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    CsvWriter csv(path, {"bin_lo", "bin_hi", "count"});
    for (int b = 0; b < bins; ++b)
        csv.write_row({format_double(lo + b * bin_width), format_double(lo + (b + 1) * bin_width),
                       std::to_string(counts[static_cast<std::size_t>(b)])});
}

// Phase-portrait backing data: classical energy on a rectangular grid.
void write_energy_contours(const KpoParams& params, double p, double extent, int points,
                           const std::filesystem::path& path) {
    CsvWriter csv(path, {"x", "y", "energy"});
    const Eigen::VectorXd axis = uniform_grid(-extent, extent, points);
    for (Eigen::Index ix = 0; ix < axis.size(); ++ix)
        for (Eigen::Index iy = 0; iy < axis.size(); ++iy) {
            Eigen::VectorXd x(1), y(1);
            x << axis(ix);
            y << axis(iy);
            csv.write_row({format_double(axis(ix)), format_double(axis(iy)),
                           format_double(classical_energy(PhaseState(x, y), params, p))});
        }
}

void write_report_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

}  // namespace

void echo_config(const ExperimentConfig& cfg, const std::string& kind) {
    ensure_directory(cfg.out_dir);
    std::ofstream out(cfg.out_dir / "config.echo");
    if (!out) throw IoError("cannot write config echo");
    out << "kind=" << kind << '\n'
        << "seed=" << cfg.seed << '\n'
        << "instances=" << cfg.instances << '\n'
        << "truncation=" << cfg.truncation << '\n'
        << "xi0=" << format_double(cfg.xi0) << '\n'
        << "kerr=" << format_double(cfg.kerr) << '\n'
        << "delta=" << format_double(cfg.delta) << '\n'
        << "p-final=" << format_double(cfg.p_final) << '\n'
        << "duration=" << format_double(cfg.duration) << '\n'
        << "duration-short=" << format_double(cfg.duration_short) << '\n'
        << "dt=" << format_double(cfg.dt) << '\n'
        << "runs=" << cfg.runs << '\n'
        << "workers=" << cfg.workers << '\n'
        << "even-sector=" << (cfg.even_sector ? 1 : 0) << '\n'
        << "instance-file=" << cfg.instance_file.string() << '\n';
}

void parallel_for_ordered(int n, int workers, const std::function<void(int)>& fn) {
    const int pool = std::max(1, std::min(workers, n));
    if (pool == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(pool));
    for (int w = 0; w < pool; ++w)
        threads.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : threads) th.join();
}

SingleKpoSummary run_single_kpo(const ExperimentConfig& cfg) {
    echo_config(cfg, "single-kpo");
    const KpoParams params(cfg.kerr, cfg.delta);
    const NetworkSpec spec = NetworkSpec::single(params);
    const PumpSchedule schedule(cfg.p_final, cfg.duration);

    SingleKpoSummary summary;
    summary.stable_branch = std::sqrt(std::max(0.0, (cfg.p_final - cfg.delta) / cfg.kerr));

    // Bifurcation diagram: fixed-point branches over the pump range.
    {
        CsvWriter csv(cfg.out_dir / "bifurcation_diagram.csv", {"p", "branch", "x", "stability"});
        const Eigen::VectorXd ps = uniform_grid(0.0, cfg.p_final, 201);
        for (Eigen::Index i = 0; i < ps.size(); ++i) {
            const FixedPointSet set = single_kpo_fixed_points(params, ps(i));
            for (const FixedPoint& fp : set.points) {
                const char* branch = fp.state.x(0) == 0.0 ? "origin"
                                     : (fp.state.x(0) > 0.0 ? "plus" : "minus");
                const char* stab = fp.stability == Stability::stable     ? "stable"
                                   : fp.stability == Stability::unstable ? "unstable"
                                                                         : "marginal";
                csv.write_row({format_double(ps(i)), branch, format_double(fp.state.x(0)), stab});
            }
        }
    }

    // Classical ramp from the paper's initial point (0.1, 0).
    {
        Eigen::VectorXd x(1), y(1);
        x << 0.1;
        y << 0.0;
        const long long n_steps = std::llround(cfg.duration / cfg.dt);
        const int stride = std::max(1, static_cast<int>(n_steps / 5000));
        const ClassicalTrajectory traj =
            evolve_classical(PhaseState(x, y), spec, schedule, cfg.dt, stride);
        write_classical_trajectory_csv(traj, cfg.out_dir / "classical_trajectory.csv");
        summary.final_abs_x = std::abs(traj.final_state.x(0));
    }

    write_energy_contours(params, 0.9 * cfg.delta, 3.0, 121,
                          cfg.out_dir / "phase_portrait_low.csv");
    write_energy_contours(params, 3.0 * cfg.delta, 3.0, 121,
                          cfg.out_dir / "phase_portrait_high.csv");

    // Quantum ramp from vacuum with snapshots below threshold and at the end.
    {
        EvolutionConfig evo;
        evo.schedule = schedule;
        evo.dt = cfg.dt;
        const double t_low = 0.9 * cfg.delta / cfg.p_final * cfg.duration;
        evo.snapshot_times = {t_low, cfg.duration};
        evo.monitor_energy = true;

        const FockOperator h0 = single_kpo_static(params, cfg.truncation);
        const FockOperator hp = pump_operator(1, cfg.truncation);
        const Trajectory traj = evolve(vacuum_state(1, cfg.truncation), h0, hp, evo);
        summary.max_norm_drift = traj.max_norm_drift;
        summary.max_parity_drift = traj.max_parity_drift;
        write_monitor_csv(traj, cfg.out_dir / "quantum_monitors.csv");

        const Eigen::VectorXd axis = uniform_grid(-4.0, 4.0, 161);
        const WignerGrid w_low = wigner(traj.snapshots.at(0).second, axis, axis);
        const WignerGrid w_end = wigner(traj.snapshots.at(1).second, axis, axis);
        write_wigner_csv(w_low, cfg.out_dir / "wigner_low.csv");
        write_wigner_csv(w_end, cfg.out_dir / "wigner_final.csv");
        write_wigner_matrix(w_low, cfg.out_dir / "wigner_low.mat");
        write_wigner_matrix(w_end, cfg.out_dir / "wigner_final.mat");

        Eigen::Index imax = 0, jmax = 0;
        w_low.values.maxCoeff(&imax, &jmax);
        summary.wigner_low_peak_x = w_low.x_axis(imax);

        // The cat's global maximum is the central fringe; the displaced
        // branch peak is the maximum along y = 0 restricted to x > 1.
        Eigen::Index iy0 = 0;
        w_end.y_axis.cwiseAbs().minCoeff(&iy0);
        double best = -1e300;
        for (Eigen::Index ix = 0; ix < w_end.x_axis.size(); ++ix) {
            if (w_end.x_axis(ix) <= 1.0) continue;
            if (w_end.values(ix, iy0) > best) {
                best = w_end.values(ix, iy0);
                summary.wigner_final_peak_x = w_end.x_axis(ix);
            }
        }
        summary.wigner_final_min = w_end.min_value();

        const SpinConfiguration up(std::vector<int>{1});
        const StateVector cat = target_cat_state(up, cfg.p_final, cfg.kerr, cfg.truncation);
        summary.cat_fidelity = fidelity(traj.final_state, cat);
    }

    write_report_json(cfg.out_dir / "summary.json",
                      {{"final_abs_x", summary.final_abs_x},
                       {"stable_branch", summary.stable_branch},
                       {"wigner_low_peak_x", summary.wigner_low_peak_x},
                       {"wigner_final_min", summary.wigner_final_min},
                       {"wigner_final_peak_x", summary.wigner_final_peak_x},
                       {"cat_fidelity", summary.cat_fidelity},
                       {"max_norm_drift", summary.max_norm_drift},
                       {"max_parity_drift", summary.max_parity_drift}});
    return summary;
}

namespace {

// Ferromagnetic two-spin network with the rule detunings (Delta_i = xi0).
NetworkSpec two_spin_ferromagnet(double xi0, double kerr) {
    Eigen::MatrixXd j(2, 2);
    j << 0.0, 1.0, 1.0, 0.0;
    return NetworkSpec::with_rule_detunings(IsingProblem(2, std::move(j)), xi0, kerr);
}

std::vector<std::pair<double, double>> fidelity_vs_target(const Trajectory& traj,
                                                          const NetworkSpec& spec,
                                                          const PumpSchedule& schedule,
                                                          int truncation) {
    const SpinConfiguration aligned(std::vector<int>{1, 1});
    std::vector<std::pair<double, double>> trace;
    trace.reserve(traj.snapshots.size());
    for (const auto& [t, state] : traj.snapshots) {
        const StateVector target =
            target_cat_state(aligned, schedule.pump_at(t), spec.kerr, truncation);
        trace.emplace_back(t, fidelity(state, target));
    }
    return trace;
}

void write_fidelity_csv(const std::vector<std::pair<double, double>>& trace,
                        const PumpSchedule& schedule, const std::filesystem::path& path) {
    CsvWriter csv(path, {"t", "p", "fidelity"});
    for (const auto& [t, f] : trace)
        csv.write_row({format_double(t), format_double(schedule.pump_at(t)), format_double(f)});
}

}  // namespace

TwoSpinSummary run_two_spin_fidelity(const ExperimentConfig& cfg) {
    echo_config(cfg, "two-spin-fidelity");
    const NetworkSpec spec = two_spin_ferromagnet(cfg.xi0, cfg.kerr);
    const FockOperator h0 = network_static(spec, cfg.truncation);
    const FockOperator hp = pump_operator(2, cfg.truncation);
    const StateVector initial = vacuum_state(2, cfg.truncation);

    TwoSpinSummary summary;
    auto run = [&](double duration) {
        const PumpSchedule schedule(cfg.p_final, duration);
        EvolutionConfig evo;
        evo.schedule = schedule;
        evo.dt = cfg.dt;
        evo.use_even_parity_sector = cfg.even_sector;
        const int samples = 500;
        for (int i = 0; i <= samples; ++i)
            evo.snapshot_times.push_back(duration * i / samples);
        const Trajectory traj = evolve(initial, h0, hp, evo);
        summary.max_norm_drift = std::max(summary.max_norm_drift, traj.max_norm_drift);
        summary.max_parity_drift = std::max(summary.max_parity_drift, traj.max_parity_drift);
        return fidelity_vs_target(traj, spec, schedule, cfg.truncation);
    };

    summary.trace_long = run(cfg.duration);
    summary.trace_short = run(cfg.duration_short);
    summary.final_f_long = summary.trace_long.back().second;
    summary.final_f_short = summary.trace_short.back().second;

    const PumpSchedule long_sched(cfg.p_final, cfg.duration);
    const PumpSchedule short_sched(cfg.p_final, cfg.duration_short);
    write_fidelity_csv(summary.trace_long, long_sched,
                       cfg.out_dir / ("fidelity_T" + format_double(cfg.duration) + ".csv"));
    write_fidelity_csv(summary.trace_short, short_sched,
                       cfg.out_dir / ("fidelity_T" + format_double(cfg.duration_short) + ".csv"));
    write_report_json(cfg.out_dir / "summary.json",
                      {{"final_f_long", summary.final_f_long},
                       {"final_f_short", summary.final_f_short},
                       {"max_norm_drift", summary.max_norm_drift},
                       {"max_parity_drift", summary.max_parity_drift}});
    return summary;
}

QuantumSolveResult quantum_solve(const ExperimentConfig& cfg, const IsingProblem& problem,
                                 bool write_files) {
    const NetworkSpec spec = NetworkSpec::with_rule_detunings(problem, cfg.xi0, cfg.kerr);
    const FockOperator h0 = network_static(spec, cfg.truncation);
    const FockOperator hp = pump_operator(spec.n_modes(), cfg.truncation);

    EvolutionConfig evo;
    evo.schedule = PumpSchedule(cfg.p_final, cfg.duration);
    evo.dt = cfg.dt;
    evo.use_even_parity_sector = cfg.even_sector;
    const Trajectory traj = evolve(vacuum_state(spec.n_modes(), cfg.truncation), h0, hp, evo);

    const SignProjectorTable table = sign_projector_table(cfg.truncation);
    QuantumSolveResult result;
    result.report.distribution = configuration_distribution(traj.final_state, table);
    result.oracle = brute_force_solve(problem);
    const SuccessResidual sr =
        success_and_residual(result.report.distribution, result.oracle, problem);
    result.report.success_probability = sr.success_probability;
    result.report.residual_energy = sr.residual_energy;
    result.max_norm_drift = traj.max_norm_drift;
    result.max_parity_drift = traj.max_parity_drift;

    if (write_files) {
        ensure_directory(cfg.out_dir);
        write_distribution_csv(result.report.distribution, problem, result.oracle,
                               cfg.out_dir / "distribution.csv");
        write_report_json(cfg.out_dir / "report.json",
                          {{"success_probability", result.report.success_probability},
                           {"residual_energy", result.report.residual_energy},
                           {"min_energy", result.oracle.min_energy},
                           {"degeneracy", result.oracle.degeneracy},
                           {"optimal_pair", result.oracle.optimal_pair.bit_string()},
                           {"max_norm_drift", result.max_norm_drift},
                           {"max_parity_drift", result.max_parity_drift}});
    }
    return result;
}

EnsembleReport classical_solve(const ExperimentConfig& cfg, const IsingProblem& problem,
                               bool write_files) {
    const NetworkSpec spec = NetworkSpec::with_rule_detunings(problem, cfg.xi0, cfg.kerr);
    const PumpSchedule schedule(cfg.p_final, cfg.duration);
    EnsembleReport report =
        classical_ensemble(spec, schedule, cfg.runs, cfg.seed, 1e-6, cfg.dt, cfg.workers);

    if (write_files) {
        ensure_directory(cfg.out_dir);
        const OracleResult oracle = brute_force_solve(problem);
        write_distribution_csv(report.report.distribution, problem, oracle,
                               cfg.out_dir / "distribution.csv");
        write_report_json(cfg.out_dir / "report.json",
                          {{"success_probability", report.report.success_probability},
                           {"residual_energy", report.report.residual_energy},
                           {"min_energy", oracle.min_energy},
                           {"degeneracy", oracle.degeneracy},
                           {"total_runs", report.total_runs},
                           {"diverged_runs", report.diverged_runs},
                           {"sign_ties", report.sign_ties}});
    }
    return report;
}

BenchmarkSummary run_benchmark(const ExperimentConfig& cfg) {
    echo_config(cfg, "benchmark");
    ensure_directory(cfg.out_dir / "instances");
    ensure_directory(cfg.out_dir / "reports");

    BenchmarkSummary summary;
    summary.rows.resize(static_cast<std::size_t>(cfg.instances));

    parallel_for_ordered(cfg.instances, cfg.workers, [&](int id) {
        InstanceResult& row = summary.rows[static_cast<std::size_t>(id)];
        row.id = id;
        row.seed = cfg.seed + static_cast<std::uint64_t>(id);
        try {
            const IsingProblem problem = random_instance(4, row.seed);
            write_instance_json(problem,
                                cfg.out_dir / "instances" / (instance_name(id) + ".json"));

            const OracleResult oracle = brute_force_solve(problem);
            row.degeneracy = oracle.degeneracy;
            row.min_energy = oracle.min_energy;

            const NetworkSpec spec =
                NetworkSpec::with_rule_detunings(problem, cfg.xi0, cfg.kerr);
            const RelaxationSolution relax = relaxation_analysis(spec);
            row.lambda_min = relax.lambda_min;
            row.hard = distance(relax.signs, oracle.optimal_pair) != 0;

            ExperimentConfig sub = cfg;
            sub.out_dir = cfg.out_dir / "reports";
            const QuantumSolveResult q = quantum_solve(sub, problem, false);
            row.quantum_success = q.report.success_probability;
            row.quantum_residual = q.report.residual_energy;
            write_distribution_csv(
                q.report.distribution, problem, oracle,
                cfg.out_dir / "reports" / (instance_name(id) + "_quantum.csv"));

            // Ensemble workers stay at 1: the pool above already owns the cores.
            const EnsembleReport c = classical_ensemble(
                spec, PumpSchedule(cfg.p_final, cfg.duration), cfg.runs, row.seed, 1e-6,
                cfg.dt, 1);
            row.classical_success = c.report.success_probability;
            row.classical_residual = c.report.residual_energy;
            row.classical_diverged = c.diverged_runs;
            write_distribution_csv(
                c.report.distribution, problem, oracle,
                cfg.out_dir / "reports" / (instance_name(id) + "_classical.csv"));

            row.ok = true;
        } catch (const std::exception& e) {
            // Quarantine: the failure is recorded and the batch continues.
            row.ok = false;
            row.error = e.what();
        }
        if (cfg.verbose) {
            std::ostringstream line;
            line << "  instance " << id << " seed " << row.seed << ": ";
            if (row.ok)
                line << "quantum " << row.quantum_success << " classical "
                     << row.classical_success << (row.hard ? " [hard]" : "");
            else
                line << "failed: " << row.error;
            std::cerr << line.str() << std::endl;
        }
    });

    std::vector<double> qs, cs, qr, cr;
    for (const InstanceResult& row : summary.rows) {
        if (!row.ok) {
            ++summary.failed;
            continue;
        }
        ++summary.completed;
        if (row.degeneracy > 1) {
            ++summary.degenerate_excluded;
            continue;
        }
        qs.push_back(row.quantum_success);
        cs.push_back(row.classical_success);
        qr.push_back(row.quantum_residual);
        cr.push_back(row.classical_residual);
    }
    auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    summary.mean_quantum_success = mean(qs);
    summary.mean_classical_success = mean(cs);
    summary.mean_quantum_residual = mean(qr);
    summary.mean_classical_residual = mean(cr);

    {
        CsvWriter csv(cfg.out_dir / "per_instance.csv",
                      {"id", "seed", "status", "degeneracy", "min_energy", "lambda_min", "hard",
                       "quantum_success", "quantum_residual", "classical_success",
                       "classical_residual", "classical_diverged"});
        for (const InstanceResult& row : summary.rows)
            csv.write_row({std::to_string(row.id), std::to_string(row.seed),
                           row.ok ? "ok" : "failed:" + row.error,
                           std::to_string(row.degeneracy), format_double(row.min_energy),
                           format_double(row.lambda_min), row.hard ? "1" : "0",
                           format_double(row.quantum_success),
                           format_double(row.quantum_residual),
                           format_double(row.classical_success),
                           format_double(row.classical_residual),
                           std::to_string(row.classical_diverged)});
    }

    double max_residual = 0.0;
    for (double v : qr) max_residual = std::max(max_residual, v);
    for (double v : cr) max_residual = std::max(max_residual, v);
    const int residual_bins = std::max(1, static_cast<int>(std::ceil(max_residual / 0.25)));
    write_histogram_csv(qs, 0.0, 0.1, 10, cfg.out_dir / "success_hist_quantum.csv");
    write_histogram_csv(cs, 0.0, 0.1, 10, cfg.out_dir / "success_hist_classical.csv");
    write_histogram_csv(qr, 0.0, 0.25, residual_bins, cfg.out_dir / "residual_hist_quantum.csv");
    write_histogram_csv(cr, 0.0, 0.25, residual_bins,
                        cfg.out_dir / "residual_hist_classical.csv");

    write_report_json(cfg.out_dir / "summary.json",
                      {{"instances", cfg.instances},
                       {"completed", summary.completed},
                       {"failed", summary.failed},
                       {"degenerate_excluded", summary.degenerate_excluded},
                       {"mean_quantum_success", summary.mean_quantum_success},
                       {"mean_classical_success", summary.mean_classical_success},
                       {"mean_quantum_residual", summary.mean_quantum_residual},
                       {"mean_classical_residual", summary.mean_classical_residual}});
    return summary;
}

void emit_energy_landscape(const IsingProblem& problem, const OracleResult& oracle,
                           const std::filesystem::path& path) {
    if (problem.n() > kBruteForceMaxSpins)
        throw CapacityError("landscape enumeration limited to 24 spins");
    CsvWriter csv(path, {"config_bits", "ising_energy", "distance_to_optimum"});
    const std::uint32_t pairs = problem.n() == 1 ? 1u : (1u << (problem.n() - 1));
    for (std::uint32_t rest = 0; rest < pairs; ++rest) {
        const std::uint32_t mask = (rest << 1) | 1u;
        const SpinConfiguration config = config_from_mask(mask, problem.n());
        csv.write_row({config.bit_string(), format_double(energy(problem, config)),
                       format_double(distance(config, oracle.optimal_pair))});
    }
}

std::optional<HardInstance> find_hard_instance(std::uint64_t seed_start, int max_seeds,
                                               const ExperimentConfig& cfg, double min_lambda,
                                               double min_energy_gap, int screening_runs,
                                               double max_classical_success) {
    for (int k = 0; k < max_seeds; ++k) {
        const std::uint64_t seed = seed_start + static_cast<std::uint64_t>(k);
        IsingProblem problem = random_instance(4, seed);
        const OracleResult oracle = brute_force_solve(problem);
        if (oracle.degeneracy != 1) continue;

        const NetworkSpec spec = NetworkSpec::with_rule_detunings(problem, cfg.xi0, cfg.kerr);
        const RelaxationSolution relax = relaxation_analysis(spec);
        if (relax.lambda_min < min_lambda) continue;
        if (distance(relax.signs, oracle.optimal_pair) == 0) continue;

        // The trap must be a genuine local minimum: every single flip of the
        // relaxation sign pattern raises the energy.
        const double trap_energy = energy(problem, relax.signs);
        if (trap_energy - oracle.min_energy < min_energy_gap) continue;
        bool local_min = true;
        for (int i = 0; i < problem.n() && local_min; ++i) {
            SpinConfiguration neighbor = relax.signs;
            neighbor.spins[static_cast<std::size_t>(i)] *= -1;
            if (energy(problem, neighbor) <= trap_energy) local_min = false;
        }
        if (!local_min) continue;

        const EnsembleReport screen =
            classical_ensemble(spec, PumpSchedule(cfg.p_final, cfg.duration), screening_runs,
                               seed, 1e-6, cfg.dt, cfg.workers);
        if (screen.report.success_probability > max_classical_success) continue;

        HardInstance hard{std::move(problem), seed, oracle, relax};
        return hard;
    }
    return std::nullopt;
}

TruncationConvergence truncation_convergence_check(const NetworkSpec& spec,
                                                   const PumpSchedule& schedule, double dt,
                                                   int truncation, bool even_sector,
                                                   double tolerance) {
    auto distribution_at = [&](int n_max) {
        EvolutionConfig evo;
        evo.schedule = schedule;
        evo.dt = dt;
        evo.use_even_parity_sector = even_sector;
        const FockOperator h0 = network_static(spec, n_max);
        const FockOperator hp = pump_operator(spec.n_modes(), n_max);
        const Trajectory traj = evolve(vacuum_state(spec.n_modes(), n_max), h0, hp, evo);
        return configuration_distribution(traj.final_state, sign_projector_table(n_max));
    };

    const ConfigurationDistribution base = distribution_at(truncation);
    const ConfigurationDistribution refined = distribution_at(truncation + 2);

    TruncationConvergence out;
    for (const auto& [mask, p] : base.pair_probability) {
        const auto it = refined.pair_probability.find(mask);
        const double q = it == refined.pair_probability.end() ? 0.0 : it->second;
        out.max_probability_shift = std::max(out.max_probability_shift, std::abs(p - q));
    }
    out.converged = out.max_probability_shift <= tolerance;
    return out;
}

}  // namespace kpo
