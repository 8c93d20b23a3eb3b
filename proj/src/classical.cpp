#include "kpo/classical.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "kpo/io.hpp"
#include "kpo/rng.hpp"

namespace kpo {

namespace {

double divergence_bound(const NetworkSpec& spec, double p_final) {
    // Physical amplitudes saturate near sqrt(p/K); the floor keeps the bound
    // meaningful for near-zero pump targets.
    return 10.0 * std::sqrt(std::max(p_final, spec.kerr) / spec.kerr);
}

void require_match(const PhaseState& state, const NetworkSpec& spec) {
    if (state.n() != spec.n_modes() || state.y.size() != state.x.size())
        throw DimensionError("phase state does not match the network mode count");
}

// RK4 on a batch of runs stacked as rows of X, Y. Row r only ever mixes with
// row r, so batching changes nothing but throughput.
struct BatchStepper {
    Eigen::MatrixXd j;
    Eigen::ArrayXXd deltas_rep;  // detunings replicated across the batch rows
    double xi0, kerr;

    Eigen::ArrayXXd r2;
    Eigen::MatrixXd kx1, ky1, kx2, ky2, kx3, ky3, kx4, ky4, bx, by;

    explicit BatchStepper(const NetworkSpec& s, Eigen::Index rows)
        : j(s.problem.j()), xi0(s.xi0), kerr(s.kerr) {
        const Eigen::Index n = s.n_modes();
        deltas_rep = s.detunings.transpose().replicate(rows, 1).array();
        r2.resize(rows, n);
        for (Eigen::MatrixXd* m : {&kx1, &ky1, &kx2, &ky2, &kx3, &ky3, &kx4, &ky4, &bx, &by})
            m->resize(rows, n);
    }

    void rhs(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double p,
             Eigen::MatrixXd& out_dx, Eigen::MatrixXd& out_dy) {
        r2 = x.array().square() + y.array().square();
        out_dx.noalias() = -xi0 * (y * j);
        out_dx.array() += y.array() * (kerr * r2 + p + deltas_rep);
        out_dy.noalias() = xi0 * (x * j);
        out_dy.array() += x.array() * (p - kerr * r2 - deltas_rep);
    }

    void step(Eigen::MatrixXd& x, Eigen::MatrixXd& y, double p1, double p2, double p4,
              double dt) {
        rhs(x, y, p1, kx1, ky1);
        bx = x + (0.5 * dt) * kx1;
        by = y + (0.5 * dt) * ky1;
        rhs(bx, by, p2, kx2, ky2);
        bx = x + (0.5 * dt) * kx2;
        by = y + (0.5 * dt) * ky2;
        rhs(bx, by, p2, kx3, ky3);
        bx = x + dt * kx3;
        by = y + dt * ky3;
        rhs(bx, by, p4, kx4, ky4);
        x += (dt / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
        y += (dt / 6.0) * (ky1 + 2.0 * ky2 + 2.0 * ky3 + ky4);
    }
};

long long step_count(double duration, double dt) {
    if (dt <= 0.0) throw ValidationError("dt must be positive");
    if (dt > duration) throw ValidationError("dt must not exceed the integration time");
    return static_cast<long long>(std::llround(duration / dt));
}

ClassicalTrajectory integrate(const PhaseState& initial, const NetworkSpec& spec,
                              const PumpSchedule* schedule, double fixed_p, double duration,
                              double dt, int store_stride) {
    require_match(initial, spec);
    const long long n_steps = step_count(duration, dt);
    const double h = duration / static_cast<double>(n_steps);
    const double bound =
        divergence_bound(spec, schedule ? schedule->p_final : std::abs(fixed_p));

    auto pump = [&](double t) { return schedule ? schedule->pump_at(t) : fixed_p; };

    BatchStepper stepper(spec, 1);
    Eigen::MatrixXd x = initial.x.transpose();
    Eigen::MatrixXd y = initial.y.transpose();

    ClassicalTrajectory traj;
    auto store = [&](double t) {
        traj.times.push_back(t);
        traj.pump.push_back(pump(t));
        traj.states.push_back(PhaseState(x.row(0).transpose(), y.row(0).transpose()));
    };

    for (long long step = 0; step < n_steps; ++step) {
        const double t = static_cast<double>(step) * h;
        if (store_stride > 0 && step % store_stride == 0) store(t);
        stepper.step(x, y, pump(t), pump(t + 0.5 * h), pump(t + h), h);
        const double amp = std::max(x.cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff());
        if (!(amp <= bound))
            throw DivergenceError("classical amplitude " + format_double(amp) +
                                      " exceeded the saturation bound at t = " +
                                      format_double(t + h),
                                  t + h);
    }
    if (store_stride > 0) store(duration);
    traj.final_state = PhaseState(x.row(0).transpose(), y.row(0).transpose());
    return traj;
}

}  // namespace

PhaseState::PhaseState(Eigen::VectorXd x_, Eigen::VectorXd y_)
    : x(std::move(x_)), y(std::move(y_)) {
    if (x.size() != y.size()) throw DimensionError("x and y must have equal lengths");
    if (!x.allFinite() || !y.allFinite())
        throw ValidationError("phase state entries must be finite");
}

PhaseState PhaseState::zero(int n) {
    return PhaseState(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n));
}

void classical_rhs(const PhaseState& state, const NetworkSpec& spec, double p,
                   PhaseState& out) {
    require_match(state, spec);
    const auto r2 = (state.x.array().square() + state.y.array().square()).eval();
    out.x = (state.y.array() * (spec.detunings.array() + p + spec.kerr * r2)).matrix() -
            spec.xi0 * (spec.problem.j() * state.y);
    out.y = (state.x.array() * (-spec.detunings.array() + p - spec.kerr * r2)).matrix() +
            spec.xi0 * (spec.problem.j() * state.x);
}

PhaseState classical_rhs(const PhaseState& state, const NetworkSpec& spec, double p) {
    PhaseState out = PhaseState::zero(state.n());
    classical_rhs(state, spec, p, out);
    return out;
}

double classical_energy(const PhaseState& state, const KpoParams& params, double p) {
    if (state.n() != 1)
        throw UsageError("the conserved energy is defined for a single oscillator");
    const double x = state.x(0), y = state.y(0);
    const double r2 = x * x + y * y;
    return 0.5 * params.detuning * r2 + 0.25 * params.kerr * r2 * r2 -
           0.5 * p * (x * x - y * y);
}

FixedPointSet single_kpo_fixed_points(const KpoParams& params, double p) {
    if (p < 0.0) throw ValidationError("pump amplitude must be nonnegative");
    FixedPointSet set;
    FixedPoint origin;
    origin.state = PhaseState::zero(1);
    if (p < params.detuning)
        origin.stability = Stability::stable;
    else if (p > params.detuning)
        origin.stability = Stability::unstable;
    else
        origin.stability = Stability::marginal;
    set.points.push_back(std::move(origin));

    if (p > params.detuning) {
        const double amp = std::sqrt((p - params.detuning) / params.kerr);
        for (double s : {+1.0, -1.0}) {
            Eigen::VectorXd x(1), y(1);
            x << s * amp;
            y << 0.0;
            set.points.push_back({PhaseState(std::move(x), std::move(y)), Stability::stable});
        }
    }
    return set;
}

ClassicalTrajectory evolve_classical(const PhaseState& initial, const NetworkSpec& spec,
                                     const PumpSchedule& schedule, double dt,
                                     int store_stride) {
    return integrate(initial, spec, &schedule, 0.0, schedule.duration, dt, store_stride);
}

ClassicalTrajectory evolve_classical_fixed_pump(const PhaseState& initial,
                                                const NetworkSpec& spec, double p,
                                                double t_final, double dt, int store_stride) {
    return integrate(initial, spec, nullptr, p, t_final, dt, store_stride);
}

EnsembleReport classical_ensemble(const NetworkSpec& spec, const PumpSchedule& schedule,
                                  int n_runs, std::uint64_t seed, double init_scale,
                                  double dt, int workers) {
    if (n_runs < 1) throw ValidationError("ensemble needs at least one run");
    const int n = spec.n_modes();
    const long long n_steps = step_count(schedule.duration, dt);
    const double h = schedule.duration / static_cast<double>(n_steps);
    const double bound = divergence_bound(spec, schedule.p_final);

    // Per-run streams; draw order is x_0..x_{N-1}, y_0..y_{N-1}, then any
    // tie-breaking coins at readout.
    std::vector<Rng> streams;
    streams.reserve(static_cast<std::size_t>(n_runs));
    Eigen::MatrixXd x0(n_runs, n), y0(n_runs, n);
    for (int r = 0; r < n_runs; ++r) {
        streams.emplace_back(seed, static_cast<std::uint64_t>(r));
        for (int i = 0; i < n; ++i) x0(r, i) = streams.back().symmetric(init_scale);
        for (int i = 0; i < n; ++i) y0(r, i) = streams.back().symmetric(init_scale);
    }

    std::vector<signed char> diverged(static_cast<std::size_t>(n_runs), 0);

    auto run_chunk = [&](int row_begin, int row_end, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
        const int rows = row_end - row_begin;
        BatchStepper stepper(spec, rows);
        for (long long step = 0; step < n_steps; ++step) {
            const double t = static_cast<double>(step) * h;
            stepper.step(x, y, schedule.pump_at(t), schedule.pump_at(t + 0.5 * h),
                         schedule.pump_at(t + h), h);
            for (int r = 0; r < rows; ++r) {
                if (diverged[static_cast<std::size_t>(row_begin + r)]) continue;
                const double amp =
                    std::max(x.row(r).cwiseAbs().maxCoeff(), y.row(r).cwiseAbs().maxCoeff());
                if (!(amp <= bound)) {
                    // Freeze the run at the origin; it is reported as failed.
                    diverged[static_cast<std::size_t>(row_begin + r)] = 1;
                    x.row(r).setZero();
                    y.row(r).setZero();
                }
            }
        }
    };

    const int n_workers = std::max(1, std::min(workers, n_runs));
    std::vector<Eigen::MatrixXd> xs(static_cast<std::size_t>(n_workers)),
        ys(static_cast<std::size_t>(n_workers));
    std::vector<std::pair<int, int>> ranges;
    {
        const int base = n_runs / n_workers, extra = n_runs % n_workers;
        int begin = 0;
        for (int w = 0; w < n_workers; ++w) {
            const int size = base + (w < extra ? 1 : 0);
            ranges.emplace_back(begin, begin + size);
            xs[static_cast<std::size_t>(w)] = x0.middleRows(begin, size);
            ys[static_cast<std::size_t>(w)] = y0.middleRows(begin, size);
            begin += size;
        }
    }

    if (n_workers == 1) {
        run_chunk(ranges[0].first, ranges[0].second, xs[0], ys[0]);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w)
            pool.emplace_back([&, w] {
                run_chunk(ranges[static_cast<std::size_t>(w)].first,
                          ranges[static_cast<std::size_t>(w)].second,
                          xs[static_cast<std::size_t>(w)], ys[static_cast<std::size_t>(w)]);
            });
        for (auto& th : pool) th.join();
    }

    const OracleResult oracle = brute_force_solve(spec.problem);

    EnsembleReport out;
    out.total_runs = n_runs;
    ConfigurationDistribution dist;
    dist.n = n;
    int completed = 0;
    for (int w = 0; w < n_workers; ++w) {
        const auto [begin, end] = ranges[static_cast<std::size_t>(w)];
        for (int r = begin; r < end; ++r) {
            if (diverged[static_cast<std::size_t>(r)]) {
                ++out.diverged_runs;
                continue;
            }
            std::vector<int> s(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                const double v = xs[static_cast<std::size_t>(w)](r - begin, i);
                if (v == 0.0) {
                    ++out.sign_ties;
                    s[static_cast<std::size_t>(i)] =
                        streams[static_cast<std::size_t>(r)].coin() ? 1 : -1;
                } else {
                    s[static_cast<std::size_t>(i)] = v > 0.0 ? 1 : -1;
                }
            }
            const SpinConfiguration config(std::move(s));
            dist.pair_probability[config_mask(config.canonical())] += 1.0;
            ++completed;
        }
    }
    if (completed > 0)
        for (auto& [mask, p] : dist.pair_probability) p /= static_cast<double>(completed);

    out.report.distribution = dist;
    if (completed > 0) {
        const SuccessResidual sr = success_and_residual(dist, oracle, spec.problem);
        out.report.success_probability =
            sr.success_probability * static_cast<double>(completed) / n_runs;
        out.report.residual_energy = sr.residual_energy;
    }
    return out;
}

RelaxationSolution relaxation_analysis(const NetworkSpec& spec) {
    const Eigen::MatrixXd m = coupling_matrix(spec);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);

    RelaxationSolution sol;
    sol.lambda_min = solver.eigenvalues()(0);
    sol.direction = solver.eigenvectors().col(0);
    for (Eigen::Index i = 0; i < sol.direction.size(); ++i) {
        if (std::abs(sol.direction(i)) > 1e-12) {
            if (sol.direction(i) < 0.0) sol.direction = -sol.direction;
            break;
        }
    }
    sol.lower_bound = static_cast<double>(spec.n_modes()) * sol.lambda_min;
    std::vector<int> s(static_cast<std::size_t>(spec.n_modes()));
    for (int i = 0; i < spec.n_modes(); ++i)
        s[static_cast<std::size_t>(i)] = sol.direction(i) >= 0.0 ? 1 : -1;
    sol.signs = SpinConfiguration(std::move(s));
    return sol;
}

BifurcationCheck first_bifurcation_check(const NetworkSpec& spec, const PumpSchedule& schedule,
                                         double dt, std::uint64_t seed, double init_scale,
                                         double threshold) {
    const int n = spec.n_modes();
    const long long n_steps = step_count(schedule.duration, dt);
    const double h = schedule.duration / static_cast<double>(n_steps);

    Rng rng(seed, 0);
    Eigen::MatrixXd x(1, n), y(1, n);
    for (int i = 0; i < n; ++i) x(0, i) = rng.symmetric(init_scale);
    for (int i = 0; i < n; ++i) y(0, i) = rng.symmetric(init_scale);

    const RelaxationSolution relax = relaxation_analysis(spec);
    BifurcationCheck check;
    check.lambda_min = relax.lambda_min;

    BatchStepper stepper(spec, 1);
    for (long long step = 0; step < n_steps; ++step) {
        const double t = static_cast<double>(step) * h;
        check.max_y_pre = std::max(check.max_y_pre, y.row(0).norm());
        stepper.step(x, y, schedule.pump_at(t), schedule.pump_at(t + 0.5 * h),
                     schedule.pump_at(t + h), h);
        const double amp = x.row(0).norm();
        if (amp >= threshold) {
            check.crossed = true;
            check.t_cross = t + h;
            check.p_cross = schedule.pump_at(t + h);
            check.direction_at_cross = x.row(0).transpose() / amp;
            check.alignment = std::abs(check.direction_at_cross.dot(relax.direction));
            return check;
        }
    }
    return check;  // no crossing: inconclusive
}

void write_classical_trajectory_csv(const ClassicalTrajectory& traj,
                                    const std::filesystem::path& path) {
    if (traj.states.empty()) throw ValidationError("trajectory holds no stored samples");
    const int n = traj.states.front().n();
    std::vector<std::string> header = {"t", "p"};
    for (int i = 1; i <= n; ++i) header.push_back("x_" + std::to_string(i));
    for (int i = 1; i <= n; ++i) header.push_back("y_" + std::to_string(i));
    CsvWriter csv(path, header);
    for (std::size_t row = 0; row < traj.states.size(); ++row) {
        std::vector<std::string> cells = {format_double(traj.times[row]),
                                          format_double(traj.pump[row])};
        for (int i = 0; i < n; ++i) cells.push_back(format_double(traj.states[row].x(i)));
        for (int i = 0; i < n; ++i) cells.push_back(format_double(traj.states[row].y(i)));
        csv.write_row(cells);
    }
}

}  // namespace kpo
