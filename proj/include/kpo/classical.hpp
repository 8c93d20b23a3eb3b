#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "kpo/fock.hpp"
#include "kpo/ising.hpp"
#include "kpo/readout.hpp"

namespace kpo {

// Mean-field companion of the quantum network: quadrature pairs (x_i, y_i)
// under
//   dx_i/dt = y_i [Delta_i + p + K (x_i^2+y_i^2)] - xi0 sum_j J_ij y_j
//   dy_i/dt = x_i [-Delta_i + p - K (x_i^2+y_i^2)] + xi0 sum_j J_ij x_j
// which reduces to the single-oscillator equations for N = 1.

struct PhaseState {
    Eigen::VectorXd x, y;

    PhaseState() = default;
    PhaseState(Eigen::VectorXd x_, Eigen::VectorXd y_);
    static PhaseState zero(int n);

    int n() const { return static_cast<int>(x.size()); }
};

void classical_rhs(const PhaseState& state, const NetworkSpec& spec, double p,
                   PhaseState& out);
PhaseState classical_rhs(const PhaseState& state, const NetworkSpec& spec, double p);

// Conserved quantity of the single-mode flow at constant p:
// (Delta/2) r^2 + (K/4) r^4 - (p/2)(x^2 - y^2).
double classical_energy(const PhaseState& state, const KpoParams& params, double p);

enum class Stability { stable, unstable, marginal };

struct FixedPoint {
    PhaseState state;
    Stability stability = Stability::stable;
};

struct FixedPointSet {
    std::vector<FixedPoint> points;
};

// p < Delta: stable origin only. p > Delta: unstable origin plus the stable
// pair (+-sqrt((p-Delta)/K), 0). At threshold the origin is marginal.
FixedPointSet single_kpo_fixed_points(const KpoParams& params, double p);

struct ClassicalTrajectory {
    std::vector<double> times;
    std::vector<double> pump;
    std::vector<PhaseState> states;  // sampled every store_stride steps
    PhaseState final_state;
};

// Fixed-step RK4 with the linearly ramped pump. Amplitudes beyond the
// saturation bound ~10 sqrt(p_final/K) abort with a DivergenceError.
ClassicalTrajectory evolve_classical(const PhaseState& initial, const NetworkSpec& spec,
                                     const PumpSchedule& schedule, double dt,
                                     int store_stride = 0);

// Constant-pump variant (phase portraits, conservation checks).
ClassicalTrajectory evolve_classical_fixed_pump(const PhaseState& initial,
                                                const NetworkSpec& spec, double p,
                                                double t_final, double dt,
                                                int store_stride = 0);

struct EnsembleReport {
    RunReport report;
    int total_runs = 0;
    int diverged_runs = 0;
    int sign_ties = 0;  // exact-zero final amplitudes resolved by coin flip
};

// Random initial conditions x_i, y_i uniform on [-init_scale, init_scale),
// one RNG stream per run derived from (seed, run index). The final spin
// answer is sign(x_i(T)); an exactly zero amplitude is resolved by a coin
// flip from the same run's stream. Diverged runs count as failures and are
// excluded from the empirical distribution.
EnsembleReport classical_ensemble(const NetworkSpec& spec, const PumpSchedule& schedule,
                                  int n_runs, std::uint64_t seed, double init_scale = 1e-6,
                                  double dt = 1e-3, int workers = 1);

struct RelaxationSolution {
    double lambda_min = 0.0;
    Eigen::VectorXd direction;   // unit eigenvector, first nonzero component > 0
    double lower_bound = 0.0;    // N * lambda_min bound on sum_ij M_ij s_i s_j
    SpinConfiguration signs;
};

// Continuous relaxation of the Ising problem: minimize the M quadratic form
// on the sphere sum zeta_i^2 = N; solved by the smallest eigenpair of M.
RelaxationSolution relaxation_analysis(const NetworkSpec& spec);

struct BifurcationCheck {
    bool crossed = false;
    double t_cross = 0.0;
    double p_cross = 0.0;
    double lambda_min = 0.0;
    double alignment = 0.0;      // |cos angle(x, lambda_min eigenvector)|
    double max_y_pre = 0.0;      // max ||y|| before the crossing
    Eigen::VectorXd direction_at_cross;
};

// Detects the first time ||x|| crosses `threshold` and compares the crossing
// pump value and direction against the smallest eigenpair of M.
BifurcationCheck first_bifurcation_check(const NetworkSpec& spec, const PumpSchedule& schedule,
                                         double dt, std::uint64_t seed = 1,
                                         double init_scale = 1e-6, double threshold = 1e-3);

// CSV export (t, p, x_1..x_N, y_1..y_N).
void write_classical_trajectory_csv(const ClassicalTrajectory& traj,
                                    const std::filesystem::path& path);

}  // namespace kpo
