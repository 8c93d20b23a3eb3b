#pragma once

#include <utility>
#include <vector>

#include "kpo/fock.hpp"

namespace kpo {

// Fixed-step RK4 integration of i d|psi>/dt = (H_static + p(t) H_pump)|psi>.
//
// The integrator works in an energy-shifted frame H - c(t) I, with c updated
// to the running energy expectation every monitor_stride steps. The shift
// changes the state only by a global phase (all reported quantities are
// phase-invariant) and keeps the RK4 norm-damping term (lambda*dt)^6/72
// negligible for the occupied part of the spectrum; without it, long ramps
// at the default step would lose norm at the 1e-3 level.
struct EvolutionConfig {
    PumpSchedule schedule;
    double dt = 1e-3;                    // units of 1/K
    std::vector<double> snapshot_times;  // sorted, within [0, duration]
    bool monitor_norm = true;
    bool monitor_parity = true;
    bool monitor_energy = false;
    int monitor_stride = 100;    // steps between monitor samples / shift updates
    double norm_tolerance = 1e-4;  // drift beyond this aborts the run

    // Run inside the even-total-parity sector. Exact (the odd block never
    // mixes in) but requires parity-preserving operators and an initial
    // state supported on the even sector; roughly halves the work.
    bool use_even_parity_sector = false;
};

struct MonitorSeries {
    std::vector<double> t;
    std::vector<double> norm;
    std::vector<double> parity;  // <P_simultaneous>
    std::vector<double> energy;  // <H(p(t))>, unshifted
};

struct Trajectory {
    std::vector<std::pair<double, StateVector>> snapshots;
    MonitorSeries monitors;
    StateVector final_state;
    double max_norm_drift = 0.0;    // max |  ||psi|| - 1 |
    double max_parity_drift = 0.0;  // max | <P> - <P>(0) |
    bool used_parity_sector = false;
};

Trajectory evolve(const StateVector& initial, const FockOperator& h_static,
                  const FockOperator& h_pump, const EvolutionConfig& config);

// Instantaneous spectrum scan: lowest levels of H(p) plus the gap between
// the two lowest even-parity levels (the sector adiabatic evolution lives
// in). Dense diagonalization; refuses dimensions beyond ~2-mode scale.
struct GroundCheckRow {
    double p = 0.0;
    Eigen::VectorXd lowest;   // ascending low-lying eigenvalues
    double even_gap = 0.0;    // E1_even - E0_even
    double ground_energy = 0.0;
};

std::vector<GroundCheckRow> adiabatic_ground_check(const FockOperator& h_static,
                                                   const FockOperator& h_pump,
                                                   const std::vector<double>& p_samples,
                                                   int n_levels = 6);

// Trajectory export helpers (CSV monitor series, JSON snapshots keyed by time).
void write_monitor_csv(const Trajectory& traj, const std::filesystem::path& path);
void write_snapshot_json(const StateVector& state, double time,
                         const std::filesystem::path& path);

}  // namespace kpo
