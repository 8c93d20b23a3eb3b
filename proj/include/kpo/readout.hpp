#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <utility>
#include <vector>

#include "kpo/fock.hpp"
#include "kpo/ising.hpp"

namespace kpo {

// Single-mode density matrix in the number basis.
struct DensityMatrix {
    int truncation = 0;
    Eigen::MatrixXcd rho;

    Eigen::Index dim() const { return rho.rows(); }
};

DensityMatrix density_from_state(const StateVector& state);  // single-mode pure state

// Reduced density matrix of one mode, tracing out the others.
DensityMatrix partial_trace_to_mode(const StateVector& state, int mode);

// --- Wigner function ---

struct WignerGrid {
    Eigen::VectorXd x_axis, y_axis;
    Eigen::MatrixXd values;  // values(ix, iy) = W(x_axis(ix), y_axis(iy))

    // Plain Riemann sum with the grid spacings; ~1 when the grid covers
    // the state's support.
    double riemann_sum() const;
    double min_value() const;
};

Eigen::VectorXd uniform_grid(double lo, double hi, int points);

// <m|D(alpha)|n> = e^{-|a|^2/2} sqrt(m! n!) sum_k a^{m-k} (-a*)^{n-k} /
// (k! (m-k)! (n-k)!), evaluated with log-factorial scaling.
Complex displacement_matrix_element(int m, int n, Complex alpha);

// W(x,y) = (2/pi) sum_mn (-1)^n D_mn(2(x+iy)) rho_nm. The imaginary residue
// must stay below 1e-10; it is asserted and discarded.
WignerGrid wigner(const DensityMatrix& rho, const Eigen::VectorXd& x_axis,
                  const Eigen::VectorXd& y_axis);
WignerGrid wigner(const StateVector& state, const Eigen::VectorXd& x_axis,
                  const Eigen::VectorXd& y_axis);

void write_wigner_csv(const WignerGrid& grid, const std::filesystem::path& path);
void write_wigner_matrix(const WignerGrid& grid, const std::filesystem::path& path);

// --- Quadrature-sign readout ---

// Number-basis matrix elements I+-_{m,n} of the half-line projectors onto
// x > 0 and x < 0. Three-case piecewise coefficients with the double
// factorial (m+n-2k)!!, evaluated via log-gamma with sign tracking.
struct SignProjectorTable {
    int truncation = 0;
    Eigen::MatrixXd i_plus, i_minus;
};

SignProjectorTable sign_projector_table(int truncation);

// (P+, P-) for one mode; P+ + P- = 1 up to truncation error.
std::pair<double, double> sign_probability(const DensityMatrix& rho,
                                           const SignProjectorTable& table);
std::pair<double, double> sign_probability(const StateVector& state,
                                           const SignProjectorTable& table);

// Joint probabilities of the 2^N quadrature sign patterns, folded onto
// {s,-s} pairs keyed by the canonical mask.
struct ConfigurationDistribution {
    int n = 0;
    std::map<std::uint32_t, double> pair_probability;

    double total() const;
    double probability(const SpinConfiguration& config) const;  // pair lookup
};

ConfigurationDistribution configuration_distribution(const StateVector& state,
                                                     const SignProjectorTable& table);

// --- Run summaries ---

struct SuccessResidual {
    double success_probability = 0.0;
    double residual_energy = 0.0;
};

// success = total probability of the optimal pairs; residual =
// sum_c P(c) (E(c) - E_min). Enumerates energies, so n <= 24.
SuccessResidual success_and_residual(const ConfigurationDistribution& dist,
                                     const OracleResult& oracle, const IsingProblem& problem);

struct RunReport {
    double success_probability = 0.0;
    double residual_energy = 0.0;
    ConfigurationDistribution distribution;
    std::vector<std::pair<double, double>> fidelity_trace;  // (t, F), optional
};

// |<a|b>|^2 for normalized states of equal dimension.
double fidelity(const StateVector& a, const StateVector& b);

// CSV export: config_bits, probability, ising_energy, distance_to_optimum.
void write_distribution_csv(const ConfigurationDistribution& dist, const IsingProblem& problem,
                            const OracleResult& oracle, const std::filesystem::path& path);

}  // namespace kpo
