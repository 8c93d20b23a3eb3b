#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "kpo/errors.hpp"
#include "kpo/ising.hpp"

namespace kpo {

using Complex = std::complex<double>;
using SparseCx = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

// Units: hbar = 1 and the Kerr coefficient K is the unit of frequency, so
// all frequencies are quoted in K and times in 1/K. "truncation" is n_max:
// the per-mode basis is {|0>, ..., |n_max>}, i.e. n_max+1 levels.

struct KpoParams {
    double kerr = 1.0;      // K > 0
    double detuning = 1.0;  // Delta, in units of K

    KpoParams() = default;
    KpoParams(double k, double delta);
};

// Linear pump ramp p(t) = p_final * t / duration, clamped to [0, p_final].
struct PumpSchedule {
    double p_final = 0.0;
    double duration = 1.0;

    PumpSchedule() = default;
    PumpSchedule(double pf, double t);
    double pump_at(double t) const;
};

// N coupled KPOs solving an Ising problem: per-mode detunings Delta_i plus
// the coupling strength xi0 that scales -xi0 J_ij hopping terms.
struct NetworkSpec {
    IsingProblem problem;
    double xi0;
    Eigen::VectorXd detunings;
    double kerr;

    NetworkSpec(IsingProblem prob, double xi0_, Eigen::VectorXd deltas, double kerr_ = 1.0);

    int n_modes() const { return problem.n(); }

    // Detunings per Delta_i = xi0 * sum_j |J_ij|, which certifies the
    // coupling matrix positive semidefinite.
    static NetworkSpec with_rule_detunings(IsingProblem prob, double xi0_, double kerr_ = 1.0);

    // Degenerate single-oscillator network (n = 1, no couplings).
    static NetworkSpec single(const KpoParams& params);
};

std::size_t tensor_dimension(int n_modes, int truncation);
constexpr std::size_t kDimensionLimit = 4'000'000;

// Sparse operator over the tensor-product number basis.
class FockOperator {
public:
    FockOperator(int n_modes, int truncation, SparseCx entries);

    int n_modes() const { return n_modes_; }
    int truncation() const { return truncation_; }
    Eigen::Index dim() const { return mat_.rows(); }
    const SparseCx& matrix() const { return mat_; }

    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;
    Eigen::MatrixXcd dense() const;

    // max_ij |H_ij - conj(H_ji)| / max_ij |H_ij|; zero operator gives 0.
    double hermiticity_error() const;

    // True when every entry connects basis states of equal total parity.
    bool preserves_parity() const;

    // Coordinate text dump: one "row col re im" line per stored entry.
    void dump_coordinate_text(std::ostream& out) const;

private:
    int n_modes_;
    int truncation_;
    SparseCx mat_;
};

// Complex amplitudes over the truncated multi-mode number basis.
struct StateVector {
    int n_modes = 1;
    int truncation = 0;
    Eigen::VectorXcd amplitudes;

    // Probability weight lost to truncation before renormalization, and
    // whether it exceeded the 1e-6 accuracy warning threshold.
    double truncation_weight = 0.0;
    bool truncation_warning = false;

    Eigen::Index dim() const { return amplitudes.size(); }
    double norm() const { return amplitudes.norm(); }
    void normalize();
};

Complex inner(const StateVector& a, const StateVector& b);

// --- Hamiltonian builders (all Hermitian, real in the number basis) ---

// Delta a+a + (K/2) a+^2 a^2 - (p/2)(a+^2 + a^2), single mode.
FockOperator single_kpo_hamiltonian(const KpoParams& params, double p, int truncation);
FockOperator single_kpo_static(const KpoParams& params, int truncation);

// -(1/2) sum_i (a_i+^2 + a_i^2); the pump enters H(p) = H_static + p * H_pump.
FockOperator pump_operator(int n_modes, int truncation);

// sum_i H_1^(i) - (xi0/2) sum_ij J_ij (a_i+ a_j + a_i a_j+).
FockOperator network_hamiltonian(const NetworkSpec& spec, double p, int truncation);
FockOperator network_static(const NetworkSpec& spec, int truncation);

// Diagonal (-1)^(total photon number); unitary, Hermitian, involutive.
FockOperator parity_operator(int n_modes, int truncation);

// Per-basis-state parity signs, cheaper than the full operator.
std::vector<double> parity_signs(int n_modes, int truncation);

// --- Coupling matrix machinery ---

// M_ii = Delta_i, M_ij = -xi0 J_ij.
Eigen::MatrixXd coupling_matrix(const NetworkSpec& spec);

Eigen::VectorXd detunings_from_rule(const IsingProblem& problem, double xi0);

struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // orthonormal columns
};

struct PsdResult {
    bool psd = false;
    SpectralDecomposition decomposition;
    double lambda_min = 0.0;
    Eigen::VectorXd violating_vector;  // eigenvector of lambda_min when not PSD
};

// PSD check at tolerance lambda_min >= -1e-10 * ||M||. Throws
// ValidationError on non-symmetric input.
PsdResult is_psd(const Eigen::MatrixXd& m);

// --- Analytic states ---

StateVector vacuum_state(int n_modes, int truncation);

// amplitudes e^{-|a|^2/2} a^n / sqrt(n!), renormalized over the truncated
// basis; the discarded weight is recorded in the result metadata.
StateVector coherent_state(Complex alpha, int truncation);

StateVector product_coherent_state(const Eigen::VectorXcd& alphas, int truncation);

// (prod_i |S_i sqrt(p/K)> + prod_i |-S_i sqrt(p/K)>) / sqrt(2(1+e^{-2Np/K})),
// renormalized over the truncated basis.
StateVector target_cat_state(const SpinConfiguration& solution, double p, double kerr,
                             int truncation);

// Lowest-order energy correction (p/K)[sum_i Delta_i - xi0 sum_ij J_ij s_i s_j]
// of the product-coherent state labelled by the configuration.
double perturbative_correction(const NetworkSpec& spec, const SpinConfiguration& config,
                               double p);

// --- Parity sector machinery ---

// Compact index map for the even-total-parity subspace. The network
// Hamiltonian is block diagonal in total parity, so evolutions starting
// from |0...0> can run entirely inside this sector.
struct ParitySector {
    int n_modes = 1;
    int truncation = 0;
    std::vector<std::int32_t> full_to_sector;  // -1 for odd states
    std::vector<std::int32_t> sector_to_full;

    Eigen::Index dim() const { return static_cast<Eigen::Index>(sector_to_full.size()); }
};

ParitySector even_parity_sector(int n_modes, int truncation);

// --- misc ---

// Index helpers for the row-major tensor basis (mode 0 slowest).
std::vector<int> decode_levels(std::size_t index, int n_modes, int truncation);
std::size_t encode_levels(const std::vector<int>& levels, int truncation);

void write_operator_dump(const FockOperator& op, const std::filesystem::path& path);

// NetworkSpec JSON round trip ({"problem": ..., "xi0", "kerr", "detunings"}).
std::string network_spec_to_json(const NetworkSpec& spec);
NetworkSpec parse_network_spec_json(const std::string& text);

}  // namespace kpo
