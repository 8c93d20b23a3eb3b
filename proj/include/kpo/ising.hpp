#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kpo/errors.hpp"

namespace kpo {

// Spin assignment with entries in {-1,+1}.
struct SpinConfiguration {
    std::vector<int> spins;

    SpinConfiguration() = default;
    explicit SpinConfiguration(std::vector<int> s);

    int size() const { return static_cast<int>(spins.size()); }
    int operator[](int i) const { return spins[static_cast<std::size_t>(i)]; }

    SpinConfiguration flipped() const;

    // Representative of the {s, -s} pair with the first spin fixed to +1.
    SpinConfiguration canonical() const;

    // '1' for +1, '0' for -1, spin 0 leftmost.
    std::string bit_string() const;

    bool operator==(const SpinConfiguration& other) const { return spins == other.spins; }
};

// Bitmask encoding used as a map key: bit i set <=> s_i = +1.
std::uint32_t config_mask(const SpinConfiguration& config);
SpinConfiguration config_from_mask(std::uint32_t mask, int n);
std::string mask_bit_string(std::uint32_t mask, int n);

// Symmetric zero-diagonal coupling matrix; the optimization instance.
class IsingProblem {
public:
    IsingProblem(int n, Eigen::MatrixXd couplings);

    int n() const { return n_; }
    const Eigen::MatrixXd& j() const { return j_; }
    double j(int i, int k) const { return j_(i, k); }

private:
    int n_;
    Eigen::MatrixXd j_;
};

struct OracleResult {
    double min_energy = 0.0;
    SpinConfiguration optimal_pair;  // canonical representative
    long degeneracy = 0;             // number of optimal {s,-s} pairs
};

// E = -(1/2) sum_ij J_ij s_i s_j. Invariant under a global spin flip.
double energy(const IsingProblem& problem, const SpinConfiguration& config);

// min(sum |a_i - b_i|/2, sum |a_i + b_i|/2): Hamming distance on the
// quotient that identifies a configuration with its global flip.
int distance(const SpinConfiguration& a, const SpinConfiguration& b);

// Exhaustive enumeration of the 2^(n-1) configuration pairs. n <= 24.
OracleResult brute_force_solve(const IsingProblem& problem);
constexpr int kBruteForceMaxSpins = 24;

// Off-diagonal couplings i.i.d. uniform on [-1,1], mirrored from the upper
// triangle. Deterministic for a given seed (see kpo/rng.hpp).
IsingProblem random_instance(int n, std::uint64_t seed);

// Instance file format: {"n": int, "couplings": [[i, j, value], ...]} with
// 0-based indices, upper triangle only.
IsingProblem read_instance_json(const std::filesystem::path& path);
void write_instance_json(const IsingProblem& problem, const std::filesystem::path& path);
IsingProblem parse_instance_json(const std::string& text);
std::string instance_to_json(const IsingProblem& problem);

// Enumeration table over canonical pairs: columns config_bits, energy.
void write_enumeration_csv(const IsingProblem& problem, const std::filesystem::path& path);

}  // namespace kpo
