#include "kpo/ising.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kpo/io.hpp"
#include "kpo/rng.hpp"

namespace kpo {

namespace {

void require_same_length(const SpinConfiguration& a, const SpinConfiguration& b) {
    if (a.size() != b.size())
        throw DimensionError("spin configurations have different lengths (" +
                             std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
}

// Tolerance used when counting degenerate minima; random real-valued
// instances never tie except by exact symmetry.
double tie_tolerance(double min_energy) {
    return 1e-12 * std::max(1.0, std::abs(min_energy));
}

}  // namespace

SpinConfiguration::SpinConfiguration(std::vector<int> s) : spins(std::move(s)) {
    for (int v : spins)
        if (v != 1 && v != -1)
            throw ValidationError("spin entries must be +1 or -1");
}

SpinConfiguration SpinConfiguration::flipped() const {
    SpinConfiguration out;
    out.spins.reserve(spins.size());
    for (int v : spins) out.spins.push_back(-v);
    return out;
}

SpinConfiguration SpinConfiguration::canonical() const {
    if (!spins.empty() && spins.front() < 0) return flipped();
    return *this;
}

std::string SpinConfiguration::bit_string() const {
    std::string s;
    s.reserve(spins.size());
    for (int v : spins) s.push_back(v > 0 ? '1' : '0');
    return s;
}

std::uint32_t config_mask(const SpinConfiguration& config) {
    if (config.size() > 32) throw CapacityError("config_mask limited to 32 spins");
    std::uint32_t mask = 0;
    for (int i = 0; i < config.size(); ++i)
        if (config[i] > 0) mask |= (1u << i);
    return mask;
}

SpinConfiguration config_from_mask(std::uint32_t mask, int n) {
    std::vector<int> s(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? 1 : -1;
    return SpinConfiguration(std::move(s));
}

std::string mask_bit_string(std::uint32_t mask, int n) {
    return config_from_mask(mask, n).bit_string();
}

IsingProblem::IsingProblem(int n, Eigen::MatrixXd couplings) : n_(n), j_(std::move(couplings)) {
    if (n_ < 1) throw ValidationError("spin count must be >= 1");
    if (j_.rows() != n_ || j_.cols() != n_)
        throw DimensionError("coupling matrix must be n x n");
    for (int i = 0; i < n_; ++i) {
        if (j_(i, i) != 0.0) throw ValidationError("coupling matrix must have zero diagonal");
        for (int k = i + 1; k < n_; ++k)
            if (j_(i, k) != j_(k, i)) throw ValidationError("coupling matrix must be symmetric");
    }
}

double energy(const IsingProblem& problem, const SpinConfiguration& config) {
    if (config.size() != problem.n())
        throw DimensionError("configuration length does not match spin count");
    double e = 0.0;
    for (int i = 0; i < problem.n(); ++i)
        for (int k = i + 1; k < problem.n(); ++k)
            e += problem.j(i, k) * config[i] * config[k];
    return -e;  // -(1/2) double-counted sum == -sum over i<k
}

int distance(const SpinConfiguration& a, const SpinConfiguration& b) {
    require_same_length(a, b);
    int differ = 0;
    for (int i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) ++differ;
    return std::min(differ, a.size() - differ);
}

OracleResult brute_force_solve(const IsingProblem& problem) {
    const int n = problem.n();
    if (n > kBruteForceMaxSpins)
        throw CapacityError("brute force enumeration limited to " +
                            std::to_string(kBruteForceMaxSpins) + " spins");

    // Fixing spin 0 to +1 enumerates each {s,-s} pair exactly once.
    const std::uint32_t pairs = n == 1 ? 1u : (1u << (n - 1));
    OracleResult result;
    result.min_energy = std::numeric_limits<double>::infinity();
    std::uint32_t best_mask = 0;

    std::vector<double> energies(pairs);
    for (std::uint32_t rest = 0; rest < pairs; ++rest) {
        const std::uint32_t mask = (rest << 1) | 1u;
        const double e = energy(problem, config_from_mask(mask, n));
        energies[rest] = e;
        if (e < result.min_energy) {
            result.min_energy = e;
            best_mask = mask;
        }
    }

    const double tol = tie_tolerance(result.min_energy);
    result.degeneracy = 0;
    for (double e : energies)
        if (e <= result.min_energy + tol) ++result.degeneracy;
    result.optimal_pair = config_from_mask(best_mask, n);
    return result;
}

IsingProblem random_instance(int n, std::uint64_t seed) {
    if (n < 2) throw ValidationError("random instances need at least 2 spins");
    Rng rng(seed);
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k) j(i, k) = j(k, i) = rng.symmetric(1.0);
    return IsingProblem(n, std::move(j));
}

IsingProblem parse_instance_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("instance JSON parse failure: ") + e.what());
    }
    if (!doc.contains("n") || !doc["n"].is_number_integer())
        throw ValidationError("instance JSON must carry an integer field 'n'");
    const int n = doc["n"].get<int>();
    if (n < 1) throw ValidationError("instance spin count must be >= 1");

    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    std::set<std::pair<int, int>> seen;
    if (doc.contains("couplings")) {
        for (const auto& entry : doc["couplings"]) {
            if (!entry.is_array() || entry.size() != 3)
                throw ValidationError("each coupling must be [i, j, value]");
            const int a = entry[0].get<int>();
            const int b = entry[1].get<int>();
            const double v = entry[2].get<double>();
            if (a < 0 || a >= n || b < 0 || b >= n)
                throw ValidationError("coupling index out of range");
            if (a == b) throw ValidationError("diagonal couplings must be zero (omit them)");
            auto key = std::minmax(a, b);
            if (seen.count(key))
                throw ValidationError("duplicate coupling entry for pair (" +
                                      std::to_string(key.first) + "," +
                                      std::to_string(key.second) + "); file must be symmetric");
            seen.insert(key);
            j(a, b) = j(b, a) = v;
        }
    }
    return IsingProblem(n, std::move(j));
}

std::string instance_to_json(const IsingProblem& problem) {
    nlohmann::json couplings = nlohmann::json::array();
    for (int i = 0; i < problem.n(); ++i)
        for (int k = i + 1; k < problem.n(); ++k)
            if (problem.j(i, k) != 0.0)
                couplings.push_back({i, k, problem.j(i, k)});
    nlohmann::json doc;
    doc["n"] = problem.n();
    doc["couplings"] = couplings;
    return doc.dump(2) + "\n";
}

IsingProblem read_instance_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open instance file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_instance_json(buffer.str());
}

void write_instance_json(const IsingProblem& problem, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write instance file " + path.string());
    out << instance_to_json(problem);
}

void write_enumeration_csv(const IsingProblem& problem, const std::filesystem::path& path) {
    const int n = problem.n();
    if (n > kBruteForceMaxSpins) throw CapacityError("enumeration table limited to 24 spins");
    CsvWriter csv(path, {"config_bits", "energy"});
    const std::uint32_t pairs = n == 1 ? 1u : (1u << (n - 1));
    for (std::uint32_t rest = 0; rest < pairs; ++rest) {
        const std::uint32_t mask = (rest << 1) | 1u;
        const SpinConfiguration config = config_from_mask(mask, n);
        csv.write_row({config.bit_string(), format_double(energy(problem, config))});
    }
}

}  // namespace kpo
