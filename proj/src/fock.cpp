#include "kpo/fock.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "kpo/io.hpp"

namespace kpo {

namespace {

using Triplet = Eigen::Triplet<Complex>;

void require_truncation(int truncation, int minimum = 1) {
    if (truncation < minimum)
        throw ValidationError("truncation must be >= " + std::to_string(minimum));
}

SparseCx from_triplets(Eigen::Index dim, std::vector<Triplet>& entries) {
    SparseCx m(dim, dim);
    m.setFromTriplets(entries.begin(), entries.end());
    m.makeCompressed();
    return m;
}

// Triplets for Delta a+a + (K/2) a+^2 a^2 - (p/2)(a+^2 + a^2) acting on one
// mode of a tensor product. `stride` is the index step of that mode, and the
// loop runs over all joint states of the remaining modes.
void add_single_mode_kpo(std::vector<Triplet>& out, double kerr, double detuning, double p,
                         int levels, std::size_t stride, std::size_t dim) {
    for (std::size_t base = 0; base < dim; ++base) {
        const int n = static_cast<int>(base / stride) % levels;
        if (detuning != 0.0 || kerr != 0.0) {
            const double diag = detuning * n + 0.5 * kerr * n * (n - 1.0);
            if (diag != 0.0) out.emplace_back(base, base, Complex(diag, 0.0));
        }
        if (p != 0.0 && n + 2 < levels) {
            const double amp = -0.5 * p * std::sqrt((n + 1.0) * (n + 2.0));
            const std::size_t upper = base + 2 * stride;
            out.emplace_back(upper, base, Complex(amp, 0.0));
            out.emplace_back(base, upper, Complex(amp, 0.0));
        }
    }
}

}  // namespace

KpoParams::KpoParams(double k, double delta) : kerr(k), detuning(delta) {
    if (kerr <= 0.0) throw ValidationError("Kerr coefficient must be positive");
}

PumpSchedule::PumpSchedule(double pf, double t) : p_final(pf), duration(t) {
    if (p_final < 0.0) throw ValidationError("final pump amplitude must be nonnegative");
    if (duration <= 0.0) throw ValidationError("schedule duration must be positive");
}

double PumpSchedule::pump_at(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= duration) return p_final;
    return p_final * t / duration;
}

NetworkSpec::NetworkSpec(IsingProblem prob, double xi0_, Eigen::VectorXd deltas, double kerr_)
    : problem(std::move(prob)), xi0(xi0_), detunings(std::move(deltas)), kerr(kerr_) {
    if (xi0 <= 0.0) throw ValidationError("xi0 must be positive");
    if (kerr <= 0.0) throw ValidationError("Kerr coefficient must be positive");
    if (detunings.size() != problem.n())
        throw DimensionError("detuning vector length must equal the spin count");
}

NetworkSpec NetworkSpec::with_rule_detunings(IsingProblem prob, double xi0_, double kerr_) {
    Eigen::VectorXd deltas = detunings_from_rule(prob, xi0_);
    return NetworkSpec(std::move(prob), xi0_, std::move(deltas), kerr_);
}

NetworkSpec NetworkSpec::single(const KpoParams& params) {
    IsingProblem trivial(1, Eigen::MatrixXd::Zero(1, 1));
    Eigen::VectorXd deltas(1);
    deltas << params.detuning;
    return NetworkSpec(std::move(trivial), 0.5, std::move(deltas), params.kerr);
}

std::size_t tensor_dimension(int n_modes, int truncation) {
    if (n_modes < 1) throw ValidationError("mode count must be >= 1");
    require_truncation(truncation);
    const std::size_t levels = static_cast<std::size_t>(truncation) + 1;
    std::size_t dim = 1;
    for (int i = 0; i < n_modes; ++i) {
        if (dim > kDimensionLimit / levels)
            throw CapacityError("tensor basis dimension exceeds the configured limit");
        dim *= levels;
    }
    return dim;
}

FockOperator::FockOperator(int n_modes, int truncation, SparseCx entries)
    : n_modes_(n_modes), truncation_(truncation), mat_(std::move(entries)) {
    const auto dim = static_cast<Eigen::Index>(tensor_dimension(n_modes, truncation));
    if (mat_.rows() != dim || mat_.cols() != dim)
        throw DimensionError("operator entries do not match (n_max+1)^n_modes");
}

Eigen::VectorXcd FockOperator::apply(const Eigen::VectorXcd& v) const {
    if (v.size() != dim()) throw DimensionError("operator/state dimension mismatch");
    return mat_ * v;
}

Eigen::MatrixXcd FockOperator::dense() const { return Eigen::MatrixXcd(mat_); }

double FockOperator::hermiticity_error() const {
    double max_entry = 0.0;
    for (int k = 0; k < mat_.outerSize(); ++k)
        for (SparseCx::InnerIterator it(mat_, k); it; ++it)
            max_entry = std::max(max_entry, std::abs(it.value()));
    if (max_entry == 0.0) return 0.0;

    SparseCx adj = mat_.adjoint();
    double max_diff = 0.0;
    SparseCx diff = mat_ - adj;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (SparseCx::InnerIterator it(diff, k); it; ++it)
            max_diff = std::max(max_diff, std::abs(it.value()));
    return max_diff / max_entry;
}

bool FockOperator::preserves_parity() const {
    const std::vector<double> signs = parity_signs(n_modes_, truncation_);
    for (int k = 0; k < mat_.outerSize(); ++k)
        for (SparseCx::InnerIterator it(mat_, k); it; ++it)
            if (it.value() != Complex(0.0, 0.0) &&
                signs[static_cast<std::size_t>(it.row())] !=
                    signs[static_cast<std::size_t>(it.col())])
                return false;
    return true;
}

void FockOperator::dump_coordinate_text(std::ostream& out) const {
    for (int k = 0; k < mat_.outerSize(); ++k)
        for (SparseCx::InnerIterator it(mat_, k); it; ++it)
            out << it.row() << ' ' << it.col() << ' ' << format_double(it.value().real())
                << ' ' << format_double(it.value().imag()) << '\n';
}

void write_operator_dump(const FockOperator& op, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write operator dump " + path.string());
    op.dump_coordinate_text(out);
}

void StateVector::normalize() {
    const double n = norm();
    if (n == 0.0) throw ValidationError("cannot normalize a zero state");
    amplitudes /= n;
}

Complex inner(const StateVector& a, const StateVector& b) {
    if (a.dim() != b.dim()) throw DimensionError("state dimension mismatch");
    return a.amplitudes.dot(b.amplitudes);  // conjugates the left argument
}

FockOperator single_kpo_hamiltonian(const KpoParams& params, double p, int truncation) {
    require_truncation(truncation, 2);
    const std::size_t dim = tensor_dimension(1, truncation);
    std::vector<Triplet> entries;
    entries.reserve(3 * dim);
    add_single_mode_kpo(entries, params.kerr, params.detuning, p, truncation + 1, 1, dim);
    return FockOperator(1, truncation, from_triplets(static_cast<Eigen::Index>(dim), entries));
}

FockOperator single_kpo_static(const KpoParams& params, int truncation) {
    return single_kpo_hamiltonian(params, 0.0, truncation);
}

FockOperator pump_operator(int n_modes, int truncation) {
    require_truncation(truncation, 2);
    const std::size_t dim = tensor_dimension(n_modes, truncation);
    const int levels = truncation + 1;
    std::vector<Triplet> entries;
    entries.reserve(2 * static_cast<std::size_t>(n_modes) * dim);
    std::size_t stride = dim;
    for (int mode = 0; mode < n_modes; ++mode) {
        stride /= static_cast<std::size_t>(levels);
        // p = 1 in the single-mode builder yields -(1/2)(a+^2 + a^2).
        add_single_mode_kpo(entries, 0.0, 0.0, 1.0, levels, stride, dim);
    }
    return FockOperator(n_modes, truncation,
                        from_triplets(static_cast<Eigen::Index>(dim), entries));
}

FockOperator network_static(const NetworkSpec& spec, int truncation) {
    require_truncation(truncation, 2);
    const int n = spec.n_modes();
    const std::size_t dim = tensor_dimension(n, truncation);
    const int levels = truncation + 1;

    std::vector<std::size_t> strides(static_cast<std::size_t>(n));
    std::size_t s = dim;
    for (int mode = 0; mode < n; ++mode) {
        s /= static_cast<std::size_t>(levels);
        strides[static_cast<std::size_t>(mode)] = s;
    }

    std::vector<Triplet> entries;
    entries.reserve((2 + 2 * static_cast<std::size_t>(n)) * dim);
    for (int mode = 0; mode < n; ++mode)
        add_single_mode_kpo(entries, spec.kerr, spec.detunings(mode), 0.0, levels,
                            strides[static_cast<std::size_t>(mode)], dim);

    // Hopping -xi0 J_ij a_i+ a_j, one triplet per ordered pair (i != j);
    // summing both orders reproduces -(xi0/2) J_ij (a_i+ a_j + a_i a_j+).
    std::vector<double> sqrt_tab(static_cast<std::size_t>(levels) + 1);
    for (int k = 0; k <= levels; ++k) sqrt_tab[static_cast<std::size_t>(k)] = std::sqrt(double(k));

    for (int i = 0; i < n; ++i) {
        for (int jm = 0; jm < n; ++jm) {
            if (i == jm) continue;
            const double coupling = -spec.xi0 * spec.problem.j(i, jm);
            if (coupling == 0.0) continue;
            const std::size_t si = strides[static_cast<std::size_t>(i)];
            const std::size_t sj = strides[static_cast<std::size_t>(jm)];
            for (std::size_t base = 0; base < dim; ++base) {
                const int ni = static_cast<int>(base / si) % levels;
                const int nj = static_cast<int>(base / sj) % levels;
                if (ni + 1 >= levels || nj == 0) continue;
                const double amp =
                    coupling * sqrt_tab[static_cast<std::size_t>(ni + 1)] *
                    sqrt_tab[static_cast<std::size_t>(nj)];
                entries.emplace_back(base + si - sj, base, Complex(amp, 0.0));
            }
        }
    }
    return FockOperator(n, truncation, from_triplets(static_cast<Eigen::Index>(dim), entries));
}

FockOperator network_hamiltonian(const NetworkSpec& spec, double p, int truncation) {
    FockOperator h0 = network_static(spec, truncation);
    if (p == 0.0) return h0;
    FockOperator hp = pump_operator(spec.n_modes(), truncation);
    SparseCx combined = h0.matrix() + Complex(p, 0.0) * hp.matrix();
    combined.makeCompressed();
    return FockOperator(spec.n_modes(), truncation, std::move(combined));
}

std::vector<double> parity_signs(int n_modes, int truncation) {
    const std::size_t dim = tensor_dimension(n_modes, truncation);
    const int levels = truncation + 1;
    std::vector<double> signs(dim, 1.0);
    for (std::size_t idx = 0; idx < dim; ++idx) {
        int total = 0;
        std::size_t rest = idx;
        for (int mode = 0; mode < n_modes; ++mode) {
            total += static_cast<int>(rest % static_cast<std::size_t>(levels));
            rest /= static_cast<std::size_t>(levels);
        }
        signs[idx] = (total % 2 == 0) ? 1.0 : -1.0;
    }
    return signs;
}

FockOperator parity_operator(int n_modes, int truncation) {
    const std::vector<double> signs = parity_signs(n_modes, truncation);
    const auto dim = static_cast<Eigen::Index>(signs.size());
    std::vector<Triplet> entries;
    entries.reserve(signs.size());
    for (Eigen::Index i = 0; i < dim; ++i)
        entries.emplace_back(i, i, Complex(signs[static_cast<std::size_t>(i)], 0.0));
    return FockOperator(n_modes, truncation, from_triplets(dim, entries));
}

Eigen::MatrixXd coupling_matrix(const NetworkSpec& spec) {
    const int n = spec.n_modes();
    Eigen::MatrixXd m = -spec.xi0 * spec.problem.j();
    for (int i = 0; i < n; ++i) m(i, i) = spec.detunings(i);
    return m;
}

Eigen::VectorXd detunings_from_rule(const IsingProblem& problem, double xi0) {
    if (xi0 <= 0.0) throw ValidationError("xi0 must be positive");
    return xi0 * problem.j().cwiseAbs().rowwise().sum();
}

PsdResult is_psd(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw ValidationError("PSD check requires a square matrix");
    if (!m.isApprox(m.transpose(), 1e-12))
        throw ValidationError("PSD check requires a symmetric matrix");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    PsdResult result;
    result.decomposition.eigenvalues = solver.eigenvalues();
    result.decomposition.eigenvectors = solver.eigenvectors();
    result.lambda_min = solver.eigenvalues()(0);

    const double scale = solver.eigenvalues().cwiseAbs().maxCoeff();
    result.psd = result.lambda_min >= -1e-10 * scale;
    if (!result.psd) result.violating_vector = solver.eigenvectors().col(0);
    return result;
}

StateVector vacuum_state(int n_modes, int truncation) {
    StateVector state;
    state.n_modes = n_modes;
    state.truncation = truncation;
    state.amplitudes =
        Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(tensor_dimension(n_modes, truncation)));
    state.amplitudes(0) = Complex(1.0, 0.0);
    return state;
}

StateVector coherent_state(Complex alpha, int truncation) {
    require_truncation(truncation);
    const int levels = truncation + 1;
    StateVector state;
    state.n_modes = 1;
    state.truncation = truncation;
    state.amplitudes = Eigen::VectorXcd::Zero(levels);

    // c_n = e^{-|a|^2/2} a^n / sqrt(n!), built iteratively to avoid
    // factorial overflow.
    Complex term = std::exp(-0.5 * std::norm(alpha));
    state.amplitudes(0) = term;
    for (int n = 1; n < levels; ++n) {
        term *= alpha / std::sqrt(double(n));
        state.amplitudes(n) = term;
    }

    const double kept = state.amplitudes.squaredNorm();
    state.truncation_weight = std::max(0.0, 1.0 - kept);
    state.truncation_warning = state.truncation_weight > 1e-6;
    state.normalize();
    return state;
}

StateVector product_coherent_state(const Eigen::VectorXcd& alphas, int truncation) {
    const int n = static_cast<int>(alphas.size());
    if (n < 1) throw ValidationError("product state needs at least one mode");
    const std::size_t dim = tensor_dimension(n, truncation);
    const int levels = truncation + 1;

    std::vector<StateVector> factors;
    factors.reserve(static_cast<std::size_t>(n));
    double lost = 0.0;
    for (int i = 0; i < n; ++i) {
        factors.push_back(coherent_state(alphas(i), truncation));
        lost += factors.back().truncation_weight;
    }

    StateVector state;
    state.n_modes = n;
    state.truncation = truncation;
    state.truncation_weight = lost;
    state.truncation_warning = lost > 1e-6;
    state.amplitudes.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t idx = 0; idx < dim; ++idx) {
        Complex amp(1.0, 0.0);
        std::size_t rest = idx;
        for (int mode = n - 1; mode >= 0; --mode) {
            const int level = static_cast<int>(rest % static_cast<std::size_t>(levels));
            rest /= static_cast<std::size_t>(levels);
            amp *= factors[static_cast<std::size_t>(mode)].amplitudes(level);
        }
        state.amplitudes(static_cast<Eigen::Index>(idx)) = amp;
    }
    state.normalize();
    return state;
}

StateVector target_cat_state(const SpinConfiguration& solution, double p, double kerr,
                             int truncation) {
    if (p < 0.0) throw ValidationError("pump amplitude must be nonnegative");
    if (kerr <= 0.0) throw ValidationError("Kerr coefficient must be positive");
    const int n = solution.size();
    if (n < 1) throw ValidationError("solution configuration is empty");

    const double alpha = std::sqrt(p / kerr);
    Eigen::VectorXcd plus(n), minus(n);
    for (int i = 0; i < n; ++i) {
        plus(i) = Complex(solution[i] * alpha, 0.0);
        minus(i) = Complex(-solution[i] * alpha, 0.0);
    }

    StateVector a = product_coherent_state(plus, truncation);
    StateVector b = product_coherent_state(minus, truncation);

    StateVector state;
    state.n_modes = n;
    state.truncation = truncation;
    state.truncation_weight = std::max(a.truncation_weight, b.truncation_weight);
    state.truncation_warning = a.truncation_warning || b.truncation_warning;
    const double overlap = std::exp(-2.0 * n * p / kerr);
    state.amplitudes = (a.amplitudes + b.amplitudes) / std::sqrt(2.0 * (1.0 + overlap));
    state.normalize();
    return state;
}

double perturbative_correction(const NetworkSpec& spec, const SpinConfiguration& config, double p) {
    if (p <= 0.0) throw ValidationError("perturbative correction defined for p > 0");
    if (config.size() != spec.n_modes())
        throw DimensionError("configuration length does not match the network");
    double pair_sum = 0.0;
    for (int i = 0; i < spec.n_modes(); ++i)
        for (int k = 0; k < spec.n_modes(); ++k)
            pair_sum += spec.problem.j(i, k) * config[i] * config[k];
    return (p / spec.kerr) * (spec.detunings.sum() - spec.xi0 * pair_sum);
}

ParitySector even_parity_sector(int n_modes, int truncation) {
    const std::vector<double> signs = parity_signs(n_modes, truncation);
    ParitySector sector;
    sector.n_modes = n_modes;
    sector.truncation = truncation;
    sector.full_to_sector.assign(signs.size(), -1);
    for (std::size_t i = 0; i < signs.size(); ++i) {
        if (signs[i] > 0.0) {
            sector.full_to_sector[i] = static_cast<std::int32_t>(sector.sector_to_full.size());
            sector.sector_to_full.push_back(static_cast<std::int32_t>(i));
        }
    }
    return sector;
}

std::vector<int> decode_levels(std::size_t index, int n_modes, int truncation) {
    const int levels = truncation + 1;
    std::vector<int> out(static_cast<std::size_t>(n_modes));
    for (int mode = n_modes - 1; mode >= 0; --mode) {
        out[static_cast<std::size_t>(mode)] =
            static_cast<int>(index % static_cast<std::size_t>(levels));
        index /= static_cast<std::size_t>(levels);
    }
    return out;
}

std::size_t encode_levels(const std::vector<int>& levels_vec, int truncation) {
    const std::size_t levels = static_cast<std::size_t>(truncation) + 1;
    std::size_t idx = 0;
    for (int v : levels_vec) idx = idx * levels + static_cast<std::size_t>(v);
    return idx;
}

std::string network_spec_to_json(const NetworkSpec& spec) {
    nlohmann::json doc;
    doc["problem"] = nlohmann::json::parse(instance_to_json(spec.problem));
    doc["xi0"] = spec.xi0;
    doc["kerr"] = spec.kerr;
    doc["detunings"] = std::vector<double>(spec.detunings.data(),
                                           spec.detunings.data() + spec.detunings.size());
    return doc.dump(2) + "\n";
}

NetworkSpec parse_network_spec_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("network spec JSON parse failure: ") + e.what());
    }
    IsingProblem problem = parse_instance_json(doc.at("problem").dump());
    const double xi0 = doc.at("xi0").get<double>();
    const double kerr = doc.at("kerr").get<double>();
    const auto deltas_vec = doc.at("detunings").get<std::vector<double>>();
    Eigen::VectorXd deltas(static_cast<Eigen::Index>(deltas_vec.size()));
    for (std::size_t i = 0; i < deltas_vec.size(); ++i)
        deltas(static_cast<Eigen::Index>(i)) = deltas_vec[i];
    return NetworkSpec(std::move(problem), xi0, std::move(deltas), kerr);
}

}  // namespace kpo
