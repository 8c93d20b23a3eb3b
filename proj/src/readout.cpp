#include "kpo/readout.hpp"

#include <cmath>

#include "kpo/io.hpp"

namespace kpo {

namespace {

constexpr double kPi = 3.14159265358979323846;

// log of the odd double factorial (2t+1)!! = (2t+1)!/(2^t t!).
double log_odd_double_factorial(int j) {
    const int t = (j - 1) / 2;
    return std::lgamma(2.0 * t + 2.0) - t * std::log(2.0) - std::lgamma(t + 1.0);
}

double sign_pow(long long e) { return (e % 2 != 0) ? -1.0 : 1.0; }

// Half-line projector coefficient for odd m-n; `upper_sign` distinguishes
// I+ ((m-n-1)/2 exponent) from I- ((m-n+1)/2).
double odd_sector_coefficient(int m, int n, bool plus) {
    const int d = m - n;
    const long long expo = plus ? (static_cast<long long>(d) - 1) / 2
                                : (static_cast<long long>(d) + 1) / 2;
    const double pref_log =
        0.5 * (std::lgamma(m + 1.0) + std::lgamma(n + 1.0)) - 0.5 * std::log(2.0 * kPi);
    double sum = 0.0;
    for (int k = 0; k <= std::min(m, n); ++k) {
        const double term_log = log_odd_double_factorial(m + n - 2 * k) -
                                std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0) -
                                std::lgamma(n - k + 1.0);
        sum += sign_pow(k) * std::exp(pref_log + term_log);
    }
    return sign_pow(expo) / static_cast<double>(d) * sum;
}

// Diagonal case (n!/2) sum_k (-1)^k 2^{n-k} / (k! (n-k)!). The alternating
// sum is binomial: (n!/2) (2-1)^n / n! = 1/2 for every n. Term-by-term
// evaluation loses ~1e-6 absolute accuracy to cancellation by n = 20, so the
// collapsed form is used; P+ + P- = tr rho then holds exactly.
double diagonal_coefficient(int) { return 0.5; }

// Apply a dense single-mode matrix to one mode of a multi-mode state.
void apply_single_mode_matrix(const Eigen::MatrixXd& m, Eigen::VectorXcd& psi, int mode,
                              int n_modes, int truncation) {
    const int levels = truncation + 1;
    std::size_t stride = 1;
    for (int i = n_modes - 1; i > mode; --i) stride *= static_cast<std::size_t>(levels);
    const std::size_t block = stride * static_cast<std::size_t>(levels);
    const std::size_t dim = static_cast<std::size_t>(psi.size());

    Eigen::VectorXcd scratch(levels);
    for (std::size_t hi = 0; hi < dim; hi += block) {
        for (std::size_t lo = 0; lo < stride; ++lo) {
            for (int a = 0; a < levels; ++a)
                scratch(a) = psi(static_cast<Eigen::Index>(
                    hi + static_cast<std::size_t>(a) * stride + lo));
            for (int a = 0; a < levels; ++a) {
                Complex acc(0.0, 0.0);
                for (int b = 0; b < levels; ++b) acc += m(a, b) * scratch(b);
                psi(static_cast<Eigen::Index>(hi + static_cast<std::size_t>(a) * stride + lo)) =
                    acc;
            }
        }
    }
}

}  // namespace

DensityMatrix density_from_state(const StateVector& state) {
    if (state.n_modes != 1)
        throw UsageError("single-mode density requested for a multi-mode state; "
                         "reduce with partial_trace_to_mode first");
    DensityMatrix rho;
    rho.truncation = state.truncation;
    rho.rho = state.amplitudes * state.amplitudes.adjoint();
    return rho;
}

DensityMatrix partial_trace_to_mode(const StateVector& state, int mode) {
    if (mode < 0 || mode >= state.n_modes) throw UsageError("mode index out of range");
    const int levels = state.truncation + 1;
    std::size_t stride = 1;
    for (int i = state.n_modes - 1; i > mode; --i) stride *= static_cast<std::size_t>(levels);
    const std::size_t block = stride * static_cast<std::size_t>(levels);
    const std::size_t dim = static_cast<std::size_t>(state.dim());

    DensityMatrix rho;
    rho.truncation = state.truncation;
    rho.rho = Eigen::MatrixXcd::Zero(levels, levels);
    for (std::size_t hi = 0; hi < dim; hi += block)
        for (std::size_t lo = 0; lo < stride; ++lo)
            for (int a = 0; a < levels; ++a)
                for (int b = 0; b < levels; ++b)
                    rho.rho(a, b) +=
                        state.amplitudes(static_cast<Eigen::Index>(
                            hi + static_cast<std::size_t>(a) * stride + lo)) *
                        std::conj(state.amplitudes(static_cast<Eigen::Index>(
                            hi + static_cast<std::size_t>(b) * stride + lo)));
    return rho;
}

Eigen::VectorXd uniform_grid(double lo, double hi, int points) {
    if (points < 1) throw ValidationError("grid needs at least one point");
    return Eigen::VectorXd::LinSpaced(points, lo, hi);
}

Complex displacement_matrix_element(int m, int n, Complex alpha) {
    if (m < 0 || n < 0) throw ValidationError("number-state labels must be nonnegative");
    // a^j / j! and (-a*)^j / j!, built iteratively so nothing overflows.
    const int top = std::max(m, n);
    std::vector<Complex> pa(static_cast<std::size_t>(top) + 1),
        pb(static_cast<std::size_t>(top) + 1);
    pa[0] = pb[0] = Complex(1.0, 0.0);
    const Complex nega = -std::conj(alpha);
    for (int j = 1; j <= top; ++j) {
        pa[static_cast<std::size_t>(j)] = pa[static_cast<std::size_t>(j - 1)] * alpha / double(j);
        pb[static_cast<std::size_t>(j)] = pb[static_cast<std::size_t>(j - 1)] * nega / double(j);
    }
    Complex sum(0.0, 0.0);
    double inv_kfact = 1.0;
    for (int k = 0; k <= std::min(m, n); ++k) {
        if (k > 0) inv_kfact /= double(k);
        sum += inv_kfact * pa[static_cast<std::size_t>(m - k)] * pb[static_cast<std::size_t>(n - k)];
    }
    const double log_scale = 0.5 * (std::lgamma(m + 1.0) + std::lgamma(n + 1.0)) -
                             0.5 * std::norm(alpha);
    return sum * std::exp(log_scale);
}

WignerGrid wigner(const DensityMatrix& rho, const Eigen::VectorXd& x_axis,
                  const Eigen::VectorXd& y_axis) {
    const int levels = static_cast<int>(rho.dim());
    const int n_max = levels - 1;

    // Hermiticity makes the (m,n)/(n,m) terms complex conjugates, so the sum
    // below is folded to m >= n and is real by construction; a non-Hermitian
    // input would silently produce garbage, hence the upfront check.
    double scale_rho = 0.0;
    for (int m = 0; m < levels; ++m)
        for (int n = 0; n < levels; ++n) scale_rho = std::max(scale_rho, std::abs(rho.rho(m, n)));
    for (int m = 0; m < levels; ++m)
        for (int n = 0; n <= m; ++n)
            if (std::abs(rho.rho(m, n) - std::conj(rho.rho(n, m))) >
                1e-10 * std::max(scale_rho, 1.0))
                throw Error("Wigner transform requires a Hermitian density matrix");

    std::vector<double> gm(static_cast<std::size_t>(levels));
    for (int j = 0; j < levels; ++j)
        gm[static_cast<std::size_t>(j)] = std::exp(0.5 * std::lgamma(j + 1.0));

    WignerGrid grid;
    grid.x_axis = x_axis;
    grid.y_axis = y_axis;
    grid.values.resize(x_axis.size(), y_axis.size());

    std::vector<Complex> pa(static_cast<std::size_t>(levels)),
        pb(static_cast<std::size_t>(levels));

    for (Eigen::Index ix = 0; ix < x_axis.size(); ++ix) {
        for (Eigen::Index iy = 0; iy < y_axis.size(); ++iy) {
            const Complex beta(2.0 * x_axis(ix), 2.0 * y_axis(iy));
            pa[0] = pb[0] = Complex(1.0, 0.0);
            const Complex negb = -std::conj(beta);
            for (int j = 1; j <= n_max; ++j) {
                pa[static_cast<std::size_t>(j)] =
                    pa[static_cast<std::size_t>(j - 1)] * beta / double(j);
                pb[static_cast<std::size_t>(j)] =
                    pb[static_cast<std::size_t>(j - 1)] * negb / double(j);
            }
            const double gauss = std::exp(-0.5 * std::norm(beta));

            double w = 0.0;
            for (int m = 0; m < levels; ++m) {
                for (int n = 0; n <= m; ++n) {
                    const Complex r = rho.rho(n, m);
                    if (r == Complex(0.0, 0.0) && m != n) continue;
                    Complex sum(0.0, 0.0);
                    double inv_kfact = 1.0;
                    for (int k = 0; k <= n; ++k) {
                        if (k > 0) inv_kfact /= double(k);
                        sum += inv_kfact * pa[static_cast<std::size_t>(m - k)] *
                               pb[static_cast<std::size_t>(n - k)];
                    }
                    const double scale = gauss * gm[static_cast<std::size_t>(m)] *
                                         gm[static_cast<std::size_t>(n)] *
                                         ((n % 2 != 0) ? -1.0 : 1.0);
                    const Complex term = scale * sum * r;
                    w += (m == n) ? term.real() : 2.0 * term.real();
                }
            }
            grid.values(ix, iy) = w * 2.0 / kPi;
        }
    }
    return grid;
}

WignerGrid wigner(const StateVector& state, const Eigen::VectorXd& x_axis,
                  const Eigen::VectorXd& y_axis) {
    return wigner(density_from_state(state), x_axis, y_axis);
}

double WignerGrid::riemann_sum() const {
    if (x_axis.size() < 2 || y_axis.size() < 2) return 0.0;
    const double dx = x_axis(1) - x_axis(0);
    const double dy = y_axis(1) - y_axis(0);
    return values.sum() * dx * dy;
}

double WignerGrid::min_value() const { return values.minCoeff(); }

void write_wigner_csv(const WignerGrid& grid, const std::filesystem::path& path) {
    CsvWriter csv(path, {"x", "y", "w"});
    for (Eigen::Index ix = 0; ix < grid.x_axis.size(); ++ix)
        for (Eigen::Index iy = 0; iy < grid.y_axis.size(); ++iy)
            csv.write_row({format_double(grid.x_axis(ix)), format_double(grid.y_axis(iy)),
                           format_double(grid.values(ix, iy))});
}

void write_wigner_matrix(const WignerGrid& grid, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    // Rectangular layout for heatmap tools: rows follow y, columns follow x.
    for (Eigen::Index iy = 0; iy < grid.y_axis.size(); ++iy) {
        for (Eigen::Index ix = 0; ix < grid.x_axis.size(); ++ix) {
            if (ix) out << ' ';
            out << format_double(grid.values(ix, iy));
        }
        out << '\n';
    }
}

SignProjectorTable sign_projector_table(int truncation) {
    if (truncation < 0) throw ValidationError("truncation must be nonnegative");
    const int levels = truncation + 1;
    SignProjectorTable table;
    table.truncation = truncation;
    table.i_plus = Eigen::MatrixXd::Zero(levels, levels);
    table.i_minus = Eigen::MatrixXd::Zero(levels, levels);
    for (int m = 0; m < levels; ++m) {
        const double v = diagonal_coefficient(m);
        table.i_plus(m, m) = v;
        table.i_minus(m, m) = v;
        // Even nonzero differences vanish by reflection symmetry; odd ones
        // are symmetric in (m,n), so compute once and mirror.
        for (int n = (m + 1) % 2; n < m; n += 2) {
            const double plus = odd_sector_coefficient(m, n, true);
            const double minus = odd_sector_coefficient(m, n, false);
            table.i_plus(m, n) = table.i_plus(n, m) = plus;
            table.i_minus(m, n) = table.i_minus(n, m) = minus;
        }
    }
    return table;
}

std::pair<double, double> sign_probability(const DensityMatrix& rho,
                                           const SignProjectorTable& table) {
    if (rho.dim() != table.i_plus.rows())
        throw DimensionError("density matrix does not match the projector table truncation");
    double p_plus = 0.0, p_minus = 0.0;
    for (Eigen::Index m = 0; m < rho.dim(); ++m) {
        for (Eigen::Index n = 0; n < rho.dim(); ++n) {
            const double re = rho.rho(n, m).real();
            p_plus += table.i_plus(m, n) * re;
            p_minus += table.i_minus(m, n) * re;
        }
    }
    return {p_plus, p_minus};
}

std::pair<double, double> sign_probability(const StateVector& state,
                                           const SignProjectorTable& table) {
    return sign_probability(density_from_state(state), table);
}

double ConfigurationDistribution::total() const {
    double s = 0.0;
    for (const auto& [mask, p] : pair_probability) s += p;
    return s;
}

double ConfigurationDistribution::probability(const SpinConfiguration& config) const {
    const auto it = pair_probability.find(config_mask(config.canonical()));
    return it == pair_probability.end() ? 0.0 : it->second;
}

ConfigurationDistribution configuration_distribution(const StateVector& state,
                                                     const SignProjectorTable& table) {
    if (state.truncation != table.truncation)
        throw DimensionError("state and projector table truncations differ");
    const int n = state.n_modes;
    if (n > 20) throw CapacityError("sign-pattern enumeration limited to 20 modes");

    ConfigurationDistribution dist;
    dist.n = n;

    const std::uint32_t patterns = 1u << n;
    for (std::uint32_t mask = 0; mask < patterns; ++mask) {
        Eigen::VectorXcd phi = state.amplitudes;
        for (int mode = 0; mode < n; ++mode) {
            const bool plus = (mask >> mode) & 1u;
            apply_single_mode_matrix(plus ? table.i_plus : table.i_minus, phi, mode, n,
                                     state.truncation);
        }
        double p = state.amplitudes.dot(phi).real();
        if (p < 0.0) {
            if (p < -1e-8)
                throw Error("sign-pattern probability " + format_double(p) +
                            " is negative beyond truncation tolerance");
            p = 0.0;
        }
        const std::uint32_t canonical = (mask & 1u) ? mask : (~mask & (patterns - 1u));
        dist.pair_probability[canonical] += p;
    }
    return dist;
}

SuccessResidual success_and_residual(const ConfigurationDistribution& dist,
                                     const OracleResult& oracle, const IsingProblem& problem) {
    if (dist.n != problem.n())
        throw DimensionError("distribution and problem have different spin counts");

    const double tol = 1e-12 * std::max(1.0, std::abs(oracle.min_energy));
    SuccessResidual out;
    for (const auto& [mask, p] : dist.pair_probability) {
        const double e = energy(problem, config_from_mask(mask, dist.n));
        if (e <= oracle.min_energy + tol)
            out.success_probability += p;
        else
            out.residual_energy += p * (e - oracle.min_energy);
    }
    return out;
}

double fidelity(const StateVector& a, const StateVector& b) {
    if (a.dim() != b.dim()) throw DimensionError("state dimension mismatch");
    if (std::abs(a.norm() - 1.0) > 1e-4 || std::abs(b.norm() - 1.0) > 1e-4)
        throw ValidationError("fidelity requires normalized states");
    return std::norm(inner(a, b));
}

void write_distribution_csv(const ConfigurationDistribution& dist, const IsingProblem& problem,
                            const OracleResult& oracle, const std::filesystem::path& path) {
    CsvWriter csv(path, {"config_bits", "probability", "ising_energy", "distance_to_optimum"});
    for (const auto& [mask, p] : dist.pair_probability) {
        const SpinConfiguration config = config_from_mask(mask, dist.n);
        csv.write_row({config.bit_string(), format_double(p),
                       format_double(energy(problem, config)),
                       format_double(distance(config, oracle.optimal_pair))});
    }
}

}  // namespace kpo
