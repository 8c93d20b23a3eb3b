#include <doctest.h>

#include <cmath>

#include "kpo/readout.hpp"
#include "kpo/rng.hpp"

using namespace kpo;

namespace {

constexpr double kPi = 3.14159265358979323846;

double gaussian_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Position wavefunctions <x|n> for the x = (a+a+)/2 quadrature convention
// (ground-state variance 1/4). Test-side oracle, independent of the tables.
std::vector<double> hermite_functions(double x, int n_max) {
    const double xi = std::sqrt(2.0) * x;
    std::vector<double> phi(static_cast<std::size_t>(n_max) + 1);
    phi[0] = std::pow(kPi, -0.25) * std::exp(-0.5 * xi * xi);
    if (n_max >= 1) phi[1] = std::sqrt(2.0) * xi * phi[0];
    for (int n = 2; n <= n_max; ++n)
        phi[static_cast<std::size_t>(n)] =
            std::sqrt(2.0 / n) * xi * phi[static_cast<std::size_t>(n - 1)] -
            std::sqrt((n - 1.0) / n) * phi[static_cast<std::size_t>(n - 2)];
    const double scale = std::pow(2.0, 0.25);
    for (double& v : phi) v *= scale;
    return phi;
}

// Simpson integral of psi_m psi_n over [0, hi].
double half_line_overlap(int m, int n, int n_max, double hi = 12.0, int panels = 6000) {
    const double h = hi / (2 * panels);
    double sum = 0.0;
    for (int i = 0; i <= 2 * panels; ++i) {
        const double x = i * h;
        const auto phi = hermite_functions(x, n_max);
        const double f = phi[static_cast<std::size_t>(m)] * phi[static_cast<std::size_t>(n)];
        const double w = (i == 0 || i == 2 * panels) ? 1.0 : (i % 2 != 0 ? 4.0 : 2.0);
        sum += w * f;
    }
    return sum * h / 3.0;
}

StateVector even_cat(double alpha, int truncation) {
    StateVector plus = coherent_state(Complex(alpha, 0.0), truncation);
    StateVector minus = coherent_state(Complex(-alpha, 0.0), truncation);
    plus.amplitudes += minus.amplitudes;
    plus.normalize();
    return plus;
}

DensityMatrix random_density(int truncation, std::uint64_t seed, int rank = 3) {
    Rng rng(seed);
    const int levels = truncation + 1;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(levels, levels);
    double weight_sum = 0.0;
    for (int r = 0; r < rank; ++r) {
        Eigen::VectorXcd v(levels);
        for (int i = 0; i < levels; ++i)
            v(i) = Complex(rng.symmetric(1.0), rng.symmetric(1.0));
        v.normalize();
        const double w = rng.unit() + 0.1;
        rho += w * (v * v.adjoint());
        weight_sum += w;
    }
    DensityMatrix out;
    out.truncation = truncation;
    out.rho = rho / weight_sum;
    return out;
}

StateVector random_pure(int truncation, std::uint64_t seed) {
    Rng rng(seed);
    StateVector s;
    s.n_modes = 1;
    s.truncation = truncation;
    s.amplitudes.resize(truncation + 1);
    for (int i = 0; i <= truncation; ++i)
        s.amplitudes(i) = Complex(rng.symmetric(1.0), rng.symmetric(1.0));
    s.normalize();
    return s;
}

}  // namespace

TEST_SUITE("readout") {

TEST_CASE("displacement elements: vacuum column and identity limit") {
    const Complex alpha(0.7, -0.3);
    CHECK(std::abs(displacement_matrix_element(0, 0, alpha) -
                   std::exp(-0.5 * std::norm(alpha))) <= 1e-14);
    for (int m = 0; m <= 5; ++m)
        for (int n = 0; n <= 5; ++n) {
            const Complex d = displacement_matrix_element(m, n, Complex(0.0, 0.0));
            CHECK(std::abs(d - (m == n ? Complex(1.0, 0.0) : Complex(0.0, 0.0))) <= 1e-12);
        }
}

TEST_CASE("displacement is unitary away from the truncation edge") {
    // Truncation at n_max = 30 preserves unitarity on the low block; how low
    // depends on |alpha| (measured: |a| <= 1 holds to 1e-7 on levels < 15,
    // |a| = 2 needs levels < 6 for 1e-8; at levels < 15 it degrades to 0.18).
    const int n_max = 30;
    auto gram_defect = [&](Complex alpha, int block) {
        Eigen::MatrixXcd d(n_max + 1, n_max + 1);
        for (int m = 0; m <= n_max; ++m)
            for (int n = 0; n <= n_max; ++n) d(m, n) = displacement_matrix_element(m, n, alpha);
        const Eigen::MatrixXcd gram = (d.adjoint() * d).topLeftCorner(block, block);
        return (gram - Eigen::MatrixXcd::Identity(block, block)).cwiseAbs().maxCoeff();
    };
    for (const Complex alpha : {Complex(0.5, 0.0), Complex(0.0, 0.5), Complex(1.0, 0.0)})
        CHECK(gram_defect(alpha, 15) <= 1e-6);
    for (const Complex alpha : {Complex(2.0, 0.0), Complex(0.0, 2.0)})
        CHECK(gram_defect(alpha, 6) <= 1e-8);
}

TEST_CASE("Wigner function of the vacuum peaks at 2/pi") {
    const StateVector vac = vacuum_state(1, 10);
    const WignerGrid grid = wigner(vac, uniform_grid(0.0, 0.0, 1), uniform_grid(0.0, 0.0, 1));
    CHECK(grid.values(0, 0) == doctest::Approx(2.0 / kPi).epsilon(1e-12));
}

TEST_CASE("coherent-state Wigner function is a displaced Gaussian") {
    const Complex alpha(1.0, -0.5);
    const StateVector state = coherent_state(alpha, 20);
    const WignerGrid peak =
        wigner(state, uniform_grid(1.0, 1.0, 1), uniform_grid(-0.5, -0.5, 1));
    CHECK(peak.values(0, 0) == doctest::Approx(2.0 / kPi).epsilon(1e-8));

    const WignerGrid off =
        wigner(state, uniform_grid(2.0, 2.0, 1), uniform_grid(-0.5, -0.5, 1));
    CHECK(off.values(0, 0) == doctest::Approx(2.0 / kPi * std::exp(-2.0)).epsilon(1e-6));
}

TEST_CASE("even cat shows interference fringes with negative minima") {
    const StateVector cat = even_cat(std::sqrt(5.0), 20);
    const Eigen::VectorXd axis = uniform_grid(-4.0, 4.0, 161);
    const WignerGrid grid = wigner(cat, axis, axis);
    CHECK(grid.min_value() < -0.05);
    CHECK(grid.riemann_sum() == doctest::Approx(1.0).epsilon(1e-3));

    // Central interference fringe dominates; displaced peaks sit near
    // x = +-sqrt(5) along y = 0, and the negative fringes lie between them.
    Eigen::Index imax = 0, jmax = 0;
    grid.values.maxCoeff(&imax, &jmax);
    CHECK(std::abs(axis(imax)) <= 0.05);
    CHECK(std::abs(axis(jmax)) <= 0.05);
    CHECK(grid.values(imax, jmax) == doctest::Approx(2.0 / kPi).epsilon(1e-3));

    Eigen::Index iy0 = 0;
    grid.y_axis.cwiseAbs().minCoeff(&iy0);
    double best = -1.0;
    Eigen::Index ibest = 0;
    for (Eigen::Index ix = 0; ix < axis.size(); ++ix)
        if (axis(ix) > 1.0 && grid.values(ix, iy0) > best) {
            best = grid.values(ix, iy0);
            ibest = ix;
        }
    CHECK(std::abs(axis(ibest) - std::sqrt(5.0)) <= 0.05);
    CHECK(best == doctest::Approx(1.0 / kPi).epsilon(0.02));

    Eigen::Index imin = 0, jmin = 0;
    grid.values.minCoeff(&imin, &jmin);
    CHECK(std::abs(axis(imin)) < std::sqrt(5.0));
}

TEST_CASE("Wigner marginal reproduces the quadrature density") {
    const StateVector state = coherent_state(Complex(1.0, 0.0), 20);
    const Eigen::VectorXd xs = uniform_grid(-4.0, 4.0, 81);
    const Eigen::VectorXd ys = uniform_grid(-6.0, 6.0, 241);
    const WignerGrid grid = wigner(state, xs, ys);
    const double dy = ys(1) - ys(0);
    for (Eigen::Index ix = 0; ix < xs.size(); ix += 8) {
        const double marginal = grid.values.row(ix).sum() * dy;
        const double expected =
            std::sqrt(2.0 / kPi) * std::exp(-2.0 * (xs(ix) - 1.0) * (xs(ix) - 1.0));
        CHECK(std::abs(marginal - expected) <= 1e-3);
    }
}

TEST_CASE("Wigner rejects a non-Hermitian density matrix") {
    DensityMatrix rho;
    rho.truncation = 2;
    rho.rho = Eigen::MatrixXcd::Zero(3, 3);
    rho.rho(0, 1) = Complex(1.0, 0.0);  // no conjugate partner
    CHECK_THROWS_AS(wigner(rho, uniform_grid(0.0, 1.0, 3), uniform_grid(0.0, 1.0, 3)), Error);
}

TEST_CASE("sign projector table pins the published coefficients") {
    const SignProjectorTable table = sign_projector_table(20);
    CHECK(table.i_plus(0, 0) == 0.5);
    CHECK(table.i_plus(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0 * kPi)).epsilon(1e-14));
    CHECK(table.i_plus(0, 2) == 0.0);
    CHECK(table.i_plus(2, 0) == 0.0);

    for (int m = 0; m <= 20; ++m) {
        CHECK(table.i_plus(m, m) == 0.5);
        CHECK(table.i_minus(m, m) == 0.5);
        for (int n = 0; n <= 20; ++n) {
            CHECK(table.i_plus(m, n) == table.i_plus(n, m));
            if ((m - n) % 2 != 0) {
                // Opposite signs in the odd-difference sector.
                CHECK(table.i_plus(m, n) == -table.i_minus(m, n));
            } else if (m != n) {
                CHECK(table.i_plus(m, n) == 0.0);
                CHECK(table.i_minus(m, n) == 0.0);
            }
        }
    }
}

TEST_CASE("projector coefficients match the half-line quadrature oracle") {
    const int n_max = 12;
    const SignProjectorTable table = sign_projector_table(n_max);
    for (int m = 0; m <= n_max; ++m)
        for (int n = 0; n <= m; ++n) {
            const double oracle = half_line_overlap(m, n, n_max);
            CHECK(std::abs(table.i_plus(m, n) - oracle) <= 1e-9);
        }
}

TEST_CASE("sign probabilities: vacuum, coherent, cat") {
    const SignProjectorTable table = sign_projector_table(20);

    const auto [vp, vm] = sign_probability(vacuum_state(1, 20), table);
    CHECK(vp == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(vm == doctest::Approx(0.5).epsilon(1e-12));

    for (double alpha : {0.5, 1.0, 2.0}) {
        const auto [pp, pm] = sign_probability(coherent_state(Complex(alpha, 0.0), 20), table);
        CHECK(std::abs(pp - gaussian_cdf(2.0 * alpha)) <= 1e-3);
        CHECK(std::abs(pp + pm - 1.0) <= 1e-6);
    }

    const auto [cp, cm] = sign_probability(even_cat(2.0, 20), table);
    CHECK(std::abs(cp - 0.5) <= 1e-6);
    CHECK(std::abs(cm - 0.5) <= 1e-6);
}

TEST_CASE("completeness holds for random density matrices") {
    const SignProjectorTable table = sign_projector_table(20);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const DensityMatrix rho = random_density(20, seed);
        const auto [pp, pm] = sign_probability(rho, table);
        CHECK(std::abs(pp + pm - 1.0) <= 1e-6);
        CHECK(pp >= -1e-9);
        CHECK(pm >= -1e-9);
    }
}

TEST_CASE("table P+ agrees with the Wigner half-plane integral") {
    const int n_max = 20;
    const SignProjectorTable table = sign_projector_table(n_max);
    // Midpoint grid so no cell straddles the x = 0 boundary.
    const int cells = 320;
    const double h = 16.0 / cells;
    Eigen::VectorXd xs(cells), ys(cells);
    for (int i = 0; i < cells; ++i) {
        xs(i) = -8.0 + (i + 0.5) * h;
        ys(i) = -8.0 + (i + 0.5) * h;
    }
    for (std::uint64_t seed : {3u, 14u}) {
        const StateVector state = random_pure(n_max, seed);
        const WignerGrid grid = wigner(state, xs, ys);
        double plus = 0.0;
        for (int ix = 0; ix < cells; ++ix)
            if (xs(ix) > 0.0) plus += grid.values.row(ix).sum();
        plus *= h * h;
        const auto [pp, pm] = sign_probability(state, table);
        CHECK(std::abs(pp - plus) <= 2e-3);
        CHECK(std::abs(pp + pm - 1.0) <= 1e-6);
    }
}

TEST_CASE("sign probability rejects multi-mode states") {
    const SignProjectorTable table = sign_projector_table(4);
    CHECK_THROWS_AS(sign_probability(vacuum_state(2, 4), table), UsageError);
}

TEST_CASE("configuration distribution of a displaced product state") {
    const SignProjectorTable table = sign_projector_table(20);
    const StateVector product = product_coherent_state(Eigen::Vector2cd(2.0, 2.0), 20);
    const ConfigurationDistribution dist = configuration_distribution(product, table);
    CHECK(dist.total() == doctest::Approx(1.0).epsilon(1e-9));
    const double p_aligned = dist.probability(SpinConfiguration(std::vector<int>{1, 1}));
    const double phi4 = gaussian_cdf(4.0);
    CHECK(std::abs(p_aligned - (phi4 * phi4 + (1 - phi4) * (1 - phi4))) <= 1e-3);
}

TEST_CASE("vacuum sign patterns are uniform over pairs") {
    const SignProjectorTable table = sign_projector_table(6);
    const ConfigurationDistribution dist =
        configuration_distribution(vacuum_state(3, 6), table);
    CHECK(dist.pair_probability.size() == 4);  // 2^(3-1)
    for (const auto& [mask, p] : dist.pair_probability)
        CHECK(p == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("entangled cat reads out as the aligned pair") {
    const SignProjectorTable table = sign_projector_table(20);
    const SpinConfiguration aligned(std::vector<int>{1, 1});
    const StateVector ecs = target_cat_state(aligned, 5.0, 1.0, 20);
    const ConfigurationDistribution dist = configuration_distribution(ecs, table);
    CHECK(dist.probability(aligned) >= 0.999);
}

TEST_CASE("success and residual from a distribution") {
    const IsingProblem problem = random_instance(4, 5);
    const OracleResult oracle = brute_force_solve(problem);

    ConfigurationDistribution concentrated;
    concentrated.n = 4;
    concentrated.pair_probability[config_mask(oracle.optimal_pair)] = 1.0;
    const SuccessResidual exact = success_and_residual(concentrated, oracle, problem);
    CHECK(exact.success_probability == doctest::Approx(1.0));
    CHECK(exact.residual_energy == doctest::Approx(0.0));

    ConfigurationDistribution uniform;
    uniform.n = 4;
    for (std::uint32_t rest = 0; rest < 8; ++rest)
        uniform.pair_probability[(rest << 1) | 1u] = 1.0 / 8.0;
    const SuccessResidual spread = success_and_residual(uniform, oracle, problem);

    double mean_excess = 0.0;
    for (std::uint32_t rest = 0; rest < 8; ++rest)
        mean_excess +=
            (energy(problem, config_from_mask((rest << 1) | 1u, 4)) - oracle.min_energy) / 8.0;
    CHECK(spread.residual_energy == doctest::Approx(mean_excess));
    CHECK(spread.success_probability == doctest::Approx(1.0 / 8.0));

    // success plus the probability on non-optimal pairs recovers the total
    double non_optimal = 0.0;
    for (const auto& [mask, p] : uniform.pair_probability) {
        const double e = energy(problem, config_from_mask(mask, 4));
        if (e > oracle.min_energy + 1e-12) non_optimal += p;
    }
    CHECK(spread.success_probability + non_optimal == doctest::Approx(1.0));
}

TEST_CASE("fidelity basics") {
    const StateVector a = coherent_state(Complex(0.3, 0.2), 12);
    CHECK(fidelity(a, a) == doctest::Approx(1.0));

    StateVector n0 = vacuum_state(1, 12);
    StateVector n1 = vacuum_state(1, 12);
    n1.amplitudes(0) = 0.0;
    n1.amplitudes(1) = 1.0;
    CHECK(fidelity(n0, n1) == doctest::Approx(0.0));

    const SpinConfiguration aligned(std::vector<int>{1, 1});
    const StateVector ecs0 = target_cat_state(aligned, 0.0, 1.0, 8);
    CHECK(fidelity(ecs0, vacuum_state(2, 8)) == doctest::Approx(1.0));

    CHECK_THROWS_AS(fidelity(a, vacuum_state(1, 10)), DimensionError);
}

TEST_CASE("partial trace of a product state is pure") {
    const StateVector product = product_coherent_state(Eigen::Vector2cd(1.0, -0.5), 12);
    const DensityMatrix rho = partial_trace_to_mode(product, 0);
    CHECK(std::abs(rho.rho.trace().real() - 1.0) <= 1e-12);
    CHECK((rho.rho - rho.rho.adjoint()).cwiseAbs().maxCoeff() <= 1e-14);
    const double purity = (rho.rho * rho.rho).trace().real();
    CHECK(purity == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("partial trace of the entangled cat is an even mixture") {
    const SpinConfiguration aligned(std::vector<int>{1, 1});
    const StateVector ecs = target_cat_state(aligned, 5.0, 1.0, 20);
    const DensityMatrix rho = partial_trace_to_mode(ecs, 1);
    CHECK(std::abs(rho.rho.trace().real() - 1.0) <= 1e-10);
    const double purity = (rho.rho * rho.rho).trace().real();
    CHECK(purity == doctest::Approx(0.5).epsilon(0.01));
}

}  // TEST_SUITE
