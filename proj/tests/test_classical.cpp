#include <doctest.h>

#include <cmath>

#include "kpo/classical.hpp"
#include "kpo/rng.hpp"

using namespace kpo;

namespace {

NetworkSpec single_spec(double delta = 1.0, double kerr = 1.0) {
    return NetworkSpec::single(KpoParams(kerr, delta));
}

NetworkSpec ferro_pair_spec(double xi0 = 0.5) {
    Eigen::MatrixXd j(2, 2);
    j << 0, 1, 1, 0;
    return NetworkSpec::with_rule_detunings(IsingProblem(2, j), xi0);
}

PhaseState point(std::initializer_list<double> xs, std::initializer_list<double> ys) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(xs.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(ys.size()));
    Eigen::Index i = 0;
    for (double v : xs) x(i++) = v;
    i = 0;
    for (double v : ys) y(i++) = v;
    return PhaseState(std::move(x), std::move(y));
}

// Orbit area via the shoelace formula over exactly one loop, cut between
// consecutive positive-going crossings of y = 0.
double orbit_area(const NetworkSpec& spec, const PhaseState& start, double p, double dt) {
    const ClassicalTrajectory traj =
        evolve_classical_fixed_pump(start, spec, p, 200.0, dt, 1);
    std::vector<std::pair<double, double>> loop;
    int crossings = 0;
    for (std::size_t i = 1; i < traj.states.size(); ++i) {
        const double y_prev = traj.states[i - 1].y(0);
        const double y_cur = traj.states[i].y(0);
        if (y_prev < 0.0 && y_cur >= 0.0) ++crossings;
        if (crossings >= 1) loop.emplace_back(traj.states[i].x(0), y_cur);
        if (crossings == 2) break;
    }
    REQUIRE(crossings == 2);
    double twice_area = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const auto& [x0, y0] = loop[i];
        const auto& [x1, y1] = loop[(i + 1) % loop.size()];
        twice_area += x0 * y1 - x1 * y0;
    }
    return std::abs(twice_area) / 2.0;
}

}  // namespace

TEST_SUITE("classical") {

TEST_CASE("origin is a fixed point of the flow at any pump") {
    const NetworkSpec spec = ferro_pair_spec();
    for (double p : {0.0, 0.5, 3.0}) {
        const PhaseState rhs = classical_rhs(PhaseState::zero(2), spec, p);
        CHECK(rhs.x.norm() == 0.0);
        CHECK(rhs.y.norm() == 0.0);
    }
}

TEST_CASE("nontrivial single-oscillator fixed point annihilates the flow") {
    const NetworkSpec spec = single_spec();
    const double p = 3.0;
    const double amp = std::sqrt((p - 1.0) / 1.0);
    const PhaseState rhs = classical_rhs(point({amp}, {0.0}), spec, p);
    CHECK(std::abs(rhs.x(0)) <= 1e-12);
    CHECK(std::abs(rhs.y(0)) <= 1e-12);
}

TEST_CASE("flow is odd under phase-space inversion") {
    const NetworkSpec spec = ferro_pair_spec();
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd x(2), y(2);
        for (int i = 0; i < 2; ++i) {
            x(i) = rng.symmetric(2.0);
            y(i) = rng.symmetric(2.0);
        }
        const PhaseState fwd = classical_rhs(PhaseState(x, y), spec, 1.3);
        const PhaseState bwd = classical_rhs(PhaseState(-x, -y), spec, 1.3);
        CHECK((fwd.x + bwd.x).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((fwd.y + bwd.y).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("classical energy: origin, fixed point, conservation") {
    const KpoParams params(1.0, 1.0);
    CHECK(classical_energy(PhaseState::zero(1), params, 2.0) == 0.0);

    // E at the nontrivial fixed point x^2 = (p - Delta)/K is -(p-Delta)^2/4K.
    const double p = 3.0;
    const double amp = std::sqrt(p - 1.0);
    CHECK(classical_energy(point({amp}, {0.0}), params, p) ==
          doctest::Approx(-(p - 1.0) * (p - 1.0) / 4.0));

    const NetworkSpec spec = single_spec();
    const PhaseState start = point({0.7}, {-0.2});
    const double e0 = classical_energy(start, params, p);
    const ClassicalTrajectory traj =
        evolve_classical_fixed_pump(start, spec, p, 100.0, 1e-3, 100);
    for (const PhaseState& s : traj.states)
        CHECK(std::abs(classical_energy(s, params, p) - e0) <=
              1e-8 * std::abs(e0) + 1e-12);

    CHECK_THROWS_AS(classical_energy(PhaseState::zero(2), params, 1.0), UsageError);
}

TEST_CASE("fixed point structure across the threshold") {
    const KpoParams params(1.0, 1.0);

    const FixedPointSet below = single_kpo_fixed_points(params, 0.0);
    REQUIRE(below.points.size() == 1);
    CHECK(below.points[0].stability == Stability::stable);

    const FixedPointSet at = single_kpo_fixed_points(params, 1.0);
    REQUIRE(at.points.size() == 1);
    CHECK(at.points[0].stability == Stability::marginal);

    const FixedPointSet above = single_kpo_fixed_points(params, 3.0);
    REQUIRE(above.points.size() == 3);
    CHECK(above.points[0].stability == Stability::unstable);
    CHECK(above.points[1].state.x(0) == doctest::Approx(std::sqrt(2.0)));
    CHECK(above.points[2].state.x(0) == doctest::Approx(-std::sqrt(2.0)));
    for (std::size_t i = 1; i < 3; ++i)
        CHECK(above.points[i].stability == Stability::stable);

    // Every returned point solves the fixed-point equations.
    const NetworkSpec spec = single_spec();
    for (double p : {0.1, 0.8, 1.7, 2.9, 4.5}) {
        for (const FixedPoint& fp : single_kpo_fixed_points(params, p).points) {
            const PhaseState rhs = classical_rhs(fp.state, spec, p);
            CHECK(std::max(rhs.x.cwiseAbs().maxCoeff(), rhs.y.cwiseAbs().maxCoeff()) <= 1e-10);
        }
    }
}

TEST_CASE("ramped trajectory follows the stable branch") {
    const NetworkSpec spec = single_spec();
    const PumpSchedule schedule(5.0, 500.0);
    const ClassicalTrajectory traj =
        evolve_classical(point({0.1}, {0.0}), spec, schedule, 1e-3, 0);
    CHECK(std::abs(std::abs(traj.final_state.x(0)) - 2.0) <= 0.1);
}

TEST_CASE("origin stays put under the ramp") {
    const NetworkSpec spec = ferro_pair_spec();
    const ClassicalTrajectory traj =
        evolve_classical(PhaseState::zero(2), spec, PumpSchedule(5.0, 50.0), 1e-3, 0);
    CHECK(traj.final_state.x.norm() == 0.0);
    CHECK(traj.final_state.y.norm() == 0.0);
}

TEST_CASE("trajectories from opposite seeds are mirror images") {
    const NetworkSpec spec = ferro_pair_spec();
    const PumpSchedule schedule(3.0, 100.0);
    const PhaseState init = point({1e-4, -2e-4}, {5e-5, 1e-4});
    const PhaseState anti = point({-1e-4, 2e-4}, {-5e-5, -1e-4});
    const ClassicalTrajectory a = evolve_classical(init, spec, schedule, 1e-3, 1000);
    const ClassicalTrajectory b = evolve_classical(anti, spec, schedule, 1e-3, 1000);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t i = 0; i < a.states.size(); ++i) {
        CHECK((a.states[i].x + b.states[i].x).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK((a.states[i].y + b.states[i].y).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("adiabatic invariance of the orbit area below threshold") {
    const NetworkSpec spec = single_spec();
    const PhaseState start = point({0.1}, {0.0});
    const double area_before = orbit_area(spec, start, 0.0, 1e-3);

    // Slow ramp to just below the bifurcation, then measure the orbit again.
    const ClassicalTrajectory ramp =
        evolve_classical(start, spec, PumpSchedule(0.9, 500.0), 1e-3, 0);
    const double area_after = orbit_area(spec, ramp.final_state, 0.9, 1e-3);
    CHECK(std::abs(area_after - area_before) <= 0.05 * area_before);
}

TEST_CASE("divergence raises with a time stamp") {
    const NetworkSpec spec = single_spec();
    // A step far beyond stability blows up the amplitude immediately.
    CHECK_THROWS_AS(
        evolve_classical(point({0.5}, {0.0}), spec, PumpSchedule(5.0, 50.0), 1.0, 0),
        DivergenceError);
}

TEST_CASE("ferromagnetic ensemble almost always succeeds") {
    const NetworkSpec spec = ferro_pair_spec();
    const EnsembleReport report =
        classical_ensemble(spec, PumpSchedule(5.0, 500.0), 200, 7, 1e-6, 1e-3, 1);
    CHECK(report.total_runs == 200);
    CHECK(report.diverged_runs == 0);
    CHECK(report.report.success_probability >= 0.99);
    CHECK(report.report.residual_energy <= 0.05);
}

TEST_CASE("ensembles are deterministic given the seed") {
    const NetworkSpec spec = ferro_pair_spec();
    const PumpSchedule schedule(3.0, 50.0);
    const EnsembleReport a = classical_ensemble(spec, schedule, 16, 5, 1e-6, 1e-3, 1);
    const EnsembleReport b = classical_ensemble(spec, schedule, 16, 5, 1e-6, 1e-3, 1);
    CHECK(a.report.success_probability == b.report.success_probability);
    CHECK(a.report.residual_energy == b.report.residual_energy);
    REQUIRE(a.report.distribution.pair_probability.size() ==
            b.report.distribution.pair_probability.size());
    auto ita = a.report.distribution.pair_probability.begin();
    for (const auto& [mask, prob] : b.report.distribution.pair_probability) {
        CHECK(ita->first == mask);
        CHECK(ita->second == prob);
        ++ita;
    }
}

TEST_CASE("worker split does not change the statistics") {
    const NetworkSpec spec = ferro_pair_spec();
    const PumpSchedule schedule(3.0, 50.0);
    const EnsembleReport serial = classical_ensemble(spec, schedule, 24, 11, 1e-6, 1e-3, 1);
    const EnsembleReport pooled = classical_ensemble(spec, schedule, 24, 11, 1e-6, 1e-3, 4);
    CHECK(serial.report.success_probability ==
          doctest::Approx(pooled.report.success_probability));
    CHECK(serial.report.residual_energy ==
          doctest::Approx(pooled.report.residual_energy).epsilon(1e-12));
}

TEST_CASE("relaxation analysis of the ferromagnetic pair") {
    const RelaxationSolution sol = relaxation_analysis(ferro_pair_spec());
    CHECK(std::abs(sol.lambda_min) <= 1e-12);
    CHECK(sol.direction(0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(sol.direction(1) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(sol.signs == SpinConfiguration(std::vector<int>{1, 1}));
    CHECK(std::abs(sol.lower_bound) <= 1e-11);
}

TEST_CASE("relaxation analysis of a decoupled network picks the smallest detuning") {
    IsingProblem decoupled(2, Eigen::MatrixXd::Zero(2, 2));
    Eigen::VectorXd deltas(2);
    deltas << 0.7, 0.3;
    const NetworkSpec spec(decoupled, 0.5, deltas, 1.0);
    const RelaxationSolution sol = relaxation_analysis(spec);
    CHECK(sol.lambda_min == doctest::Approx(0.3));
    CHECK(std::abs(sol.direction(1)) == doctest::Approx(1.0));
}

TEST_CASE("Rayleigh bound holds for every configuration") {
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        const IsingProblem problem = random_instance(4, seed);
        const NetworkSpec spec = NetworkSpec::with_rule_detunings(problem, 0.5);
        const RelaxationSolution sol = relaxation_analysis(spec);
        const Eigen::MatrixXd m = coupling_matrix(spec);
        for (std::uint32_t mask = 0; mask < 16; ++mask) {
            const SpinConfiguration config = config_from_mask(mask, 4);
            Eigen::VectorXd s(4);
            for (int i = 0; i < 4; ++i) s(i) = config[i];
            CHECK(s.dot(m * s) >= sol.lower_bound - 1e-10);
        }
        CHECK((m * sol.direction - sol.lambda_min * sol.direction).norm() <= 1e-9);
    }
}

TEST_CASE("first bifurcation: ferromagnetic pair grows along (1,1)") {
    const NetworkSpec spec = ferro_pair_spec();
    const BifurcationCheck check =
        first_bifurcation_check(spec, PumpSchedule(5.0, 500.0), 1e-3, 1);
    REQUIRE(check.crossed);
    CHECK(check.lambda_min == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(check.p_cross <= 0.5);  // lambda_min = 0 plus growth lag
    CHECK(check.alignment >= 0.99);
    CHECK(check.max_y_pre <= 1e-3);
}

TEST_CASE("first bifurcation: decoupled modes grow at the smallest detuning") {
    IsingProblem decoupled(2, Eigen::MatrixXd::Zero(2, 2));
    Eigen::VectorXd deltas(2);
    deltas << 0.8, 0.3;
    const NetworkSpec spec(decoupled, 0.5, deltas, 1.0);
    const BifurcationCheck check =
        first_bifurcation_check(spec, PumpSchedule(3.0, 600.0), 1e-3, 2);
    REQUIRE(check.crossed);
    CHECK(check.lambda_min == doctest::Approx(0.3));
    CHECK(std::abs(check.direction_at_cross(1)) >= 0.99);
    CHECK(check.p_cross >= 0.3);
    CHECK(check.p_cross <= 0.55);
}

TEST_CASE("pre-bifurcation perturbations stay bounded") {
    for (std::uint64_t seed : {31u, 32u}) {
        const IsingProblem problem = random_instance(4, seed);
        const NetworkSpec spec = NetworkSpec::with_rule_detunings(problem, 0.5);
        const RelaxationSolution sol = relaxation_analysis(spec);
        const double p = 0.5 * sol.lambda_min;
        if (p <= 0.0) continue;

        Rng rng(seed);
        Eigen::VectorXd x(4), y(4);
        for (int i = 0; i < 4; ++i) {
            x(i) = rng.symmetric(1e-6);
            y(i) = rng.symmetric(1e-6);
        }
        const PhaseState init(x, y);
        const double a0 = std::hypot(init.x.norm(), init.y.norm());
        const ClassicalTrajectory traj =
            evolve_classical_fixed_pump(init, spec, p, 100.0, 1e-3, 100);
        for (const PhaseState& s : traj.states)
            CHECK(std::hypot(s.x.norm(), s.y.norm()) <= 2.0 * a0);
    }
}

}  // TEST_SUITE
