#include "lossysync/dynamics.hpp"
#include "lossysync/error.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace lossysync;
namespace t = lossysync::testing;

namespace {

DerivedModel zero_coupling_model(std::vector<double> varpi, std::vector<double> gain) {
    DerivedModel m = derive(t::two_node_spec(0.3, 1.0, 0.0, 0.0));
    m.a = {0.0};
    m.b = {0.0};
    m.psi = {0.0};
    m.natural_frequency = std::move(varpi);
    m.gain = std::move(gain);
    return m;
}

}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi]") {
    constexpr double pi = std::numbers::pi;
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(pi) == pi);
    CHECK(wrap_angle(-pi) == pi);
    CHECK(wrap_angle(3 * pi) == doctest::Approx(pi));
    CHECK(wrap_angle(2 * pi + 0.25) == doctest::Approx(0.25));
    CHECK(wrap_angle(-0.5) == -0.5);
}

TEST_CASE("rhs at zero phase differences is gain * (varpi + sum a)") {
    const NetworkSpec spec = t::benchmark_spec(5);
    const DerivedModel m = derive(spec);
    const Vector r = rhs(m, Vector::Constant(10, 0.37));
    for (std::size_t i = 0; i < 10; ++i) {
        double sum_a = 0.0;
        for (std::size_t z = 0; z < m.edge_count(); ++z) {
            if (m.edges[z].first == i || m.edges[z].second == i) sum_a += m.a[z];
        }
        CHECK(r[static_cast<Eigen::Index>(i)] ==
              doctest::Approx(m.gain[i] * (m.natural_frequency[i] + sum_a)).epsilon(1e-13));
    }
}

TEST_CASE("lossless 2-node: the bisection fixed point zeroes the vector field") {
    const double b = 1.7;
    const double varpi = 0.6;
    const DerivedModel m = derive(t::two_node_spec(0.0, b, varpi, -varpi));
    const auto root = t::bisect([&](double x) { return varpi - b * std::sin(x); }, -std::numbers::pi / 2,
                                std::numbers::pi / 2);
    REQUIRE(root);
    CHECK(*root == doctest::Approx(std::asin(varpi / b)).epsilon(1e-14));
    const Vector r = rhs(m, Vector{{*root, 0.0}});
    CHECK(r.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("sine form: source node sees no coupling when delta_ij = psi_ij") {
    const DerivedModel m = derive(t::two_node_spec(0.5, 2.0, 0.4, -0.9, 1.5, 0.5));
    const Vector d{{m.psi[0] + 0.2, 0.2}};
    CHECK(rhs_sine_form(m, d)[0] == doctest::Approx(1.5 * 0.4).epsilon(1e-14));
    CHECK(rhs(m, d)[0] == doctest::Approx(1.5 * 0.4).epsilon(1e-14));
}

TEST_CASE("lossless sine form reduces to classical Kuramoto coupling") {
    const DerivedModel m = derive(t::two_node_spec(0.0, 2.0, 0.4, -0.1));
    const Vector d{{0.7, -0.2}};
    const Vector r = rhs_sine_form(m, d);
    CHECK(r[0] == doctest::Approx(0.4 - 2.0 * std::sin(0.9)).epsilon(1e-14));
    CHECK(r[1] == doctest::Approx(-0.1 - 2.0 * std::sin(-0.9)).epsilon(1e-14));
}

TEST_CASE("rhs rejects a state of the wrong size") {
    const DerivedModel m = derive(t::two_node_spec(0.1, 1.0, 0.0, 0.0));
    CHECK_THROWS_AS((void)rhs(m, Vector::Zero(3)), DimensionError);
    CHECK_THROWS_AS((void)rhs_sine_form(m, Vector::Zero(1)), DimensionError);
}

TEST_CASE("property: rhs is invariant under uniform phase shifts") {
    Rng rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        const DerivedModel m = derive(t::random_spec(rng));
        const Vector d = t::random_state(rng, m.node_count, 4.0);
        const double c = rng.uniform(-50.0, 50.0);
        const Vector shifted = d.array() + c;
        const Vector r0 = rhs(m, d);
        CHECK((rhs(m, shifted) - r0).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, r0.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("property: both forms of the vector field agree") {
    Rng rng(23);
    for (int trial = 0; trial < 2000; ++trial) {
        const DerivedModel m = derive(t::random_spec(rng));
        const Vector d = t::random_state(rng, m.node_count, 10.0);
        CHECK((rhs(m, d) - rhs_sine_form(m, d)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("property: droop identity gain * (P_set - P) = rhs") {
    Rng rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        const NetworkSpec spec = t::random_spec(rng);
        const DerivedModel m = derive(spec);
        const Vector d = t::random_state(rng, m.node_count, 3.0);
        const Vector r = rhs(m, d);
        for (std::size_t i = 0; i < m.node_count; ++i) {
            const double droop = spec.gain[i] * (spec.power_setpoint[i] - active_power(m, spec, d, i));
            CHECK(std::abs(droop - r[static_cast<Eigen::Index>(i)]) < 1e-12);
        }
    }
}

TEST_CASE("active power with uniform phases and unit voltages equals the load") {
    NetworkSpec spec = t::two_node_spec(0.4, 1.9, 0.2, 0.1);
    spec.load = {0.3, 0.05};
    const DerivedModel m = derive(spec);
    const Vector d = Vector::Constant(2, 1.1);
    CHECK(active_power(m, spec, d, 0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(active_power(m, spec, d, 1) == doctest::Approx(0.05).epsilon(1e-15));
    CHECK_THROWS_AS((void)active_power(m, spec, d, 2), ValidationError);
}

TEST_CASE("property: lossless coupling cancels in the gain-weighted sum") {
    Rng rng(37);
    for (int trial = 0; trial < 300; ++trial) {
        NetworkSpec spec = t::random_spec(rng);
        for (Line& l : spec.lines) l.conductance = 0.0;
        const DerivedModel m = derive(spec);
        const Vector d = t::random_state(rng, m.node_count, 3.0);
        const Vector r = rhs(m, d);
        double weighted = 0.0;
        double varpi = 0.0;
        for (std::size_t i = 0; i < m.node_count; ++i) {
            weighted += r[static_cast<Eigen::Index>(i)] / m.gain[i];
            varpi += m.natural_frequency[i];
        }
        CHECK(std::abs(weighted - varpi) < 1e-11);
    }
}

TEST_CASE("RK4 is exact on a constant vector field") {
    const DerivedModel m = zero_coupling_model({0.3, -1.1}, {2.0, 0.5});
    const Vector d0{{0.25, -0.5}};
    const Trajectory traj = integrate(m, {d0, 0.0}, {.t_max = 2.0, .dt = 1e-3});
    const Sample& last = traj.back();
    CHECK(last.time == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(std::abs(last.delta[0] - (0.25 + 2.0 * 2.0 * 0.3)) < 1e-12);
    CHECK(std::abs(last.delta[1] - (-0.5 - 2.0 * 0.5 * 1.1)) < 1e-12);
}

TEST_CASE("trajectory bookkeeping: times, decimation, recorded derivatives") {
    const DerivedModel m = derive(t::benchmark_spec(2));
    const Vector d0 = random_initial_phases(m, 9);
    const Trajectory traj = integrate(m, {d0, 0.0}, {.t_max = 1.0005, .dt = 1e-3, .decimation = 8});
    CHECK(traj.back().time >= 1.0005);
    CHECK(traj.back().time < 1.0005 + 1e-3);
    CHECK(traj.samples.front().time == 0.0);
    CHECK(traj.samples.size() == 1 + 1001 / 8 + 1);  // 1001 steps, every 8th plus the final one
    for (std::size_t k = 1; k < traj.samples.size(); ++k) {
        CHECK(traj.samples[k].time > traj.samples[k - 1].time);
    }
    for (const Sample& s : traj.samples) CHECK((s.ddelta - rhs(m, s.delta)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("integrate validates its options") {
    const DerivedModel m = derive(t::two_node_spec(0.1, 1.0, 0.0, 0.0));
    const PhaseState s{Vector::Zero(2), 0.0};
    CHECK_THROWS_AS((void)integrate(m, s, {.t_max = 1.0, .dt = 0.0}), ValidationError);
    CHECK_THROWS_AS((void)integrate(m, s, {.t_max = 1e-4, .dt = 1e-3}), ValidationError);
    CHECK_THROWS_AS((void)integrate(m, {Vector::Zero(3), 0.0}, {}), DimensionError);
}

TEST_CASE("non-finite states raise IntegrationDiverged with the last good sample") {
    const DerivedModel m = zero_coupling_model({1e308, 0.0}, {10.0, 1.0});
    try {
        (void)integrate(m, {Vector::Zero(2), 0.0}, {.t_max = 1.0, .dt = 0.1});
        FAIL("expected divergence");
    } catch (const IntegrationDiverged& e) {
        CHECK(e.last_good().time == 0.0);
        CHECK(e.last_good().delta.allFinite());
    }
}

TEST_CASE("RK4 error ratio under step halving is close to 16") {
    // Reference at dt/64; the dt and dt/2 errors then carry negligible
    // reference error and the ratio of final-state errors approaches 2^4.
    const DerivedModel m = derive(t::benchmark_spec(1));
    const Vector d0 = random_initial_phases(m, 4);
    const double dt = 0.02;
    auto final_state = [&](double h) { return integrate(m, {d0, 0.0}, {.t_max = 2.0, .dt = h}).back().delta; };
    const Vector ref = final_state(dt / 64);
    const double e1 = (final_state(dt) - ref).cwiseAbs().maxCoeff();
    const double e2 = (final_state(dt / 2) - ref).cwiseAbs().maxCoeff();
    MESSAGE("RK4 errors " << e1 << " " << e2 << " ratio " << e1 / e2);
    CHECK(e1 / e2 > 16.0 * 0.8);
    CHECK(e1 / e2 < 16.0 * 1.2);
}

TEST_CASE("synchronization detection") {
    SUBCASE("benchmark run settles at zero frequency") {
        const DerivedModel m = derive(t::benchmark_spec(1));
        const Trajectory traj =
            integrate(m, {random_initial_phases(m, 3), 0.0}, {.t_max = 20.0, .dt = 1e-3, .decimation = 10});
        const auto sync = detect_synchronization(traj, 1e-6);
        REQUIRE(sync);
        CHECK(std::abs(*sync) < 1e-6);
        CHECK(traj.back().ddelta.cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("uncoupled oscillators with distinct frequencies never agree") {
        const DerivedModel m = zero_coupling_model({0.3, -0.2}, {1.0, 1.0});
        const Trajectory traj = integrate(m, {Vector::Zero(2), 0.0}, {.t_max = 5.0, .dt = 1e-2});
        CHECK_FALSE(detect_synchronization(traj, 1e-6));
    }
    SUBCASE("uncoupled but identical frequencies count as synchronized") {
        const DerivedModel m = zero_coupling_model({0.3, 0.3}, {1.0, 1.0});
        const Trajectory traj = integrate(m, {Vector::Zero(2), 0.0}, {.t_max = 1.0, .dt = 1e-2});
        const auto sync = detect_synchronization(traj, 1e-6);
        REQUIRE(sync);
        CHECK(*sync == doctest::Approx(0.3));
    }
}

TEST_CASE("default initial phases lie inside the synchronization set") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const DerivedModel m = derive(t::benchmark_spec(seed));
        const Vector d0 = random_initial_phases(m, seed + 100);
        CHECK(max_edge_difference(m, d0) < 0.9 * m.gamma_bound());
    }
}
