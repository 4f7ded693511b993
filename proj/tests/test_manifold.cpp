#include "lossysync/equilibrium.hpp"
#include "lossysync/error.hpp"
#include "lossysync/manifold.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace lossysync;
namespace t = lossysync::testing;

TEST_CASE("distance to the manifold") {
    const Vector star{{0.1, -0.3, 0.25, 0.0}};
    CHECK(distance_to_manifold((star.array() + 3.7).matrix(), star) < 1e-15);
    CHECK(manifold_offset((star.array() + 3.7).matrix(), star) == doctest::Approx(3.7));

    Vector v{{1.0, -1.0, 2.0, -2.0}};
    v /= v.norm();
    CHECK(distance_to_manifold(star + 0.013 * v, star) == doctest::Approx(0.013).epsilon(1e-12));

    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const Vector d = t::random_state(rng, 4, 2.0);
        const double dist = distance_to_manifold(d, star);
        CHECK(dist <= (d - star).norm() + 1e-15);
        // The projection minimizes over offsets: nudging the offset cannot do better.
        const double c = manifold_offset(d, star);
        for (double eps : {-1e-3, 1e-3}) {
            CHECK(dist <= (d - star - (c + eps) * Vector::Ones(4)).norm());
        }
    }
    CHECK_THROWS_AS((void)distance_to_manifold(Vector::Zero(3), star), DimensionError);
}

TEST_CASE("sphere perturbations have the requested norm") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        CHECK(sphere_perturbation(10, 0.05, s).norm() == doctest::Approx(0.05).epsilon(1e-14));
    }
    CHECK(sphere_perturbation(10, 0.05, 1) == sphere_perturbation(10, 0.05, 1));
}

TEST_CASE("on-manifold initial conditions never leave the manifold") {
    const DerivedModel m = derive(t::benchmark_spec(3));
    const EquilibriumResult eq = solve(m, Vector::Zero(10));
    const Vector start = (eq.delta_star.array() + 0.37).matrix();
    const Trajectory traj = integrate(m, {start, 0.0}, {.t_max = 10.0, .dt = 1e-3, .decimation = 10});
    for (const Sample& s : traj.samples) {
        CHECK(distance_to_manifold(s.delta, eq.delta_star) < 1e-10);
        CHECK(manifold_offset(s.delta, eq.delta_star) == doctest::Approx(0.37).epsilon(1e-9));
    }
}

TEST_CASE("distance decays monotonically after the transient") {
    const DerivedModel m = derive(t::benchmark_spec(6));
    const EquilibriumResult eq = solve(m, Vector::Zero(10));
    const Vector start = eq.delta_star + sphere_perturbation(10, 0.05, 77);
    const Trajectory traj = integrate(m, {start, 0.0}, {.t_max = 30.0, .dt = 1e-3, .decimation = 250});
    std::vector<double> dist;
    for (const Sample& s : traj.samples) dist.push_back(distance_to_manifold(s.delta, eq.delta_star));
    CHECK(dist.back() < 1e-6);
    const std::size_t settle = dist.size() / 5;
    for (std::size_t k = settle + 1; k < dist.size(); ++k) CHECK(dist[k] < dist[k - 1]);
}

TEST_CASE("probes around a condition-met equilibrium converge to distinct manifold points") {
    const DerivedModel m = derive(t::benchmark_spec(2));
    const EquilibriumResult eq = solve(m, Vector::Zero(10));
    ProbeOptions opts;
    opts.n_probes = 12;
    opts.seed = 8;
    const auto probes = probe_convergence(m, eq.delta_star, opts);
    REQUIRE(probes.size() == 12);
    double lo = 1e9, hi = -1e9;
    for (const ManifoldProbe& p : probes) {
        CHECK(p.converged);
        CHECK(p.distance < 1e-6);
        CHECK(p.residual < 1e-6);
        CHECK(p.final_time < opts.t_max);
        CHECK((edge_differences(m, p.limit_point) - eq.edge_differences).cwiseAbs().maxCoeff() < 1e-6);
        lo = std::min(lo, p.offset);
        hi = std::max(hi, p.offset);
    }
    CHECK(hi - lo > 1e-4);
}

TEST_CASE("a uniform perturbation stays on the manifold") {
    const DerivedModel m = derive(t::benchmark_spec(2));
    const EquilibriumResult eq = solve(m, Vector::Zero(10));
    const Vector start = (eq.delta_star.array() + 0.05 / std::sqrt(10.0)).matrix();
    const Trajectory traj = integrate(m, {start, 0.0}, {.t_max = 2.0, .dt = 1e-3, .decimation = 20});
    for (const Sample& s : traj.samples) CHECK(distance_to_manifold(s.delta, eq.delta_star) < 1e-10);
    CHECK(manifold_offset(traj.back().delta, eq.delta_star) == doctest::Approx(0.05 / std::sqrt(10.0)).epsilon(1e-9));
}

TEST_CASE("probe preconditions") {
    const DerivedModel m = derive(t::benchmark_spec(2));
    CHECK_THROWS_AS((void)probe_convergence(m, random_initial_phases(m, 1), {}), ValidationError);
    CHECK_THROWS_AS((void)probe_convergence(m, Vector::Zero(3), {}), DimensionError);
}

TEST_CASE("probe results do not depend on the worker count") {
    const DerivedModel m = derive(t::benchmark_spec(2));
    const EquilibriumResult eq = solve(m, Vector::Zero(10));
    ProbeOptions opts;
    opts.n_probes = 6;
    opts.seed = 4;
    opts.t_max = 5.0;
    const auto serial = probe_convergence(m, eq.delta_star, opts);
    opts.jobs = 3;
    const auto pooled = probe_convergence(m, eq.delta_star, opts);
    for (std::size_t k = 0; k < serial.size(); ++k) {
        CHECK(serial[k].limit_point == pooled[k].limit_point);
        CHECK(serial[k].offset == pooled[k].offset);
    }
}
