#include "lossysync/equilibrium.hpp"
#include "lossysync/stability.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace lossysync;
namespace t = lossysync::testing;

TEST_CASE("2-node Jacobian at zero difference is the lossless Laplacian") {
    const DerivedModel m = derive(t::two_node_spec(0.5, 2.0, 0.0, 0.0));
    const JacobianReport r = jacobian(m, Vector::Zero(2));
    CHECK(r.l_tilde(0, 0) == doctest::Approx(2.0));
    CHECK(r.l_tilde(0, 1) == doctest::Approx(-2.0));
    CHECK(r.l_tilde(1, 0) == doctest::Approx(-2.0));
    CHECK(r.l_tilde(1, 1) == doctest::Approx(2.0));
    CHECK(r.split.lossy.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("2-node eigenvalues of -L~ are 0 and minus the trace") {
    // Zero row sums force det = 0, so the spectrum of a 2x2 -L~ is {0, -tr L~}.
    const DerivedModel m = derive(t::two_node_with_equilibrium(0.5, 2.0, 0.3));
    const JacobianReport r = jacobian(m, Vector{{0.3, 0.0}});
    const double trace = r.l_tilde(0, 0) + r.l_tilde(1, 1);
    CHECK(trace == doctest::Approx(2 * 2.0 * std::cos(0.3)).epsilon(1e-14));
    CHECK(std::abs(r.spectrum[0]) < 1e-14);
    CHECK(r.spectrum[1].real() == doctest::Approx(-trace).epsilon(1e-13));
    CHECK(r.spectrum[1].imag() == 0.0);
    CHECK(r.structure.asymmetry == doctest::Approx(2 * 0.5 * std::sin(0.3)).epsilon(1e-13));
}

TEST_CASE("2-node spectrum with gains at zero difference") {
    const DerivedModel m = derive(t::two_node_spec(0.4, 1.5, 0.0, 0.0, 0.7, 1.9));
    const SpectralSummary s = spectral_analysis(jacobian(m, Vector::Zero(2)));
    const JacobianReport r = jacobian(m, Vector::Zero(2));
    CHECK(s.zero_count == 1);
    CHECK(s.hurwitz);
    CHECK(r.spectrum[1].real() == doctest::Approx(-(0.7 + 1.9) * 1.5).epsilon(1e-13));
    CHECK(s.zero_mode_angle < 1e-12);
}

TEST_CASE("property: split and phase-shift forms agree and rows sum to zero") {
    Rng rng(41);
    for (int trial = 0; trial < 300; ++trial) {
        const DerivedModel m = derive(t::random_spec(rng));
        const Vector d = t::random_state(rng, m.node_count, 3.5);  // also far outside the sync set
        const Matrix l = laplacian_phase_shift_form(m, d);
        CHECK((l - laplacian_split_form(m, d).total()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((l * Vector::Ones(l.cols())).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("property: flipping a line's orientation leaves L~ unchanged") {
    Rng rng(43);
    for (int trial = 0; trial < 200; ++trial) {
        const NetworkSpec spec = t::random_spec(rng);
        const std::size_t z = rng.index(spec.lines.size());
        const DerivedModel m = derive(spec);
        const DerivedModel mf = derive(t::flip(spec, z));
        const Vector d = t::random_state(rng, m.node_count, 1.0);
        CHECK((jacobian(m, d).l_tilde - jacobian(mf, d).l_tilde).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((laplacian_split_form(m, d).total() - laplacian_split_form(mf, d).total()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("finite differences confirm the Jacobian") {
    Rng rng(47);
    for (int trial = 0; trial < 50; ++trial) {
        const DerivedModel m = derive(t::random_spec(rng));
        const Vector d = t::random_state(rng, m.node_count, 1.5);
        CHECK(finite_difference_check(m, d, 1e-6) < 1e-6);
    }
    SUBCASE("lossless instance") {
        NetworkSpec spec = t::benchmark_spec(4);
        for (Line& l : spec.lines) l.conductance = 0.0;
        const DerivedModel m = derive(spec);
        const Vector d = random_initial_phases(m, 1);
        CHECK(finite_difference_check(m, d, 1e-6) < 1e-6);
        CHECK(jacobian(m, d).structure.asymmetry < 1e-15);
    }
}

TEST_CASE("central-difference error is second order in h") {
    const DerivedModel m = derive(t::benchmark_spec(6));
    const Vector d = random_initial_phases(m, 2);
    const double e1 = finite_difference_abs_error(m, d, 0.04);
    const double e2 = finite_difference_abs_error(m, d, 0.01);
    MESSAGE("FD errors " << e1 << " " << e2 << " ratio " << e1 / e2);
    CHECK(e1 / e2 > 12.0);
    CHECK(e1 / e2 < 20.0);
}

TEST_CASE("Laplacian structure at a benchmark equilibrium") {
    const DerivedModel m = derive(t::benchmark_spec(8));
    const EquilibriumResult eq = solve(m, Vector::Zero(10));
    const JacobianReport r = jacobian(m, eq.delta_star);
    const LaplacianCheck c = check_laplacian_structure(r, eq.delta_star, m);
    CHECK(c.in_sync_set);
    CHECK(c.holds);
    CHECK(c.asymmetric);
    CHECK(c.structure.sign_violations.empty());
}

TEST_CASE("sign violations outside the synchronization set are flagged, not thrown") {
    // cos(1.6) < 0, so the backward entry -(b cos 1.6 - a sin 1.6) is positive.
    const DerivedModel m = derive(t::two_node_spec(0.5, 2.0, 0.0, 0.0));
    const Vector d{{1.6, 0.0}};
    const JacobianReport r = jacobian(m, d);
    const LaplacianCheck c = check_laplacian_structure(r, d, m);
    CHECK_FALSE(c.in_sync_set);
    CHECK_FALSE(c.holds);
    CHECK(r.l_tilde(1, 0) > 0.0);
    CHECK(c.structure.row_sums_vanish);
}

TEST_CASE("lossless zero state: Laplacian holds and is exactly symmetric") {
    NetworkSpec spec = t::benchmark_spec(9);
    for (Line& l : spec.lines) l.conductance = 0.0;
    const DerivedModel m = derive(spec);
    const JacobianReport r = jacobian(m, Vector::Zero(10));
    const LaplacianCheck c = check_laplacian_structure(r, Vector::Zero(10), m);
    CHECK(c.holds);
    CHECK_FALSE(c.asymmetric);
    CHECK(r.structure.asymmetry == 0.0);
}

TEST_CASE("synchronization condition is a strict inequality") {
    CHECK(sync_condition_met(0.14, 0.48));
    CHECK(std::numbers::pi / 2 - 0.48 == doctest::Approx(1.09).epsilon(1e-2));
    CHECK(sync_condition_met(0.0, 1.5));
    const double psi = 0.3;
    CHECK_FALSE(sync_condition_met(std::numbers::pi / 2 - psi, psi));
    CHECK_FALSE(sync_condition_met(1.2, 0.48));
}

TEST_CASE("assess_stability on uniform phases") {
    const DerivedModel m = derive(t::benchmark_spec(12));
    const StabilityVerdict v = assess_stability(m, Vector::Constant(10, 0.8));
    CHECK(v.max_edge_difference == 0.0);
    CHECK(v.condition_met);
    CHECK(v.gamma_bound == doctest::Approx(std::numbers::pi / 2 - m.psi_max));
    CHECK(v.comparison_outcome == ComparisonOutcome::NotEvaluated);
}

TEST_CASE("lambda_2 comparison") {
    CHECK(compare_lambda2(2.02, 1.7e4) == ComparisonOutcome::ExternalConditionFails);
    CHECK(compare_lambda2(2.02, 1.0) == ComparisonOutcome::ExternalConditionHolds);
    CHECK(compare_lambda2(2.02, std::nullopt) == ComparisonOutcome::NotEvaluated);
    CHECK(to_string(ComparisonOutcome::ExternalConditionFails) == "external-condition-fails");

    SUBCASE("2-node: lambda_2 = 2b") {
        const DerivedModel m = derive(t::two_node_spec(0.6, 1.8, 0.0, 0.0));
        const Lambda2Comparison c = lambda2_comparison(m, std::nullopt);
        CHECK(c.lambda2 == doctest::Approx(3.6).epsilon(1e-13));
        CHECK(c.outcome == ComparisonOutcome::NotEvaluated);
    }
    SUBCASE("L_y is positive semidefinite with a single zero eigenvalue") {
        const DerivedModel m = derive(t::benchmark_spec(13));
        const Matrix ly = lossless_equivalent_laplacian(m);
        CHECK((ly - ly.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Matrix> es(ly);
        CHECK(std::abs(es.eigenvalues()[0]) < 1e-12);
        CHECK(es.eigenvalues()[1] > 1e-6);
    }
}
