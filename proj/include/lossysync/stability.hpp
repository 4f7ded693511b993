#pragma once

// =============================================================================
// Linearization of the lossy phase dynamics around an equilibrium
// =============================================================================
// L~(delta) = dH/d delta where rhs_i = -gain_i * H_i(delta) + const. Two
// closed forms are assembled independently:
//   phase-shift form: L~_ij = -sqrt(a^2+b^2) cos(delta_ij - psi_ij), j in N_i,
//                     diagonal = minus the off-diagonal row sum;
//   split form:       B diag(b cos delta_z) B^T + |B| diag(a sin delta_z) B^T.
// The first is assembled per ordered node pair; written as a single
// B diag(.) B^T product it would be symmetric and orientation dependent.
// =============================================================================

#include "lossysync/dynamics.hpp"
#include "lossysync/network.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace lossysync {

using Matrix = Eigen::MatrixXd;

[[nodiscard]] Matrix laplacian_phase_shift_form(const DerivedModel& model, const Vector& delta);

struct SplitLaplacian {
    Matrix symmetric;  // B diag(b cos) B^T
    Matrix lossy;      // |B| diag(a sin) B^T
    [[nodiscard]] Matrix total() const { return symmetric + lossy; }
};

[[nodiscard]] SplitLaplacian laplacian_split_form(const DerivedModel& model, const Vector& delta);

struct LaplacianStructure {
    double max_row_sum = 0.0;
    bool row_sums_vanish = false;
    bool diagonal_positive = false;
    bool neighbors_negative = false;
    bool non_neighbors_zero = false;
    double asymmetry = 0.0;  // max |L - L^T|
    /// (row, col) pairs, 0-based, whose sign violates the Laplacian pattern.
    std::vector<std::pair<std::size_t, std::size_t>> sign_violations;

    [[nodiscard]] bool holds() const {
        return row_sums_vanish && diagonal_positive && neighbors_negative && non_neighbors_zero;
    }
};

struct JacobianReport {
    Matrix l_tilde;        // phase-shift form
    SplitLaplacian split;  // split form
    double form_discrepancy = 0.0;
    /// Spectrum of -diag(gain) L~, sorted by decreasing real part.
    Eigen::VectorXcd spectrum;
    Eigen::MatrixXcd eigenvectors;  // columns match spectrum
    double zero_mode_error = 0.0;   // ||L~ 1||_inf
    LaplacianStructure structure;
};

/// Throws InternalConsistencyError when the two forms differ by more than
/// 1e-12 (relative to the largest entry, floored at 1).
[[nodiscard]] JacobianReport jacobian(const DerivedModel& model, const Vector& delta_star);

/// Entry-wise relative error of L~ against central differences of
/// rhs / (-gain). Denominators are floored at 1e-3 * max|L~|.
[[nodiscard]] double finite_difference_check(const DerivedModel& model, const Vector& delta_star, double h);

/// Same comparison, absolute max error; used for convergence-order checks.
[[nodiscard]] double finite_difference_abs_error(const DerivedModel& model, const Vector& delta_star, double h);

struct LaplacianCheck {
    bool holds = false;
    /// The Laplacian sign pattern is only guaranteed inside the synchronization set.
    bool in_sync_set = false;
    bool asymmetric = false;
    LaplacianStructure structure;
};

[[nodiscard]] LaplacianStructure laplacian_structure(const Matrix& l_tilde, const DerivedModel& model,
                                                     double row_sum_tol = 1e-10);

[[nodiscard]] LaplacianCheck check_laplacian_structure(const JacobianReport& report, const Vector& delta_star,
                                                       const DerivedModel& model);

inline constexpr double kDefaultZeroTol = 1e-8;
inline constexpr double kDefaultHurwitzTol = 1e-9;
inline constexpr double kZeroModeAngleTol = 1e-6;

struct SpectralSummary {
    std::size_t zero_count = 0;
    bool hurwitz = false;
    double spectral_radius = 0.0;
    /// Angle (rad) between the eigenvector of the smallest-modulus eigenvalue and 1_N.
    double zero_mode_angle = 0.0;
    /// Largest |Im| among the non-zero eigenvalues.
    double max_imag = 0.0;
    /// Largest real part among the non-zero eigenvalues (the slowest decay rate, negated).
    double slowest_real = 0.0;

    [[nodiscard]] bool confirms_stability() const {
        return zero_count == 1 && hurwitz && zero_mode_angle < kZeroModeAngleTol;
    }
};

/// Throws Error if the eigensolver did not converge.
[[nodiscard]] SpectralSummary spectral_analysis(const JacobianReport& report, double zero_tol = kDefaultZeroTol,
                                                double hurwitz_tol = kDefaultHurwitzTol);

enum class ComparisonOutcome { ExternalConditionHolds, ExternalConditionFails, NotEvaluated };

[[nodiscard]] std::string to_string(ComparisonOutcome outcome);

/// Holds iff lambda2 > lambda_critical; NotEvaluated when no threshold is supplied.
[[nodiscard]] ComparisonOutcome compare_lambda2(double lambda2, std::optional<double> lambda_critical);

/// max_edge_difference < pi/2 - psi_max (strict: gamma ranges over a half-open interval).
[[nodiscard]] bool sync_condition_met(double max_edge_difference, double psi_max);

/// L_y = B diag(sqrt(a^2+b^2) cos psi) B^T.
[[nodiscard]] Matrix lossless_equivalent_laplacian(const DerivedModel& model);

struct Lambda2Comparison {
    double lambda2 = 0.0;
    std::optional<double> lambda_critical;
    ComparisonOutcome outcome = ComparisonOutcome::NotEvaluated;
};

[[nodiscard]] Lambda2Comparison lambda2_comparison(const DerivedModel& model, std::optional<double> lambda_critical);

struct StabilityVerdict {
    double psi_max = 0.0;
    double gamma_bound = 0.0;
    double max_edge_difference = 0.0;
    bool condition_met = false;
    bool spectral_confirmation = false;
    double lambda2 = 0.0;
    std::optional<double> lambda_critical;
    ComparisonOutcome comparison_outcome = ComparisonOutcome::NotEvaluated;
    SpectralSummary spectrum;
};

/// Evaluates the synchronization-set condition at a verified equilibrium and
/// bundles the spectral confirmation and the lambda_2 comparison.
[[nodiscard]] StabilityVerdict assess_stability(const DerivedModel& model, const Vector& delta_star,
                                                std::optional<double> lambda_critical = std::nullopt);

}  // namespace lossysync
