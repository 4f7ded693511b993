#include "lossysync/stability.hpp"

#include "lossysync/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

namespace lossysync {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::vector<std::vector<bool>> adjacency(const DerivedModel& model) {
    std::vector<std::vector<bool>> adj(model.node_count, std::vector<bool>(model.node_count, false));
    for (const auto& [i, j] : model.edges) {
        adj[i][j] = true;
        adj[j][i] = true;
    }
    return adj;
}

Matrix finite_difference_jacobian(const DerivedModel& model, const Vector& delta, double h) {
    if (!(h > 0.0)) throw ValidationError("finite difference step must be positive");
    const auto n = idx(model.node_count);
    Matrix fd(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Vector plus = delta;
        Vector minus = delta;
        plus[j] += h;
        minus[j] -= h;
        fd.col(j) = (rhs(model, plus) - rhs(model, minus)) / (2.0 * h);
    }
    for (Eigen::Index i = 0; i < n; ++i) fd.row(i) /= -model.gain[static_cast<std::size_t>(i)];
    return fd;
}

}  // namespace

Matrix laplacian_phase_shift_form(const DerivedModel& model, const Vector& delta) {
    const Vector d = edge_differences(model, delta);
    const auto n = idx(model.node_count);
    Matrix l = Matrix::Zero(n, n);
    for (std::size_t z = 0; z < model.edge_count(); ++z) {
        const auto i = idx(model.edges[z].first);
        const auto j = idx(model.edges[z].second);
        const double weight = std::hypot(model.a[z], model.b[z]);
        const double dz = d[idx(z)];
        const double forward = weight * std::cos(dz - model.psi[z]);   // d H_i / d delta_j, negated
        const double backward = weight * std::cos(-dz - model.psi[z]); // d H_j / d delta_i, negated
        l(i, j) -= forward;
        l(i, i) += forward;
        l(j, i) -= backward;
        l(j, j) += backward;
    }
    return l;
}

SplitLaplacian laplacian_split_form(const DerivedModel& model, const Vector& delta) {
    const Vector d = edge_differences(model, delta);
    const auto m = idx(model.edge_count());
    Vector cos_weight(m);
    Vector sin_weight(m);
    for (Eigen::Index z = 0; z < m; ++z) {
        cos_weight[z] = model.b[static_cast<std::size_t>(z)] * std::cos(d[z]);
        sin_weight[z] = model.a[static_cast<std::size_t>(z)] * std::sin(d[z]);
    }
    SplitLaplacian out;
    out.symmetric = model.incidence * cos_weight.asDiagonal() * model.incidence.transpose();
    out.lossy = model.abs_incidence * sin_weight.asDiagonal() * model.incidence.transpose();
    return out;
}

LaplacianStructure laplacian_structure(const Matrix& l, const DerivedModel& model, double row_sum_tol) {
    const auto adj = adjacency(model);
    LaplacianStructure s;
    s.max_row_sum = l.rowwise().sum().cwiseAbs().maxCoeff();
    s.row_sums_vanish = s.max_row_sum < row_sum_tol;
    s.diagonal_positive = true;
    s.neighbors_negative = true;
    s.non_neighbors_zero = true;
    for (std::size_t i = 0; i < model.node_count; ++i) {
        for (std::size_t j = 0; j < model.node_count; ++j) {
            const double v = l(idx(i), idx(j));
            bool ok = true;
            if (i == j) {
                ok = v > 0.0;
                s.diagonal_positive = s.diagonal_positive && ok;
            } else if (adj[i][j]) {
                ok = v < 0.0;
                s.neighbors_negative = s.neighbors_negative && ok;
            } else {
                ok = v == 0.0;
                s.non_neighbors_zero = s.non_neighbors_zero && ok;
            }
            if (!ok) s.sign_violations.emplace_back(i, j);
        }
    }
    s.asymmetry = (l - l.transpose()).cwiseAbs().maxCoeff();
    return s;
}

JacobianReport jacobian(const DerivedModel& model, const Vector& delta_star) {
    JacobianReport report;
    report.l_tilde = laplacian_phase_shift_form(model, delta_star);
    report.split = laplacian_split_form(model, delta_star);

    const double scale = std::max(1.0, report.l_tilde.cwiseAbs().maxCoeff());
    report.form_discrepancy = (report.l_tilde - report.split.total()).cwiseAbs().maxCoeff();
    if (report.form_discrepancy > 1e-12 * scale) {
        throw InternalConsistencyError(
            fmt::format("Jacobian forms disagree by {:.3e}", report.form_discrepancy));
    }

    const auto n = idx(model.node_count);
    report.zero_mode_error = (report.l_tilde * Vector::Ones(n)).cwiseAbs().maxCoeff();
    report.structure = laplacian_structure(report.l_tilde, model);

    Vector gain(n);
    for (Eigen::Index i = 0; i < n; ++i) gain[i] = model.gain[static_cast<std::size_t>(i)];
    const Matrix system = -(gain.asDiagonal() * report.l_tilde);

    Eigen::EigenSolver<Matrix> solver(system, true);
    if (solver.info() != Eigen::Success) throw Error("eigensolver failed on the linearization");
    const Eigen::VectorXcd values = solver.eigenvalues();
    const Eigen::MatrixXcd vectors = solver.eigenvectors();

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return values[x].real() > values[y].real(); });
    report.spectrum.resize(n);
    report.eigenvectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        report.spectrum[k] = values[order[static_cast<std::size_t>(k)]];
        report.eigenvectors.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
    }
    return report;
}

double finite_difference_check(const DerivedModel& model, const Vector& delta_star, double h) {
    const Matrix fd = finite_difference_jacobian(model, delta_star, h);
    const Matrix l = laplacian_split_form(model, delta_star).total();
    const double floor = 1e-3 * l.cwiseAbs().maxCoeff();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        for (Eigen::Index j = 0; j < l.cols(); ++j) {
            const double denom = std::max(std::abs(l(i, j)), floor);
            if (denom == 0.0) continue;
            worst = std::max(worst, std::abs(fd(i, j) - l(i, j)) / denom);
        }
    }
    return worst;
}

double finite_difference_abs_error(const DerivedModel& model, const Vector& delta_star, double h) {
    const Matrix fd = finite_difference_jacobian(model, delta_star, h);
    return (fd - laplacian_split_form(model, delta_star).total()).cwiseAbs().maxCoeff();
}

LaplacianCheck check_laplacian_structure(const JacobianReport& report, const Vector& delta_star,
                                         const DerivedModel& model) {
    LaplacianCheck check;
    check.structure = laplacian_structure(report.l_tilde, model);
    check.holds = check.structure.holds();
    check.in_sync_set = max_edge_difference(model, delta_star) < model.gamma_bound();
    check.asymmetric = check.structure.asymmetry > 0.0;
    return check;
}

SpectralSummary spectral_analysis(const JacobianReport& report, double zero_tol, double hurwitz_tol) {
    const Eigen::VectorXcd& values = report.spectrum;
    if (values.size() == 0) throw Error("spectral_analysis: empty spectrum");
    if (!values.allFinite()) throw Error("spectral_analysis: eigensolver returned non-finite values");

    SpectralSummary s;
    s.spectral_radius = values.cwiseAbs().maxCoeff();
    const double zero_threshold = zero_tol * s.spectral_radius;

    Eigen::Index smallest = 0;
    s.hurwitz = true;
    s.slowest_real = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < values.size(); ++k) {
        if (std::abs(values[k]) < std::abs(values[smallest])) smallest = k;
        if (std::abs(values[k]) < zero_threshold) {
            ++s.zero_count;
            continue;
        }
        s.max_imag = std::max(s.max_imag, std::abs(values[k].imag()));
        s.slowest_real = std::max(s.slowest_real, values[k].real());
        if (!(values[k].real() < -hurwitz_tol)) s.hurwitz = false;
    }

    const Eigen::VectorXcd v = report.eigenvectors.col(smallest);
    const auto n = static_cast<double>(v.size());
    const std::complex<double> along = v.sum() / std::sqrt(n);
    const Eigen::VectorXcd transverse = v - Eigen::VectorXcd::Constant(v.size(), along / std::sqrt(n));
    s.zero_mode_angle = std::atan2(transverse.norm(), std::abs(along));
    return s;
}

std::string to_string(ComparisonOutcome outcome) {
    switch (outcome) {
        case ComparisonOutcome::ExternalConditionHolds: return "external-condition-holds";
        case ComparisonOutcome::ExternalConditionFails: return "external-condition-fails";
        case ComparisonOutcome::NotEvaluated: return "not-evaluated";
    }
    return "not-evaluated";
}

ComparisonOutcome compare_lambda2(double lambda2, std::optional<double> lambda_critical) {
    if (!lambda_critical) return ComparisonOutcome::NotEvaluated;
    return lambda2 > *lambda_critical ? ComparisonOutcome::ExternalConditionHolds
                                      : ComparisonOutcome::ExternalConditionFails;
}

bool sync_condition_met(double max_edge_difference, double psi_max) {
    return max_edge_difference < std::numbers::pi / 2.0 - psi_max;
}

Matrix lossless_equivalent_laplacian(const DerivedModel& model) {
    const auto m = idx(model.edge_count());
    Vector w(m);
    for (Eigen::Index z = 0; z < m; ++z) {
        const auto k = static_cast<std::size_t>(z);
        w[z] = std::hypot(model.a[k], model.b[k]) * std::cos(model.psi[k]);
    }
    return model.incidence * w.asDiagonal() * model.incidence.transpose();
}

Lambda2Comparison lambda2_comparison(const DerivedModel& model, std::optional<double> lambda_critical) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(lossless_equivalent_laplacian(model), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error("eigensolver failed on L_y");
    Lambda2Comparison out;
    out.lambda2 = solver.eigenvalues()[1];  // ascending order
    out.lambda_critical = lambda_critical;
    out.outcome = compare_lambda2(out.lambda2, lambda_critical);
    return out;
}

StabilityVerdict assess_stability(const DerivedModel& model, const Vector& delta_star,
                                  std::optional<double> lambda_critical) {
    StabilityVerdict v;
    v.psi_max = model.psi_max;
    v.gamma_bound = model.gamma_bound();
    v.max_edge_difference = max_edge_difference(model, delta_star);
    v.condition_met = sync_condition_met(v.max_edge_difference, v.psi_max);
    v.spectrum = spectral_analysis(jacobian(model, delta_star));
    v.spectral_confirmation = v.spectrum.confirms_stability();
    const Lambda2Comparison cmp = lambda2_comparison(model, lambda_critical);
    v.lambda2 = cmp.lambda2;
    v.lambda_critical = lambda_critical;
    v.comparison_outcome = cmp.outcome;
    return v;
}

}  // namespace lossysync
