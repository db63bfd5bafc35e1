#pragma once

#include <Eigen/Dense>

#include "collab/types.hpp"

namespace collab {

/// Factorizations below this reciprocal condition number are treated as
/// singular. The model assumes Sigma > 0 but finite precision needs a cutoff.
inline constexpr double kRcondCutoff = 1e-12;

template <typename Derived>
Matrix symmetrize(const Eigen::MatrixBase<Derived>& a) {
    return 0.5 * (a + a.transpose()).eval();
}

template <typename Derived>
double min_eigenvalue(const Eigen::MatrixBase<Derived>& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.derived(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

template <typename Derived>
double spectral_norm(const Eigen::MatrixBase<Derived>& a) {
    if (a.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// <v, A v> — the paper's ||v||_A^2 notation denotes this quadratic form.
template <typename VDerived, typename MDerived>
double quadratic_form(const Eigen::MatrixBase<VDerived>& v, const Eigen::MatrixBase<MDerived>& a) {
    if (a.rows() != v.size() || a.cols() != v.size())
        throw DimensionError("quadratic_form: dimension mismatch");
    return v.dot(a * v);
}

/// Solves A X = B for symmetric positive definite A via LDLT.
Matrix solve_spd(const Matrix& a, const Matrix& b, const char* context);

/// True iff a - b is positive semidefinite up to -tol on the smallest
/// eigenvalue. tol is absolute; callers that want a relative tolerance
/// scale it by a spectral norm first.
bool psd_order(const Matrix& a, const Matrix& b, double tol);

// ---------------------------------------------------------------------------
// Covariance partitioning
// ---------------------------------------------------------------------------

/// Sigma_{i+}: observed x observed block.
Matrix sigma_plus(const Covariance& sigma, const ViewMask& mask);
/// Sigma_{i-}: unobserved x unobserved block.
Matrix sigma_minus(const Covariance& sigma, const ViewMask& mask);
/// Sigma_{i+-}: observed rows, unobserved columns.
Matrix sigma_cross(const Covariance& sigma, const ViewMask& mask);

// ---------------------------------------------------------------------------
// SchurComplement: conditional covariance of unobserved given observed.
// ---------------------------------------------------------------------------

struct SchurComplement {
    Matrix matrix;  // (d - d_i) x (d - d_i), symmetric PSD
};

/// Gamma_{i-} = Sigma_{i-} - Sigma_{i-+} Sigma_{i+}^{-1} Sigma_{i+-}.
/// Throws EmptyComplement for a full-observation mask (callers treat the
/// ||theta_{i-}||^2 term as zero in that case) and SingularBlock when the
/// observed block is numerically singular.
SchurComplement schur_complement(const Covariance& sigma, const ViewMask& mask);

// ---------------------------------------------------------------------------
// TOperator: maps the global parameter to an agent's best local predictor.
// ---------------------------------------------------------------------------

struct TOperator {
    Matrix matrix;  // d_i x d; identity on the observed columns
    ViewMask mask;
};

/// T_i = [ I_{d_i}  Sigma_{i+}^{-1} Sigma_{i+-} ] Pi_i. Column j equals the
/// j-th standard basis vector when j is observed, and the conditional-mean
/// regression coefficients of feature j on the observed set otherwise.
TOperator t_operator(const Covariance& sigma, const ViewMask& mask);

// ---------------------------------------------------------------------------
// Risk functionals
// ---------------------------------------------------------------------------

/// (theta_hat - theta)^T Sigma (theta_hat - theta): expected squared
/// prediction error gap on a fresh full-feature sample.
double full_feature_risk(const Vector& estimate, const ModelSpec& model);

/// ||theta_{i-}||^2_{Gamma_{i-}}: the irreducible part of agent i's risk
/// (zero for a full-observation mask).
double irreducible_risk(const ModelSpec& model, const ViewMask& mask);

/// ||estimate - T_i theta||^2_{Sigma_{i+}} + ||theta_{i-}||^2_{Gamma_{i-}}:
/// expected squared prediction error of a local estimate on a fresh sample
/// restricted to agent i's view.
double missing_feature_risk(const Vector& estimate_i, const ViewMask& mask,
                            const ModelSpec& model);

}  // namespace collab
