#include "collab/model_core.hpp"

namespace collab {

Matrix solve_spd(const Matrix& a, const Matrix& b, const char* context) {
    if (a.rows() != a.cols() || a.rows() != b.rows())
        throw DimensionError(std::string(context) + ": dimension mismatch in solve");
    Eigen::LDLT<Matrix> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < kRcondCutoff)
        throw SingularBlock(std::string(context) + ": block is numerically singular");
    return ldlt.solve(b);
}

bool psd_order(const Matrix& a, const Matrix& b, double tol) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw DimensionError("psd_order: operands must be square and same size");
    if (a.rows() == 0) return true;
    return min_eigenvalue(symmetrize(a - b)) >= -tol;
}

Matrix sigma_plus(const Covariance& sigma, const ViewMask& mask) {
    if (mask.ambient() != sigma.dim()) throw DimensionError("sigma_plus: mask/covariance mismatch");
    return select_block(sigma.matrix(), mask.observed(), mask.observed());
}

Matrix sigma_minus(const Covariance& sigma, const ViewMask& mask) {
    if (mask.ambient() != sigma.dim()) throw DimensionError("sigma_minus: mask/covariance mismatch");
    const auto unobs = mask.unobserved();
    return select_block(sigma.matrix(), unobs, unobs);
}

Matrix sigma_cross(const Covariance& sigma, const ViewMask& mask) {
    if (mask.ambient() != sigma.dim()) throw DimensionError("sigma_cross: mask/covariance mismatch");
    return select_block(sigma.matrix(), mask.observed(), mask.unobserved());
}

SchurComplement schur_complement(const Covariance& sigma, const ViewMask& mask) {
    if (mask.ambient() != sigma.dim())
        throw DimensionError("schur_complement: mask/covariance mismatch");
    if (mask.full())
        throw EmptyComplement("schur_complement: mask observes every feature");
    const Matrix cross = sigma_cross(sigma, mask);
    const Matrix solved = solve_spd(sigma_plus(sigma, mask), cross, "schur_complement");
    return SchurComplement{symmetrize(sigma_minus(sigma, mask) - cross.transpose() * solved)};
}

TOperator t_operator(const Covariance& sigma, const ViewMask& mask) {
    if (mask.ambient() != sigma.dim()) throw DimensionError("t_operator: mask/covariance mismatch");
    const Index di = mask.dim();
    Matrix t = Matrix::Zero(di, mask.ambient());
    const auto& obs = mask.observed();
    for (Index k = 0; k < di; ++k) t(k, obs[static_cast<std::size_t>(k)]) = 1.0;
    if (!mask.full()) {
        const Matrix coeffs =
            solve_spd(sigma_plus(sigma, mask), sigma_cross(sigma, mask), "t_operator");
        const auto unobs = mask.unobserved();
        for (std::size_t c = 0; c < unobs.size(); ++c)
            t.col(unobs[c]) = coeffs.col(static_cast<Index>(c));
    }
    return TOperator{std::move(t), mask};
}

double full_feature_risk(const Vector& estimate, const ModelSpec& model) {
    if (estimate.size() != model.dim())
        throw DimensionError("full_feature_risk: estimate dimension mismatch");
    return quadratic_form(estimate - model.theta, model.sigma_cov.matrix());
}

double irreducible_risk(const ModelSpec& model, const ViewMask& mask) {
    if (mask.full()) return 0.0;
    const Vector theta_minus = select(model.theta, mask.unobserved());
    return quadratic_form(theta_minus, schur_complement(model.sigma_cov, mask).matrix);
}

double missing_feature_risk(const Vector& estimate_i, const ViewMask& mask,
                            const ModelSpec& model) {
    if (estimate_i.size() != mask.dim())
        throw DimensionError("missing_feature_risk: estimate dimension mismatch");
    const TOperator t = t_operator(model.sigma_cov, mask);
    const Vector gap = estimate_i - t.matrix * model.theta;
    return quadratic_form(gap, sigma_plus(model.sigma_cov, mask)) + irreducible_risk(model, mask);
}

}  // namespace collab
