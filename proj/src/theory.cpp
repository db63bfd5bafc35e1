#include "collab/theory.hpp"

namespace collab {

namespace {

Matrix invert_spd(const Matrix& a, const char* context) {
    Eigen::LDLT<Matrix> ldlt(symmetrize(a));
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < kRcondCutoff)
        throw UnidentifiableModel(std::string(context) + ": matrix is numerically singular");
    return symmetrize(ldlt.solve(Matrix::Identity(a.rows(), a.cols())));
}

}  // namespace

TheoryContext::TheoryContext(ModelSpec model, std::vector<ViewMask> masks) : model_(std::move(model)) {
    if (masks.empty()) throw DimensionError("TheoryContext: need at least one mask");
    agents_.reserve(masks.size());
    const double sigma_sq = model_.noise_var;
    for (auto& mask : masks) {
        if (mask.ambient() != model_.dim())
            throw DimensionError("TheoryContext: mask dimension mismatch");
        AgentTheory a{mask, t_operator(model_.sigma_cov, mask),
                      sigma_plus(model_.sigma_cov, mask), irreducible_risk(model_, mask),
                      Matrix(), Matrix()};
        a.w_gauss = a.sigma_plus / (a.irreducible + sigma_sq);
        a.q_gauss = (a.irreducible + sigma_sq) * a.sigma_plus;
        agents_.push_back(std::move(a));
    }
}

Matrix covariance_of_weights(const TheoryContext& ctx, const std::vector<WeightMatrix>& weights) {
    if (weights.size() != ctx.num_agents())
        throw DimensionError("covariance_of_weights: one weight per agent required");
    const Index d = ctx.dim();
    Matrix normal = Matrix::Zero(d, d);
    Matrix middle = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < ctx.num_agents(); ++i) {
        const auto& agent = ctx.agents()[i];
        const Matrix& t = agent.t_op.matrix;
        const Matrix& w = weights[i].matrix;
        if (w.rows() != t.rows())
            throw DimensionError("covariance_of_weights: weight dimension mismatch");
        normal.noalias() += t.transpose() * w * t;
        // W*^{-1} = (irr + sigma^2) Sigma_+^{-1}; solve rather than invert.
        const Matrix w_star_inv_w = (agent.irreducible + ctx.model().noise_var) *
                                    solve_spd(agent.sigma_plus, w, "covariance_of_weights");
        middle.noalias() += t.transpose() * w * w_star_inv_w * t;
    }
    const Matrix normal_inv = invert_spd(normal, "covariance_of_weights");
    return symmetrize(normal_inv * symmetrize(middle) * normal_inv);
}

Matrix c_gaussian(const TheoryContext& ctx) {
    const Index d = ctx.dim();
    Matrix normal = Matrix::Zero(d, d);
    for (const auto& agent : ctx.agents()) {
        const Matrix& t = agent.t_op.matrix;
        normal.noalias() += t.transpose() * agent.w_gauss * t;
    }
    return invert_spd(normal, "c_gaussian");
}

Matrix c_strong(const TheoryContext& ctx) {
    double coefficient = 0.0;
    for (const auto& agent : ctx.agents())
        coefficient += 2.0 / (agent.irreducible + ctx.model().noise_var);
    return invert_spd(coefficient * ctx.model().sigma_cov.matrix(), "c_strong");
}

Matrix c_imp_glb(const TheoryContext& ctx, const std::vector<double>& alphas) {
    if (alphas.size() != ctx.num_agents())
        throw DimensionError("c_imp_glb: one alpha per agent required");
    const Index d = ctx.dim();
    Matrix normal = Matrix::Zero(d, d);
    Matrix middle = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < ctx.num_agents(); ++i) {
        if (!(alphas[i] > 0.0)) throw DimensionError("c_imp_glb: alphas must be positive");
        const auto& agent = ctx.agents()[i];
        const Matrix& t = agent.t_op.matrix;
        normal.noalias() += alphas[i] * (t.transpose() * agent.sigma_plus * t);
        middle.noalias() += alphas[i] * alphas[i] * (t.transpose() * agent.q_gauss * t);
    }
    const Matrix normal_inv = invert_spd(normal, "c_imp_glb");
    return symmetrize(normal_inv * symmetrize(middle) * normal_inv);
}

Matrix local_theory_cov(const Matrix& c, const TOperator& t_op) {
    if (c.rows() != t_op.matrix.cols() || c.cols() != t_op.matrix.cols())
        throw DimensionError("local_theory_cov: dimension mismatch");
    return symmetrize(t_op.matrix * c * t_op.matrix.transpose());
}

std::vector<double> oracle_alphas(const TheoryContext& ctx) {
    std::vector<double> alphas;
    alphas.reserve(ctx.num_agents());
    for (const auto& agent : ctx.agents())
        alphas.push_back(1.0 / (agent.irreducible + ctx.model().noise_var));
    return alphas;
}

Corollary4Report corollary4_check(const ModelSpec& model, double p, Index m, RngSeed seed) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(model.sigma_cov.matrix(), Eigen::EigenvaluesOnly);
    const double kappa = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
    const double signal = quadratic_form(model.theta, model.sigma_cov.matrix());
    const double threshold = 0.5 / kappa / (1.0 + signal / model.noise_var);

    Corollary4Report report;
    report.threshold = threshold;
    report.applicable = p <= threshold * (1.0 + 1e-12);
    report.mask_redraws = 0;
    report.upper_holds = false;
    report.lower_holds = false;
    if (!report.applicable) return report;

    const std::vector<ViewMask> masks =
        mcar_masks(model.dim(), m, p, seed, &report.mask_redraws);
    TheoryContext ctx(model, masks);
    const double scale = static_cast<double>(m);
    report.m_c_gaussian = scale * c_gaussian(ctx);
    report.m_c_strong = scale * c_strong(ctx);

    const double tol = 1e-6 * spectral_norm(report.m_c_strong);
    report.upper_holds = psd_order(4.0 * report.m_c_strong, report.m_c_gaussian, tol);
    report.lower_holds = psd_order(report.m_c_gaussian, report.m_c_strong, tol);
    return report;
}

}  // namespace collab
