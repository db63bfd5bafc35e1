#include "collab/aggregation.hpp"

namespace collab {

WeightMatrix gaussian_weights(const LocalSummary& summary) {
    if (!(summary.residual_risk > 0.0))
        throw ZeroRiskError("gaussian_weights: residual risk is zero (interpolation regime)");
    Eigen::LDLT<Matrix> ldlt(summary.sigma_hat_plus);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < kRcondCutoff)
        throw SingularBlock("gaussian_weights: sigma_hat_plus is not positive definite");
    return WeightMatrix(symmetrize(summary.sigma_hat_plus / summary.residual_risk));
}

Vector werm_aggregate(const std::vector<LocalSummary>& summaries,
                      const std::vector<TOperator>& t_ops,
                      const std::vector<WeightMatrix>& weights) {
    const std::size_t m = summaries.size();
    if (m == 0) throw DimensionError("werm_aggregate: need at least one agent");
    if (t_ops.size() != m || weights.size() != m)
        throw DimensionError("werm_aggregate: summaries, operators and weights disagree");
    const Index d = t_ops[0].matrix.cols();

    Matrix normal = Matrix::Zero(d, d);
    Vector rhs = Vector::Zero(d);
    for (std::size_t i = 0; i < m; ++i) {
        const Matrix& t = t_ops[i].matrix;
        if (t.cols() != d || t.rows() != summaries[i].theta_hat.size() ||
            weights[i].matrix.rows() != t.rows())
            throw DimensionError("werm_aggregate: agent " + std::to_string(i) +
                                 " has inconsistent dimensions");
        const Matrix wt = weights[i].matrix * t;
        normal.noalias() += t.transpose() * wt;
        rhs.noalias() += wt.transpose() * summaries[i].theta_hat;
    }
    normal = symmetrize(normal);

    Eigen::LDLT<Matrix> ldlt(normal);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < kRcondCutoff)
        throw UnidentifiableModel("werm_aggregate: masks do not jointly identify theta");
    Vector theta = ldlt.solve(rhs);

    // First-order stationarity check on the solved system.
    const double residual = (normal * theta - rhs).norm();
    const double scale = std::max(rhs.norm(), normal.norm() * theta.norm());
    if (residual > 1e-8 * scale + 1e-12)
        throw UnidentifiableModel("werm_aggregate: normal equations solved inaccurately");
    return theta;
}

CollabResult collab_run(const std::vector<AgentDataset>& datasets, const Covariance& sigma,
                        Transport& transport, const std::vector<std::optional<Matrix>>& unlabeled) {
    const std::size_t m = datasets.size();
    if (m == 0) throw DimensionError("collab_run: need at least one agent");
    if (!unlabeled.empty() && unlabeled.size() != m)
        throw DimensionError("collab_run: unlabeled pool list length mismatch");

    // Local phase: each agent trains and uplinks (theta_hat, sigma_hat, R).
    for (std::size_t i = 0; i < m; ++i) {
        LocalSummary s = build_summary(datasets[i],
                                       unlabeled.empty() ? std::nullopt : unlabeled[i]);
        transport.send_to_server(Message{static_cast<std::uint32_t>(i),
                                         SummaryBody{s.theta_hat, s.sigma_hat_plus,
                                                     s.residual_risk}});
    }

    // Server phase: rebuild summaries in agent-id order, construct weights
    // and T operators, aggregate.
    std::vector<LocalSummary> summaries;
    summaries.reserve(m);
    for (const Message& msg : transport.drain_server_inbox()) {
        const auto& body = std::get<SummaryBody>(msg.body);
        summaries.push_back(LocalSummary{body.theta_hat, body.sigma_hat, body.residual_risk,
                                         datasets[msg.agent_id].mask});
    }

    std::vector<TOperator> t_ops;
    std::vector<WeightMatrix> weights;
    t_ops.reserve(m);
    weights.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        t_ops.push_back(t_operator(sigma, summaries[i].mask));
        try {
            weights.push_back(gaussian_weights(summaries[i]));
        } catch (const ZeroRiskError&) {
            throw ZeroRiskError("collab_run: agent " + std::to_string(i) +
                                " has zero residual risk");
        } catch (const SingularBlock&) {
            throw SingularBlock("collab_run: agent " + std::to_string(i) +
                                " sent a singular covariance estimate");
        }
    }
    Vector global = werm_aggregate(summaries, t_ops, weights);

    // Distribution phase: each agent receives its localized estimate.
    std::vector<Vector> locals(m);
    for (std::size_t i = 0; i < m; ++i) {
        Vector local = t_ops[i].matrix * global;
        transport.send_to_agent(
            Message{static_cast<std::uint32_t>(i), LocalModelBody{local}});
        locals[i] = std::move(local);
    }
    for (std::size_t i = 0; i < m; ++i) transport.drain_agent_inbox(static_cast<std::uint32_t>(i));

    return CollabResult{std::move(global), std::move(locals), std::move(weights),
                        transport.ledger()};
}

Matrix estimate_q(const FeatureSampler& sampler, const Vector& theta_plug, const ViewMask& mask,
                  double sigma_sq, Index n_mc) {
    if (n_mc < 1) throw DimensionError("estimate_q: n_mc must be >= 1");
    if (theta_plug.size() != mask.ambient())
        throw DimensionError("estimate_q: theta dimension does not match mask");
    const Index d = mask.ambient();
    const Index di = mask.dim();

    Matrix draws(n_mc, d);
    for (Index r = 0; r < n_mc; ++r) {
        const Vector x = sampler();
        if (x.size() != d) throw DimensionError("estimate_q: sampler yielded wrong dimension");
        draws.row(r) = x.transpose();
    }
    const Matrix second_moment = symmetrize(draws.transpose() * draws / static_cast<double>(n_mc));
    const auto& obs = mask.observed();
    const Matrix sm_plus = select_block(second_moment, obs, obs);

    if (mask.full()) return symmetrize(sigma_sq * sm_plus);

    const auto unobs = mask.unobserved();
    const Matrix sm_cross = select_block(second_moment, obs, unobs);
    const Matrix cond_coeffs = solve_spd(sm_plus, sm_cross, "estimate_q");  // d_i x (d - d_i)
    const Vector theta_minus = select(theta_plug, unobs);

    Matrix q = Matrix::Zero(di, di);
    Vector x_plus(di), x_minus(unobs.size());
    for (Index r = 0; r < n_mc; ++r) {
        for (Index k = 0; k < di; ++k) x_plus[k] = draws(r, obs[static_cast<std::size_t>(k)]);
        for (std::size_t k = 0; k < unobs.size(); ++k)
            x_minus[static_cast<Index>(k)] = draws(r, unobs[k]);
        const Vector z_plus = x_minus - cond_coeffs.transpose() * x_plus;
        const double loading = theta_minus.dot(z_plus);
        q.noalias() += (loading * loading) * (x_plus * x_plus.transpose());
    }
    q /= static_cast<double>(n_mc);
    q += sigma_sq * sm_plus;
    return symmetrize(q);
}

WeightMatrix optimal_weights_general(const Matrix& q_hat, const Matrix& sigma_plus) {
    if (q_hat.rows() != sigma_plus.rows() || q_hat.cols() != sigma_plus.cols())
        throw DimensionError("optimal_weights_general: dimension mismatch");
    const Matrix solved = solve_spd(symmetrize(q_hat), sigma_plus, "optimal_weights_general");
    return WeightMatrix(symmetrize(sigma_plus * solved));
}

}  // namespace collab
