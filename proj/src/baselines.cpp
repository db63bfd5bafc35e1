#include "collab/baselines.hpp"

namespace collab {

namespace {

Vector zero_pad(const Vector& local, const ViewMask& mask) {
    Vector padded = Vector::Zero(mask.ambient());
    const auto& obs = mask.observed();
    for (std::size_t k = 0; k < obs.size(); ++k) padded[obs[k]] = local[static_cast<Index>(k)];
    return padded;
}

}  // namespace

Vector naive_collab(const std::vector<LocalSummary>& summaries, Index d) {
    if (summaries.empty()) throw DimensionError("naive_collab: need at least one agent");
    Vector avg = Vector::Zero(d);
    for (const auto& s : summaries) {
        if (s.mask.ambient() != d) throw DimensionError("naive_collab: mask dimension mismatch");
        avg += zero_pad(s.theta_hat, s.mask);
    }
    return avg / static_cast<double>(summaries.size());
}

OptimizedNaiveResult optimized_naive_collab(const std::vector<LocalSummary>& summaries,
                                            const AgentDataset& fresh_data,
                                            const GdConfig& config) {
    const auto m = static_cast<Index>(summaries.size());
    if (m == 0) throw DimensionError("optimized_naive_collab: need at least one agent");
    if (!fresh_data.mask.full())
        throw DimensionError("optimized_naive_collab: fresh data must observe every feature");
    const Index d = fresh_data.mask.ambient();
    const auto n = static_cast<double>(fresh_data.n());

    // Column i holds the fresh-sample predictions of padded model i, so the
    // objective is the convex quadratic (1/n)||P c - y||^2.
    Matrix predictions(fresh_data.n(), m);
    for (Index i = 0; i < m; ++i)
        predictions.col(i) =
            fresh_data.x_plus * zero_pad(summaries[static_cast<std::size_t>(i)].theta_hat,
                                         summaries[static_cast<std::size_t>(i)].mask);

    Vector c = Vector::Constant(m, 1.0 / static_cast<double>(m));
    const double step = config.step_scale / static_cast<double>(m);
    auto loss_of = [&](const Vector& coeffs) {
        return (predictions * coeffs - fresh_data.y).squaredNorm() / n;
    };

    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(config.max_iters) + 1);
    double loss = loss_of(c);
    trace.push_back(loss);
    int rising = 0;
    for (Index it = 0; it < config.max_iters; ++it) {
        const Vector grad =
            2.0 / n * (predictions.transpose() * (predictions * c - fresh_data.y));
        if (grad.norm() < config.grad_tol) break;
        c -= step * grad;
        const double next = loss_of(c);
        rising = next > loss ? rising + 1 : 0;
        if (rising >= config.divergence_patience)
            throw DivergedError("optimized_naive_collab: loss increased for " +
                                std::to_string(rising) + " consecutive steps");
        loss = next;
        trace.push_back(loss);
    }

    Vector estimate = Vector::Zero(d);
    for (Index i = 0; i < m; ++i)
        estimate += c[i] * zero_pad(summaries[static_cast<std::size_t>(i)].theta_hat,
                                    summaries[static_cast<std::size_t>(i)].mask);
    return OptimizedNaiveResult{std::move(estimate), std::move(c), std::move(trace)};
}

ImputedEstimate local_impute(const AgentDataset& data, const TOperator& t_op,
                             std::uint32_t source_agent) {
    if (!(data.mask == t_op.mask)) throw DimensionError("local_impute: operator/data mask mismatch");
    if (data.n() < data.mask.dim())
        throw DimensionError("local_impute: need n >= d_i for the rank condition");

    // Definition path: min-norm least squares on the imputed design X_+ T.
    const Matrix imputed_design = data.x_plus * t_op.matrix;
    Eigen::BDCSVD<Matrix> svd(imputed_design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    Vector definition = svd.solve(data.y);

    // Identity path: T^T (T T^T)^{-1} theta_hat.
    const Vector theta_hat = local_ols(data).coeffs;
    const Matrix gram = symmetrize(t_op.matrix * t_op.matrix.transpose());
    const Vector identity =
        t_op.matrix.transpose() * solve_spd(gram, theta_hat, "local_impute");

    return ImputedEstimate{std::move(definition), identity, source_agent};
}

Vector aggregate_imputed(const std::vector<ImputedEstimate>& imputed,
                         const std::vector<TOperator>& t_ops,
                         const std::vector<Matrix>& weights) {
    const std::size_t m = imputed.size();
    if (m == 0) throw DimensionError("aggregate_imputed: need at least one agent");
    if (t_ops.size() != m || weights.size() != m)
        throw DimensionError("aggregate_imputed: list lengths disagree");
    const Index d = t_ops[0].matrix.cols();

    Matrix normal = Matrix::Zero(d, d);
    Vector rhs = Vector::Zero(d);
    for (std::size_t i = 0; i < m; ++i) {
        const Matrix& t = t_ops[i].matrix;
        const Matrix gram = symmetrize(t * t.transpose());
        const Matrix projector = t.transpose() * solve_spd(gram, t, "aggregate_imputed");
        const Matrix wp = weights[i] * projector;
        normal.noalias() += projector.transpose() * wp;
        rhs.noalias() += wp.transpose() * imputed[i].vector;
    }
    normal = symmetrize(normal);

    Eigen::LDLT<Matrix> ldlt(normal);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < kRcondCutoff)
        throw UnidentifiableModel("aggregate_imputed: masks do not jointly identify theta");
    return ldlt.solve(rhs);
}

Vector global_impute(const std::vector<AgentDataset>& datasets,
                     const std::vector<TOperator>& t_ops, const std::vector<double>& alphas) {
    const std::size_t m = datasets.size();
    if (m == 0) throw DimensionError("global_impute: need at least one agent");
    if (t_ops.size() != m || alphas.size() != m)
        throw DimensionError("global_impute: list lengths disagree");
    const Index d = t_ops[0].matrix.cols();

    Matrix normal = Matrix::Zero(d, d);
    Vector rhs = Vector::Zero(d);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(alphas[i] > 0.0)) throw DimensionError("global_impute: alphas must be positive");
        const Matrix imputed_design = datasets[i].x_plus * t_ops[i].matrix;
        normal.noalias() += alphas[i] * (imputed_design.transpose() * imputed_design);
        rhs.noalias() += alphas[i] * (imputed_design.transpose() * datasets[i].y);
    }
    normal = symmetrize(normal);

    Eigen::LDLT<Matrix> ldlt(normal);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < kRcondCutoff)
        throw UnidentifiableModel("global_impute: masks do not jointly identify theta");
    return ldlt.solve(rhs);
}

Vector global_impute_run(const std::vector<AgentDataset>& datasets, const Covariance& sigma,
                         const std::vector<double>& alphas, Transport& transport) {
    const std::size_t m = datasets.size();
    if (m == 0) throw DimensionError("global_impute_run: need at least one agent");

    for (std::size_t i = 0; i < m; ++i)
        transport.send_to_server(Message{static_cast<std::uint32_t>(i),
                                         RawDataBody{datasets[i].x_plus, datasets[i].y}});

    std::vector<AgentDataset> received;
    std::vector<TOperator> t_ops;
    received.reserve(m);
    t_ops.reserve(m);
    for (const Message& msg : transport.drain_server_inbox()) {
        const auto& body = std::get<RawDataBody>(msg.body);
        const ViewMask& mask = datasets[msg.agent_id].mask;
        received.emplace_back(body.features, body.labels, mask);
        t_ops.push_back(t_operator(sigma, mask));
    }
    Vector estimate = global_impute(received, t_ops, alphas);

    for (std::size_t i = 0; i < m; ++i) {
        transport.send_to_agent(Message{static_cast<std::uint32_t>(i), LocalModelBody{estimate}});
        transport.drain_agent_inbox(static_cast<std::uint32_t>(i));
    }
    return estimate;
}

CollabResult local_impute_collab_run(const std::vector<AgentDataset>& datasets,
                                     const Covariance& sigma, Transport& transport) {
    const std::size_t m = datasets.size();
    if (m == 0) throw DimensionError("local_impute_collab_run: need at least one agent");
    const Index d = sigma.dim();

    // Round 1: observed-block covariances up, Sigma down.
    std::vector<LocalSummary> summaries;
    summaries.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        summaries.push_back(build_summary(datasets[i]));
        transport.send_to_server(Message{static_cast<std::uint32_t>(i),
                                         CovarianceBody{summaries[i].sigma_hat_plus}});
    }
    transport.drain_server_inbox();
    for (std::size_t i = 0; i < m; ++i) {
        transport.send_to_agent(
            Message{static_cast<std::uint32_t>(i), CovarianceBody{sigma.matrix()}});
        transport.drain_agent_inbox(static_cast<std::uint32_t>(i));
    }

    // Round 2: agents impute locally and uplink [theta_imp | R].
    std::vector<TOperator> t_ops;
    std::vector<ImputedEstimate> imputed;
    t_ops.reserve(m);
    imputed.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        t_ops.push_back(t_operator(sigma, datasets[i].mask));
        imputed.push_back(local_impute(datasets[i], t_ops[i], static_cast<std::uint32_t>(i)));
        Vector payload(d + 1);
        payload.head(d) = imputed[i].vector;
        payload[d] = summaries[i].residual_risk;
        transport.send_to_server(
            Message{static_cast<std::uint32_t>(i), LocalModelBody{std::move(payload)}});
    }
    transport.drain_server_inbox();

    // Server aggregates with the Theorem-2-optimal weights T^T W^g T.
    std::vector<Matrix> weights;
    std::vector<WeightMatrix> gaussian;
    weights.reserve(m);
    gaussian.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        try {
            gaussian.push_back(gaussian_weights(summaries[i]));
        } catch (const ZeroRiskError&) {
            throw ZeroRiskError("local_impute_collab_run: agent " + std::to_string(i) +
                                " has zero residual risk");
        }
        weights.push_back(
            symmetrize(t_ops[i].matrix.transpose() * gaussian[i].matrix * t_ops[i].matrix));
    }
    Vector global = aggregate_imputed(imputed, t_ops, weights);

    std::vector<Vector> locals(m);
    for (std::size_t i = 0; i < m; ++i) {
        Vector local = t_ops[i].matrix * global;
        transport.send_to_agent(Message{static_cast<std::uint32_t>(i), LocalModelBody{local}});
        transport.drain_agent_inbox(static_cast<std::uint32_t>(i));
        locals[i] = std::move(local);
    }
    return CollabResult{std::move(global), std::move(locals), std::move(gaussian),
                        transport.ledger()};
}

std::vector<Vector> local_ols_run(const std::vector<AgentDataset>& datasets,
                                  Transport& transport) {
    std::vector<Vector> out;
    out.reserve(datasets.size());
    for (const auto& data : datasets) out.push_back(local_ols(data).coeffs);
    (void)transport.ledger();  // nothing is ever sent; the ledger stays all-zero
    return out;
}

}  // namespace collab
