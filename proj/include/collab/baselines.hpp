#pragma once

#include "collab/aggregation.hpp"

namespace collab {

/// Zero-pads each local estimate to R^d through Pi_{i+}^T and averages.
Vector naive_collab(const std::vector<LocalSummary>& summaries, Index d);

struct GdConfig {
    double step_scale = 0.1;  // step size = step_scale / m
    Index max_iters = 500;
    double grad_tol = 1e-10;
    int divergence_patience = 10;  // consecutive loss increases before giving up
};

struct OptimizedNaiveResult {
    Vector estimate;                // final combination sum_i c_i * padded theta_hat_i
    Vector coefficients;            // the learned c
    std::vector<double> loss_trace; // squared prediction error per iteration
};

/// Gradient descent over scalar combination weights c (initialized 1/m) of
/// the zero-padded local models, minimizing squared prediction error on a
/// fresh full-feature labeled sample.
OptimizedNaiveResult optimized_naive_collab(const std::vector<LocalSummary>& summaries,
                                            const AgentDataset& fresh_data,
                                            const GdConfig& config = {});

/// Local single-imputation estimate. `vector` is the min-norm interpolant of
/// the imputed design ((T^T X^T X T)^+ T^T X^T y); `identity_path` evaluates
/// T^T (T T^T)^{-1} theta_hat_ols, which the theory says is the same point.
/// Both are exposed so the identity can be checked numerically.
struct ImputedEstimate {
    Vector vector;
    Vector identity_path;
    std::uint32_t source_agent;
};

ImputedEstimate local_impute(const AgentDataset& data, const TOperator& t_op,
                             std::uint32_t source_agent = 0);

/// Weighted aggregation of locally imputed estimates: minimizer over theta of
/// sum_i ||T_i^T (T_i T_i^T)^{-1} T_i theta - imputed_i||^2_{W_i}. Weights are
/// d x d symmetric PSD (the optimal choice T^T W_i^g T is rank-deficient, so
/// PD is not required of each summand — only of the assembled normal matrix).
Vector aggregate_imputed(const std::vector<ImputedEstimate>& imputed,
                         const std::vector<TOperator>& t_ops,
                         const std::vector<Matrix>& weights);

/// Weighted OLS over all nm imputed rows:
/// (sum alpha_i T^T X^T X T)^{-1} (sum alpha_i T^T X^T y). Consumes raw
/// features and labels, unlike Collab.
Vector global_impute(const std::vector<AgentDataset>& datasets,
                     const std::vector<TOperator>& t_ops, const std::vector<double>& alphas);

/// Protocol variant of global_impute: agents ship raw data through the
/// transport (n(d_i+1) reals up), the server imputes, solves, and broadcasts
/// the d-dimensional estimate back to every agent.
Vector global_impute_run(const std::vector<AgentDataset>& datasets, const Covariance& sigma,
                         const std::vector<double>& alphas, Transport& transport);

/// Local imputation with collaboration: the server collects each agent's
/// observed-block covariance (d_i^2 up), distributes Sigma (d^2 down), agents
/// impute locally and uplink [theta_imp | R] (d+1 up), the server aggregates
/// with the Theorem-2-optimal weights and returns localized estimates
/// (d_i down). Total traffic is Theta(d^2) per agent.
CollabResult local_impute_collab_run(const std::vector<AgentDataset>& datasets,
                                     const Covariance& sigma, Transport& transport);

/// Per-agent OLS with no communication at all; the transport is only
/// consulted so the run carries an (all-zero) ledger.
std::vector<Vector> local_ols_run(const std::vector<AgentDataset>& datasets,
                                  Transport& transport);

}  // namespace collab
