#pragma once

#include <functional>
#include <optional>

#include "collab/agent.hpp"
#include "collab/model_core.hpp"
#include "collab/transport.hpp"

namespace collab {

/// Symmetric positive definite weighting matrix for one agent's term of the
/// aggregation objective.
struct WeightMatrix {
    explicit WeightMatrix(Matrix m) : matrix(std::move(m)) {
        if (matrix.rows() != matrix.cols())
            throw DimensionError("WeightMatrix: matrix must be square");
        const double scale = matrix.cwiseAbs().maxCoeff();
        if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
            throw DimensionError("WeightMatrix: matrix must be symmetric");
        Eigen::LDLT<Matrix> ldlt(matrix);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
            throw SingularBlock("WeightMatrix: matrix must be positive definite");
    }
    Matrix matrix;
};

struct CollabResult {
    Vector global_estimate;
    std::vector<Vector> local_estimates;  // local_estimates[i] = T_i * global, same arithmetic path
    std::vector<WeightMatrix> weights_used;
    CommLedger ledger;
};

/// W_hat_i^g = Sigma_hat_{i+} / R_i, the Gaussian-feature optimal weight
/// built from agent i's uplink summary.
WeightMatrix gaussian_weights(const LocalSummary& summary);

/// Closed-form minimizer of sum_i ||T_i theta - theta_hat_i||^2_{W_i}:
/// (sum T^T W T)^{-1} (sum T^T W theta_hat). Throws UnidentifiableModel when
/// the masks jointly fail to identify theta.
Vector werm_aggregate(const std::vector<LocalSummary>& summaries,
                      const std::vector<TOperator>& t_ops,
                      const std::vector<WeightMatrix>& weights);

/// Full protocol round: local training, uplink of summaries, Gaussian weight
/// construction on the server (which knows Sigma), aggregation, and downlink
/// of the localized estimates T_i theta_hat. The transport's ledger records
/// the exact real-number traffic.
CollabResult collab_run(const std::vector<AgentDataset>& datasets, const Covariance& sigma,
                        Transport& transport,
                        const std::vector<std::optional<Matrix>>& unlabeled = {});

using FeatureSampler = std::function<Vector()>;

/// Monte Carlo estimate of Q_i = E[x_+ (theta_-^T z_+)^2 x_+^T] + sigma^2
/// Sigma_{i+}, with z_+ the residual of the unobserved block given the
/// observed one. All second moments come from the same n_mc draws (the
/// draws are buffered: n_mc * d doubles).
Matrix estimate_q(const FeatureSampler& sampler, const Vector& theta_plug, const ViewMask& mask,
                  double sigma_sq, Index n_mc);

/// W_i^star = Sigma_{i+} Q_i^{-1} Sigma_{i+}, the optimal weight for general
/// feature distributions.
WeightMatrix optimal_weights_general(const Matrix& q_hat, const Matrix& sigma_plus);

}  // namespace collab
