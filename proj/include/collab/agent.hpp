#pragma once

#include <optional>

#include "collab/data_gen.hpp"
#include "collab/types.hpp"

namespace collab {

/// Agent i's uplink message: local OLS fit, observed-block second moment,
/// and mean squared training residual.
struct LocalSummary {
    Vector theta_hat;       // d_i
    Matrix sigma_hat_plus;  // d_i x d_i, symmetric PSD
    double residual_risk;   // >= 0
    ViewMask mask;
};

struct OlsSolution {
    Vector coeffs;
    bool rank_deficient;  // pseudo-inverse fell back to the min-norm solution
};

/// Moore-Penrose least squares on the agent's observed columns. Rank
/// deficiency is not an error: the min-norm solution is returned and
/// flagged. Singular values below 1e-10 of the largest are truncated.
OlsSolution local_ols(const AgentDataset& data);

/// (1/n) ||X_{i+} theta_hat - y||^2.
double residual_risk(const AgentDataset& data, const Vector& theta_hat);

/// Assembles the uplink summary. The second moment pools labeled rows with
/// the optional unlabeled rows as an unweighted union.
LocalSummary build_summary(const AgentDataset& data,
                           const std::optional<Matrix>& unlabeled = std::nullopt);

}  // namespace collab
