#include "collab/agent.hpp"

#include "collab/model_core.hpp"

namespace collab {

OlsSolution local_ols(const AgentDataset& data) {
    Eigen::BDCSVD<Matrix> svd(data.x_plus, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    const bool deficient = svd.rank() < data.x_plus.cols();
    return OlsSolution{svd.solve(data.y), deficient};
}

double residual_risk(const AgentDataset& data, const Vector& theta_hat) {
    if (theta_hat.size() != data.x_plus.cols())
        throw DimensionError("residual_risk: estimate dimension mismatch");
    return (data.x_plus * theta_hat - data.y).squaredNorm() / static_cast<double>(data.n());
}

LocalSummary build_summary(const AgentDataset& data, const std::optional<Matrix>& unlabeled) {
    Matrix moment = data.x_plus.transpose() * data.x_plus;
    Index rows = data.n();
    if (unlabeled) {
        if (unlabeled->cols() != data.x_plus.cols())
            throw DimensionError("build_summary: unlabeled column count does not match mask");
        moment += unlabeled->transpose() * (*unlabeled);
        rows += unlabeled->rows();
    }
    OlsSolution ols = local_ols(data);
    const double risk = residual_risk(data, ols.coeffs);
    return LocalSummary{std::move(ols.coeffs), symmetrize(moment / static_cast<double>(rows)),
                        risk, data.mask};
}

}  // namespace collab
