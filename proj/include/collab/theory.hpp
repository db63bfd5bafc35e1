#pragma once

#include "collab/aggregation.hpp"
#include "collab/data_gen.hpp"
#include "collab/model_core.hpp"

namespace collab {

/// Everything per-agent that the closed-form covariance matrices need,
/// derived once from (model, masks).
struct AgentTheory {
    ViewMask mask;
    TOperator t_op;
    Matrix sigma_plus;
    double irreducible;  // ||theta_{i-}||^2_{Gamma_{i-}}, zero for full masks
    Matrix w_gauss;      // W_i^g = Sigma_{i+} / (irreducible + sigma^2)
    Matrix q_gauss;      // Q_i  = (irreducible + sigma^2) Sigma_{i+}
};

class TheoryContext {
  public:
    TheoryContext(ModelSpec model, std::vector<ViewMask> masks);

    const ModelSpec& model() const { return model_; }
    const std::vector<AgentTheory>& agents() const { return agents_; }
    Index dim() const { return model_.dim(); }
    std::size_t num_agents() const { return agents_.size(); }

  private:
    ModelSpec model_;
    std::vector<AgentTheory> agents_;
};

/// Sandwich covariance of the weighted aggregate:
/// (sum T^T W T)^{-1} (sum T^T W W*^{-1} W T) (sum T^T W T)^{-1}, with the
/// optimal W* taken from the (Gaussian closed-form) context.
Matrix covariance_of_weights(const TheoryContext& ctx, const std::vector<WeightMatrix>& weights);

/// C^g = (sum T^T W^g T)^{-1}, the Collab asymptotic covariance under
/// Gaussian features (equal to C* in that setting).
Matrix c_gaussian(const TheoryContext& ctx);

/// C^s = (sum 2 Sigma / (||theta_{i-}||^2_Gamma + sigma^2))^{-1}, the strong
/// observation lower bound matrix.
Matrix c_strong(const TheoryContext& ctx);

/// Asymptotic covariance of weighted global imputation:
/// A^{-1} (sum alpha^2 T^T Q T) A^{-1} with A = sum alpha T^T Sigma_+ T.
Matrix c_imp_glb(const TheoryContext& ctx, const std::vector<double>& alphas);

/// T C T^T — a global covariance restricted to one agent's view.
Matrix local_theory_cov(const Matrix& c, const TOperator& t_op);

/// The alphas that make c_imp_glb collapse to C^g: 1/(irreducible + sigma^2).
std::vector<double> oracle_alphas(const TheoryContext& ctx);

struct Corollary4Report {
    bool applicable;      // false when p exceeds the admissible threshold
    double threshold;     // (1/2) kappa^{-1} (1 + ||theta||^2_Sigma / sigma^2)^{-1}
    Matrix m_c_gaussian;  // m * C^g over the drawn masks
    Matrix m_c_strong;    // m * C^s over the drawn masks
    bool upper_holds;     // 4 m C^s >= m C^g
    bool lower_holds;     // m C^g >= m C^s
    std::size_t mask_redraws;
};

/// Draws m MCAR masks at missingness p and evaluates both sides of the
/// bound-comparability sandwich at tolerance 1e-6 * ||m C^s||.
Corollary4Report corollary4_check(const ModelSpec& model, double p, Index m, RngSeed seed);

}  // namespace collab
