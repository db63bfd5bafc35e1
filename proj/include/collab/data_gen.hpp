#pragma once

#include "collab/rng.hpp"
#include "collab/types.hpp"

namespace collab {

/// One agent's training data: the observed feature columns and the labels.
/// Labels are generated from the full feature draw, so unobserved features
/// still drive y even though only the masked columns are retained.
struct AgentDataset {
    AgentDataset(Matrix x, Vector labels, ViewMask m)
        : x_plus(std::move(x)), y(std::move(labels)), mask(std::move(m)) {
        if (x_plus.rows() != y.size()) throw DimensionError("AgentDataset: row counts disagree");
        if (x_plus.rows() < 1) throw DimensionError("AgentDataset: need at least one row");
        if (x_plus.cols() != mask.dim())
            throw DimensionError("AgentDataset: column count does not match mask");
    }

    Index n() const { return x_plus.rows(); }

    Matrix x_plus;
    Vector y;
    ViewMask mask;
};

/// Sigma = W Lambda W^T with Lambda drawn Uniform(0,1] entrywise, `spikes`
/// of the eigenvalues multiplied by spike_factor, and W Haar-orthogonal
/// (QR of a Gaussian matrix with sign correction).
Covariance synth_covariance(Index d, Index spikes, double spike_factor, RngSeed seed);

/// Draws n full rows x ~ N(0, Sigma), labels y = x^T theta + noise with
/// noise ~ N(0, sigma^2), and retains only the masked columns.
AgentDataset sample_dataset(const ModelSpec& model, const ViewMask& mask, Index n, RngSeed seed);

/// m masks with each coordinate dropped independently with probability p.
/// Masks that would come out empty are redrawn; redraws are counted.
std::vector<ViewMask> mcar_masks(Index d, Index m, double p, RngSeed seed,
                                 std::size_t* redraw_count = nullptr);

/// Uniformly random subset of k of d features, indices increasing.
ViewMask random_subset_mask(Index d, Index k, Philox& rng);

/// Stateful sampler of full feature vectors x ~ N(0, Sigma); feeds the
/// Monte Carlo weight estimation and fresh-data baselines.
class GaussianSampler {
  public:
    GaussianSampler(const Covariance& sigma, RngSeed seed);
    Vector operator()();

  private:
    Matrix chol_lower_;
    Philox rng_;
};

}  // namespace collab
