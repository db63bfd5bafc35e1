#include "collab/data_gen.hpp"

#include "collab/model_core.hpp"

#include <numeric>

namespace collab {

namespace {

// Column-major fill order, one fixed convention for reproducibility.
Matrix gaussian_matrix(Index rows, Index cols, Philox& rng) {
    Matrix g(rows, cols);
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r) g(r, c) = rng.normal();
    return g;
}

}  // namespace

Covariance synth_covariance(Index d, Index spikes, double spike_factor, RngSeed seed) {
    if (d < 1) throw DimensionError("synth_covariance: d must be >= 1");
    if (spikes < 0 || spikes > d) throw DimensionError("synth_covariance: spikes out of range");
    if (!(spike_factor > 0.0)) throw DimensionError("synth_covariance: spike_factor must be > 0");
    Philox rng(seed);

    Vector eigenvalues(d);
    for (Index j = 0; j < d; ++j) eigenvalues[j] = rng.uniform_pos();

    // Partial Fisher-Yates picks the spiked positions without replacement.
    std::vector<Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    for (Index j = 0; j < spikes; ++j) {
        const Index k = j + static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(d - j)));
        std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(k)]);
        eigenvalues[order[static_cast<std::size_t>(j)]] *= spike_factor;
    }

    // Haar-orthogonal W: QR of a Gaussian matrix, columns sign-corrected by
    // the diagonal of R.
    const Matrix g = gaussian_matrix(d, d, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix w = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < d; ++j)
        if (r(j, j) < 0.0) w.col(j) = -w.col(j);

    return Covariance(w * eigenvalues.asDiagonal() * w.transpose());
}

AgentDataset sample_dataset(const ModelSpec& model, const ViewMask& mask, Index n, RngSeed seed) {
    if (n < 1) throw DimensionError("sample_dataset: n must be >= 1");
    if (mask.ambient() != model.dim())
        throw DimensionError("sample_dataset: mask/model dimension mismatch");
    Philox rng(seed);
    const Index d = model.dim();
    const Matrix chol_lower = Eigen::LLT<Matrix>(model.sigma_cov.matrix()).matrixL();

    // Features first (row by row), then the noise vector; the order is part
    // of the reproducibility contract.
    Matrix x_full(n, d);
    Vector g(d);
    for (Index r = 0; r < n; ++r) {
        for (Index j = 0; j < d; ++j) g[j] = rng.normal();
        x_full.row(r) = (chol_lower * g).transpose();
    }
    const double noise_sd = std::sqrt(model.noise_var);
    Vector y = x_full * model.theta;
    for (Index r = 0; r < n; ++r) y[r] += noise_sd * rng.normal();

    return AgentDataset(select_columns(x_full, mask.observed()), std::move(y), mask);
}

std::vector<ViewMask> mcar_masks(Index d, Index m, double p, RngSeed seed,
                                 std::size_t* redraw_count) {
    if (d < 1 || m < 0) throw DimensionError("mcar_masks: bad dimensions");
    if (!(p >= 0.0 && p < 1.0)) throw DimensionError("mcar_masks: p must be in [0, 1)");
    Philox rng(seed);
    std::vector<ViewMask> masks;
    masks.reserve(static_cast<std::size_t>(m));
    std::size_t redraws = 0;
    for (Index i = 0; i < m; ++i) {
        std::vector<Index> observed;
        for (;;) {
            observed.clear();
            for (Index j = 0; j < d; ++j)
                if (rng.uniform() >= p) observed.push_back(j);
            if (!observed.empty()) break;
            ++redraws;
        }
        masks.emplace_back(std::move(observed), d);
    }
    if (redraw_count) *redraw_count = redraws;
    return masks;
}

ViewMask random_subset_mask(Index d, Index k, Philox& rng) {
    if (k < 1 || k > d) throw DimensionError("random_subset_mask: k out of range");
    std::vector<Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    for (Index j = 0; j < k; ++j) {
        const Index swap_with =
            j + static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(d - j)));
        std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(swap_with)]);
    }
    std::vector<Index> observed(order.begin(), order.begin() + k);
    std::sort(observed.begin(), observed.end());
    return ViewMask(std::move(observed), d);
}

GaussianSampler::GaussianSampler(const Covariance& sigma, RngSeed seed)
    : chol_lower_(Eigen::LLT<Matrix>(sigma.matrix()).matrixL()), rng_(seed) {}

Vector GaussianSampler::operator()() {
    Vector g(chol_lower_.rows());
    for (Index j = 0; j < g.size(); ++j) g[j] = rng_.normal();
    return chol_lower_ * g;
}

}  // namespace collab
