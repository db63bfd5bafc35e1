#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace collab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Error taxonomy. All failures in the library surface as one of these.
// ---------------------------------------------------------------------------

struct CollabError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : CollabError {
    using CollabError::CollabError;
};

/// A symmetric block that should have been invertible was numerically
/// singular (reciprocal condition number below the factorization cutoff).
struct SingularBlock : CollabError {
    using CollabError::CollabError;
};

/// Requested the Schur complement of a full-observation mask (d_i = d).
struct EmptyComplement : CollabError {
    using CollabError::CollabError;
};

/// An agent's training residual is exactly zero; its Gaussian weight
/// Sigma_hat / R would be infinite.
struct ZeroRiskError : CollabError {
    using CollabError::CollabError;
};

/// The masks jointly fail to identify the global parameter: the normal
/// matrix of the weighted aggregation is singular.
struct UnidentifiableModel : CollabError {
    using CollabError::CollabError;
};

struct DivergedError : CollabError {
    using CollabError::CollabError;
};

/// A table row could not be parsed under the declared schema.
struct RowRejected : CollabError {
    RowRejected(std::size_t row, const std::string& what)
        : CollabError("row " + std::to_string(row) + ": " + what), row_index(row) {}
    std::size_t row_index;
};

struct IoError : CollabError {
    using CollabError::CollabError;
};

struct ConfigError : CollabError {
    using CollabError::CollabError;
};

// ---------------------------------------------------------------------------
// ViewMask: the ordered set of feature coordinates one agent observes.
// ---------------------------------------------------------------------------

class ViewMask {
  public:
    ViewMask(std::vector<Index> observed, Index ambient_dim)
        : observed_(std::move(observed)), ambient_(ambient_dim) {
        if (ambient_ < 1) throw DimensionError("ViewMask: ambient dimension must be >= 1");
        if (observed_.empty()) throw DimensionError("ViewMask: at least one observed feature required");
        std::unordered_set<Index> seen;
        for (Index j : observed_) {
            if (j < 0 || j >= ambient_) throw DimensionError("ViewMask: index out of range");
            if (!seen.insert(j).second) throw DimensionError("ViewMask: duplicate index");
        }
    }

    static ViewMask all(Index d) {
        std::vector<Index> idx(static_cast<std::size_t>(d));
        for (Index j = 0; j < d; ++j) idx[static_cast<std::size_t>(j)] = j;
        return ViewMask(std::move(idx), d);
    }

    Index dim() const { return static_cast<Index>(observed_.size()); }
    Index ambient() const { return ambient_; }
    bool full() const { return dim() == ambient_; }
    const std::vector<Index>& observed() const { return observed_; }

    /// Unobserved coordinates in increasing order.
    std::vector<Index> unobserved() const {
        std::vector<bool> hit(static_cast<std::size_t>(ambient_), false);
        for (Index j : observed_) hit[static_cast<std::size_t>(j)] = true;
        std::vector<Index> out;
        out.reserve(static_cast<std::size_t>(ambient_ - dim()));
        for (Index j = 0; j < ambient_; ++j)
            if (!hit[static_cast<std::size_t>(j)]) out.push_back(j);
        return out;
    }

    bool operator==(const ViewMask& o) const {
        return ambient_ == o.ambient_ && observed_ == o.observed_;
    }

  private:
    std::vector<Index> observed_;
    Index ambient_;
};

// Row/column selections used throughout when partitioning by a mask.
inline Vector select(const Vector& v, const std::vector<Index>& idx) {
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Index>(k)] = v[idx[k]];
    return out;
}

inline Matrix select_columns(const Matrix& a, const std::vector<Index>& idx) {
    Matrix out(a.rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = a.col(idx[k]);
    return out;
}

inline Matrix select_block(const Matrix& a, const std::vector<Index>& rows,
                           const std::vector<Index>& cols) {
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            out(static_cast<Index>(r), static_cast<Index>(c)) = a(rows[r], cols[c]);
    return out;
}

// ---------------------------------------------------------------------------
// Covariance: symmetric positive definite feature covariance.
// ---------------------------------------------------------------------------

class Covariance {
  public:
    /// Ingests a nearly-symmetric matrix, storing (A + A^T)/2. Sample
    /// covariances drift slightly asymmetric in finite precision, so small
    /// asymmetry is averaged away; gross asymmetry is a caller bug.
    explicit Covariance(const Matrix& entries) {
        if (entries.rows() != entries.cols())
            throw DimensionError("Covariance: matrix must be square");
        const double scale = entries.cwiseAbs().maxCoeff();
        const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
        if (scale > 0 && asym > 1e-6 * scale)
            throw DimensionError("Covariance: input is not symmetric");
        entries_ = 0.5 * (entries + entries.transpose());
        Eigen::LLT<Matrix> llt(entries_);
        if (llt.info() != Eigen::Success)
            throw SingularBlock("Covariance: matrix is not positive definite");
    }

    Index dim() const { return entries_.rows(); }
    const Matrix& matrix() const { return entries_; }

  private:
    Matrix entries_;
};

// ---------------------------------------------------------------------------
// ModelSpec: ground truth (Sigma, theta, sigma^2) for synthesis and theory.
// ---------------------------------------------------------------------------

struct ModelSpec {
    ModelSpec(Covariance sigma, Vector theta_in, double noise_var_in)
        : sigma_cov(std::move(sigma)), theta(std::move(theta_in)), noise_var(noise_var_in) {
        if (theta.size() != sigma_cov.dim())
            throw DimensionError("ModelSpec: theta dimension does not match covariance");
        if (!(noise_var > 0.0)) throw DimensionError("ModelSpec: noise variance must be > 0");
    }

    Index dim() const { return sigma_cov.dim(); }

    Covariance sigma_cov;
    Vector theta;
    double noise_var;
};

}  // namespace collab
