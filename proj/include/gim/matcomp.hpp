#pragma once

#include "gim/mdp.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace gim {

/// Partially observed matrix. mask(i, j) != 0 marks an observed entry.
struct MaskedMatrix {
    Eigen::MatrixXd values;
    Eigen::MatrixXi mask;

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }
    int observed_count() const;
};

struct SpectralDiagnostics {
    int numerical_rank = 0;
    double kappa = 1.0;
    double mu0 = 1.0;
    double mu1 = 0.0;
    std::vector<double> singular_values;
};

struct CompletionResult {
    Eigen::MatrixXd completed;
    int used_rank = 0;
    double observed_rmse = 0.0;
    int iterations = 0;
    /// False when the iteration cap was hit while RMSE was still moving by
    /// more than the non-convergence threshold. The result is still usable.
    bool converged = true;
};

struct CompletionOptions {
    double ridge = 1e-9;
    double rmse_tolerance = 1e-10;
    double nonconvergence_threshold = 1e-6;
    int max_iterations = 500;
};

/// Singular values below this fraction of the largest count as zero.
inline constexpr double kRankThreshold = 1e-8;

/// Rank estimate. A fully observed matrix uses the largest gap ratio
/// sigma_k / sigma_(k+1) of its spectrum. Otherwise candidate ranks are
/// scored by the median 5-fold held-out completion error and the smallest rank within
/// 5% of the best score is returned.
int estimate_rank(const MaskedMatrix& mm);

/**
 * Rank-constrained completion of a partially observed matrix.
 *
 * Minimizes the Frobenius error over observed entries subject to
 * rank <= r. Initialized from the truncated SVD of the trimmed, rescaled
 * zero-filled matrix and refined by alternating ridge least squares.
 * The rank is rank_hint when given, else estimate_rank(mm).
 */
CompletionResult complete(const MaskedMatrix& mm, std::optional<int> rank_hint = {},
                          const CompletionOptions& options = {});

/// Completes every slice against the same mask. The parallel path runs one
/// completion per slice concurrently; results match the serial path exactly.
std::vector<CompletionResult> complete_slices(const std::vector<Eigen::MatrixXd>& slices,
                                              const Eigen::MatrixXi& mask,
                                              std::optional<int> rank_hint = {},
                                              Execution exec = Execution::serial,
                                              const CompletionOptions& options = {});

/// Rank, condition number and standard/strong incoherence of a matrix.
/// Throws ZeroMatrixError on an all-zero input.
SpectralDiagnostics spectral_diagnostics(const Eigen::MatrixXd& matrix);

/// Known entries to restore after completion.
struct KnownOverlay {
    Eigen::MatrixXi mask;
    const DynamicMatrices* empirical = nullptr;
};

/**
 * Restores a valid model from independently completed slices.
 *
 * Known (i, j) positions are first overwritten with the empirical values.
 * Each next-state vector is clipped at zero and renormalized, falling back
 * to uniform when no mass remains; rewards are clipped into
 * [reward_min, reward_max].
 */
DynamicMatrices project_model(const DynamicMatrices& completed, double reward_min,
                              double reward_max, const std::optional<KnownOverlay>& known = {});

struct ParameterRecommendation {
    double rho_min = 1.0;
    /// Known threshold before rounding up.
    double m_raw = 1.0;
    long long m_min = 1;
};

/// Completion fraction and known threshold suggested by the sample
/// complexity bound, with a single absolute constant c for both.
ParameterRecommendation recommend_parameters(const SpectralDiagnostics& diag, int num_states,
                                             int num_actions, int horizon, double epsilon,
                                             double c = 1.0);

} // namespace gim
