#include "gim/matcomp.hpp"

#include "gim/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <vector>

namespace gim {

int MaskedMatrix::observed_count() const {
    return static_cast<int>((mask.array() != 0).count());
}

namespace {

void check_masked(const MaskedMatrix& mm) {
    if (mm.mask.rows() != mm.values.rows() || mm.mask.cols() != mm.values.cols()) {
        throw ShapeError(fmt::format("mask is {}x{} but values are {}x{}", mm.mask.rows(),
                                     mm.mask.cols(), mm.values.rows(), mm.values.cols()));
    }
    if (mm.values.size() == 0 || mm.observed_count() == 0) {
        throw EmptyMaskError("matrix has no observed entries");
    }
}

// Zero-filled observations with over-represented rows and columns removed,
// rescaled by the inverse observed fraction.
Eigen::MatrixXd trimmed_rescaled(const MaskedMatrix& mm) {
    const int n1 = mm.rows();
    const int n2 = mm.cols();
    const double observed = mm.observed_count();
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n1, n2);
    Eigen::VectorXd row_counts = Eigen::VectorXd::Zero(n1);
    Eigen::VectorXd col_counts = Eigen::VectorXd::Zero(n2);
    for (int j = 0; j < n2; ++j) {
        for (int i = 0; i < n1; ++i) {
            if (mm.mask(i, j) != 0) {
                z(i, j) = mm.values(i, j);
                row_counts(i) += 1.0;
                col_counts(j) += 1.0;
            }
        }
    }
    const double row_limit = 2.0 * observed / n1;
    const double col_limit = 2.0 * observed / n2;
    for (int i = 0; i < n1; ++i) {
        if (row_counts(i) > row_limit) {
            z.row(i).setZero();
        }
    }
    for (int j = 0; j < n2; ++j) {
        if (col_counts(j) > col_limit) {
            z.col(j).setZero();
        }
    }
    return z * (static_cast<double>(n1) * n2 / observed);
}

double observed_rmse(const MaskedMatrix& mm, const Eigen::MatrixXd& estimate) {
    double sum = 0.0;
    int count = 0;
    for (int j = 0; j < mm.cols(); ++j) {
        for (int i = 0; i < mm.rows(); ++i) {
            if (mm.mask(i, j) != 0) {
                const double d = estimate(i, j) - mm.values(i, j);
                sum += d * d;
                ++count;
            }
        }
    }
    return std::sqrt(sum / count);
}

// Ridge least-squares refit of every row of `target` against the fixed
// factor, using only observed entries. `transposed` selects whether rows
// of target index matrix rows (false) or matrix columns (true).
void refit_factor(const MaskedMatrix& mm, const Eigen::MatrixXd& fixed, Eigen::MatrixXd& target,
                  bool transposed, double ridge) {
    const int rank = static_cast<int>(fixed.cols());
    const int count = transposed ? mm.cols() : mm.rows();
    const int other = transposed ? mm.rows() : mm.cols();
    Eigen::MatrixXd gram(rank, rank);
    Eigen::VectorXd rhs(rank);
    for (int k = 0; k < count; ++k) {
        gram.setIdentity();
        gram *= ridge;
        rhs.setZero();
        for (int l = 0; l < other; ++l) {
            const int i = transposed ? l : k;
            const int j = transposed ? k : l;
            if (mm.mask(i, j) == 0) {
                continue;
            }
            const auto f = fixed.row(l).transpose();
            gram.noalias() += f * f.transpose();
            rhs.noalias() += f * mm.values(i, j);
        }
        target.row(k) = gram.ldlt().solve(rhs).transpose();
    }
}

} // namespace

namespace {

int gap_ratio_rank(const Eigen::VectorXd& sigma, int limit) {
    if (!(sigma(0) > 0.0)) {
        return 1;
    }
    int best = 1;
    double best_ratio = -1.0;
    for (int k = 1; k < limit; ++k) {
        const double upper = sigma(k - 1);
        if (upper < kRankThreshold * sigma(0)) {
            break;
        }
        const double lower = sigma(k);
        const double ratio =
            lower > 0.0 ? upper / lower : std::numeric_limits<double>::infinity();
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = k;
        }
    }
    return best;
}

// Held-out error of rank-k completions over kFolds folds of the observed
// entries; the smallest rank within 5% of the best error wins.
int held_out_rank(const MaskedMatrix& mm) {
    constexpr int kFolds = 5;
    const int n1 = mm.rows();
    const int n2 = mm.cols();
    std::vector<std::pair<int, int>> observed;
    for (int j = 0; j < n2; ++j) {
        for (int i = 0; i < n1; ++i) {
            if (mm.mask(i, j) != 0) {
                observed.emplace_back(i, j);
            }
        }
    }
    const int n_obs = static_cast<int>(observed.size());
    const int train = n_obs - (n_obs + kFolds - 1) / kFolds;
    // Largest rank whose parameter count the training entries can pin down.
    int max_rank = 0;
    while (max_rank < std::min(n1, n2) && (max_rank + 1) * (n1 + n2 - max_rank - 1) <= train) {
        ++max_rank;
    }
    if (max_rank <= 1) {
        return 1;
    }

    double scale = 0.0;
    for (const auto& [i, j] : observed) {
        scale += mm.values(i, j) * mm.values(i, j);
    }
    // fold_error[k][fold]; the median over folds discounts folds where a
    // row or column keeps too few training entries to pin down its factor.
    std::vector<std::vector<double>> fold_error(max_rank + 1);
    for (int fold = 0; fold < kFolds; ++fold) {
        MaskedMatrix part{mm.values, mm.mask};
        for (int e = fold; e < n_obs; e += kFolds) {
            part.mask(observed[e].first, observed[e].second) = 0;
        }
        if (part.observed_count() == 0) {
            continue;
        }
        for (int k = 1; k <= max_rank; ++k) {
            const Eigen::MatrixXd fit = complete(part, k).completed;
            double err = 0.0;
            for (int e = fold; e < n_obs; e += kFolds) {
                const auto [i, j] = observed[e];
                const double d = fit(i, j) - mm.values(i, j);
                err += d * d;
            }
            fold_error[k].push_back(err);
        }
    }
    if (fold_error[1].empty()) {
        return 1;
    }
    std::vector<double> error(max_rank + 1, 0.0);
    for (int k = 1; k <= max_rank; ++k) {
        auto& v = fold_error[k];
        std::sort(v.begin(), v.end());
        const std::size_t h = v.size() / 2;
        error[k] = v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    }
    const double best = *std::min_element(error.begin() + 1, error.end());
    for (int k = 1; k <= max_rank; ++k) {
        if (error[k] <= 1.05 * best + 1e-12 * scale / kFolds) {
            return k;
        }
    }
    return max_rank;
}

} // namespace

int estimate_rank(const MaskedMatrix& mm) {
    check_masked(mm);
    const int limit = std::min(mm.rows(), mm.cols());
    if (limit == 1) {
        return 1;
    }
    if (mm.observed_count() == mm.values.size()) {
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(trimmed_rescaled(mm));
        return gap_ratio_rank(svd.singularValues(), limit);
    }
    return held_out_rank(mm);
}

CompletionResult complete(const MaskedMatrix& mm, std::optional<int> rank_hint,
                          const CompletionOptions& options) {
    check_masked(mm);
    const int limit = std::min(mm.rows(), mm.cols());
    const int rank = rank_hint ? *rank_hint : estimate_rank(mm);
    if (rank < 1 || rank > limit) {
        throw ParamError(fmt::format("rank {} outside [1, {}]", rank, limit));
    }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(trimmed_rescaled(mm),
                                                Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd root = svd.singularValues().head(rank).cwiseSqrt();
    Eigen::MatrixXd left = svd.matrixU().leftCols(rank) * root.asDiagonal();
    Eigen::MatrixXd right = svd.matrixV().leftCols(rank) * root.asDiagonal();

    CompletionResult result;
    result.used_rank = rank;
    double rmse = observed_rmse(mm, left * right.transpose());
    double change = std::numeric_limits<double>::infinity();
    int iter = 0;
    Eigen::MatrixXd best = left * right.transpose();
    while (iter < options.max_iterations) {
        refit_factor(mm, right, left, false, options.ridge);
        refit_factor(mm, left, right, true, options.ridge);
        ++iter;
        Eigen::MatrixXd product = left * right.transpose();
        const double next = observed_rmse(mm, product);
        change = rmse - next;
        if (next < rmse) {
            rmse = next;
            best = std::move(product);
        }
        if (change < options.rmse_tolerance) {
            break;
        }
    }
    result.completed = std::move(best);
    result.observed_rmse = rmse;
    result.iterations = iter;
    result.converged = !(iter >= options.max_iterations &&
                         std::abs(change) > options.nonconvergence_threshold);
    return result;
}

std::vector<CompletionResult> complete_slices(const std::vector<Eigen::MatrixXd>& slices,
                                              const Eigen::MatrixXi& mask,
                                              std::optional<int> rank_hint, Execution exec,
                                              const CompletionOptions& options) {
    const int count = static_cast<int>(slices.size());
    std::vector<CompletionResult> results(count);
    if (exec == Execution::serial) {
        for (int k = 0; k < count; ++k) {
            results[k] = complete({slices[k], mask}, rank_hint, options);
        }
        return results;
    }
    std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < count; ++k) {
        try {
            results[k] = complete({slices[k], mask}, rank_hint, options);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return results;
}

SpectralDiagnostics spectral_diagnostics(const Eigen::MatrixXd& matrix) {
    if (matrix.size() == 0 || matrix.cwiseAbs().maxCoeff() == 0.0) {
        throw ZeroMatrixError("spectral diagnostics of a zero matrix are undefined");
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    SpectralDiagnostics diag;
    diag.singular_values.assign(sigma.data(), sigma.data() + sigma.size());
    int rank = 0;
    while (rank < sigma.size() && sigma(rank) >= kRankThreshold * sigma(0)) {
        ++rank;
    }
    diag.numerical_rank = rank;
    diag.kappa = sigma(0) / sigma(rank - 1);

    const double n1 = static_cast<double>(matrix.rows());
    const double n2 = static_cast<double>(matrix.cols());
    const Eigen::MatrixXd u = svd.matrixU().leftCols(rank);
    const Eigen::MatrixXd v = svd.matrixV().leftCols(rank);
    const double row_spread = (n1 / rank) * u.rowwise().squaredNorm().maxCoeff();
    const double col_spread = (n2 / rank) * v.rowwise().squaredNorm().maxCoeff();
    // The bound mu0 >= 1 holds exactly; rounding can land a hair below it.
    diag.mu0 = std::max(1.0, std::max(row_spread, col_spread));
    diag.mu1 = (u * v.transpose()).cwiseAbs().maxCoeff() * std::sqrt(n1 * n2 / rank);
    return diag;
}

DynamicMatrices project_model(const DynamicMatrices& completed, double reward_min,
                              double reward_max, const std::optional<KnownOverlay>& known) {
    const int S = completed.num_states();
    const int A = completed.num_actions();
    if (static_cast<int>(completed.transition_slices.size()) != S) {
        throw ShapeError(fmt::format("expected {} transition slices, got {}", S,
                                     completed.transition_slices.size()));
    }
    for (const auto& slice : completed.transition_slices) {
        if (slice.rows() != S || slice.cols() != A) {
            throw ShapeError("transition slice shape differs from reward slice");
        }
    }
    if (known) {
        const auto* emp = known->empirical;
        if (known->mask.rows() != S || known->mask.cols() != A || emp == nullptr ||
            emp->num_states() != S || emp->num_actions() != A ||
            static_cast<int>(emp->transition_slices.size()) != S) {
            throw ShapeError("known overlay does not match the completed model");
        }
    }

    DynamicMatrices out = completed;
    std::vector<double> column(S);
    for (int i = 0; i < S; ++i) {
        for (int j = 0; j < A; ++j) {
            const bool is_known = known && known->mask(i, j) != 0;
            if (is_known) {
                for (int s = 0; s < S; ++s) {
                    out.transition_slices[s](i, j) = known->empirical->transition_slices[s](i, j);
                }
                out.reward_slice(i, j) = known->empirical->reward_slice(i, j);
            }
            double mass = 0.0;
            for (int s = 0; s < S; ++s) {
                const double v = out.transition_slices[s](i, j);
                column[s] = v > 0.0 ? v : 0.0;
                mass += column[s];
            }
            for (int s = 0; s < S; ++s) {
                out.transition_slices[s](i, j) = mass > 1e-12 ? column[s] / mass : 1.0 / S;
            }
            const double r = out.reward_slice(i, j);
            out.reward_slice(i, j) = std::isnan(r) ? reward_min : std::clamp(r, reward_min, reward_max);
        }
    }
    return out;
}

ParameterRecommendation recommend_parameters(const SpectralDiagnostics& diag, int num_states,
                                             int num_actions, int horizon, double epsilon,
                                             double c) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw ParamError(fmt::format("epsilon must lie in (0,1), got {}", epsilon));
    }
    if (!(c > 0.0)) {
        throw ParamError("constant c must be positive");
    }
    if (num_states < 1 || num_actions < 1 || horizon < 1) {
        throw ParamError("states, actions and horizon must be positive");
    }
    if (diag.numerical_rank < 1 || !(diag.kappa >= 1.0) || !(diag.mu0 >= 1.0) ||
        !(diag.mu1 >= 0.0)) {
        throw ParamError("diagnostics out of range");
    }
    const double S = num_states;
    const double A = num_actions;
    const double H = horizon;
    const double r = diag.numerical_rank;
    const double m_in = std::min(S, A);
    const double m_ax = std::max(S, A);
    const double ratio = m_ax / m_in;
    const double k2 = diag.kappa * diag.kappa;
    const double k4 = k2 * k2;

    const double spread = diag.mu0 * r * std::sqrt(ratio) * std::log(m_in);
    const double standard = diag.mu0 * diag.mu0 * r * r * ratio * k4;
    const double strong = diag.mu1 * diag.mu1 * r * r * ratio * k4;

    ParameterRecommendation rec;
    rec.rho_min = std::min(1.0, c / std::sqrt(S * A) * k2 * std::max({spread, standard, strong}));
    rec.m_raw = c * k4 * r * S * (H * H) * m_ax / (rec.rho_min * A * epsilon * epsilon);
    rec.m_min = static_cast<long long>(std::ceil(rec.m_raw));
    return rec;
}

} // namespace gim
