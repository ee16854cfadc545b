#pragma once

// Category-calibrated model embeddings: mix category centroids by per-category
// model scores (softmax, top-tau, mask-tau) or, without scores, average the
// offline queries grouped by their best-matching model.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "fgts/core.hpp"

namespace fgts::ccft {

inline constexpr double kDefaultLambda = 0.05;
inline constexpr std::size_t kDefaultTau = 3;

/// Columns of the d x M centroid matrix.
struct CategoryEmbeddings {
    std::vector<EmbeddingVector> xi;
    std::vector<CategoryId> category_ids;

    std::size_t categories() const { return xi.size(); }
    std::size_t dim() const { return xi.empty() ? 0 : xi.front().dim(); }
    void validate() const;
};

enum class Weighting { Perf, PerfCost, ExcelPerfCost, ExcelMask, GroupMean };

std::string to_string(Weighting w);
/// Accepts the display names ("Perf_cost", "Excel_mask", ...) case-insensitively.
Weighting parse_weighting(const std::string& name);

struct WeightingMode {
    Weighting variant = Weighting::PerfCost;
    std::size_t tau = kDefaultTau;
    double lambda = kDefaultLambda;
    /// Excel_perf_cost only: give unselected categories zero softmax mass
    /// instead of the literal weight exp(0).
    bool exclude_unselected = false;

    bool uses_tau() const {
        return variant == Weighting::ExcelPerfCost || variant == Weighting::ExcelMask;
    }
    bool uses_cost() const { return variant != Weighting::Perf && variant != Weighting::GroupMean; }
};

/// Max-subtracted softmax; throws on empty input.
Vector softmax(std::span<const double> v);

/// perf - lambda * cost, entry by entry.
Matrix perf_cost_scores(const ScoreTable& table, double lambda);

/// Round half away from zero to a fixed number of decimals.
double round_to(double value, int decimals);
Matrix round_scores(const Matrix& scores, int decimals);

/// The tau-th largest distinct value of the column (1-based tau).
double excel_threshold(std::span<const double> column, std::size_t tau);

/// Keep entries >= their column's excel_threshold, zero the rest.
Matrix top_tau(const Matrix& scores, std::size_t tau);
/// 1 where top_tau keeps the entry, else 0.
Matrix mask_tau(const Matrix& scores, std::size_t tau);

/// xi * w for a weight vector over categories.
EmbeddingVector mix_categories(const CategoryEmbeddings& xi, std::span<const double> weights);

/**
 * Model embedding from one model's row of scores.
 *
 * Perf and PerfCost apply softmax to the row. ExcelPerfCost expects the
 * top_tau row and applies softmax to it (zeros included unless
 * mode.exclude_unselected, in which case zeroed entries are dropped from the
 * softmax). ExcelMask expects the mask row and divides it by tau, so tie
 * expansion can give weights that sum above one.
 */
EmbeddingVector model_embedding(const CategoryEmbeddings& xi, std::span<const double> scores,
                                const WeightingMode& mode);

/// Score rows for every model under the given mode (before any mixing).
Matrix weighting_scores(const ScoreTable& table, const WeightingMode& mode);

/// One embedding per table row. GroupMean is rejected here; use group_mean_embedding.
std::vector<EmbeddingVector> model_embeddings(const CategoryEmbeddings& xi,
                                              const ScoreTable& table,
                                              const WeightingMode& mode);

/// Arithmetic mean of a non-empty group of equal-dimension vectors.
EmbeddingVector group_mean_embedding(std::span<const EmbeddingVector> group);

/// Centroid of each category's offline queries, in key order.
CategoryEmbeddings category_centroids(
    const std::map<std::size_t, std::vector<EmbeddingVector>>& offline,
    const std::vector<std::string>& labels = {});

}  // namespace fgts::ccft
