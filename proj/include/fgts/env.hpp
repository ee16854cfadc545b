#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fgts/ccft.hpp"
#include "fgts/core.hpp"
#include "fgts/feature.hpp"

namespace fgts {

struct QueryItem {
    std::string id;
    EmbeddingVector embedding;
    std::optional<std::size_t> category;
    std::optional<double> ambiguity;
};

/// Thrown when an oracle cannot score a (query, arm) pair.
class CoverageError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

/// r*(x, a) = <theta_star, phi(x, a)>.
struct LinearUtility {
    PosteriorSample theta_star;
    std::vector<EmbeddingVector> model_embeddings;
    FeatureConfig feature;
};

/// r*(x, a) = matrix(category(x), a); rows are categories, columns arms.
struct TableUtility {
    Matrix matrix;
};

/// r*(x, a) = scores[id(x)][a].
struct PerQueryUtility {
    std::map<std::string, Vector> scores;
};

/// The environment's private utility function. The learner never sees it.
class UtilityOracle {
  public:
    using Kind = std::variant<LinearUtility, TableUtility, PerQueryUtility>;

    explicit UtilityOracle(Kind kind, std::size_t arms);

    std::size_t arms() const { return arms_; }
    const Kind& kind() const { return kind_; }

    double utility(const QueryItem& q, std::size_t arm) const;
    Vector utilities(const QueryItem& q) const;

  private:
    Kind kind_;
    std::size_t arms_;
};

double utility(const UtilityOracle& oracle, const QueryItem& q, std::size_t arm);

/// P(y = +1) = exp(-sigma(delta)) = 1 / (1 + exp(-delta)).
double btl_probability(double delta);
/// Draw y in {+1, -1} with y = +1 meaning arm 1 preferred.
int btl_feedback(double r1, double r2, Rng& rng);

/// max_k r*(q, k) - (r*(q, arm1) + r*(q, arm2)) / 2.
double round_regret(const UtilityOracle& oracle, const QueryItem& q, std::size_t arm1,
                    std::size_t arm2);

/// Cosine similarity; throws DegenerateVectorError on a zero vector.
double cosine(std::span<const double> a, std::span<const double> b);

/**
 * Table oracle where arm k is an expert in category expert_of[k]:
 * entry (m, k) = cosine(centroid_m, centroid_{expert_of[k]}).
 */
UtilityOracle similarity_utility(const ccft::CategoryEmbeddings& centroids,
                                 std::span<const std::size_t> expert_of);

}  // namespace fgts
