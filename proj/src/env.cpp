#include "fgts/env.hpp"

#include <algorithm>
#include <cmath>

#include "fgts/likelihood.hpp"

namespace fgts {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

UtilityOracle::UtilityOracle(Kind kind, std::size_t arms) : kind_(std::move(kind)), arms_(arms) {
    if (arms_ == 0) throw std::invalid_argument("UtilityOracle: need at least one arm");
    std::visit(overloaded{
                   [&](const LinearUtility& u) {
                       if (u.model_embeddings.size() != arms_)
                           throw std::invalid_argument("LinearUtility: one embedding per arm");
                   },
                   [&](const TableUtility& u) {
                       if (u.matrix.cols() != arms_)
                           throw std::invalid_argument("TableUtility: one column per arm");
                   },
                   [&](const PerQueryUtility& u) {
                       for (const auto& [id, row] : u.scores)
                           if (row.size() != arms_)
                               throw std::invalid_argument("PerQueryUtility: query " + id +
                                                           " does not score every arm");
                   },
               },
               kind_);
}

double UtilityOracle::utility(const QueryItem& q, std::size_t arm) const {
    if (arm >= arms_) throw CoverageError("utility: arm " + std::to_string(arm) + " out of range");
    return std::visit(
        overloaded{
            [&](const LinearUtility& u) {
                const Vector f = phi(q.embedding, u.model_embeddings[arm], u.feature);
                if (f.size() != u.theta_star.dim())
                    throw std::invalid_argument("LinearUtility: theta_star dimension mismatch");
                return dot(u.theta_star.theta, f);
            },
            [&](const TableUtility& u) {
                if (!q.category)
                    throw CoverageError("utility: query " + q.id + " has no category");
                if (*q.category >= u.matrix.rows())
                    throw CoverageError("utility: category " + std::to_string(*q.category) +
                                        " not in table");
                return u.matrix(*q.category, arm);
            },
            [&](const PerQueryUtility& u) {
                auto it = u.scores.find(q.id);
                if (it == u.scores.end()) throw CoverageError("utility: no scores for query " + q.id);
                return it->second[arm];
            },
        },
        kind_);
}

Vector UtilityOracle::utilities(const QueryItem& q) const {
    Vector out(arms_);
    for (std::size_t k = 0; k < arms_; ++k) out[k] = utility(q, k);
    return out;
}

double utility(const UtilityOracle& oracle, const QueryItem& q, std::size_t arm) {
    return oracle.utility(q, arm);
}

double btl_probability(double delta) { return std::exp(-sigma(delta)); }

int btl_feedback(double r1, double r2, Rng& rng) {
    if (!std::isfinite(r1) || !std::isfinite(r2))
        throw std::invalid_argument("btl_feedback: non-finite utility");
    return rng.uniform() < btl_probability(r1 - r2) ? 1 : -1;
}

double round_regret(const UtilityOracle& oracle, const QueryItem& q, std::size_t arm1,
                    std::size_t arm2) {
    const Vector u = oracle.utilities(q);
    const double best = *std::max_element(u.begin(), u.end());
    return std::max(0.0, best - 0.5 * (u.at(arm1) + u.at(arm2)));
}

double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = l2_norm(a), nb = l2_norm(b);
    if (!(na > 0.0) || !(nb > 0.0)) throw DegenerateVectorError("cosine: zero vector");
    return dot(a, b) / (na * nb);
}

UtilityOracle similarity_utility(const ccft::CategoryEmbeddings& centroids,
                                 std::span<const std::size_t> expert_of) {
    centroids.validate();
    const std::size_t m_count = centroids.categories();
    for (std::size_t m = 0; m < m_count; ++m)
        if (!(l2_norm(centroids.xi[m].values()) > 0.0))
            throw DegenerateVectorError("similarity_utility: zero centroid for category " +
                                        centroids.category_ids[m].label);
    Matrix table(m_count, expert_of.size());
    for (std::size_t k = 0; k < expert_of.size(); ++k) {
        const std::size_t e = expert_of[k];
        if (e >= m_count)
            throw std::invalid_argument("similarity_utility: expert category out of range");
        // Self-similarity is set exactly so rounding never lets another arm tie the expert.
        for (std::size_t m = 0; m < m_count; ++m)
            table(m, k) = m == e ? 1.0 : cosine(centroids.xi[m].values(), centroids.xi[e].values());
    }
    return UtilityOracle(TableUtility{std::move(table)}, expert_of.size());
}

}  // namespace fgts
