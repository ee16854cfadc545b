#pragma once

#include <span>
#include <utility>
#include <vector>

#include "fgts/core.hpp"
#include "fgts/env.hpp"
#include "fgts/feature.hpp"
#include "fgts/likelihood.hpp"
#include "fgts/sgld.hpp"

namespace fgts {

/// The two arms chosen for one query.
struct Selection {
    std::size_t arm1 = 0;
    std::size_t arm2 = 0;
};

/**
 * Anything that picks two arms per query and learns from a binary preference.
 * Implementations see the query embedding and y only; utilities stay on the
 * environment side.
 */
class DuelingPolicy {
  public:
    virtual ~DuelingPolicy() = default;
    virtual std::size_t arms() const = 0;
    virtual Selection select(const EmbeddingVector& x, Rng& rng) = 0;
    virtual void observe(const EmbeddingVector& x, std::size_t arm1, std::size_t arm2, int y) = 0;
};

/// Lowest index attaining max_k <theta, features.row(k)>.
std::size_t argmax_arm(std::span<const double> theta, const Matrix& features);

struct ArmChoice {
    std::size_t arm1 = 0;
    std::size_t arm2 = 0;
    PosteriorSample theta1;
    PosteriorSample theta2;
};

/**
 * Feel-Good Thompson Sampling for contextual dueling bandits.
 *
 * Each round draws theta^1, theta^2 by SGLD from the two chain posteriors,
 * routes the query to argmax_a <theta^j, phi(x, a)> for each chain, then
 * records (x, a^1, a^2, y). The per-round K x p feature matrix is cached
 * alongside the history so the likelihood never recomputes phi.
 */
class FgtsRouter final : public DuelingPolicy {
  public:
    FgtsRouter(std::vector<ModelId> arms, std::vector<EmbeddingVector> model_embeddings,
               FeatureConfig feature, FgtsHyper hyper, SgldConfig sgld);

    std::size_t arms() const override { return arms_.size(); }
    Selection select(const EmbeddingVector& x, Rng& rng) override;
    void observe(const EmbeddingVector& x, std::size_t arm1, std::size_t arm2, int y) override;

    /// select() plus the sampled parameters.
    ArmChoice select_arms(const EmbeddingVector& x, Rng& rng);

    Matrix features(const EmbeddingVector& x) const;
    std::size_t feature_dim() const { return feature_dim_; }

    const History& history() const { return history_; }
    const std::vector<Matrix>& round_features() const { return round_features_; }
    const std::pair<PosteriorSample, PosteriorSample>& last_theta() const { return last_theta_; }
    const std::vector<ModelId>& registry() const { return arms_; }
    const FgtsHyper& hyper() const { return hyper_; }
    const SgldConfig& sgld() const { return sgld_; }

  private:
    std::vector<ModelId> arms_;
    std::vector<EmbeddingVector> model_embeddings_;
    FeatureConfig feature_;
    FgtsHyper hyper_;
    SgldConfig sgld_;
    std::size_t feature_dim_ = 0;

    History history_;
    std::vector<Matrix> round_features_;
    std::pair<PosteriorSample, PosteriorSample> last_theta_;
};

/// Picks both arms independently and uniformly at random; ignores feedback.
class UniformRandomPolicy final : public DuelingPolicy {
  public:
    explicit UniformRandomPolicy(std::size_t arms);
    std::size_t arms() const override { return arms_; }
    Selection select(const EmbeddingVector& x, Rng& rng) override;
    void observe(const EmbeddingVector&, std::size_t, std::size_t, int) override {}

  private:
    std::size_t arms_;
};

/// Always picks the same pair; mostly useful for tests.
class FixedPolicy final : public DuelingPolicy {
  public:
    FixedPolicy(std::size_t arms, Selection choice);
    std::size_t arms() const override { return arms_; }
    Selection select(const EmbeddingVector&, Rng&) override { return choice_; }
    void observe(const EmbeddingVector&, std::size_t, std::size_t, int) override {}

  private:
    std::size_t arms_;
    Selection choice_;
};

/**
 * Play the stream once: select, draw y from BTL on the true utilities,
 * observe, and record max_k r*(x, k) - (r*(x, a1) + r*(x, a2)) / 2.
 */
RegretTrace run_episode(DuelingPolicy& policy, std::span<const QueryItem> stream,
                        const UtilityOracle& env, Rng& rng);

}  // namespace fgts
