#include "fgts/bandit.hpp"

#include <stdexcept>

namespace fgts {

std::size_t argmax_arm(std::span<const double> theta, const Matrix& features) {
    if (features.rows() == 0) throw std::invalid_argument("argmax_arm: no arms");
    std::size_t best = 0;
    double best_score = dot(theta, features.row(0));
    for (std::size_t k = 1; k < features.rows(); ++k) {
        const double s = dot(theta, features.row(k));
        if (s > best_score) {
            best_score = s;
            best = k;
        }
    }
    return best;
}

FgtsRouter::FgtsRouter(std::vector<ModelId> arms, std::vector<EmbeddingVector> model_embeddings,
                       FeatureConfig feature, FgtsHyper hyper, SgldConfig sgld)
    : arms_(std::move(arms)),
      model_embeddings_(std::move(model_embeddings)),
      feature_(feature),
      hyper_(hyper),
      sgld_(sgld) {
    if (arms_.size() < 2) throw std::invalid_argument("FgtsRouter: need at least two arms");
    if (model_embeddings_.size() != arms_.size())
        throw std::invalid_argument("FgtsRouter: one model embedding per arm required");
    for (std::size_t k = 0; k < arms_.size(); ++k) {
        if (arms_[k].index != k)
            throw std::invalid_argument("FgtsRouter: arm registry indices must be 0..K-1 in order");
        if (model_embeddings_[k].dim() != model_embeddings_.front().dim())
            throw std::invalid_argument("FgtsRouter: model embeddings differ in dimension");
    }
    hyper_.validate();
    sgld_.validate();
    feature_dim_ = model_embeddings_.front().dim();
    last_theta_ = {PosteriorSample::zeros(feature_dim_), PosteriorSample::zeros(feature_dim_)};
}

Matrix FgtsRouter::features(const EmbeddingVector& x) const {
    return feature_matrix(x, model_embeddings_, feature_);
}

ArmChoice FgtsRouter::select_arms(const EmbeddingVector& x, Rng& rng) {
    const Matrix f = features(x);
    last_theta_ = two_chain_sample(history_, round_features_, hyper_, sgld_, last_theta_, rng);
    ArmChoice choice;
    choice.arm1 = argmax_arm(last_theta_.first.theta, f);
    choice.arm2 = argmax_arm(last_theta_.second.theta, f);
    choice.theta1 = last_theta_.first;
    choice.theta2 = last_theta_.second;
    return choice;
}

Selection FgtsRouter::select(const EmbeddingVector& x, Rng& rng) {
    const ArmChoice c = select_arms(x, rng);
    return {c.arm1, c.arm2};
}

void FgtsRouter::observe(const EmbeddingVector& x, std::size_t arm1, std::size_t arm2, int y) {
    if (y != 1 && y != -1) throw std::invalid_argument("observe: y must be +1 or -1");
    if (arm1 >= arms_.size() || arm2 >= arms_.size())
        throw std::out_of_range("observe: arm index out of range");
    round_features_.push_back(features(x));
    history_.append({x, arm1, arm2, y});
}

UniformRandomPolicy::UniformRandomPolicy(std::size_t arms) : arms_(arms) {
    if (arms_ == 0) throw std::invalid_argument("UniformRandomPolicy: no arms");
}

Selection UniformRandomPolicy::select(const EmbeddingVector&, Rng& rng) {
    const std::size_t a1 = rng.index(arms_);
    const std::size_t a2 = rng.index(arms_);
    return {a1, a2};
}

FixedPolicy::FixedPolicy(std::size_t arms, Selection choice) : arms_(arms), choice_(choice) {
    if (choice.arm1 >= arms || choice.arm2 >= arms)
        throw std::invalid_argument("FixedPolicy: arm out of range");
}

RegretTrace run_episode(DuelingPolicy& policy, std::span<const QueryItem> stream,
                        const UtilityOracle& env, Rng& rng) {
    if (stream.empty()) throw std::invalid_argument("run_episode: empty query stream");
    if (env.arms() != policy.arms())
        throw std::invalid_argument("run_episode: environment and policy disagree on arm count");
    // Feedback draws get their own stream so policy randomness and
    // environment randomness do not interleave.
    Rng feedback_rng = rng.split();
    RegretTrace trace;
    trace.instantaneous.reserve(stream.size());
    trace.cumulative.reserve(stream.size());
    for (const QueryItem& q : stream) {
        const Selection s = policy.select(q.embedding, rng);
        const double r1 = env.utility(q, s.arm1);
        const double r2 = env.utility(q, s.arm2);
        const int y = btl_feedback(r1, r2, feedback_rng);
        policy.observe(q.embedding, s.arm1, s.arm2, y);
        trace.push(round_regret(env, q, s.arm1, s.arm2));
    }
    return trace;
}

}  // namespace fgts
