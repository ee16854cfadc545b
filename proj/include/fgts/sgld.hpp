#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>

#include "fgts/core.hpp"
#include "fgts/likelihood.hpp"

namespace fgts {

struct SgldConfig {
    double step_size = 1e-3;
    std::size_t steps = 100;
    std::optional<std::size_t> minibatch;  // records per gradient estimate; full batch if unset
    bool warm_start = true;
    double decay = 1.0;  // step_size multiplier applied after every step

    void validate() const;
};

/// Thrown when the chain produces a non-finite gradient or ||theta|| > 1e6.
class SgldDivergence : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Gradient of the potential at theta. The Rng is available for minibatching.
using GradientFn = std::function<Vector(std::span<const double> theta, Rng& rng)>;
/// Called after every update with the 0-based step index and the new iterate.
using StepObserver = std::function<void(std::size_t step, std::span<const double> theta)>;

/**
 * Langevin iterations theta <- theta - (eps_i / 2) grad U(theta) + sqrt(eps_i) z,
 * z ~ N(0, I), eps_i = step_size * decay^i. Returns the last iterate.
 */
PosteriorSample sgld_sample(const PosteriorSample& init, const GradientFn& grad,
                            const SgldConfig& cfg, Rng& rng,
                            const StepObserver& observer = nullptr);

/**
 * Minibatch gradient estimate of the history potential for one chain: the
 * likelihood sum over b records drawn without replacement, rescaled by
 * |history| / b, plus the full prior gradient. Falls back to the exact
 * gradient when cfg.minibatch is unset or >= |history|.
 */
Vector stochastic_grad(std::span<const double> theta, const History& history,
                       std::span<const Matrix> features, int chain, const FgtsHyper& hyper,
                       std::optional<std::size_t> minibatch, Rng& rng);

/**
 * One posterior draw per chain j = 1, 2. The chains share the history but
 * target different potentials through the feel-good term, and each draws
 * noise from its own sub-stream of `rng`. With cfg.warm_start the chains
 * start from `previous`, otherwise from zero.
 */
std::pair<PosteriorSample, PosteriorSample> two_chain_sample(
    const History& history, std::span<const Matrix> features, const FgtsHyper& hyper,
    const SgldConfig& cfg, const std::pair<PosteriorSample, PosteriorSample>& previous, Rng& rng);

}  // namespace fgts
