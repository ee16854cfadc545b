#include "fgts/sgld.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fgts {

namespace {
constexpr double kDivergenceNorm = 1e6;
}

void SgldConfig::validate() const {
    if (!(step_size > 0.0)) throw std::invalid_argument("SgldConfig: step_size must be > 0");
    if (steps < 1) throw std::invalid_argument("SgldConfig: steps must be >= 1");
    if (!(decay > 0.0 && decay <= 1.0))
        throw std::invalid_argument("SgldConfig: decay must lie in (0, 1]");
    if (minibatch && *minibatch == 0)
        throw std::invalid_argument("SgldConfig: minibatch must be >= 1 when set");
}

PosteriorSample sgld_sample(const PosteriorSample& init, const GradientFn& grad,
                            const SgldConfig& cfg, Rng& rng, const StepObserver& observer) {
    cfg.validate();
    Vector theta = init.theta;
    double eps = cfg.step_size;
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const Vector g = grad(theta, rng);
        if (g.size() != theta.size())
            throw std::invalid_argument("sgld_sample: gradient dimension mismatch");
        const double noise = std::sqrt(eps);
        double norm2 = 0.0;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            if (!std::isfinite(g[i])) {
                std::ostringstream msg;
                msg << "sgld_sample: non-finite gradient at step " << step;
                throw SgldDivergence(msg.str());
            }
            theta[i] += -0.5 * eps * g[i] + noise * rng.normal();
            norm2 += theta[i] * theta[i];
        }
        if (std::sqrt(norm2) > kDivergenceNorm) {
            std::ostringstream msg;
            msg << "sgld_sample: ||theta|| exceeded " << kDivergenceNorm << " at step " << step
                << " with step size " << eps << "; use a smaller step size";
            throw SgldDivergence(msg.str());
        }
        if (observer) observer(step, theta);
        eps *= cfg.decay;
    }
    return {std::move(theta)};
}

Vector stochastic_grad(std::span<const double> theta, const History& history,
                       std::span<const Matrix> features, int chain, const FgtsHyper& hyper,
                       std::optional<std::size_t> minibatch, Rng& rng) {
    const std::size_t n = history.round();
    if (!minibatch || *minibatch >= n) return grad_potential(theta, history, features, chain, hyper);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> picked;
    picked.reserve(*minibatch);
    std::sample(all.begin(), all.end(), std::back_inserter(picked),
                static_cast<std::ptrdiff_t>(*minibatch), rng.engine());
    const double scale = static_cast<double>(n) / static_cast<double>(*minibatch);
    return grad_potential_subset(theta, history, features, picked, scale, chain, hyper);
}

std::pair<PosteriorSample, PosteriorSample> two_chain_sample(
    const History& history, std::span<const Matrix> features, const FgtsHyper& hyper,
    const SgldConfig& cfg, const std::pair<PosteriorSample, PosteriorSample>& previous,
    Rng& rng) {
    hyper.validate();
    Rng rng1 = rng.split();
    Rng rng2 = rng.split();

    auto run_chain = [&](int chain, const PosteriorSample& prev, Rng& chain_rng) {
        const PosteriorSample init =
            cfg.warm_start ? prev : PosteriorSample::zeros(prev.dim());
        GradientFn grad = [&](std::span<const double> theta, Rng& r) {
            return stochastic_grad(theta, history, features, chain, hyper, cfg.minibatch, r);
        };
        return sgld_sample(init, grad, cfg, chain_rng);
    };
    PosteriorSample first = run_chain(1, previous.first, rng1);
    PosteriorSample second = run_chain(2, previous.second, rng2);
    return {std::move(first), std::move(second)};
}

}  // namespace fgts
