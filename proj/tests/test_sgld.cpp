#include <doctest.h>

#include <cmath>

#include "fgts/sgld.hpp"

using namespace fgts;

namespace {

Vector quadratic_grad(std::span<const double> theta, Rng&) { return {theta.begin(), theta.end()}; }

struct SmallProblem {
    History history;
    std::vector<Matrix> features;
};

SmallProblem small_problem(Rng& rng, std::size_t n) {
    SmallProblem p;
    for (std::size_t i = 0; i < n; ++i) {
        Matrix f(3, 4);
        for (std::size_t k = 0; k < 3; ++k) {
            Vector row(4);
            for (auto& v : row) v = rng.normal();
            const auto u = normalized(row);
            std::copy(u.begin(), u.end(), f.row(k).begin());
        }
        p.history.append({EmbeddingVector{1.0}, rng.index(3), rng.index(3), rng.uniform() < 0.5 ? 1 : -1});
        p.features.push_back(std::move(f));
    }
    return p;
}

}  // namespace

TEST_CASE("zero gradient and vanishing step leaves the init nearly unchanged") {
    Rng rng(1);
    SgldConfig cfg;
    cfg.step_size = 1e-12;
    cfg.steps = 1;
    const PosteriorSample init{{0.5, -0.25, 2.0}};
    const auto out = sgld_sample(init, [](std::span<const double> t, Rng&) { return Vector(t.size(), 0.0); },
                                 cfg, rng);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(out.theta[i] - init.theta[i]) < 1e-5);
}

TEST_CASE("standard Gaussian target: tail moments pooled over chains") {
    // One 5e4-step chain at eps = 0.01 has an autocorrelation time near 400
    // steps, so its tail mean alone has a standard error near 0.09. Pooling 40
    // independent chains brings that to about 0.015.
    Rng rng(2);
    SgldConfig cfg;
    cfg.step_size = 0.01;
    cfg.steps = 50000;
    const std::size_t p = 4, burn = 5000, chains = 40;
    Vector sum(p, 0.0), sum2(p, 0.0);
    std::size_t n = 0;
    for (std::size_t c = 0; c < chains; ++c) {
        Rng chain_rng = rng.split();
        sgld_sample(PosteriorSample::zeros(p), quadratic_grad, cfg, chain_rng,
                    [&](std::size_t step, std::span<const double> th) {
                        if (step < burn) return;
                        for (std::size_t i = 0; i < p; ++i) {
                            sum[i] += th[i];
                            sum2[i] += th[i] * th[i];
                        }
                        ++n;
                    });
    }
    for (std::size_t i = 0; i < p; ++i) {
        const double mean = sum[i] / n;
        const double var = sum2[i] / n - mean * mean;
        CHECK(std::abs(mean) <= 0.05);
        CHECK(std::abs(var - 1.0) <= 0.1);
    }
}

TEST_CASE("identical seeds give identical samples") {
    SgldConfig cfg;
    cfg.steps = 20;
    Rng a(9), b(9);
    const auto x = sgld_sample(PosteriorSample::zeros(3), quadratic_grad, cfg, a);
    const auto y = sgld_sample(PosteriorSample::zeros(3), quadratic_grad, cfg, b);
    CHECK(x.theta == y.theta);
}

TEST_CASE("divergence is reported") {
    SgldConfig cfg;
    cfg.step_size = 1.0;
    cfg.steps = 200;
    Rng rng(3);
    // U = -||theta||^2 pushes the chain outward geometrically.
    auto repel = [](std::span<const double> t, Rng&) {
        Vector g(t.begin(), t.end());
        for (auto& v : g) v *= -10.0;
        return g;
    };
    CHECK_THROWS_AS(sgld_sample(PosteriorSample{{1.0}}, repel, cfg, rng), SgldDivergence);
    auto nan_grad = [](std::span<const double> t, Rng&) { return Vector(t.size(), NAN); };
    CHECK_THROWS_AS(sgld_sample(PosteriorSample{{1.0}}, nan_grad, cfg, rng), SgldDivergence);
}

TEST_CASE("minibatch gradient is unbiased") {
    Rng rng(4);
    auto prob = small_problem(rng, 12);
    const FgtsHyper h;
    const Vector theta{0.4, -0.2, 0.9, 0.1};
    const auto full = grad_potential(theta, prob.history, prob.features, 1, h);
    const std::size_t draws = 10000;
    Vector mean(4, 0.0), sq(4, 0.0);
    for (std::size_t d = 0; d < draws; ++d) {
        const auto g = stochastic_grad(theta, prob.history, prob.features, 1, h, 3, rng);
        for (std::size_t i = 0; i < 4; ++i) {
            mean[i] += g[i];
            sq[i] += g[i] * g[i];
        }
    }
    for (std::size_t i = 0; i < 4; ++i) {
        const double m = mean[i] / draws;
        const double se = std::sqrt((sq[i] / draws - m * m) / draws);
        CHECK(std::abs(m - full[i]) <= 4.0 * se + 1e-12);
    }
    // b >= n falls back to the exact gradient.
    CHECK(stochastic_grad(theta, prob.history, prob.features, 1, h, 12, rng) == full);
}

TEST_CASE("two chains: prior-only targets and shared potentials") {
    Rng rng(5);
    History empty;
    SgldConfig cfg;
    cfg.step_size = 0.05;
    cfg.steps = 40;
    cfg.warm_start = false;
    const FgtsHyper h{1.0, 0.1, 2.0};
    const std::size_t p = 2, reps = 3000;
    double s1 = 0, s2 = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto [a, b] = two_chain_sample(empty, {}, h, cfg,
                                             {PosteriorSample::zeros(p), PosteriorSample::zeros(p)}, rng);
        s1 += a.theta[0] * a.theta[0];
        s2 += b.theta[1] * b.theta[1];
    }
    // 40 steps of 0.05 from zero leave the chain partway to N(0, 4). The
    // update is theta' = a theta + sqrt(eps) z with a = 1 - eps / 8, so
    // Var_n = eps (1 - a^(2n)) / (1 - a^2).
    const double a = 1.0 - 0.05 / 8.0;
    const double want = 0.05 * (1.0 - std::pow(a, 80)) / (1.0 - a * a);
    CHECK(s1 / reps == doctest::Approx(want).epsilon(0.08));
    CHECK(s2 / reps == doctest::Approx(want).epsilon(0.08));
}

TEST_CASE("two chains reproduce under a fixed seed and coincide in law when mu = 0") {
    Rng data(6);
    auto prob = small_problem(data, 5);
    SgldConfig cfg;
    cfg.steps = 30;
    const FgtsHyper h{1.0, 0.0, 1.0};
    const std::pair prev{PosteriorSample::zeros(4), PosteriorSample::zeros(4)};
    Rng a(10), b(10);
    const auto x = two_chain_sample(prob.history, prob.features, h, cfg, prev, a);
    const auto y = two_chain_sample(prob.history, prob.features, h, cfg, prev, b);
    CHECK(x.first.theta == y.first.theta);
    CHECK(x.second.theta == y.second.theta);
    // Independent noise streams: chains differ even though the potentials agree.
    CHECK(x.first.theta != x.second.theta);
    const Vector t{0.3, 0.1, -0.2, 0.5};
    CHECK(grad_potential(t, prob.history, prob.features, 1, h) ==
          grad_potential(t, prob.history, prob.features, 2, h));
}

TEST_CASE("config validation") {
    SgldConfig cfg;
    cfg.decay = 0.0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.minibatch = 0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.step_size = -1.0;
    CHECK_THROWS(cfg.validate());
}
