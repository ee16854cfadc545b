#pragma once

#include <span>

#include "fgts/core.hpp"

namespace fgts {

struct FgtsHyper {
    double eta = 1.0;        // preference-term weight
    double mu = 0.1;         // feel-good weight
    double prior_std = 1.0;  // isotropic Gaussian prior scale

    void validate() const;
};

/// sigma(z) = log(1 + exp(-z)), evaluated without overflow.
double sigma(double z);
/// d sigma / dz = -1 / (1 + exp(z)).
double sigma_prime(double z);

/**
 * Per-record loss for chain j in {1, 2}:
 *
 *   eta * sigma(y <theta, phi(a1) - phi(a2)>)
 *     - mu * max_k <theta, phi(k) - phi(a_{3-j})>
 *
 * `features` holds phi(x, a_k) in row k for the record's query.
 */
double loss(std::span<const double> theta, const PreferenceRecord& rec, const Matrix& features,
            int chain, const FgtsHyper& hyper);

/// Sum of per-record losses plus ||theta||^2 / (2 prior_std^2).
double potential(std::span<const double> theta, const History& history,
                 std::span<const Matrix> features, int chain, const FgtsHyper& hyper);

/// Analytic gradient of potential(). The max term uses the lowest-index argmax.
Vector grad_potential(std::span<const double> theta, const History& history,
                      std::span<const Matrix> features, int chain, const FgtsHyper& hyper);

/**
 * Stochastic gradient over a subset of records: likelihood terms for
 * `indices` are summed and multiplied by `scale` (typically |history| / b),
 * the prior term is added unscaled.
 */
Vector grad_potential_subset(std::span<const double> theta, const History& history,
                             std::span<const Matrix> features,
                             std::span<const std::size_t> indices, double scale, int chain,
                             const FgtsHyper& hyper);

}  // namespace fgts
