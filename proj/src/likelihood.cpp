#include "fgts/likelihood.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fgts {

void FgtsHyper::validate() const {
    if (!(eta > 0.0)) throw std::invalid_argument("FgtsHyper: eta must be > 0");
    if (!(mu >= 0.0)) throw std::invalid_argument("FgtsHyper: mu must be >= 0");
    if (!(prior_std > 0.0)) throw std::invalid_argument("FgtsHyper: prior_std must be > 0");
}

double sigma(double z) {
    if (z > 0.0) return std::log1p(std::exp(-z));
    return -z + std::log1p(std::exp(z));
}

double sigma_prime(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return -e / (1.0 + e);
    }
    return -1.0 / (1.0 + std::exp(z));
}

namespace {

void check_record(const PreferenceRecord& rec, const Matrix& features, std::size_t p, int chain) {
    if (chain != 1 && chain != 2)
        throw std::invalid_argument("likelihood: chain index must be 1 or 2, got " +
                                    std::to_string(chain));
    if (rec.arm1 >= features.rows() || rec.arm2 >= features.rows())
        throw std::out_of_range("likelihood: record arm outside feature rows");
    if (features.cols() != p)
        throw std::invalid_argument("likelihood: theta dimension " + std::to_string(p) +
                                    " != feature dimension " + std::to_string(features.cols()));
}

struct RecordTerms {
    double z;            // y <theta, phi(a1) - phi(a2)>
    double best;         // max_k <theta, phi(k)>
    std::size_t argmax;  // lowest index attaining best
    double rival;        // <theta, phi(a_{3-j})>
};

RecordTerms evaluate(std::span<const double> theta, const PreferenceRecord& rec,
                     const Matrix& features, int chain) {
    RecordTerms t{};
    const double s1 = dot(theta, features.row(rec.arm1));
    const double s2 = dot(theta, features.row(rec.arm2));
    t.z = static_cast<double>(rec.y) * (s1 - s2);
    t.rival = chain == 1 ? s2 : s1;
    t.argmax = 0;
    t.best = dot(theta, features.row(0));
    for (std::size_t k = 1; k < features.rows(); ++k) {
        const double s = dot(theta, features.row(k));
        if (s > t.best) {
            t.best = s;
            t.argmax = k;
        }
    }
    return t;
}

void accumulate_grad(std::span<const double> theta, const PreferenceRecord& rec,
                     const Matrix& features, int chain, const FgtsHyper& hyper, double scale,
                     Vector& grad) {
    check_record(rec, features, theta.size(), chain);
    const RecordTerms t = evaluate(theta, rec, features, chain);
    const double w = scale * hyper.eta * sigma_prime(t.z) * static_cast<double>(rec.y);
    const auto f1 = features.row(rec.arm1);
    const auto f2 = features.row(rec.arm2);
    const auto fbest = features.row(t.argmax);
    const auto frival = features.row(chain == 1 ? rec.arm2 : rec.arm1);
    const double fg = scale * hyper.mu;
    for (std::size_t i = 0; i < grad.size(); ++i)
        grad[i] += w * (f1[i] - f2[i]) - fg * (fbest[i] - frival[i]);
}

}  // namespace

double loss(std::span<const double> theta, const PreferenceRecord& rec, const Matrix& features,
            int chain, const FgtsHyper& hyper) {
    check_record(rec, features, theta.size(), chain);
    const RecordTerms t = evaluate(theta, rec, features, chain);
    return hyper.eta * sigma(t.z) - hyper.mu * (t.best - t.rival);
}

double potential(std::span<const double> theta, const History& history,
                 std::span<const Matrix> features, int chain, const FgtsHyper& hyper) {
    if (features.size() != history.round())
        throw std::invalid_argument("potential: one feature matrix per record required");
    double u = 0.0;
    for (std::size_t i = 0; i < history.round(); ++i)
        u += loss(theta, history[i], features[i], chain, hyper);
    const double var = hyper.prior_std * hyper.prior_std;
    return u + dot(theta, theta) / (2.0 * var);
}

Vector grad_potential(std::span<const double> theta, const History& history,
                      std::span<const Matrix> features, int chain, const FgtsHyper& hyper) {
    if (features.size() != history.round())
        throw std::invalid_argument("grad_potential: one feature matrix per record required");
    const double var = hyper.prior_std * hyper.prior_std;
    Vector grad(theta.size());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = theta[i] / var;
    for (std::size_t i = 0; i < history.round(); ++i)
        accumulate_grad(theta, history[i], features[i], chain, hyper, 1.0, grad);
    return grad;
}

Vector grad_potential_subset(std::span<const double> theta, const History& history,
                             std::span<const Matrix> features,
                             std::span<const std::size_t> indices, double scale, int chain,
                             const FgtsHyper& hyper) {
    if (features.size() != history.round())
        throw std::invalid_argument("grad_potential: one feature matrix per record required");
    const double var = hyper.prior_std * hyper.prior_std;
    Vector grad(theta.size());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = theta[i] / var;
    for (std::size_t idx : indices) {
        if (idx >= history.round()) throw std::out_of_range("grad_potential_subset: bad index");
        accumulate_grad(theta, history[idx], features[idx], chain, hyper, scale, grad);
    }
    return grad;
}

}  // namespace fgts
