#include "fgts/feature.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace fgts {

std::string to_string(Combiner c) { return c == Combiner::Hadamard ? "hadamard" : "add"; }

Combiner parse_combiner(const std::string& name) {
    std::string key;
    for (char ch : name) key.push_back(static_cast<char>(std::tolower(ch)));
    if (key == "hadamard" || key == "product") return Combiner::Hadamard;
    if (key == "add" || key == "sum") return Combiner::Add;
    throw std::invalid_argument("unknown combiner: " + name);
}

EmbeddingVector augment_model_embedding(const EmbeddingVector& a, std::span<const double> metadata) {
    Vector out(a.values().begin(), a.values().end());
    out.insert(out.end(), metadata.begin(), metadata.end());
    return EmbeddingVector(std::move(out));
}

Vector score_metadata(const ScoreTable& table, std::size_t model) {
    if (model >= table.models()) throw std::out_of_range("score_metadata: model out of range");
    Vector out;
    out.reserve(2 * table.categories());
    for (std::size_t m = 0; m < table.categories(); ++m) out.push_back(table.perf(model, m));
    for (std::size_t m = 0; m < table.categories(); ++m) out.push_back(table.cost(model, m));
    return out;
}

Vector phi(const EmbeddingVector& x, const EmbeddingVector& a_aug, const FeatureConfig& cfg) {
    const std::size_t meta = cfg.append_metadata ? cfg.metadata_dim : 0;
    if (a_aug.dim() != x.dim() + meta)
        throw std::invalid_argument("phi: model embedding has dimension " +
                                    std::to_string(a_aug.dim()) + ", expected " +
                                    std::to_string(x.dim() + meta));
    const auto xs = x.values();
    const auto as = a_aug.values();
    // Padding is the combiner's identity element.
    const double pad = cfg.combiner == Combiner::Hadamard ? 1.0 : 0.0;
    Vector out(a_aug.dim());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double xi = i < xs.size() ? xs[i] : pad;
        out[i] = cfg.combiner == Combiner::Hadamard ? xi * as[i] : xi + as[i];
    }
    double norm = 0.0;
    for (double v : out) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0))
        throw DegenerateFeatureError("phi: combined query/model vector is zero");
    for (double& v : out) v /= norm;
    return out;
}

Matrix feature_matrix(const EmbeddingVector& x, std::span<const EmbeddingVector> models,
                      const FeatureConfig& cfg) {
    if (models.empty()) throw std::invalid_argument("feature_matrix: no models");
    Matrix out(models.size(), cfg.feature_dim(x.dim()));
    for (std::size_t k = 0; k < models.size(); ++k) {
        const Vector row = phi(x, models[k], cfg);
        std::copy(row.begin(), row.end(), out.row(k).begin());
    }
    return out;
}

}  // namespace fgts
