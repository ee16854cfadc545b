#pragma once

#include <span>
#include <string>
#include <vector>

#include "fgts/core.hpp"

namespace fgts {

enum class Combiner { Hadamard, Add };

std::string to_string(Combiner c);
Combiner parse_combiner(const std::string& name);

struct FeatureConfig {
    Combiner combiner = Combiner::Hadamard;
    bool append_metadata = false;
    std::size_t metadata_dim = 0;

    /// Output dimension p for query dimension d.
    std::size_t feature_dim(std::size_t query_dim) const {
        return query_dim + (append_metadata ? metadata_dim : 0);
    }
};

/// Raised when the combined vector is exactly zero and cannot be normalized.
class DegenerateFeatureError : public DegenerateVectorError {
  public:
    using DegenerateVectorError::DegenerateVectorError;
};

/// Concatenate (a, metadata).
EmbeddingVector augment_model_embedding(const EmbeddingVector& a, std::span<const double> metadata);

/// Perf values for every category followed by cost values, in column order
/// (14 entries for a 7-benchmark table).
Vector score_metadata(const ScoreTable& table, std::size_t model);

/**
 * Joint feature phi(x, a) = normalize(x (*) a) for Hadamard, normalize(x + a)
 * for Add. When a carries cfg.metadata_dim appended entries the query is
 * padded at those positions with the combiner's identity (1 for Hadamard,
 * 0 for Add), so metadata passes through unchanged before normalization.
 */
Vector phi(const EmbeddingVector& x, const EmbeddingVector& a_aug, const FeatureConfig& cfg);

/// K x p matrix whose row k is phi(x, models[k]).
Matrix feature_matrix(const EmbeddingVector& x, std::span<const EmbeddingVector> models,
                      const FeatureConfig& cfg);

}  // namespace fgts
