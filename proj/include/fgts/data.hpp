#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fgts/ccft.hpp"
#include "fgts/core.hpp"
#include "fgts/env.hpp"

namespace fgts::data {

/// Malformed input file; the message names the file and line.
class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Embeddings: JSON lines {"id": "...", "vec": [...]}
// ---------------------------------------------------------------------------

using EmbeddingMap = std::map<std::string, EmbeddingVector>;

EmbeddingMap load_embeddings(const std::filesystem::path& path);
/// Doubles are written with round-trip precision.
void write_embeddings(const std::filesystem::path& path, const EmbeddingMap& embeddings);
void write_embeddings(const std::filesystem::path& path,
                      std::span<const std::pair<std::string, EmbeddingVector>> embeddings);

// ---------------------------------------------------------------------------
// Score table CSV: model,<cat>_perf,<cat>_cost,...
// ---------------------------------------------------------------------------

/// A table without *_cost columns loads with a zero cost matrix, has_cost =
/// false, and a warning on stderr.
ScoreTable load_score_table(const std::filesystem::path& path);
void write_score_table(const std::filesystem::path& path, const ScoreTable& table);

// ---------------------------------------------------------------------------
// Query stream: JSON lines {"id", "category"?, "ambiguity"?}
// ---------------------------------------------------------------------------

struct QueryStream {
    std::vector<QueryItem> items;
    std::vector<std::string> category_labels;  // index -> label, in order of first appearance
};

/**
 * Loads query metadata and joins embeddings by id. Category labels found in
 * `known_categories` keep that index; unseen labels are appended.
 */
QueryStream load_query_stream(const std::filesystem::path& path, const EmbeddingMap& embeddings,
                              std::vector<std::string> known_categories = {});
void write_query_stream(const std::filesystem::path& path, std::span<const QueryItem> items,
                        std::span<const std::string> category_labels);

// ---------------------------------------------------------------------------
// Pairwise comparisons: query_id,model_a,model_b,outcome  (outcome a|b|tie)
// ---------------------------------------------------------------------------

enum class Outcome { AWins, BWins, Tie };

struct PairwiseComparison {
    std::string query_id;
    std::size_t model_a = 0;
    std::size_t model_b = 0;
    Outcome outcome = Outcome::Tie;
};

struct PairwiseData {
    std::vector<PairwiseComparison> comparisons;
    std::vector<std::string> model_labels;
};

/// Model labels missing from `known_models` are registered in order of appearance.
PairwiseData load_pairwise(const std::filesystem::path& path,
                           std::vector<std::string> known_models = {});

inline constexpr double kCondorcetBonus = 0.5;

/**
 * Win = 1, tie = 0.5, loss = 0 summed per model. A Condorcet winner (strict
 * head-to-head win against every other model that appears for the query)
 * is lifted to (max raw score + bonus).
 */
std::map<std::string, Vector> pairwise_to_scores(std::span<const PairwiseComparison> comparisons,
                                                 std::size_t models,
                                                 double bonus = kCondorcetBonus);

// ---------------------------------------------------------------------------
// Stream shaping
// ---------------------------------------------------------------------------

/// Drop the ceil(fraction * N) most ambiguous queries; ties broken by id.
std::vector<QueryItem> filter_ambiguous(std::span<const QueryItem> queries, double top_fraction);

using QueriesByCategory = std::map<std::size_t, std::vector<QueryItem>>;

QueriesByCategory group_by_category(std::span<const QueryItem> queries);

struct SplitPlan {
    std::size_t offline_per_category = 5;
};

struct OfflineOnlineSplit {
    QueriesByCategory offline;
    std::vector<QueryItem> online;
};

/// n queries per category offline (uniform without replacement), the rest shuffled online.
OfflineOnlineSplit split_offline_online(const QueriesByCategory& queries, const SplitPlan& plan,
                                        Rng& rng);

struct ShiftPlan {
    std::size_t hidden_category = 0;
    std::vector<std::size_t> excluded_categories;  // dropped from both sections
    std::size_t per_category = 60;                 // per visible category, per section
    std::size_t hidden_count = 120;                // hidden-category queries in section 2
};

struct ShiftSequence {
    std::vector<QueryItem> items;
    std::size_t section1_size = 0;
};

/**
 * Visible categories are all keys other than the hidden and excluded ones.
 * Section 1: per_category queries from every visible category, shuffled.
 * Section 2: hidden_count queries from the hidden category plus a fresh
 * per_category from each visible category, shuffled. No id repeats.
 */
ShiftSequence build_shift_sequence(const QueriesByCategory& queries, const ShiftPlan& plan,
                                   Rng& rng);

// ---------------------------------------------------------------------------
// Synthetic clustered data
// ---------------------------------------------------------------------------

struct SynthConfig {
    std::size_t categories = 5;
    std::size_t per_category = 125;
    std::size_t dim = 32;
    double spread = 0.1;
    double max_center_cosine = 0.3;  // separation bound between cluster centers
};

struct SynthDataset {
    std::vector<QueryItem> queries;  // grouped by category, ids "c<m>_q<i>"
    std::vector<EmbeddingVector> centers;
    std::vector<std::string> category_labels;
};

/// Unit centers by rejection sampling, then queries = normalize(center + spread * N(0, I)).
SynthDataset synth_clustered(const SynthConfig& cfg, Rng& rng);

}  // namespace fgts::data
