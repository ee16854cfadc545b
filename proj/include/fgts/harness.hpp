#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fgts/bandit.hpp"
#include "fgts/ccft.hpp"
#include "fgts/core.hpp"
#include "fgts/data.hpp"
#include "fgts/feature.hpp"
#include "fgts/likelihood.hpp"
#include "fgts/sgld.hpp"

namespace fgts::harness {

/// Environment-variable prefix for config overrides: FGTS_<SECTION>_<KEY>.
inline constexpr const char* kEnvPrefix = "FGTS_";

/// Weighting name for the uninformative baseline: every arm gets the same
/// embedding (the mean of all offline queries).
inline constexpr const char* kSharedMean = "Shared_mean";

struct ExperimentConfig {
    // [experiment]
    std::string name = "experiment";
    std::size_t rounds = 600;
    std::size_t runs = 5;
    std::uint64_t seed = 42;
    std::string output_dir = "results";
    std::size_t threads = 0;  // 0 = hardware concurrency

    // [data]
    std::string source = "synthetic";  // synthetic | files
    std::string embeddings;
    std::string control_embeddings;
    std::string queries;
    std::string score_table;
    std::string pairwise;
    std::string embedding_tag = "synth";
    std::vector<std::string> models;  // subset of score-table rows, empty = all
    std::size_t offline_per_category = 5;
    std::string hidden_category;  // non-empty enables the unseen-benchmark sequence
    std::vector<std::string> excluded_categories;
    std::size_t shift_per_category = 60;
    std::size_t shift_hidden_count = 120;
    std::vector<double> ambiguity_fractions = {0.0};
    double condorcet_bonus = data::kCondorcetBonus;

    // [synthetic]
    data::SynthConfig synth;

    // [ccft]
    std::vector<std::string> weightings = {"Excel_perf_cost"};
    std::vector<std::string> groups = {"exp"};  // exp | ctrl | ideal
    double lambda = ccft::kDefaultLambda;
    std::size_t tau = ccft::kDefaultTau;
    bool exclude_unselected = false;

    // [feature]
    Combiner combiner = Combiner::Hadamard;
    bool append_metadata = false;

    // [fgts]
    std::vector<double> eta = {1.0};
    std::vector<double> mu = {0.1};
    double prior_std = 1.0;

    // [sgld]
    SgldConfig sgld;

    void validate() const;
};

/// Reads key = value INI text. Unknown sections or keys are errors.
ExperimentConfig parse_config(std::istream& in);
/// parse_config on a file, then apply environment overrides.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Set one field by its "section.key" name.
void set_config_value(ExperimentConfig& cfg, const std::string& section, const std::string& key,
                      const std::string& value);
/// Apply FGTS_<SECTION>_<KEY> overrides using `getenv`-like lookup.
void apply_env_overrides(ExperimentConfig& cfg,
                         const std::function<std::optional<std::string>(const std::string&)>& lookup);
/// All addressable "section.key" names.
std::vector<std::string> config_keys();

/// One point of the experiment grid.
struct VariantSpec {
    std::string embedding_tag;
    std::string weighting;  // display name, or kSharedMean
    std::string group = "exp";
    double ambiguity_fraction = 0.0;
    Combiner combiner = Combiner::Hadamard;
    std::optional<double> eta;  // set only when the grid sweeps eta/mu
    std::optional<double> mu;

    /// e.g. "e5b_E4_Excel_perf_cost_exp", "e5b_E4_Excel_mask_exp_8".
    std::string name() const;
};

std::vector<VariantSpec> expand_variants(const ExperimentConfig& cfg);

struct VariantResult {
    std::string name;
    std::vector<RegretTrace> runs;
    Vector mean_cumulative;
    std::optional<std::string> error;
};

struct ExperimentResult {
    std::vector<VariantResult> variants;
    bool ok() const;
};

/// Runs every variant `cfg.runs` times. Seeds depend only on the root seed
/// and the run index, so variants within a run share data splits and streams.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// round,variant,run,inst_regret,cum_regret
void write_run_traces(std::ostream& out, const ExperimentResult& result);
/// round,variant,mean_cum_regret
void write_summary(std::ostream& out, const ExperimentResult& result);
/// Writes runs.csv and summary.csv into `dir`.
void write_results(const std::filesystem::path& dir, const ExperimentResult& result);

/**
 * Mean instantaneous regret over the last window divided by the mean over the
 * first window, windows of floor(T * window_fraction) rounds. Below 1 means
 * the policy improved.
 */
double slope_ratio(const RegretTrace& trace, double window_fraction);
double slope_ratio(std::span<const double> instantaneous, double window_fraction);

/// Mean of the per-run instantaneous regret, as a trace.
RegretTrace mean_trace(std::span<const RegretTrace> runs);

// ---------------------------------------------------------------------------
// Score-table reproduction (Perf_cost, Excel_perf_cost, Excel_mask columns)
// ---------------------------------------------------------------------------

struct WeightingTable {
    Matrix perf_cost;
    Matrix excel_perf_cost;
    Matrix excel_mask;
};

/// decimals >= 0 rounds Perf_cost before the top-tau selection; < 0 keeps full precision.
WeightingTable weighting_table(const ScoreTable& table, double lambda, std::size_t tau,
                               int decimals);
void write_weighting_table(std::ostream& out, const ScoreTable& table, const WeightingTable& w,
                           int decimals);

}  // namespace fgts::harness
