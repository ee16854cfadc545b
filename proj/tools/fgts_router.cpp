// Command-line front end: run experiments, reproduce score tables, generate
// synthetic data, and build unseen-benchmark query sequences.

#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "fgts/data.hpp"
#include "fgts/harness.hpp"

namespace {

using namespace fgts;

int cmd_run(const std::string& config_path, const std::string& out_dir, std::size_t threads) {
    harness::ExperimentConfig cfg = harness::load_config(config_path);
    if (threads) cfg.threads = threads;
    const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;

    const auto result = harness::run_experiment(cfg);
    harness::write_results(dir, result);
    std::cout << "variant,final_mean_cum_regret,slope_ratio_25\n";
    for (const auto& v : result.variants) {
        if (v.error) {
            std::cerr << "variant " << v.name << " failed: " << *v.error << '\n';
            continue;
        }
        const RegretTrace mean = harness::mean_trace(v.runs);
        std::string slope = "n/a";
        try {
            slope = std::to_string(harness::slope_ratio(mean, 0.25));
        } catch (const std::exception&) {
        }
        std::cout << v.name << ',' << v.mean_cumulative.back() << ',' << slope << '\n';
    }
    std::cerr << "wrote " << dir << "/runs.csv and " << dir << "/summary.csv\n";
    return result.ok() ? 0 : 1;
}

int cmd_table2(const std::string& csv, double lambda, std::size_t tau, int decimals,
               const std::vector<std::string>& exclude, const std::string& out_path) {
    ScoreTable table = data::load_score_table(csv);
    if (!exclude.empty()) {
        const std::set<std::string> drop(exclude.begin(), exclude.end());
        for (const auto& m : drop) table.model_index(m);  // unknown labels throw
        std::vector<std::size_t> keep;
        for (std::size_t k = 0; k < table.models(); ++k)
            if (!drop.count(table.model_labels[k])) keep.push_back(k);
        table = table.select_models(keep);
    }
    const auto w = harness::weighting_table(table, lambda, tau, decimals);
    if (out_path.empty()) {
        harness::write_weighting_table(std::cout, table, w, decimals);
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        harness::write_weighting_table(out, table, w, decimals);
    }
    return 0;
}

int cmd_synth(const data::SynthConfig& cfg, std::uint64_t seed, const std::string& emb_out,
              const std::string& queries_out) {
    Rng rng = seed_all(seed);
    const auto ds = data::synth_clustered(cfg, rng);
    std::vector<std::pair<std::string, EmbeddingVector>> rows;
    for (const auto& q : ds.queries) rows.emplace_back(q.id, q.embedding);
    data::write_embeddings(emb_out, rows);
    data::write_query_stream(queries_out, ds.queries, ds.category_labels);
    std::cerr << "wrote " << ds.queries.size() << " queries in " << cfg.categories
              << " categories (dim " << cfg.dim << ")\n";
    return 0;
}

int cmd_shift(const std::string& emb_path, const std::string& queries_path,
              const std::string& hidden, const std::vector<std::string>& exclude,
              const data::ShiftPlan& base, std::uint64_t seed, const std::string& out_path) {
    const auto emb = data::load_embeddings(emb_path);
    const auto stream = data::load_query_stream(queries_path, emb);
    auto index_of = [&](const std::string& label) {
        auto it = std::find(stream.category_labels.begin(), stream.category_labels.end(), label);
        if (it == stream.category_labels.end()) throw std::invalid_argument("unknown category " + label);
        return static_cast<std::size_t>(it - stream.category_labels.begin());
    };
    data::ShiftPlan plan = base;
    plan.hidden_category = index_of(hidden);
    for (const auto& e : exclude) plan.excluded_categories.push_back(index_of(e));
    Rng rng = seed_all(seed);
    const auto seq = data::build_shift_sequence(data::group_by_category(stream.items), plan, rng);
    data::write_query_stream(out_path, seq.items, stream.category_labels);
    std::cout << "total=" << seq.items.size() << " section1=" << seq.section1_size
              << " section2=" << seq.items.size() - seq.section1_size << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Preference-feedback LLM router: FGTS.CDB simulation and CCFT embeddings"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
    std::string config_path, out_dir;
    std::size_t threads = 0;
    run->add_option("config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory (default: experiment.output_dir)");
    run->add_option("--threads", threads, "Worker threads (default: config or all cores)");
    run->footer("Any config key can be overridden with FGTS_<SECTION>_<KEY>, e.g. FGTS_FGTS_MU=0.2.");

    auto* table2 = app.add_subcommand("table2", "Perf_cost / Excel_perf_cost / Excel_mask scores");
    std::string csv, table_out;
    double lambda = ccft::kDefaultLambda;
    std::size_t tau = ccft::kDefaultTau;
    int decimals = 3;
    std::vector<std::string> exclude;
    table2->add_option("csv", csv, "Score table CSV")->required()->check(CLI::ExistingFile);
    table2->add_option("--lambda", lambda, "Cost weight")->capture_default_str();
    table2->add_option("--tau", tau, "Top-tau cutoff")->capture_default_str();
    table2->add_option("--decimals", decimals,
                       "Round Perf_cost before selection (-1 keeps full precision)")
        ->capture_default_str();
    table2->add_option("--exclude", exclude, "Model labels to drop");
    table2->add_option("--out", table_out, "Write CSV here instead of stdout");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic clustered benchmark");
    data::SynthConfig synth_cfg;
    std::uint64_t seed = 42;
    std::string emb_out = "synth_embeddings.jsonl", queries_out = "synth_queries.jsonl";
    synth->add_option("--categories", synth_cfg.categories)->capture_default_str();
    synth->add_option("--per-category", synth_cfg.per_category)->capture_default_str();
    synth->add_option("--dim", synth_cfg.dim)->capture_default_str();
    synth->add_option("--spread", synth_cfg.spread)->capture_default_str();
    synth->add_option("--max-center-cosine", synth_cfg.max_center_cosine)->capture_default_str();
    synth->add_option("--seed", seed)->capture_default_str();
    synth->add_option("--embeddings", emb_out, "Embedding JSONL output")->capture_default_str();
    synth->add_option("--queries", queries_out, "Query JSONL output")->capture_default_str();

    auto* shift = app.add_subcommand("shift", "Build the two-section unseen-benchmark sequence");
    std::string shift_emb, shift_queries, hidden, shift_out = "shift_sequence.jsonl";
    std::vector<std::string> shift_exclude;
    data::ShiftPlan shift_plan;
    std::uint64_t shift_seed = 42;
    shift->add_option("--embeddings", shift_emb)->required()->check(CLI::ExistingFile);
    shift->add_option("--queries", shift_queries)->required()->check(CLI::ExistingFile);
    shift->add_option("--hidden", hidden, "Category kept out of section 1")->required();
    shift->add_option("--exclude", shift_exclude, "Categories dropped entirely");
    shift->add_option("--per-category", shift_plan.per_category)->capture_default_str();
    shift->add_option("--hidden-count", shift_plan.hidden_count)->capture_default_str();
    shift->add_option("--seed", shift_seed)->capture_default_str();
    shift->add_option("--out", shift_out)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config_path, out_dir, threads);
        if (*table2) return cmd_table2(csv, lambda, tau, decimals, exclude, table_out);
        if (*synth) return cmd_synth(synth_cfg, seed, emb_out, queries_out);
        if (*shift)
            return cmd_shift(shift_emb, shift_queries, hidden, shift_exclude, shift_plan, shift_seed,
                             shift_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
