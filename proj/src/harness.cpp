#include "fgts/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

namespace fgts::harness {

namespace fs = std::filesystem;

namespace {

std::string shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string percent_tag(double fraction) {
    // 0.08 -> "8", 0.085 -> "8.5"
    const double pct = std::round(fraction * 100.0 * 1e6) / 1e6;
    return shortest(pct);
}

// Stream tags for derive_seed.
constexpr std::uint64_t kDatasetStream = 0xDA7A;
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kPolicyStream = 2;

/// Everything loaded once per experiment.
struct Dataset {
    // Per group ("exp"/"ideal" share, "ctrl" has its own embeddings).
    std::vector<QueryItem> queries;
    std::vector<QueryItem> control_queries;
    std::vector<std::string> category_labels;
    std::vector<std::string> model_labels;
    std::optional<ScoreTable> table;
    std::optional<std::map<std::string, Vector>> per_query_scores;
    bool synthetic = false;
};

Dataset load_dataset(const ExperimentConfig& cfg) {
    Dataset ds;
    if (cfg.source == "synthetic") {
        Rng rng(derive_seed(cfg.seed, kDatasetStream));
        auto synth = data::synth_clustered(cfg.synth, rng);
        ds.synthetic = true;
        ds.queries = std::move(synth.queries);
        ds.category_labels = synth.category_labels;
        for (std::size_t k = 0; k < cfg.synth.categories; ++k)
            ds.model_labels.push_back("expert_" + synth.category_labels[k]);
        return ds;
    }

    std::vector<std::string> known_categories;
    if (!cfg.score_table.empty()) {
        ScoreTable table = data::load_score_table(cfg.score_table);
        if (!cfg.models.empty()) {
            std::vector<std::size_t> rows;
            for (const auto& m : cfg.models) rows.push_back(table.model_index(m));
            table = table.select_models(rows);
        }
        known_categories = table.category_labels;
        ds.model_labels = table.model_labels;
        ds.table = std::move(table);
    } else if (!cfg.models.empty()) {
        ds.model_labels = cfg.models;
    }

    const auto emb = data::load_embeddings(cfg.embeddings);
    auto stream = data::load_query_stream(cfg.queries, emb, known_categories);
    ds.queries = std::move(stream.items);
    ds.category_labels = std::move(stream.category_labels);
    if (!cfg.control_embeddings.empty()) {
        const auto ctrl = data::load_embeddings(cfg.control_embeddings);
        auto cstream = data::load_query_stream(cfg.queries, ctrl, known_categories);
        ds.control_queries = std::move(cstream.items);
    }

    if (!cfg.pairwise.empty()) {
        auto pw = data::load_pairwise(cfg.pairwise, ds.model_labels);
        if (ds.table && pw.model_labels.size() != ds.model_labels.size())
            throw std::invalid_argument("pairwise file names models missing from the score table");
        ds.model_labels = pw.model_labels;
        ds.per_query_scores =
            data::pairwise_to_scores(pw.comparisons, ds.model_labels.size(), cfg.condorcet_bonus);
    }
    if (ds.model_labels.size() < 2) throw std::invalid_argument("experiment needs at least two models");
    return ds;
}

std::optional<std::size_t> category_index(const Dataset& ds, const std::string& label) {
    if (label.empty()) return std::nullopt;
    auto it = std::find(ds.category_labels.begin(), ds.category_labels.end(), label);
    if (it == ds.category_labels.end())
        throw std::invalid_argument("unknown category '" + label + "'");
    return static_cast<std::size_t>(it - ds.category_labels.begin());
}

/// Per-run material shared by every variant of one group.
struct Scenario {
    std::vector<QueryItem> stream;
    data::QueriesByCategory offline;
    std::optional<UtilityOracle> oracle;
    ScoreTable visible_table;  // rows = models, columns = visible categories
    ccft::CategoryEmbeddings xi;
    bool has_table = false;
};

ScoreTable synthetic_table(const UtilityOracle& oracle, const Dataset& ds) {
    const auto& m = std::get<TableUtility>(oracle.kind()).matrix;
    ScoreTable t;
    t.perf = Matrix(m.cols(), m.rows());
    t.cost = Matrix(m.cols(), m.rows());
    for (std::size_t k = 0; k < m.cols(); ++k)
        for (std::size_t c = 0; c < m.rows(); ++c) t.perf(k, c) = m(c, k);
    t.model_labels = ds.model_labels;
    t.category_labels = ds.category_labels;
    t.has_cost = false;
    return t;
}

Scenario build_scenario(const ExperimentConfig& cfg, const Dataset& ds, const std::string& group,
                        double ambiguity_fraction, std::size_t run) {
    Scenario sc;
    Rng rng(derive_seed(cfg.seed, run, kSplitStream));

    const auto& source = group == "ctrl" ? ds.control_queries : ds.queries;
    std::vector<QueryItem> queries = data::filter_ambiguous(source, ambiguity_fraction);

    std::set<std::size_t> excluded;
    for (const auto& label : cfg.excluded_categories) excluded.insert(*category_index(ds, label));
    const auto hidden = category_index(ds, cfg.hidden_category);

    const bool categorized = std::all_of(queries.begin(), queries.end(),
                                         [](const QueryItem& q) { return q.category.has_value(); });
    data::QueriesByCategory by_cat;
    if (categorized) {
        for (auto& q : queries)
            if (!excluded.count(*q.category)) by_cat[*q.category].push_back(std::move(q));
    } else {
        if (hidden) throw std::invalid_argument("unseen-benchmark mode needs categorized queries");
        // Uncategorized data: one pool for the offline draw, no centroids.
        for (auto& q : queries) by_cat[0].push_back(std::move(q));
    }

    data::OfflineOnlineSplit split =
        data::split_offline_online(by_cat, {cfg.offline_per_category}, rng);
    sc.offline = std::move(split.offline);

    if (hidden) {
        // Rebuild per-category pools from what the offline draw left over.
        const data::QueriesByCategory pools = data::group_by_category(split.online);
        data::ShiftPlan plan;
        plan.hidden_category = *hidden;
        plan.per_category = cfg.shift_per_category;
        plan.hidden_count = cfg.shift_hidden_count;
        sc.stream = data::build_shift_sequence(pools, plan, rng).items;
    } else {
        sc.stream = std::move(split.online);
    }
    if (sc.stream.size() < cfg.rounds)
        throw std::invalid_argument("online stream has " + std::to_string(sc.stream.size()) +
                                    " queries, fewer than rounds = " + std::to_string(cfg.rounds));
    sc.stream.resize(cfg.rounds);

    // Environment utilities.
    const std::size_t arms = ds.model_labels.size();
    if (ds.synthetic) {
        const auto centroids = ccft::category_centroids(
            [&] {
                std::map<std::size_t, std::vector<EmbeddingVector>> m;
                for (const auto& [c, qs] : sc.offline)
                    for (const auto& q : qs) m[c].push_back(q.embedding);
                return m;
            }(),
            ds.category_labels);
        std::vector<std::size_t> expert_of(arms);
        for (std::size_t k = 0; k < arms; ++k) expert_of[k] = k;
        sc.oracle = similarity_utility(centroids, expert_of);
        sc.visible_table = synthetic_table(*sc.oracle, ds);
        sc.has_table = true;
    } else if (ds.per_query_scores) {
        sc.oracle = UtilityOracle(PerQueryUtility{*ds.per_query_scores}, arms);
    } else {
        const ScoreTable& t = *ds.table;
        Matrix m(ds.category_labels.size(), arms, 0.0);
        for (std::size_t c = 0; c < t.categories(); ++c)
            for (std::size_t k = 0; k < arms; ++k) m(c, k) = t.perf(k, c);
        if (ds.category_labels.size() > t.categories())
            throw std::invalid_argument("query categories missing from the score table");
        sc.oracle = UtilityOracle(TableUtility{std::move(m)}, arms);
    }
    if (!ds.synthetic && ds.table) {
        sc.visible_table = *ds.table;
        sc.has_table = true;
    }

    // Visible categories: offline categories that the learner may use.
    if (categorized && sc.has_table) {
        std::map<std::size_t, std::vector<EmbeddingVector>> visible;
        for (const auto& [c, qs] : sc.offline) {
            if (hidden && c == *hidden && group != "ideal") continue;
            for (const auto& q : qs) visible[c].push_back(q.embedding);
        }
        // Keep table columns in the same (index) order as the centroids.
        ScoreTable t = sc.visible_table;
        for (std::size_t c = t.categories(); c-- > 0;) {
            const std::size_t idx = *category_index(ds, t.category_labels[c]);
            if (!visible.count(idx)) t = t.drop_category(c);
        }
        if (!visible.empty()) sc.xi = ccft::category_centroids(visible, ds.category_labels);
        if (t.categories() != sc.xi.categories())
            throw std::invalid_argument("score table and offline categories disagree");
        sc.visible_table = std::move(t);
    }
    return sc;
}

std::vector<EmbeddingVector> build_model_embeddings(const ExperimentConfig& cfg,
                                                    const Scenario& sc, const std::string& weighting,
                                                    std::size_t arms) {
    std::vector<EmbeddingVector> all_offline;
    for (const auto& [c, qs] : sc.offline)
        for (const auto& q : qs) all_offline.push_back(q.embedding);
    if (all_offline.empty())
        throw std::invalid_argument("no offline queries; set data.offline_per_category >= 1");

    if (weighting == kSharedMean)
        return std::vector<EmbeddingVector>(arms, ccft::group_mean_embedding(all_offline));

    ccft::WeightingMode mode;
    mode.variant = ccft::parse_weighting(weighting);
    mode.tau = cfg.tau;
    mode.lambda = cfg.lambda;
    mode.exclude_unselected = cfg.exclude_unselected;

    if (mode.variant == ccft::Weighting::GroupMean) {
        // Label each offline query with its best-matching model.
        std::vector<std::vector<EmbeddingVector>> groups(arms);
        for (const auto& [c, qs] : sc.offline)
            for (const auto& q : qs) {
                const Vector u = sc.oracle->utilities(q);
                const auto best = static_cast<std::size_t>(
                    std::max_element(u.begin(), u.end()) - u.begin());
                groups[best].push_back(q.embedding);
            }
        const EmbeddingVector fallback = ccft::group_mean_embedding(all_offline);
        std::vector<EmbeddingVector> out;
        for (const auto& g : groups) out.push_back(g.empty() ? fallback : ccft::group_mean_embedding(g));
        return out;
    }
    if (!sc.has_table || sc.xi.categories() == 0)
        throw std::invalid_argument(weighting + " needs a score table and categorized queries");
    if (mode.uses_tau() && mode.tau > sc.visible_table.models())
        throw std::invalid_argument("ccft.tau exceeds the number of models");
    return ccft::model_embeddings(sc.xi, sc.visible_table, mode);
}

RegretTrace run_one(const ExperimentConfig& cfg, const Dataset& ds, const VariantSpec& v,
                    std::size_t run) {
    const Scenario sc = build_scenario(cfg, ds, v.group, v.ambiguity_fraction, run);
    const std::size_t arms = ds.model_labels.size();
    std::vector<EmbeddingVector> models = build_model_embeddings(cfg, sc, v.weighting, arms);

    FeatureConfig feature;
    feature.combiner = v.combiner;
    if (cfg.append_metadata && sc.has_table) {
        feature.append_metadata = true;
        feature.metadata_dim = 2 * sc.visible_table.categories();
        for (std::size_t k = 0; k < arms; ++k)
            models[k] = augment_model_embedding(models[k], score_metadata(sc.visible_table, k));
    }

    std::vector<ModelId> registry;
    for (std::size_t k = 0; k < arms; ++k) registry.push_back({k, ds.model_labels[k]});
    FgtsHyper hyper{v.eta.value_or(cfg.eta.front()), v.mu.value_or(cfg.mu.front()), cfg.prior_std};
    FgtsRouter router(std::move(registry), std::move(models), feature, hyper, cfg.sgld);
    Rng rng(derive_seed(cfg.seed, run, kPolicyStream));
    return run_episode(router, sc.stream, *sc.oracle, rng);
}

}  // namespace

std::string VariantSpec::name() const {
    std::string n = embedding_tag + "_" + weighting + "_" + group;
    if (combiner == Combiner::Add) n += "_add";
    if (ambiguity_fraction > 0.0) n += "_" + percent_tag(ambiguity_fraction);
    if (eta) n += "_eta" + shortest(*eta);
    if (mu) n += "_mu" + shortest(*mu);
    return n;
}

std::vector<VariantSpec> expand_variants(const ExperimentConfig& cfg) {
    const bool sweep = cfg.eta.size() > 1 || cfg.mu.size() > 1;
    std::vector<VariantSpec> out;
    for (const auto& group : cfg.groups)
        for (double fraction : cfg.ambiguity_fractions)
            for (const auto& w : cfg.weightings)
                for (double eta : cfg.eta)
                    for (double mu : cfg.mu) {
                        VariantSpec v;
                        v.embedding_tag = cfg.embedding_tag;
                        v.weighting = w == kSharedMean ? w : ccft::to_string(ccft::parse_weighting(w));
                        v.group = group;
                        v.ambiguity_fraction = fraction;
                        v.combiner = cfg.combiner;
                        if (sweep) {
                            v.eta = eta;
                            v.mu = mu;
                        }
                        out.push_back(std::move(v));
                    }
    return out;
}

bool ExperimentResult::ok() const {
    return std::none_of(variants.begin(), variants.end(),
                        [](const VariantResult& v) { return v.error.has_value(); });
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const Dataset ds = load_dataset(cfg);
    const auto specs = expand_variants(cfg);

    ExperimentResult result;
    result.variants.resize(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        result.variants[i].name = specs[i].name();
        result.variants[i].runs.resize(cfg.runs);
    }

    struct Job {
        std::size_t variant;
        std::size_t run;
    };
    std::vector<Job> jobs;
    for (std::size_t v = 0; v < specs.size(); ++v)
        for (std::size_t r = 0; r < cfg.runs; ++r) jobs.push_back({v, r});

    std::vector<std::optional<std::string>> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            const Job job = jobs[j];
            try {
                result.variants[job.variant].runs[job.run] =
                    run_one(cfg, ds, specs[job.variant], job.run);
            } catch (const std::exception& e) {
                errors[j] = "run " + std::to_string(job.run) + ": " + e.what();
            }
        }
    };
    std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, jobs.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    // Jobs are ordered by (variant, run), so the first error per variant is the lowest run.
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        auto& slot = result.variants[jobs[j].variant];
        if (errors[j] && !slot.error) slot.error = errors[j];
    }

    for (auto& v : result.variants) {
        if (v.error) {
            v.runs.clear();
            continue;
        }
        v.mean_cumulative.assign(cfg.rounds, 0.0);
        for (const auto& tr : v.runs)
            for (std::size_t t = 0; t < cfg.rounds; ++t) v.mean_cumulative[t] += tr.cumulative[t];
        for (double& x : v.mean_cumulative) x /= static_cast<double>(cfg.runs);
    }
    return result;
}

void write_run_traces(std::ostream& out, const ExperimentResult& result) {
    out << "round,variant,run,inst_regret,cum_regret\n";
    for (const auto& v : result.variants) {
        if (v.error) continue;
        for (std::size_t r = 0; r < v.runs.size(); ++r)
            for (std::size_t t = 0; t < v.runs[r].rounds(); ++t)
                out << t + 1 << ',' << v.name << ',' << r << ',' << shortest(v.runs[r].instantaneous[t])
                    << ',' << shortest(v.runs[r].cumulative[t]) << '\n';
    }
}

void write_summary(std::ostream& out, const ExperimentResult& result) {
    out << "round,variant,mean_cum_regret\n";
    for (const auto& v : result.variants) {
        if (v.error) continue;
        for (std::size_t t = 0; t < v.mean_cumulative.size(); ++t)
            out << t + 1 << ',' << v.name << ',' << shortest(v.mean_cumulative[t]) << '\n';
    }
}

void write_results(const fs::path& dir, const ExperimentResult& result) {
    fs::create_directories(dir);
    std::ofstream runs(dir / "runs.csv", std::ios::trunc);
    std::ofstream summary(dir / "summary.csv", std::ios::trunc);
    if (!runs || !summary) throw std::runtime_error("cannot write results into " + dir.string());
    write_run_traces(runs, result);
    write_summary(summary, result);
}

double slope_ratio(std::span<const double> inst, double window_fraction) {
    const double span_len = static_cast<double>(inst.size()) * window_fraction;
    if (!(window_fraction > 0.0 && window_fraction <= 1.0) || span_len < 2.0 - 1e-9)
        throw std::invalid_argument("slope_ratio: window must cover at least two rounds");
    const auto w = static_cast<std::size_t>(std::floor(span_len + 1e-9));
    double first = 0.0, last = 0.0;
    for (std::size_t t = 0; t < w; ++t) {
        first += inst[t];
        last += inst[inst.size() - w + t];
    }
    first /= static_cast<double>(w);
    last /= static_cast<double>(w);
    if (first == 0.0) {
        if (last == 0.0) return 0.0;
        throw std::domain_error("slope_ratio: zero regret in the first window but not the last");
    }
    return last / first;
}

double slope_ratio(const RegretTrace& trace, double window_fraction) {
    return slope_ratio(trace.instantaneous, window_fraction);
}

RegretTrace mean_trace(std::span<const RegretTrace> runs) {
    if (runs.empty()) throw std::invalid_argument("mean_trace: no runs");
    Vector inst(runs.front().rounds(), 0.0);
    for (const auto& r : runs) {
        if (r.rounds() != inst.size()) throw std::invalid_argument("mean_trace: ragged runs");
        for (std::size_t t = 0; t < inst.size(); ++t) inst[t] += r.instantaneous[t];
    }
    for (double& x : inst) x /= static_cast<double>(runs.size());
    return RegretTrace::from_instantaneous(inst);
}

WeightingTable weighting_table(const ScoreTable& table, double lambda, std::size_t tau,
                               int decimals) {
    WeightingTable w;
    w.perf_cost = ccft::perf_cost_scores(table, lambda);
    if (decimals >= 0) w.perf_cost = ccft::round_scores(w.perf_cost, decimals);
    w.excel_perf_cost = ccft::top_tau(w.perf_cost, tau);
    w.excel_mask = ccft::mask_tau(w.perf_cost, tau);
    return w;
}

void write_weighting_table(std::ostream& out, const ScoreTable& table, const WeightingTable& w,
                           int decimals) {
    auto fmt = [&](double v) {
        if (decimals < 0) return shortest(v);
        std::ostringstream s;
        s << std::fixed << std::setprecision(decimals) << v;
        return s.str();
    };
    out << "model";
    for (const auto& c : table.category_labels)
        out << ',' << c << "_perf_cost," << c << "_excel_perf_cost," << c << "_excel_mask";
    out << '\n';
    for (std::size_t k = 0; k < table.models(); ++k) {
        out << table.model_labels[k];
        for (std::size_t m = 0; m < table.categories(); ++m) {
            const double e = w.excel_perf_cost(k, m);
            out << ',' << fmt(w.perf_cost(k, m)) << ',' << (w.excel_mask(k, m) != 0.0 ? fmt(e) : "0")
                << ',' << (w.excel_mask(k, m) != 0.0 ? "1" : "0");
        }
        out << '\n';
    }
}

}  // namespace fgts::harness
