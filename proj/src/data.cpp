#include "fgts/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fgts::data {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

[[noreturn]] void format_error(const fs::path& path, std::size_t line, const std::string& what) {
    throw FormatError(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return v;
}

std::string shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

template <class Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
    auto in = open_input(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        fn(line, lineno);
    }
}

}  // namespace

EmbeddingMap load_embeddings(const fs::path& path) {
    EmbeddingMap out;
    std::optional<std::size_t> dim;
    for_each_line(path, [&](const std::string& line, std::size_t lineno) {
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            format_error(path, lineno, std::string("malformed JSON: ") + e.what());
        }
        if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string())
            format_error(path, lineno, "record needs a string \"id\"");
        if (!rec.contains("vec") || !rec["vec"].is_array())
            format_error(path, lineno, "record needs a \"vec\" array");
        const std::string id = rec["id"].get<std::string>();
        Vector v;
        v.reserve(rec["vec"].size());
        for (const auto& x : rec["vec"]) {
            if (!x.is_number()) format_error(path, lineno, "non-numeric entry in vec of " + id);
            v.push_back(x.get<double>());
        }
        if (v.empty()) format_error(path, lineno, "empty vec for " + id);
        if (!dim) dim = v.size();
        if (v.size() != *dim)
            format_error(path, lineno,
                         "dimension " + std::to_string(v.size()) + " for " + id + ", expected " +
                             std::to_string(*dim));
        try {
            if (!out.emplace(id, EmbeddingVector(std::move(v))).second)
                format_error(path, lineno, "duplicate id '" + id + "'");
        } catch (const std::invalid_argument& e) {
            format_error(path, lineno, id + ": " + e.what());
        }
    });
    return out;
}

void write_embeddings(const fs::path& path,
                      std::span<const std::pair<std::string, EmbeddingVector>> embeddings) {
    auto out = open_output(path);
    for (const auto& [id, v] : embeddings) {
        json rec;
        rec["id"] = id;
        rec["vec"] = v.vec();
        out << rec.dump() << '\n';
    }
}

void write_embeddings(const fs::path& path, const EmbeddingMap& embeddings) {
    std::vector<std::pair<std::string, EmbeddingVector>> rows(embeddings.begin(), embeddings.end());
    write_embeddings(path, rows);
}

ScoreTable load_score_table(const fs::path& path) {
    auto in = open_input(path);
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++lineno;
        if (!trim(line).empty()) header = split_csv(line);
    }
    if (header.empty()) format_error(path, lineno, "missing header");
    if (header.front() != "model") format_error(path, lineno, "first header column must be 'model'");

    struct Column {
        std::size_t category;
        bool is_cost;
    };
    std::vector<std::string> categories;
    std::vector<Column> columns;
    std::set<std::pair<std::size_t, bool>> seen;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const std::string& h = header[c];
        const auto us = h.rfind('_');
        if (us == std::string::npos || us == 0)
            format_error(path, lineno, "header column '" + h + "' is not <category>_perf|_cost");
        const std::string cat = h.substr(0, us);
        const std::string kind = h.substr(us + 1);
        if (kind != "perf" && kind != "cost")
            format_error(path, lineno, "header column '" + h + "' is not <category>_perf|_cost");
        auto it = std::find(categories.begin(), categories.end(), cat);
        const std::size_t idx = static_cast<std::size_t>(it - categories.begin());
        if (it == categories.end()) categories.push_back(cat);
        if (!seen.emplace(idx, kind == "cost").second)
            format_error(path, lineno, "duplicate header column '" + h + "'");
        columns.push_back({idx, kind == "cost"});
    }
    if (categories.empty()) format_error(path, lineno, "no category columns");

    std::vector<std::string> labels;
    std::vector<Vector> perf_rows, cost_rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            format_error(path, lineno,
                         "ragged row: " + std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(header.size()));
        if (cells[0].empty()) format_error(path, lineno, "empty model label");
        Vector perf(categories.size(), 0.0), cost(categories.size(), 0.0);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            const auto v = parse_double(cells[c]);
            if (!v) format_error(path, lineno, "non-numeric cell '" + cells[c] + "'");
            const Column& col = columns[c - 1];
            (col.is_cost ? cost : perf)[col.category] = *v;
        }
        labels.push_back(cells[0]);
        perf_rows.push_back(std::move(perf));
        cost_rows.push_back(std::move(cost));
    }

    ScoreTable table;
    table.model_labels = labels;
    table.category_labels = categories;
    table.perf = Matrix(labels.size(), categories.size());
    table.cost = Matrix(labels.size(), categories.size());
    for (std::size_t k = 0; k < labels.size(); ++k)
        for (std::size_t m = 0; m < categories.size(); ++m) {
            table.perf(k, m) = perf_rows[k][m];
            table.cost(k, m) = cost_rows[k][m];
        }
    for (std::size_t m = 0; m < categories.size(); ++m) {
        if (!seen.count({m, false}))
            throw FormatError(path.string() + ": category " + categories[m] + " has no _perf column");
        if (!seen.count({m, true})) {
            table.has_cost = false;
            std::cerr << "warning: " << path.string() << ": no cost column for " << categories[m]
                      << "; treating its cost as 0\n";
        }
    }
    try {
        table.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return table;
}

void write_score_table(const fs::path& path, const ScoreTable& table) {
    auto out = open_output(path);
    out << "model";
    for (const auto& c : table.category_labels) out << ',' << c << "_perf," << c << "_cost";
    out << '\n';
    for (std::size_t k = 0; k < table.models(); ++k) {
        out << table.model_labels[k];
        for (std::size_t m = 0; m < table.categories(); ++m)
            out << ',' << shortest(table.perf(k, m)) << ',' << shortest(table.cost(k, m));
        out << '\n';
    }
}

QueryStream load_query_stream(const fs::path& path, const EmbeddingMap& embeddings,
                              std::vector<std::string> known_categories) {
    QueryStream stream;
    stream.category_labels = std::move(known_categories);
    std::set<std::string> ids;
    for_each_line(path, [&](const std::string& line, std::size_t lineno) {
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            format_error(path, lineno, std::string("malformed JSON: ") + e.what());
        }
        if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string())
            format_error(path, lineno, "record needs a string \"id\"");
        QueryItem q;
        q.id = rec["id"].get<std::string>();
        if (!ids.insert(q.id).second) format_error(path, lineno, "duplicate query id '" + q.id + "'");
        auto emb = embeddings.find(q.id);
        if (emb == embeddings.end()) format_error(path, lineno, "no embedding for query " + q.id);
        q.embedding = emb->second;
        if (rec.contains("category") && !rec["category"].is_null()) {
            if (!rec["category"].is_string()) format_error(path, lineno, "category must be a string");
            const std::string label = rec["category"].get<std::string>();
            auto it = std::find(stream.category_labels.begin(), stream.category_labels.end(), label);
            q.category = static_cast<std::size_t>(it - stream.category_labels.begin());
            if (it == stream.category_labels.end()) stream.category_labels.push_back(label);
        }
        if (rec.contains("ambiguity") && !rec["ambiguity"].is_null()) {
            if (!rec["ambiguity"].is_number()) format_error(path, lineno, "ambiguity must be a number");
            const double a = rec["ambiguity"].get<double>();
            if (!(a >= 0.0)) format_error(path, lineno, "ambiguity must be >= 0");
            q.ambiguity = a;
        }
        stream.items.push_back(std::move(q));
    });
    return stream;
}

void write_query_stream(const fs::path& path, std::span<const QueryItem> items,
                        std::span<const std::string> category_labels) {
    auto out = open_output(path);
    for (const auto& q : items) {
        json rec;
        rec["id"] = q.id;
        if (q.category) {
            if (*q.category >= category_labels.size())
                throw std::invalid_argument("write_query_stream: category without label");
            rec["category"] = category_labels[*q.category];
        }
        if (q.ambiguity) rec["ambiguity"] = *q.ambiguity;
        out << rec.dump() << '\n';
    }
}

PairwiseData load_pairwise(const fs::path& path, std::vector<std::string> known_models) {
    PairwiseData data;
    data.model_labels = std::move(known_models);
    auto model_index = [&](const std::string& label) {
        auto it = std::find(data.model_labels.begin(), data.model_labels.end(), label);
        const auto idx = static_cast<std::size_t>(it - data.model_labels.begin());
        if (it == data.model_labels.end()) data.model_labels.push_back(label);
        return idx;
    };
    bool header_seen = false;
    for_each_line(path, [&](const std::string& line, std::size_t lineno) {
        const auto cells = split_csv(line);
        if (!header_seen) {
            header_seen = true;
            if (cells != std::vector<std::string>{"query_id", "model_a", "model_b", "outcome"})
                format_error(path, lineno, "header must be query_id,model_a,model_b,outcome");
            return;
        }
        if (cells.size() != 4) format_error(path, lineno, "expected 4 cells");
        if (cells[0].empty()) format_error(path, lineno, "empty query id");
        if (cells[1] == cells[2]) format_error(path, lineno, "self-comparison of " + cells[1]);
        PairwiseComparison c;
        c.query_id = cells[0];
        c.model_a = model_index(cells[1]);
        c.model_b = model_index(cells[2]);
        if (cells[3] == "a")
            c.outcome = Outcome::AWins;
        else if (cells[3] == "b")
            c.outcome = Outcome::BWins;
        else if (cells[3] == "tie")
            c.outcome = Outcome::Tie;
        else
            format_error(path, lineno, "outcome must be a, b or tie (got '" + cells[3] + "')");
        data.comparisons.push_back(std::move(c));
    });
    if (!header_seen) throw FormatError(path.string() + ": empty pairwise file");
    return data;
}

std::map<std::string, Vector> pairwise_to_scores(std::span<const PairwiseComparison> comparisons,
                                                 std::size_t models, double bonus) {
    std::map<std::string, std::vector<const PairwiseComparison*>> by_query;
    for (const auto& c : comparisons) {
        if (c.model_a == c.model_b)
            throw std::invalid_argument("pairwise_to_scores: self-comparison in query " + c.query_id);
        if (c.model_a >= models || c.model_b >= models)
            throw std::out_of_range("pairwise_to_scores: model index out of range");
        by_query[c.query_id].push_back(&c);
    }

    std::map<std::string, Vector> out;
    for (const auto& [qid, list] : by_query) {
        Vector score(models, 0.0);
        // wins[a][b]: a beat b head-to-head; met[a][b]: the pair was compared.
        std::vector<std::vector<bool>> wins(models, std::vector<bool>(models, false));
        std::vector<std::vector<bool>> met(models, std::vector<bool>(models, false));
        std::vector<bool> present(models, false);
        for (const auto* c : list) {
            const auto a = c->model_a, b = c->model_b;
            if (met[a][b])
                throw std::invalid_argument("pairwise_to_scores: pair compared twice in query " + qid);
            met[a][b] = met[b][a] = true;
            present[a] = present[b] = true;
            switch (c->outcome) {
                case Outcome::AWins:
                    score[a] += 1.0;
                    wins[a][b] = true;
                    break;
                case Outcome::BWins:
                    score[b] += 1.0;
                    wins[b][a] = true;
                    break;
                case Outcome::Tie:
                    score[a] += 0.5;
                    score[b] += 0.5;
                    break;
            }
        }
        const double top = *std::max_element(score.begin(), score.end());
        for (std::size_t k = 0; k < models; ++k) {
            if (!present[k]) continue;
            bool beats_all = true;
            for (std::size_t j = 0; j < models && beats_all; ++j)
                if (j != k && present[j] && !wins[k][j]) beats_all = false;
            if (beats_all) {
                score[k] = top + bonus;
                break;  // at most one Condorcet winner exists
            }
        }
        out.emplace(qid, std::move(score));
    }
    return out;
}

std::vector<QueryItem> filter_ambiguous(std::span<const QueryItem> queries, double top_fraction) {
    if (!(top_fraction >= 0.0 && top_fraction < 1.0))
        throw std::invalid_argument("filter_ambiguous: fraction must lie in [0, 1)");
    if (top_fraction == 0.0) return {queries.begin(), queries.end()};
    for (const auto& q : queries)
        if (!q.ambiguity)
            throw std::invalid_argument("filter_ambiguous: query " + q.id + " has no ambiguity score");
    // Guard against 0.08 * 100 = 8.000000000000002 rounding up to 9.
    const auto drop = static_cast<std::size_t>(
        std::ceil(top_fraction * static_cast<double>(queries.size()) - 1e-9));
    std::vector<std::size_t> order(queries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (*queries[a].ambiguity != *queries[b].ambiguity)
            return *queries[a].ambiguity > *queries[b].ambiguity;
        return queries[a].id < queries[b].id;
    });
    std::vector<bool> removed(queries.size(), false);
    for (std::size_t i = 0; i < drop && i < order.size(); ++i) removed[order[i]] = true;
    std::vector<QueryItem> out;
    out.reserve(queries.size() - std::min(drop, queries.size()));
    for (std::size_t i = 0; i < queries.size(); ++i)
        if (!removed[i]) out.push_back(queries[i]);
    return out;
}

QueriesByCategory group_by_category(std::span<const QueryItem> queries) {
    QueriesByCategory out;
    for (const auto& q : queries) {
        if (!q.category) throw std::invalid_argument("group_by_category: query " + q.id + " has no category");
        out[*q.category].push_back(q);
    }
    return out;
}

OfflineOnlineSplit split_offline_online(const QueriesByCategory& queries, const SplitPlan& plan,
                                        Rng& rng) {
    OfflineOnlineSplit split;
    for (const auto& [cat, items] : queries) {
        if (plan.offline_per_category > 0 && items.size() <= plan.offline_per_category)
            throw std::invalid_argument("split_offline_online: category " + std::to_string(cat) +
                                        " has " + std::to_string(items.size()) +
                                        " queries, needs more than " +
                                        std::to_string(plan.offline_per_category));
        std::vector<QueryItem> pool = items;
        std::shuffle(pool.begin(), pool.end(), rng.engine());
        const auto n = static_cast<std::ptrdiff_t>(plan.offline_per_category);
        if (n > 0) split.offline[cat].assign(pool.begin(), pool.begin() + n);
        split.online.insert(split.online.end(), pool.begin() + n, pool.end());
    }
    std::shuffle(split.online.begin(), split.online.end(), rng.engine());
    return split;
}

ShiftSequence build_shift_sequence(const QueriesByCategory& queries, const ShiftPlan& plan,
                                   Rng& rng) {
    auto hidden = queries.find(plan.hidden_category);
    if (hidden == queries.end())
        throw std::invalid_argument("build_shift_sequence: hidden category has no queries");
    if (hidden->second.size() < plan.hidden_count)
        throw std::invalid_argument("build_shift_sequence: hidden category has " +
                                    std::to_string(hidden->second.size()) + " queries, needs " +
                                    std::to_string(plan.hidden_count));
    const std::set<std::size_t> excluded(plan.excluded_categories.begin(),
                                         plan.excluded_categories.end());
    if (excluded.count(plan.hidden_category))
        throw std::invalid_argument("build_shift_sequence: hidden category is also excluded");

    std::vector<QueryItem> section1, section2;
    for (const auto& [cat, items] : queries) {
        if (cat == plan.hidden_category || excluded.count(cat)) continue;
        if (items.size() < 2 * plan.per_category)
            throw std::invalid_argument("build_shift_sequence: category " + std::to_string(cat) +
                                        " has " + std::to_string(items.size()) +
                                        " queries, needs " + std::to_string(2 * plan.per_category));
        std::vector<QueryItem> pool;
        pool.reserve(2 * plan.per_category);
        std::sample(items.begin(), items.end(), std::back_inserter(pool),
                    static_cast<std::ptrdiff_t>(2 * plan.per_category), rng.engine());
        std::shuffle(pool.begin(), pool.end(), rng.engine());
        const auto n = static_cast<std::ptrdiff_t>(plan.per_category);
        section1.insert(section1.end(), pool.begin(), pool.begin() + n);
        section2.insert(section2.end(), pool.begin() + n, pool.end());
    }
    std::sample(hidden->second.begin(), hidden->second.end(), std::back_inserter(section2),
                static_cast<std::ptrdiff_t>(plan.hidden_count), rng.engine());
    std::shuffle(section1.begin(), section1.end(), rng.engine());
    std::shuffle(section2.begin(), section2.end(), rng.engine());

    std::set<std::string> ids;
    for (const auto* section : {&section1, &section2})
        for (const auto& q : *section)
            if (!ids.insert(q.id).second)
                throw std::invalid_argument("build_shift_sequence: duplicate query id " + q.id);

    ShiftSequence seq;
    seq.section1_size = section1.size();
    seq.items = std::move(section1);
    seq.items.insert(seq.items.end(), section2.begin(), section2.end());
    return seq;
}

SynthDataset synth_clustered(const SynthConfig& cfg, Rng& rng) {
    if (cfg.categories == 0 || cfg.dim == 0)
        throw std::invalid_argument("synth_clustered: need categories >= 1 and dim >= 1");
    if (cfg.spread < 0.0) throw std::invalid_argument("synth_clustered: spread must be >= 0");
    SynthDataset ds;
    constexpr int kMaxAttempts = 10000;
    for (std::size_t m = 0; m < cfg.categories; ++m) {
        Vector center;
        for (int attempt = 0;; ++attempt) {
            if (attempt == kMaxAttempts)
                throw std::runtime_error(
                    "synth_clustered: could not place separated centers; raise dim or "
                    "max_center_cosine");
            Vector g(cfg.dim);
            for (double& x : g) x = rng.normal();
            if (l2_norm(g) == 0.0) continue;
            center = normalized(g);
            bool ok = true;
            for (const auto& c : ds.centers)
                if (dot(c.values(), center) > cfg.max_center_cosine) ok = false;
            if (ok) break;
        }
        ds.centers.push_back(EmbeddingVector::unit(center));
        ds.category_labels.push_back("topic" + std::to_string(m));
    }
    for (std::size_t m = 0; m < cfg.categories; ++m) {
        const auto c = ds.centers[m].values();
        for (std::size_t i = 0; i < cfg.per_category; ++i) {
            Vector v(c.begin(), c.end());
            for (double& x : v) x += cfg.spread * rng.normal();
            QueryItem q;
            q.id = "c" + std::to_string(m) + "_q" + std::to_string(i);
            q.embedding = normalize(EmbeddingVector(std::move(v)));
            q.category = m;
            ds.queries.push_back(std::move(q));
        }
    }
    return ds;
}

}  // namespace fgts::data
