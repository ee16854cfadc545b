#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "fgts/data.hpp"

using namespace fgts;
using namespace fgts::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "fgts_test_data";
    fs::create_directories(dir);
    return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const auto p = scratch(name);
    std::ofstream(p) << text;
    return p;
}

std::vector<QueryItem> ambiguous_items(std::size_t n) {
    std::vector<QueryItem> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({"q" + std::to_string(i), EmbeddingVector{1.0}, 0, static_cast<double>((i * 37) % n)});
    return out;
}

QueriesByCategory pools(std::size_t categories, std::size_t per) {
    QueriesByCategory out;
    for (std::size_t m = 0; m < categories; ++m)
        for (std::size_t i = 0; i < per; ++i)
            out[m].push_back({"c" + std::to_string(m) + "_" + std::to_string(i), EmbeddingVector{1.0}, m,
                              std::nullopt});
    return out;
}

}  // namespace

TEST_CASE("embedding JSONL: load, duplicate ids, round trip") {
    const auto p = write_file("emb.jsonl",
                              R"({"id": "a", "vec": [1, 2, 3, 4]}
{"id": "b", "vec": [0.5, 0.25, 0, -1]}

{"id": "c", "vec": [1e-3, 2, 3, 4]}
)");
    const auto m = load_embeddings(p);
    CHECK(m.size() == 3);
    CHECK(m.at("b").dim() == 4);

    const auto dup = write_file("dup.jsonl", R"({"id": "a", "vec": [1]}
{"id": "a", "vec": [2]}
)");
    try {
        load_embeddings(dup);
        FAIL("duplicate id accepted");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("'a'") != std::string::npos);
    }

    CHECK_THROWS_AS(load_embeddings(write_file("ragged.jsonl", R"({"id": "a", "vec": [1]}
{"id": "b", "vec": [1, 2]}
)")),
                    FormatError);
    CHECK_THROWS_AS(load_embeddings(write_file("bad.jsonl", "{not json}\n")), FormatError);

    EmbeddingMap awkward;
    awkward.emplace("x", EmbeddingVector{0.1, 1.0 / 3.0, -2.718281828459045, 5e-300});
    const auto rt = scratch("rt.jsonl");
    write_embeddings(rt, awkward);
    const auto back = load_embeddings(rt);
    CHECK(back.at("x").vec() == awkward.at("x").vec());
}

TEST_CASE("score table CSV") {
    const auto t = load_score_table(FGTS_FIXTURE_DIR "/routerbench_table1.csv");
    CHECK(t.models() == 11);
    CHECK(t.categories() == 7);
    const auto wiz = t.model_index("WizardLM 13B");
    const auto mmlu = t.category_index("MMLU");
    CHECK(t.perf(wiz, mmlu) == 0.568);
    CHECK(t.cost(wiz, mmlu) == 0.122);
    CHECK(t.category_index("MT-Bench") == 1);

    const auto one = load_score_table(write_file("one.csv", "model,x_perf,x_cost\nm,0.5,0.1\n"));
    CHECK(one.models() == 1);
    CHECK(one.categories() == 1);

    const auto perf_only = load_score_table(write_file("perf.csv", "model,x_perf,y_perf\nm,0.5,0.7\n"));
    CHECK_FALSE(perf_only.has_cost);
    CHECK(perf_only.cost == Matrix(1, 2, 0.0));

    CHECK_THROWS_AS(load_score_table(write_file("ragged.csv", "model,x_perf,x_cost\nm,0.5\n")),
                    FormatError);
    CHECK_THROWS_AS(load_score_table(write_file("nan.csv", "model,x_perf,x_cost\nm,abc,0.1\n")),
                    FormatError);

    const auto rt = scratch("rt.csv");
    write_score_table(rt, t);
    const auto back = load_score_table(rt);
    CHECK(back.perf == t.perf);
    CHECK(back.cost == t.cost);
    CHECK(back.model_labels == t.model_labels);
}

TEST_CASE("query stream JSONL joins embeddings and keeps known category indices") {
    const auto emb = load_embeddings(write_file("qe.jsonl", R"({"id": "a", "vec": [1, 0]}
{"id": "b", "vec": [0, 1]}
)"));
    const auto p = write_file("qs.jsonl", R"({"id": "a", "category": "ARC", "ambiguity": 0.2}
{"id": "b", "category": "MMLU"}
)");
    const auto s = load_query_stream(p, emb, {"MMLU"});
    CHECK(s.category_labels == std::vector<std::string>{"MMLU", "ARC"});
    CHECK(*s.items[0].category == 1);
    CHECK(*s.items[0].ambiguity == 0.2);
    CHECK_FALSE(s.items[1].ambiguity);

    CHECK_THROWS_AS(load_query_stream(write_file("missing.jsonl", R"({"id": "zzz"})"), emb), FormatError);

    const auto rt = scratch("qs_rt.jsonl");
    write_query_stream(rt, s.items, s.category_labels);
    const auto back = load_query_stream(rt, emb);
    CHECK(back.items.size() == 2);
    CHECK(back.category_labels[*back.items[0].category] == "ARC");
}

TEST_CASE("pairwise loader") {
    const auto p = write_file("pw.csv", "query_id,model_a,model_b,outcome\nq1,A,B,a\nq1,B,C,tie\n");
    const auto d = load_pairwise(p);
    CHECK(d.model_labels == std::vector<std::string>{"A", "B", "C"});
    CHECK(d.comparisons.size() == 2);
    CHECK(d.comparisons[1].outcome == Outcome::Tie);
    CHECK_THROWS_AS(load_pairwise(write_file("pw_bad.csv", "query_id,model_a,model_b,outcome\nq,A,B,x\n")),
                    FormatError);
    CHECK_THROWS_AS(load_pairwise(write_file("pw_self.csv", "query_id,model_a,model_b,outcome\nq,A,A,a\n")),
                    FormatError);
}

TEST_CASE("pairwise scores and Condorcet bonus") {
    const std::vector<PairwiseComparison> abc{{"q", 0, 1, Outcome::AWins},
                                              {"q", 0, 2, Outcome::AWins},
                                              {"q", 1, 2, Outcome::Tie}};
    auto s = pairwise_to_scores(abc, 3);
    CHECK(s.at("q") == Vector{2.0 + kCondorcetBonus, 0.5, 0.5});

    const std::vector<PairwiseComparison> ties{{"q", 0, 1, Outcome::Tie},
                                               {"q", 0, 2, Outcome::Tie},
                                               {"q", 1, 2, Outcome::Tie}};
    CHECK(pairwise_to_scores(ties, 3).at("q") == Vector{1.0, 1.0, 1.0});

    const std::vector<PairwiseComparison> two{{"q", 1, 0, Outcome::BWins}};
    CHECK(pairwise_to_scores(two, 2).at("q") == Vector{1.0 + kCondorcetBonus, 0.0});

    CHECK(pairwise_to_scores(abc, 3, 0.0).at("q") == Vector{2.0, 0.5, 0.5});
}

TEST_CASE("ambiguity filter counts") {
    const auto items = ambiguous_items(100);
    CHECK(filter_ambiguous(items, 0.0).size() == 100);
    CHECK(filter_ambiguous(items, 0.08).size() == 92);
    CHECK(filter_ambiguous(items, 0.15).size() == 85);

    // The dropped queries are the most ambiguous ones.
    const auto kept = filter_ambiguous(items, 0.08);
    for (const auto& q : kept) CHECK(*q.ambiguity < 92.0);
    CHECK_THROWS(filter_ambiguous(items, 1.0));
}

TEST_CASE("offline/online split") {
    Rng rng(1);
    const auto split = split_offline_online(pools(7, 20), {5}, rng);
    std::size_t offline = 0;
    std::set<std::string> ids;
    for (const auto& [m, qs] : split.offline) {
        CHECK(qs.size() == 5);
        offline += qs.size();
        for (const auto& q : qs) ids.insert(q.id);
    }
    CHECK(offline == 35);
    CHECK(split.online.size() == 7 * 15);
    for (const auto& q : split.online) CHECK(ids.count(q.id) == 0);

    Rng rng2(1);
    const auto none = split_offline_online(pools(2, 4), {0}, rng2);
    CHECK(none.online.size() == 8);
    for (const auto& [m, qs] : none.offline) CHECK(qs.empty());

    Rng rng3(1);
    CHECK_THROWS(split_offline_online(pools(2, 4), {5}, rng3));
}

TEST_CASE("shift sequence sections") {
    Rng rng(2);
    ShiftPlan plan;
    plan.hidden_category = 6;
    plan.excluded_categories = {1};
    const auto seq = build_shift_sequence(pools(7, 200), plan, rng);
    CHECK(seq.items.size() == 720);
    CHECK(seq.section1_size == 300);
    std::set<std::string> ids;
    std::size_t hidden_in_2 = 0;
    for (std::size_t i = 0; i < seq.items.size(); ++i) {
        const auto& q = seq.items[i];
        ids.insert(q.id);
        CHECK(*q.category != 1);
        if (i < 300) CHECK(*q.category != 6);
        else hidden_in_2 += *q.category == 6;
    }
    CHECK(hidden_in_2 == 120);
    CHECK(ids.size() == 720);

    Rng rng2(2);
    CHECK_THROWS(build_shift_sequence(pools(7, 100), plan, rng2));
}

TEST_CASE("synthetic clusters") {
    SynthConfig cfg;
    cfg.per_category = 100;
    Rng a(3), b(3);
    const auto ds = synth_clustered(cfg, a);
    const auto again = synth_clustered(cfg, b);
    REQUIRE(ds.queries.size() == 500);
    for (std::size_t i = 0; i < ds.queries.size(); ++i)
        CHECK(ds.queries[i].embedding == again.queries[i].embedding);

    for (std::size_t m = 0; m < 5; ++m)
        for (std::size_t o = m + 1; o < 5; ++o)
            CHECK(dot(ds.centers[m].values(), ds.centers[o].values()) < cfg.max_center_cosine);

    std::size_t correct = 0;
    for (const auto& q : ds.queries) {
        std::size_t best = 0;
        double best_c = -2.0;
        for (std::size_t m = 0; m < 5; ++m) {
            const double c = dot(q.embedding.values(), ds.centers[m].values());
            if (c > best_c) {
                best_c = c;
                best = m;
            }
        }
        correct += best == *q.category;
    }
    CHECK(static_cast<double>(correct) / ds.queries.size() >= 0.99);

    SynthConfig tight = cfg;
    tight.spread = 1e-12;
    Rng c(4);
    const auto t = synth_clustered(tight, c);
    for (const auto& q : t.queries)
        for (std::size_t i = 0; i < tight.dim; ++i)
            CHECK(q.embedding[i] == doctest::Approx(t.centers[*q.category][i]).epsilon(1e-9));
}
