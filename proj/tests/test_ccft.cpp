#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <set>

#include "fgts/ccft.hpp"
#include "fgts/data.hpp"
#include "fgts/env.hpp"

using namespace fgts;
using namespace fgts::ccft;

namespace {

ScoreTable table1_without_gpt4() {
    auto t = data::load_score_table(FGTS_FIXTURE_DIR "/routerbench_table1.csv");
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < t.models(); ++k)
        if (t.model_labels[k] != "GPT-4") keep.push_back(k);
    return t.select_models(keep);
}

std::set<std::string> nonzero_models(const Matrix& m, const ScoreTable& t, std::size_t col) {
    std::set<std::string> out;
    for (std::size_t k = 0; k < m.rows(); ++k)
        if (m(k, col) != 0.0) out.insert(t.model_labels[k]);
    return out;
}

// Straight-line softmax in extended precision.
Vector softmax_oracle(const Vector& v) {
    long double z = 0;
    for (double x : v) z += std::exp(static_cast<long double>(x));
    Vector out;
    for (double x : v) out.push_back(static_cast<double>(std::exp(static_cast<long double>(x)) / z));
    return out;
}

}  // namespace

TEST_CASE("softmax: symmetric, shift invariant, and matches a direct evaluation") {
    const auto u = softmax(Vector{0.0, 0.0, 0.0});
    for (double p : u) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const auto a = softmax(Vector{0.0, 1.0});
    const auto b = softmax(Vector{7.5, 8.5});
    CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-14));

    const auto s = softmax(Vector{1.0, 2.0});
    CHECK(s[0] == doctest::Approx(0.2689414213699951).epsilon(1e-14));
    CHECK(s[1] == doctest::Approx(0.7310585786300049).epsilon(1e-14));

    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Vector v(6);
        for (auto& x : v) x = 4.0 * rng.normal();
        const auto got = softmax(v), want = softmax_oracle(v);
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-13));
    }
    CHECK_THROWS(softmax(Vector{}));
}

TEST_CASE("perf_cost_scores on the published table") {
    const auto t = table1_without_gpt4();
    const auto s = perf_cost_scores(t, 0.05);
    const auto wiz = t.model_index("WizardLM 13B");
    const auto c2 = t.model_index("Claude V2");
    CHECK(s(wiz, t.category_index("MMLU")) == doctest::Approx(0.562).epsilon(0.0005 / 0.562));
    CHECK(s(c2, t.category_index("HellaSwag")) == doctest::Approx(-0.554).epsilon(0.0005 / 0.554));

    const auto raw = perf_cost_scores(t, 0.0);
    CHECK(raw == t.perf);
}

TEST_CASE("Perf_cost column matches every published value after rounding") {
    const auto t = table1_without_gpt4();
    // Published column (i) values, read from the expected-table fixture.
    std::ifstream in(FGTS_FIXTURE_DIR "/table2_expected.csv");
    REQUIRE(in);
    std::string line;
    std::getline(in, line);
    const auto s = round_scores(perf_cost_scores(t, 0.05), 3);
    std::size_t k = 0, checked = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        REQUIRE(cells.size() == 1 + 3 * t.categories());
        CHECK(cells[0] == t.model_labels[k]);
        for (std::size_t m = 0; m < t.categories(); ++m) {
            CHECK(s(k, m) == doctest::Approx(std::stod(cells[1 + 3 * m])).epsilon(1e-12));
            ++checked;
        }
        ++k;
    }
    CHECK(checked == 70);
}

TEST_CASE("excel_threshold uses distinct values") {
    const Vector mt{0.937, 0.920, 0.920, 0.907, 0.862, 0.853};
    CHECK(excel_threshold(mt, 3) == 0.907);
    const Vector distinct{0.3, 0.9, 0.1, 0.5};
    CHECK(excel_threshold(distinct, 3) == 0.3);
    CHECK(excel_threshold(distinct, 4) == 0.1);
    CHECK_THROWS(excel_threshold(distinct, 0));
}

TEST_CASE("top_tau and mask_tau reproduce the published selections") {
    const auto t = table1_without_gpt4();
    const auto s = round_scores(perf_cost_scores(t, 0.05), 3);
    const auto top = top_tau(s, 3);
    const auto mask = mask_tau(s, 3);

    using S = std::set<std::string>;
    CHECK(nonzero_models(top, t, t.category_index("MMLU")) == S{"Mixtral 8x7B", "Yi 34B", "GPT-3.5"});
    CHECK(top(t.model_index("Yi 34B"), t.category_index("MMLU")) == doctest::Approx(0.727));
    CHECK(nonzero_models(top, t, t.category_index("GSM8k")) ==
          S{"Claude Instant V1", "GPT-3.5", "Yi 34B"});
    CHECK(nonzero_models(mask, t, t.category_index("MMLU")) == S{"Mixtral 8x7B", "Yi 34B", "GPT-3.5"});
    CHECK(nonzero_models(mask, t, t.category_index("MT-Bench")) ==
          S{"Mixtral 8x7B", "Yi 34B", "GPT-3.5", "Claude V1"});
    for (double v : mask.data()) CHECK((v == 0.0 || v == 1.0));

    CHECK(top_tau(s, t.models()) == s);

    Matrix flat(4, 1, 0.5);
    CHECK(mask_tau(flat, 1) == Matrix(4, 1, 1.0));
}

TEST_CASE("model_embedding arithmetic") {
    CategoryEmbeddings xi2{{EmbeddingVector{1.0, 0.0}, EmbeddingVector{0.0, 1.0}}, {}};
    const auto uniform = model_embedding(xi2, Vector{0.0, 0.0}, {Weighting::Perf});
    CHECK(uniform.vec() == Vector{0.5, 0.5});

    CategoryEmbeddings xi4;
    for (std::size_t i = 0; i < 4; ++i) {
        Vector e(4, 0.0);
        e[i] = 1.0;
        xi4.xi.emplace_back(e);
    }
    WeightingMode mask{Weighting::ExcelMask, 2};
    const auto m = model_embedding(xi4, Vector{1, 0, 1, 0}, mask);
    CHECK(m.vec() == Vector{0.5, 0.0, 0.5, 0.0});
}

TEST_CASE("Excel_perf_cost embedding equals a dense matrix-vector product") {
    const auto t = table1_without_gpt4();
    Rng rng(11);
    CategoryEmbeddings xi;
    const std::size_t d = 5;
    for (std::size_t m = 0; m < t.categories(); ++m) {
        Vector v(d);
        for (auto& x : v) x = rng.normal();
        xi.xi.emplace_back(v);
    }
    const WeightingMode mode{Weighting::ExcelPerfCost, 3, 0.05};
    const auto top = top_tau(round_scores(perf_cost_scores(t, 0.05), 3), 3);
    const auto yi = t.model_index("Yi 34B");
    const auto row = top.row(yi);

    // w = exp(row) / sum exp(row), zeros included; a = Xi w with Xi stored d x M.
    Vector w(row.size());
    double z = 0.0;
    for (std::size_t m = 0; m < row.size(); ++m) z += std::exp(row[m]);
    for (std::size_t m = 0; m < row.size(); ++m) w[m] = std::exp(row[m]) / z;
    Matrix Xi(d, t.categories());
    for (std::size_t m = 0; m < t.categories(); ++m)
        for (std::size_t i = 0; i < d; ++i) Xi(i, m) = xi.xi[m][i];
    Vector want(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t m = 0; m < t.categories(); ++m) want[i] += Xi(i, m) * w[m];

    const auto got = model_embedding(xi, row, mode);
    for (std::size_t i = 0; i < d; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-13));

    const auto all = model_embeddings(xi, t, mode);
    CHECK(all.size() == t.models());
}

TEST_CASE("exclude_unselected drops zeroed categories from the softmax") {
    CategoryEmbeddings xi{{EmbeddingVector{1.0, 0.0}, EmbeddingVector{0.0, 1.0}}, {}};
    WeightingMode mode{Weighting::ExcelPerfCost, 1};
    mode.exclude_unselected = true;
    const auto a = model_embedding(xi, Vector{0.0, 0.7}, mode);
    CHECK(a.vec() == Vector{0.0, 1.0});
    mode.exclude_unselected = false;
    const auto b = model_embedding(xi, Vector{0.0, 0.7}, mode);
    CHECK(b[0] > 0.0);
}

TEST_CASE("group_mean_embedding") {
    const std::vector<EmbeddingVector> g{EmbeddingVector{1.0, 0.0}, EmbeddingVector{0.0, 1.0}};
    CHECK(group_mean_embedding(g).vec() == Vector{0.5, 0.5});
    const std::vector<EmbeddingVector> one{EmbeddingVector{0.3, -2.0}};
    CHECK(group_mean_embedding(one) == one.front());
    CHECK_THROWS(group_mean_embedding(std::vector<EmbeddingVector>{}));
}

TEST_CASE("category_centroids") {
    std::map<std::size_t, std::vector<EmbeddingVector>> single{{0, {EmbeddingVector{0.6, 0.8}}}};
    CHECK(category_centroids(single).xi.front() == EmbeddingVector{0.6, 0.8});

    std::map<std::size_t, std::vector<EmbeddingVector>> anti{
        {0, {EmbeddingVector{1.0, 0.0}, EmbeddingVector{-1.0, 0.0}}}};
    CHECK(category_centroids(anti).xi.front().vec() == Vector{0.0, 0.0});
}

TEST_CASE("centroids of five synthetic samples sit nearest their own cluster") {
    Rng rng(5);
    data::SynthConfig cfg;
    cfg.categories = 7;
    cfg.per_category = 5;
    const auto ds = data::synth_clustered(cfg, rng);
    std::map<std::size_t, std::vector<EmbeddingVector>> groups;
    for (const auto& q : ds.queries) groups[*q.category].push_back(q.embedding);
    const auto c = category_centroids(groups);
    for (std::size_t m = 0; m < cfg.categories; ++m) {
        const double own = cosine(c.xi[m].values(), ds.centers[m].values());
        for (std::size_t o = 0; o < cfg.categories; ++o)
            if (o != m) CHECK(own > cosine(c.xi[m].values(), ds.centers[o].values()));
    }
}

TEST_CASE("weighting names round-trip") {
    for (auto w : {Weighting::Perf, Weighting::PerfCost, Weighting::ExcelPerfCost, Weighting::ExcelMask,
                   Weighting::GroupMean})
        CHECK(parse_weighting(to_string(w)) == w);
    CHECK(parse_weighting("excel_PERF_cost") == Weighting::ExcelPerfCost);
    CHECK_THROWS(parse_weighting("Excel"));
}
