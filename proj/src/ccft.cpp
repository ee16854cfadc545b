#include "fgts/ccft.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace fgts::ccft {

void CategoryEmbeddings::validate() const {
    if (xi.empty()) throw std::invalid_argument("CategoryEmbeddings: need at least one category");
    if (category_ids.size() != xi.size())
        throw std::invalid_argument("CategoryEmbeddings: id count does not match embeddings");
    for (const auto& v : xi)
        if (v.dim() != xi.front().dim())
            throw std::invalid_argument("CategoryEmbeddings: mixed dimensions");
}

std::string to_string(Weighting w) {
    switch (w) {
        case Weighting::Perf: return "Perf";
        case Weighting::PerfCost: return "Perf_cost";
        case Weighting::ExcelPerfCost: return "Excel_perf_cost";
        case Weighting::ExcelMask: return "Excel_mask";
        case Weighting::GroupMean: return "Group_mean";
    }
    return "unknown";
}

Weighting parse_weighting(const std::string& name) {
    std::string key;
    for (char c : name)
        if (c != '_' && c != '-') key.push_back(static_cast<char>(std::tolower(c)));
    if (key == "perf") return Weighting::Perf;
    if (key == "perfcost") return Weighting::PerfCost;
    if (key == "excelperfcost") return Weighting::ExcelPerfCost;
    if (key == "excelmask") return Weighting::ExcelMask;
    if (key == "groupmean") return Weighting::GroupMean;
    throw std::invalid_argument("unknown weighting mode: " + name);
}

Vector softmax(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("softmax: empty input");
    const double top = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(top)) throw std::invalid_argument("softmax: non-finite input");
    Vector out(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - top);
        total += out[i];
    }
    for (double& x : out) x /= total;
    return out;
}

Matrix perf_cost_scores(const ScoreTable& table, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("perf_cost_scores: lambda must be >= 0");
    Matrix out(table.models(), table.categories());
    for (std::size_t k = 0; k < table.models(); ++k)
        for (std::size_t m = 0; m < table.categories(); ++m)
            out(k, m) = table.perf(k, m) - lambda * table.cost(k, m);
    return out;
}

double round_to(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    // Nudge by a few ulps so that decimal halves like 0.5425 that land at
    // 542.4999999 in binary still round up.
    const double scaled = value * scale;
    const double nudged = scaled + std::copysign(1e-9 * std::max(1.0, std::abs(scaled)), scaled);
    return std::round(nudged) / scale;
}

Matrix round_scores(const Matrix& scores, int decimals) {
    Matrix out = scores;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (double& x : out.row(r)) x = round_to(x, decimals);
    return out;
}

double excel_threshold(std::span<const double> column, std::size_t tau) {
    if (tau < 1 || tau > column.size())
        throw std::invalid_argument("excel_threshold: tau must be in [1, K]");
    std::set<double, std::greater<>> distinct(column.begin(), column.end());
    // Fewer distinct values than tau: everything is selected.
    if (tau > distinct.size()) return *distinct.rbegin();
    return *std::next(distinct.begin(), static_cast<std::ptrdiff_t>(tau - 1));
}

namespace {

template <class Keep>
Matrix select_columns(const Matrix& scores, std::size_t tau, Keep keep) {
    Matrix out(scores.rows(), scores.cols());
    for (std::size_t m = 0; m < scores.cols(); ++m) {
        const Vector col = scores.column(m);
        const double thr = excel_threshold(col, tau);
        for (std::size_t k = 0; k < scores.rows(); ++k)
            out(k, m) = scores(k, m) >= thr ? keep(scores(k, m)) : 0.0;
    }
    return out;
}

}  // namespace

Matrix top_tau(const Matrix& scores, std::size_t tau) {
    return select_columns(scores, tau, [](double v) { return v; });
}

Matrix mask_tau(const Matrix& scores, std::size_t tau) {
    return select_columns(scores, tau, [](double) { return 1.0; });
}

EmbeddingVector mix_categories(const CategoryEmbeddings& xi, std::span<const double> weights) {
    if (weights.size() != xi.categories())
        throw std::invalid_argument("model_embedding: score length " +
                                    std::to_string(weights.size()) + " != categories " +
                                    std::to_string(xi.categories()));
    Vector out(xi.dim(), 0.0);
    for (std::size_t m = 0; m < xi.categories(); ++m) {
        const auto col = xi.xi[m].values();
        if (col.size() != out.size())
            throw std::invalid_argument("model_embedding: category embedding dimension mismatch");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += weights[m] * col[i];
    }
    return EmbeddingVector(std::move(out));
}

EmbeddingVector model_embedding(const CategoryEmbeddings& xi, std::span<const double> scores,
                                const WeightingMode& mode) {
    switch (mode.variant) {
        case Weighting::Perf:
        case Weighting::PerfCost: return mix_categories(xi, softmax(scores));
        case Weighting::ExcelPerfCost: {
            if (!mode.exclude_unselected) return mix_categories(xi, softmax(scores));
            Vector masked(scores.begin(), scores.end());
            bool any = false;
            for (double& s : masked) {
                if (s == 0.0)
                    s = -std::numeric_limits<double>::infinity();
                else
                    any = true;
            }
            if (!any) return mix_categories(xi, softmax(scores));
            const double top = *std::max_element(masked.begin(), masked.end());
            double total = 0.0;
            for (double& s : masked) {
                s = std::exp(s - top);
                total += s;
            }
            for (double& s : masked) s /= total;
            return mix_categories(xi, masked);
        }
        case Weighting::ExcelMask: {
            if (mode.tau == 0) throw std::invalid_argument("model_embedding: tau must be >= 1");
            Vector w(scores.begin(), scores.end());
            for (double& x : w) x /= static_cast<double>(mode.tau);
            return mix_categories(xi, w);
        }
        case Weighting::GroupMean:
            throw std::invalid_argument("model_embedding: Group_mean needs query groups, not scores");
    }
    throw std::logic_error("model_embedding: unhandled mode");
}

Matrix weighting_scores(const ScoreTable& table, const WeightingMode& mode) {
    switch (mode.variant) {
        case Weighting::Perf: return table.perf;
        case Weighting::PerfCost: return perf_cost_scores(table, mode.lambda);
        case Weighting::ExcelPerfCost: return top_tau(perf_cost_scores(table, mode.lambda), mode.tau);
        case Weighting::ExcelMask: return mask_tau(perf_cost_scores(table, mode.lambda), mode.tau);
        case Weighting::GroupMean: break;
    }
    throw std::invalid_argument("weighting_scores: Group_mean has no score rows");
}

std::vector<EmbeddingVector> model_embeddings(const CategoryEmbeddings& xi,
                                              const ScoreTable& table,
                                              const WeightingMode& mode) {
    const Matrix scores = weighting_scores(table, mode);
    std::vector<EmbeddingVector> out;
    out.reserve(scores.rows());
    for (std::size_t k = 0; k < scores.rows(); ++k)
        out.push_back(model_embedding(xi, scores.row(k), mode));
    return out;
}

EmbeddingVector group_mean_embedding(std::span<const EmbeddingVector> group) {
    if (group.empty()) throw std::invalid_argument("group_mean_embedding: empty group");
    Vector sum(group.front().dim(), 0.0);
    for (const auto& q : group) {
        if (q.dim() != sum.size())
            throw std::invalid_argument("group_mean_embedding: mixed dimensions");
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += q[i];
    }
    for (double& x : sum) x /= static_cast<double>(group.size());
    return EmbeddingVector(std::move(sum));
}

CategoryEmbeddings category_centroids(
    const std::map<std::size_t, std::vector<EmbeddingVector>>& offline,
    const std::vector<std::string>& labels) {
    CategoryEmbeddings out;
    for (const auto& [index, queries] : offline) {
        if (queries.empty())
            throw std::invalid_argument("category_centroids: category " + std::to_string(index) +
                                        " has no offline queries");
        out.xi.push_back(group_mean_embedding(queries));
        std::string label = index < labels.size() ? labels[index] : "cat" + std::to_string(index);
        out.category_ids.push_back({index, std::move(label)});
    }
    out.validate();
    return out;
}

}  // namespace fgts::ccft
