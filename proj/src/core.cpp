#include "fgts/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fgts {

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("dot: dimension mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

EmbeddingVector::EmbeddingVector(Vector values) : values_(std::move(values)) {
    for (double x : values_)
        if (!std::isfinite(x)) throw std::invalid_argument("EmbeddingVector: non-finite entry");
}

EmbeddingVector::EmbeddingVector(std::initializer_list<double> values)
    : EmbeddingVector(Vector(values)) {}

EmbeddingVector EmbeddingVector::unit(Vector values) {
    EmbeddingVector v(std::move(values));
    if (std::abs(l2_norm(v.values_) - 1.0) > 1e-9)
        throw std::invalid_argument("EmbeddingVector::unit: norm differs from 1 by more than 1e-9");
    v.unit_ = true;
    return v;
}

Vector normalized(std::span<const double> v) {
    const double n = l2_norm(v);
    if (!(n > 0.0) || !std::isfinite(n))
        throw DegenerateVectorError("cannot normalize a zero vector (degenerate embedding)");
    Vector out(v.begin(), v.end());
    for (double& x : out) x /= n;
    return out;
}

EmbeddingVector normalize(const EmbeddingVector& v) {
    if (v.is_unit()) return v;
    return EmbeddingVector::unit(normalized(v.values()));
}

Vector Matrix::column(std::size_t c) const {
    Vector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

void ScoreTable::validate() const {
    const std::size_t k = perf.rows(), m = perf.cols();
    if (cost.rows() != k || cost.cols() != m)
        throw std::invalid_argument("ScoreTable: perf and cost shapes differ");
    if (model_labels.size() != k || category_labels.size() != m)
        throw std::invalid_argument("ScoreTable: label count does not match matrix shape");
    for (double v : perf.data())
        if (std::isnan(v)) throw std::invalid_argument("ScoreTable: NaN perf entry");
    for (double v : cost.data()) {
        if (std::isnan(v)) throw std::invalid_argument("ScoreTable: NaN cost entry");
        if (v < 0.0) throw std::invalid_argument("ScoreTable: negative cost entry");
    }
    for (const auto& l : model_labels)
        if (l.empty()) throw std::invalid_argument("ScoreTable: empty model label");
    for (const auto& l : category_labels)
        if (l.empty()) throw std::invalid_argument("ScoreTable: empty category label");
}

ScoreTable ScoreTable::select_models(std::span<const std::size_t> rows) const {
    ScoreTable out;
    out.perf = Matrix(rows.size(), categories());
    out.cost = Matrix(rows.size(), categories());
    out.category_labels = category_labels;
    out.has_cost = has_cost;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        if (r >= models()) throw std::out_of_range("ScoreTable::select_models: row out of range");
        out.model_labels.push_back(model_labels[r]);
        for (std::size_t c = 0; c < categories(); ++c) {
            out.perf(i, c) = perf(r, c);
            out.cost(i, c) = cost(r, c);
        }
    }
    return out;
}

ScoreTable ScoreTable::drop_category(std::size_t column) const {
    if (column >= categories()) throw std::out_of_range("ScoreTable::drop_category");
    ScoreTable out;
    out.perf = Matrix(models(), categories() - 1);
    out.cost = Matrix(models(), categories() - 1);
    out.model_labels = model_labels;
    out.has_cost = has_cost;
    for (std::size_t c = 0, oc = 0; c < categories(); ++c) {
        if (c == column) continue;
        out.category_labels.push_back(category_labels[c]);
        for (std::size_t r = 0; r < models(); ++r) {
            out.perf(r, oc) = perf(r, c);
            out.cost(r, oc) = cost(r, c);
        }
        ++oc;
    }
    return out;
}

std::size_t ScoreTable::model_index(const std::string& label) const {
    auto it = std::find(model_labels.begin(), model_labels.end(), label);
    if (it == model_labels.end()) throw std::out_of_range("unknown model label: " + label);
    return static_cast<std::size_t>(it - model_labels.begin());
}

std::size_t ScoreTable::category_index(const std::string& label) const {
    auto it = std::find(category_labels.begin(), category_labels.end(), label);
    if (it == category_labels.end()) throw std::out_of_range("unknown category label: " + label);
    return static_cast<std::size_t>(it - category_labels.begin());
}

void History::append(PreferenceRecord record) {
    if (record.y != 1 && record.y != -1)
        throw std::invalid_argument("PreferenceRecord: y must be +1 or -1");
    records_.push_back(std::move(record));
}

void RegretTrace::push(double regret) {
    // Tiny negative values come from floating-point cancellation when both
    // arms are optimal.
    if (regret < 0.0) {
        if (regret < -1e-12) throw std::invalid_argument("RegretTrace: negative regret");
        regret = 0.0;
    }
    instantaneous.push_back(regret);
    cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + regret);
}

RegretTrace RegretTrace::from_instantaneous(std::span<const double> inst) {
    RegretTrace t;
    t.instantaneous.reserve(inst.size());
    t.cumulative.reserve(inst.size());
    for (double r : inst) t.push(r);
    return t;
}

bool RegretTrace::valid() const {
    if (instantaneous.size() != cumulative.size()) return false;
    double sum = 0.0;
    for (std::size_t t = 0; t < instantaneous.size(); ++t) {
        if (!(instantaneous[t] >= 0.0)) return false;
        if (t > 0 && cumulative[t] < cumulative[t - 1]) return false;
        sum += instantaneous[t];
        if (std::abs(sum - cumulative[t]) > 1e-9) return false;
    }
    return true;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix64(root);
    h = splitmix64(h ^ splitmix64(a + 1));
    h = splitmix64(h ^ splitmix64(b + 0x1000));
    h = splitmix64(h ^ splitmix64(c + 0x2000));
    return h;
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: empty range");
    std::uniform_int_distribution<std::size_t> d(0, n - 1);
    return d(engine_);
}

Rng seed_all(std::uint64_t seed) { return Rng(seed); }

}  // namespace fgts
