#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fgts {

using Vector = std::vector<double>;

/// Raised when a vector that must be normalized has zero (or non-finite) norm.
class DegenerateVectorError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/**
 * Dense embedding coordinates of fixed dimension.
 *
 * Entries are validated as finite on construction. The unit-norm flag is
 * only set by normalize() (or by a caller that asserts it through
 * EmbeddingVector::unit), in which case the norm is checked to 1e-9.
 */
class EmbeddingVector {
  public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(Vector values);
    EmbeddingVector(std::initializer_list<double> values);

    static EmbeddingVector unit(Vector values);

    std::size_t dim() const { return values_.size(); }
    bool is_unit() const { return unit_; }
    std::span<const double> values() const { return values_; }
    const Vector& vec() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    bool operator==(const EmbeddingVector& other) const { return values_ == other.values_; }

  private:
    Vector values_;
    bool unit_ = false;
};

/// Unit-L2 rescaling; throws DegenerateVectorError on a zero vector.
EmbeddingVector normalize(const EmbeddingVector& v);
Vector normalized(std::span<const double> v);

struct ModelId {
    std::size_t index = 0;
    std::string label;
};

struct CategoryId {
    std::size_t index = 0;
    std::string label;
};

/// Row-major real matrix.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    Vector column(std::size_t c) const;

    const Vector& data() const { return data_; }

    bool operator==(const Matrix&) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

/**
 * Per-model, per-category performance and cost. Rows are models, columns are
 * categories (benchmarks).
 */
struct ScoreTable {
    Matrix perf;
    Matrix cost;
    std::vector<std::string> model_labels;
    std::vector<std::string> category_labels;
    bool has_cost = true;

    std::size_t models() const { return perf.rows(); }
    std::size_t categories() const { return perf.cols(); }

    /// Throws std::invalid_argument on shape mismatch, NaN or negative cost.
    void validate() const;

    /// Keep only the listed model rows, in the given order.
    ScoreTable select_models(std::span<const std::size_t> rows) const;
    /// Drop one category column.
    ScoreTable drop_category(std::size_t column) const;

    std::size_t model_index(const std::string& label) const;
    std::size_t category_index(const std::string& label) const;
};

/// One round's duel. y = +1 means arm1 was preferred, y = -1 means arm2 was.
struct PreferenceRecord {
    EmbeddingVector query;
    std::size_t arm1 = 0;
    std::size_t arm2 = 0;
    int y = 1;
};

/// Append-only list of observed duels; round() == records().size().
class History {
  public:
    void append(PreferenceRecord record);
    std::size_t round() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const std::vector<PreferenceRecord>& records() const { return records_; }
    const PreferenceRecord& operator[](std::size_t i) const { return records_[i]; }

  private:
    std::vector<PreferenceRecord> records_;
};

struct PosteriorSample {
    Vector theta;

    static PosteriorSample zeros(std::size_t dim) { return {Vector(dim, 0.0)}; }
    std::size_t dim() const { return theta.size(); }
};

struct RegretTrace {
    Vector instantaneous;
    Vector cumulative;

    /// Appends one round; negative input is rejected.
    void push(double regret);
    std::size_t rounds() const { return instantaneous.size(); }

    static RegretTrace from_instantaneous(std::span<const double> inst);
    /// Non-negative instantaneous, non-decreasing cumulative, prefix-sum match to 1e-9.
    bool valid() const;
};

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based sub-seed: mixing is keyed on (root, a, b, c), so adding
/// more runs or streams never changes the seeds handed to earlier ones.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

class Rng {
  public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    double uniform() { return uniform_(engine_); }
    double normal() { return normal_(engine_); }
    std::size_t index(std::size_t n);
    std::uint64_t next_u64() { return engine_(); }
    Rng split() { return Rng(splitmix64(engine_())); }

    std::uint64_t seed() const { return seed_; }
    engine_type& engine() { return engine_; }

  private:
    engine_type engine_;
    std::uint64_t seed_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

Rng seed_all(std::uint64_t seed);

}  // namespace fgts
