#ifndef FKIT_ERROR_TABLE_HPP
#define FKIT_ERROR_TABLE_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include <fkit/feature_space.hpp>
#include <fkit/random.hpp>

namespace fkit {

struct ErrorRow {
    std::uint64_t run_id;
    double score;
    Eigen::VectorXd reals;
    std::vector<Atom> atoms;

    friend bool operator==(const ErrorRow& a, const ErrorRow& b)
    {
        return a.run_id == b.run_id && a.score == b.score && a.reals.size() == b.reals.size() &&
               (a.reals.array() == b.reals.array()).all() && a.atoms == b.atoms;
    }
};

/// Counterexample rows against abstract-feature columns. One column per scalar
/// leaf: ordered columns are box coordinates, unordered columns finite sets.
class ErrorTable {
public:
    explicit ErrorTable(FeatureSpace space);

    /// Throws PointSpaceMismatch, DuplicateRunId, or InvalidArgument for a
    /// non-finite score.
    void insert(const Point& point, double score, std::uint64_t run_id);
    void insert(ErrorRow row);

    const FeatureSpace& space() const { return space_; }
    const std::vector<LeafPath>& ordered_columns() const { return ordered_columns_; }
    const std::vector<LeafPath>& unordered_columns() const { return unordered_columns_; }
    const std::vector<ErrorRow>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }

    Point point(const ErrorRow& row) const { return space_.unflatten(row.reals, row.atoms); }
    /// rows × ordered columns.
    Eigen::MatrixXd ordered_matrix() const;

    friend bool operator==(const ErrorTable& a, const ErrorTable& b)
    {
        return a.ordered_columns_ == b.ordered_columns_ && a.unordered_columns_ == b.unordered_columns_ &&
               a.rows_ == b.rows_;
    }

private:
    FeatureSpace space_;
    std::vector<LeafPath> ordered_columns_;
    std::vector<LeafPath> unordered_columns_;
    std::vector<ErrorRow> rows_;
    std::set<std::uint64_t> run_ids_;
};

/// PCA over the ordered columns after centering and dividing each column by
/// its leaf width. `components` and `explained_variance` live in those width
/// units; `mean` is in the leaves' own units.
struct PcaReport {
    Eigen::MatrixXd components; ///< rows are principal directions
    Eigen::VectorXd explained_variance;
    Eigen::VectorXd mean;
    Eigen::VectorXd scale; ///< leaf widths used for standardization
    std::vector<LeafPath> columns;
};

PcaReport pca_analyze(const ErrorTable& table);

struct AtomFrequency {
    Atom atom;
    double frequency;
};

struct ValueCombination {
    std::vector<std::pair<LeafPath, Atom>> values;
    double support;
};

struct RecurrenceReport {
    /// Per unordered column, atoms by decreasing frequency.
    std::vector<std::pair<LeafPath, std::vector<AtomFrequency>>> frequencies;
    /// Every value-combination over column subsets of size 1 to 3 whose
    /// support reaches the threshold; ordered by size, then support.
    std::vector<ValueCombination> combinations;
};

RecurrenceReport recurrent_values(const ErrorTable& table, double support_threshold);

/// k rows uniformly without replacement (all rows, in table order, if k >= size).
std::vector<ErrorRow> select_random(const ErrorTable& table, std::size_t k, Rng& rng);

struct Neighbor {
    ErrorRow row;
    double distance;
};

/// Euclidean distance on width-normalized ordered coordinates plus a 0/1
/// Hamming term per unordered column.
double row_distance(const ErrorTable& table, const FlatPoint& anchor, const ErrorRow& row);

/// k nearest rows, by non-decreasing distance, ties broken by lower run_id.
std::vector<Neighbor> select_k_closest(const ErrorTable& table, const Point& anchor, std::size_t k);

/// New points around the table mean, jittered along every principal direction
/// with stddev scale * sqrt(explained variance), clipped to the leaf bounds.
/// Unordered leaves follow the table's empirical frequencies. Declarative
/// constraints are enforced by rejection.
std::vector<Point> generate_pca_samples(const ErrorTable& table, std::size_t n, double scale, Rng& rng);

/// Header: run_id, score, then ordered and unordered leaf paths. Reals use 17
/// significant digits.
void write_csv(const ErrorTable& table, std::ostream& out);
ErrorTable read_csv(const FeatureSpace& space, std::istream& in);
void export_csv(const ErrorTable& table, const std::filesystem::path& path);
ErrorTable import_csv(const FeatureSpace& space, const std::filesystem::path& path);

/// CSV field helpers shared with the other tabular outputs.
std::string csv_escape(const std::string& field);
std::vector<std::string> csv_split(const std::string& line);

} // namespace fkit

#endif
