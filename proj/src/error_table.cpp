#include <fkit/error_table.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <fkit/error.hpp>
#include <fkit/linalg.hpp>

namespace fkit {

ErrorTable::ErrorTable(FeatureSpace space) : space_(std::move(space))
{
    Dimensions d = space_.dimensions();
    ordered_columns_ = std::move(d.ordered);
    unordered_columns_ = std::move(d.unordered);
}

void ErrorTable::insert(const Point& point, double score, std::uint64_t run_id)
{
    FlatPoint flat = space_.flatten(point);
    insert(ErrorRow{run_id, score, std::move(flat.reals), std::move(flat.atoms)});
}

void ErrorTable::insert(ErrorRow row)
{
    if (!std::isfinite(row.score))
        throw Error(ErrorKind::InvalidArgument, "error-table scores must be finite");
    if (static_cast<std::size_t>(row.reals.size()) != ordered_columns_.size() ||
        row.atoms.size() != unordered_columns_.size())
        throw Error(ErrorKind::PointSpaceMismatch, "row shape does not match the table's columns");
    // validates ranges and set membership
    space_.unflatten(row.reals, row.atoms);
    if (!run_ids_.insert(row.run_id).second)
        throw Error(ErrorKind::DuplicateRunId, "run " + std::to_string(row.run_id) + " already recorded");
    rows_.push_back(std::move(row));
}

Eigen::MatrixXd ErrorTable::ordered_matrix() const
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_.size()), static_cast<Eigen::Index>(ordered_columns_.size()));
    for (std::size_t r = 0; r < rows_.size(); ++r)
        m.row(static_cast<Eigen::Index>(r)) = rows_[r].reals.transpose();
    return m;
}

// ---------------------------------------------------------------------------
// Analysis

PcaReport pca_analyze(const ErrorTable& table)
{
    if (table.ordered_columns().empty())
        throw Error(ErrorKind::NoOrderedColumns, "table has no ordered columns");
    if (table.size() < 2)
        throw Error(ErrorKind::InsufficientRows,
                    "PCA needs at least 2 rows, table has " + std::to_string(table.size()));

    const Eigen::VectorXd width = table.space().widths();
    const Eigen::MatrixXd data = table.ordered_matrix();
    const Eigen::MatrixXd standardized = data.array().rowwise() / width.transpose().array();
    auto pc = principal_components(standardized);

    PcaReport report;
    report.components = std::move(pc.components);
    report.explained_variance = std::move(pc.explained_variance);
    report.mean = data.colwise().mean().transpose();
    report.scale = width;
    report.columns = table.ordered_columns();
    return report;
}

RecurrenceReport recurrent_values(const ErrorTable& table, double support_threshold)
{
    if (!(support_threshold > 0.0 && support_threshold <= 1.0))
        throw Error(ErrorKind::InvalidArgument, "support threshold must lie in (0, 1]");
    const auto& columns = table.unordered_columns();
    if (columns.empty())
        throw Error(ErrorKind::NoUnorderedColumns, "table has no unordered columns");
    if (table.empty())
        throw Error(ErrorKind::EmptyTable, "table has no rows");

    const double n = static_cast<double>(table.size());
    RecurrenceReport report;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto& leaf = table.space().unordered()[c];
        std::vector<std::size_t> counts(leaf.values.size(), 0);
        for (const auto& row : table.rows())
            ++counts[*leaf.index_of(row.atoms[c])];
        std::vector<std::size_t> order(leaf.values.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
        std::vector<AtomFrequency> freqs;
        for (std::size_t k : order)
            if (counts[k] > 0)
                freqs.push_back({leaf.values[k], static_cast<double>(counts[k]) / n});
        report.frequencies.emplace_back(columns[c], std::move(freqs));
    }

    // Exhaustive over column subsets of size <= 3.
    const std::size_t m = columns.size();
    std::vector<std::vector<std::size_t>> subsets;
    for (std::size_t a = 0; a < m; ++a) {
        subsets.push_back({a});
        for (std::size_t b = a + 1; b < m; ++b) {
            subsets.push_back({a, b});
            for (std::size_t c = b + 1; c < m; ++c)
                subsets.push_back({a, b, c});
        }
    }
    std::stable_sort(subsets.begin(), subsets.end(),
                     [](const auto& x, const auto& y) { return x.size() < y.size(); });

    for (const auto& subset : subsets) {
        std::map<std::vector<Atom>, std::size_t> counts;
        std::vector<std::vector<Atom>> first_seen;
        for (const auto& row : table.rows()) {
            std::vector<Atom> key;
            for (std::size_t c : subset)
                key.push_back(row.atoms[c]);
            if (counts[key]++ == 0)
                first_seen.push_back(key);
        }
        std::vector<ValueCombination> found;
        for (const auto& key : first_seen) {
            const double support = static_cast<double>(counts[key]) / n;
            if (support >= support_threshold) {
                ValueCombination combo;
                for (std::size_t i = 0; i < subset.size(); ++i)
                    combo.values.emplace_back(columns[subset[i]], key[i]);
                combo.support = support;
                found.push_back(std::move(combo));
            }
        }
        std::stable_sort(found.begin(), found.end(),
                         [](const auto& x, const auto& y) { return x.support > y.support; });
        for (auto& f : found)
            report.combinations.push_back(std::move(f));
    }
    std::stable_sort(report.combinations.begin(), report.combinations.end(), [](const auto& x, const auto& y) {
        return x.values.size() < y.values.size();
    });
    return report;
}

std::vector<ErrorRow> select_random(const ErrorTable& table, std::size_t k, Rng& rng)
{
    if (table.empty())
        throw Error(ErrorKind::EmptyTable, "table has no rows");
    if (k < 1)
        throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
    if (k >= table.size())
        return table.rows();
    // partial Fisher-Yates
    std::vector<std::size_t> idx(table.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<ErrorRow> out;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.index(idx.size() - i);
        std::swap(idx[i], idx[j]);
        out.push_back(table.rows()[idx[i]]);
    }
    return out;
}

double row_distance(const ErrorTable& table, const FlatPoint& anchor, const ErrorRow& row)
{
    const Eigen::VectorXd width = table.space().widths();
    double d = ((row.reals - anchor.reals).array() / width.array()).matrix().norm();
    for (std::size_t c = 0; c < row.atoms.size(); ++c)
        if (!(row.atoms[c] == anchor.atoms[c]))
            d += 1.0;
    return d;
}

std::vector<Neighbor> select_k_closest(const ErrorTable& table, const Point& anchor, std::size_t k)
{
    const FlatPoint a = table.space().flatten(anchor);
    if (table.empty())
        throw Error(ErrorKind::EmptyTable, "table has no rows");
    std::vector<Neighbor> all;
    all.reserve(table.size());
    for (const auto& row : table.rows())
        all.push_back({row, row_distance(table, a, row)});
    std::sort(all.begin(), all.end(), [](const Neighbor& x, const Neighbor& y) {
        if (x.distance != y.distance)
            return x.distance < y.distance;
        return x.row.run_id < y.row.run_id;
    });
    if (k < all.size())
        all.resize(k);
    return all;
}

std::vector<Point> generate_pca_samples(const ErrorTable& table, std::size_t n, double scale, Rng& rng)
{
    if (!(scale >= 0.0) || !std::isfinite(scale))
        throw Error(ErrorKind::InvalidArgument, "scale must be finite and non-negative");
    const PcaReport pca = pca_analyze(table);
    const FeatureSpace& space = table.space();
    const Eigen::VectorXd lo = space.lower_bounds();
    const Eigen::VectorXd hi = space.upper_bounds();
    const Eigen::VectorXd spread = (pca.explained_variance.array().sqrt() * scale).matrix();

    // empirical atom frequencies
    std::vector<std::vector<double>> weights;
    for (std::size_t c = 0; c < space.unordered().size(); ++c) {
        const auto& leaf = space.unordered()[c];
        std::vector<double> w(leaf.values.size(), 0.0);
        for (const auto& row : table.rows())
            w[*leaf.index_of(row.atoms[c])] += 1.0;
        weights.push_back(std::move(w));
    }
    auto draw_atom = [&](std::size_t c) {
        const auto& w = weights[c];
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        const double u = rng.uniform() * total;
        double acc = 0.0;
        std::size_t last = 0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            if (w[k] <= 0.0)
                continue;
            last = k;
            acc += w[k];
            if (u < acc)
                return space.unordered()[c].values[k];
        }
        return space.unordered()[c].values[last];
    };

    std::vector<Point> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        bool accepted = false;
        for (std::size_t attempt = 0; attempt < space.rejection_budget(); ++attempt) {
            Eigen::VectorXd z = Eigen::VectorXd::Zero(pca.mean.size());
            for (Eigen::Index k = 0; k < spread.size(); ++k)
                if (spread[k] > 0.0)
                    z += spread[k] * rng.normal() * pca.components.row(k).transpose();
            const Eigen::VectorXd x = (pca.mean + z.cwiseProduct(pca.scale)).cwiseMax(lo).cwiseMin(hi);
            std::vector<Atom> atoms;
            for (std::size_t c = 0; c < space.unordered().size(); ++c)
                atoms.push_back(draw_atom(c));
            Point p = space.unflatten(x, atoms);
            if (space.satisfies_constraints(p)) {
                out.push_back(std::move(p));
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw Error(ErrorKind::RejectionBudgetExhausted, "PCA samples keep violating the constraints");
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string csv_escape(const std::string& field)
{
    if (field.find_first_of(",\"\n\r") == std::string::npos)
        return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line)
{
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

void write_csv(const ErrorTable& table, std::ostream& out)
{
    out << "run_id,score";
    for (const auto& c : table.ordered_columns())
        out << ',' << csv_escape(c);
    for (const auto& c : table.unordered_columns())
        out << ',' << csv_escape(c);
    out << '\n';
    for (const auto& row : table.rows()) {
        out << row.run_id << ',' << format_real(row.score);
        for (Eigen::Index i = 0; i < row.reals.size(); ++i)
            out << ',' << format_real(row.reals[i]);
        for (const auto& a : row.atoms)
            out << ',' << csv_escape(a.to_string());
        out << '\n';
    }
}

namespace {

double parse_real(const std::string& s, const std::string& what)
{
    if (s.empty())
        throw Error(ErrorKind::SchemaMismatch, "empty " + what);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE)
        throw Error(ErrorKind::SchemaMismatch, "cannot parse " + what + " '" + s + "'");
    return v;
}

} // namespace

ErrorTable read_csv(const FeatureSpace& space, std::istream& in)
{
    ErrorTable table(space);
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::SchemaMismatch, "missing header line");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    std::vector<std::string> expected = {"run_id", "score"};
    expected.insert(expected.end(), table.ordered_columns().begin(), table.ordered_columns().end());
    expected.insert(expected.end(), table.unordered_columns().begin(), table.unordered_columns().end());
    const std::vector<std::string> header = csv_split(line);
    if (header != expected) {
        for (const auto& col : expected)
            if (std::find(header.begin(), header.end(), col) == header.end())
                throw Error(ErrorKind::SchemaMismatch, "missing column '" + col + "'");
        throw Error(ErrorKind::SchemaMismatch, "header columns differ from the space's leaf paths");
    }

    const std::size_t d = table.ordered_columns().size();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto fields = csv_split(line);
        if (fields.size() != expected.size())
            throw Error(ErrorKind::SchemaMismatch, "line " + std::to_string(line_no) + " has " +
                                                       std::to_string(fields.size()) + " fields, expected " +
                                                       std::to_string(expected.size()));
        ErrorRow row;
        char* end = nullptr;
        row.run_id = std::strtoull(fields[0].c_str(), &end, 10);
        if (fields[0].empty() || end != fields[0].c_str() + fields[0].size())
            throw Error(ErrorKind::SchemaMismatch, "bad run_id on line " + std::to_string(line_no));
        row.score = parse_real(fields[1], "score");
        row.reals.resize(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i)
            row.reals[static_cast<Eigen::Index>(i)] = parse_real(fields[2 + i], expected[2 + i]);
        for (std::size_t c = 0; c < table.unordered_columns().size(); ++c) {
            const auto& leaf = space.unordered()[c];
            const std::string& text = fields[2 + d + c];
            auto it = std::find_if(leaf.values.begin(), leaf.values.end(),
                                   [&](const Atom& a) { return a.to_string() == text; });
            if (it == leaf.values.end())
                throw Error(ErrorKind::SchemaMismatch, "'" + text + "' is not a value of '" + leaf.path + "'");
            row.atoms.push_back(*it);
        }
        try {
            table.insert(std::move(row));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::DuplicateRunId)
                throw;
            throw Error(ErrorKind::SchemaMismatch, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return table;
}

void export_csv(const ErrorTable& table, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
    write_csv(table, out);
    if (!out)
        throw Error(ErrorKind::IoError, "failed writing '" + path.string() + "'");
}

ErrorTable import_csv(const FeatureSpace& space, const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
    return read_csv(space, in);
}

} // namespace fkit
