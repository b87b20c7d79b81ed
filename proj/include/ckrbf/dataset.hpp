#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ckrbf/error.hpp"
#include "ckrbf/rng.hpp"

namespace ckrbf {

// Dense binary-classification dataset. Labels are strictly -1/+1.
struct Dataset {
    Eigen::MatrixXd features;  // n x d
    Eigen::VectorXd labels;    // n, entries in {-1,+1}
    std::string name;

    Eigen::Index n() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }
    Eigen::Index count_label(double y) const {
        return (labels.array() == y).count();
    }
    Eigen::Index n_neg() const { return count_label(-1.0); }
    Eigen::Index n_pos() const { return count_label(+1.0); }
};

// Throws unless the Dataset invariants hold (finite features, binary labels
// with both classes present, n >= 2, d >= 1).
inline void validate(const Dataset& ds) {
    if (ds.n() < 2) throw DataError(ds.name + ": need at least 2 samples");
    if (ds.dim() < 1) throw DataError(ds.name + ": need at least 1 feature");
    if (ds.labels.size() != ds.n())
        throw DataError(ds.name + ": label count does not match sample count");
    if (!ds.features.allFinite())
        throw DataError(ds.name + ": non-finite feature value");
    for (Eigen::Index i = 0; i < ds.labels.size(); ++i) {
        const double y = ds.labels[i];
        if (y != -1.0 && y != 1.0)
            throw DataError(ds.name + ": label not in {-1,+1}");
    }
    if (ds.n_neg() == 0 || ds.n_pos() == 0)
        throw DataError(ds.name + ": both classes must be present");
}

namespace detail {

// Shortest decimal representation that round-trips back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view tok, long line, const char* what) {
    // std::from_chars rejects an explicit plus sign, but libsvm labels
    // conventionally carry one.
    std::string_view body = tok;
    if (body.size() > 1 && body.front() == '+' && body[1] != '+' && body[1] != '-')
        body.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(body.data(), body.data() + body.size(), v);
    if (res.ec != std::errc{} || res.ptr != body.data() + body.size())
        throw ParseError(std::string("cannot parse ") + what + " '" + std::string(tok) + "'", line);
    if (!std::isfinite(v))
        throw ParseError(std::string("non-finite ") + what + " '" + std::string(tok) + "'", line);
    return v;
}

// Maps the two distinct raw labels onto {-1,+1}: smaller raw value -> -1.
inline Eigen::VectorXd map_labels(const std::vector<double>& raw, const std::string& name) {
    std::set<double> distinct(raw.begin(), raw.end());
    if (distinct.size() > 2)
        throw DataError(name + ": found " + std::to_string(distinct.size()) +
                        " distinct labels; only binary problems are supported");
    if (distinct.size() < 2)
        throw DataError(name + ": need two distinct labels, found " +
                        std::to_string(distinct.size()));
    const double neg_raw = *distinct.begin();
    Eigen::VectorXd y(static_cast<Eigen::Index>(raw.size()));
    for (std::size_t i = 0; i < raw.size(); ++i)
        y[static_cast<Eigen::Index>(i)] = raw[i] == neg_raw ? -1.0 : 1.0;
    return y;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace detail

// Reads the libsvm sparse text format: `<label> <index>:<value> ...` with
// 1-based strictly increasing indices. Width is the maximum index seen;
// absent entries are zero.
inline Dataset load_libsvm(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");

    std::vector<double> raw_labels;
    std::vector<std::vector<std::pair<int, double>>> rows;
    int max_index = 0;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = detail::split_ws(line);
        if (toks.empty()) continue;
        raw_labels.push_back(detail::parse_double(toks[0], lineno, "label"));
        std::vector<std::pair<int, double>> row;
        int prev_index = 0;
        for (std::size_t t = 1; t < toks.size(); ++t) {
            const auto tok = toks[t];
            const auto colon = tok.find(':');
            if (colon == std::string_view::npos)
                throw ParseError("expected 'index:value', got '" + std::string(tok) + "'", lineno);
            int idx = 0;
            auto res = std::from_chars(tok.data(), tok.data() + colon, idx);
            if (res.ec != std::errc{} || res.ptr != tok.data() + colon)
                throw ParseError("cannot parse feature index '" + std::string(tok) + "'", lineno);
            if (idx < 1)
                throw ParseError("feature index must be >= 1", lineno);
            if (idx <= prev_index)
                throw ParseError("feature indices must be strictly increasing", lineno);
            prev_index = idx;
            const double val = detail::parse_double(tok.substr(colon + 1), lineno, "feature value");
            row.emplace_back(idx, val);
            max_index = std::max(max_index, idx);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("'" + path.string() + "': no samples");

    Dataset ds;
    ds.name = path.stem().string();
    ds.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), max_index);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (const auto& [idx, val] : rows[i])
            ds.features(static_cast<Eigen::Index>(i), idx - 1) = val;
    ds.labels = detail::map_labels(raw_labels, ds.name);
    validate(ds);
    return ds;
}

// Writes libsvm format, omitting zero entries. The first sample always carries
// an entry for the last column so a reload recovers the exact width.
inline void save_libsvm(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    const Eigen::Index d = ds.dim();
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        out << (ds.labels[i] > 0 ? "+1" : "-1");
        for (Eigen::Index j = 0; j < d; ++j) {
            const double v = ds.features(i, j);
            if (v != 0.0 || (i == 0 && j == d - 1))
                out << ' ' << (j + 1) << ':' << detail::format_double(v);
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

// CSV with the label in the first column. A header row is detected and
// skipped when the first line fails to parse as numbers.
inline Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");

    auto split_csv = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        std::stringstream ss(s);
        while (std::getline(ss, cur, ',')) {
            while (!cur.empty() && (cur.back() == '\r' || cur.back() == ' ')) cur.pop_back();
            std::size_t b = 0;
            while (b < cur.size() && cur[b] == ' ') ++b;
            out.push_back(cur.substr(b));
        }
        return out;
    };
    auto all_numeric = [](const std::vector<std::string>& cells) {
        for (const auto& c : cells) {
            double v;
            auto res = std::from_chars(c.data(), c.data() + c.size(), v);
            if (res.ec != std::errc{} || res.ptr != c.data() + c.size()) return false;
        }
        return !cells.empty();
    };

    std::vector<double> raw_labels;
    std::vector<std::vector<double>> rows;
    std::string line;
    long lineno = 0;
    bool first = true;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv(line);
        if (first) {
            first = false;
            if (!all_numeric(cells)) continue;  // header row
        }
        if (cells.size() < 2)
            throw ParseError("need a label and at least one feature", lineno);
        if (width == 0) width = cells.size() - 1;
        if (cells.size() - 1 != width)
            throw ParseError("inconsistent column count", lineno);
        raw_labels.push_back(detail::parse_double(cells[0], lineno, "label"));
        std::vector<double> row(width);
        for (std::size_t j = 0; j < width; ++j)
            row[j] = detail::parse_double(cells[j + 1], lineno, "feature value");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("'" + path.string() + "': no samples");

    Dataset ds;
    ds.name = path.stem().string();
    ds.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    ds.labels = detail::map_labels(raw_labels, ds.name);
    validate(ds);
    return ds;
}

// Dispatches on extension: .csv goes through the CSV reader, everything else
// is treated as libsvm text.
inline Dataset load_dataset(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? load_csv(path) : load_libsvm(path);
}

// Per-feature affine map onto [0,1]. Constant columns map to 0.
struct FeatureScaler {
    Eigen::VectorXd mins;
    Eigen::VectorXd maxs;

    static FeatureScaler fit(const Eigen::MatrixXd& X) {
        FeatureScaler s;
        s.mins = X.colwise().minCoeff();
        s.maxs = X.colwise().maxCoeff();
        return s;
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
        if (X.cols() != mins.size())
            throw ArgumentError("scaler dimension mismatch");
        Eigen::MatrixXd out(X.rows(), X.cols());
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            const double range = maxs[j] - mins[j];
            if (range == 0.0)
                out.col(j).setZero();
            else
                out.col(j) = (X.col(j).array() - mins[j]) / range;
        }
        return out;
    }
};

inline Dataset scale_unit_interval(const Dataset& ds) {
    Dataset out = ds;
    out.features = FeatureScaler::fit(ds.features).apply(ds.features);
    return out;
}

// Cross-validation split: per-fold (train, test) index lists.
struct FoldPlan {
    std::vector<std::pair<std::vector<int>, std::vector<int>>> folds;
    int fold_count = 0;
};

// Stratified k-fold: indices of each class are shuffled by seed and dealt
// round-robin, so per-fold class counts differ from the even split by at
// most one.
inline FoldPlan stratified_kfold(const Dataset& ds, int folds, std::uint64_t seed) {
    if (folds < 2) throw ArgumentError("fold count must be >= 2");
    const auto n = ds.n();
    const auto n_neg = ds.n_neg();
    const auto n_pos = ds.n_pos();
    if (folds > std::min(n_neg, n_pos))
        std::cerr << "warning: " << folds << " folds exceeds the smaller class size ("
                  << std::min(n_neg, n_pos) << "); some folds will miss a class\n";

    std::vector<std::vector<int>> test_sets(static_cast<std::size_t>(folds));
    for (int cls = 0; cls < 2; ++cls) {
        const double y = cls == 0 ? -1.0 : 1.0;
        std::vector<int> idx;
        for (Eigen::Index i = 0; i < n; ++i)
            if (ds.labels[i] == y) idx.push_back(static_cast<int>(i));
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(cls)));
        shuffle_vector(idx, rng);
        for (std::size_t m = 0; m < idx.size(); ++m)
            test_sets[m % static_cast<std::size_t>(folds)].push_back(idx[m]);
    }

    FoldPlan plan;
    plan.fold_count = folds;
    for (auto& test : test_sets) {
        std::sort(test.begin(), test.end());
        std::vector<int> train;
        train.reserve(static_cast<std::size_t>(n) - test.size());
        std::size_t t = 0;
        for (int i = 0; i < static_cast<int>(n); ++i) {
            if (t < test.size() && test[t] == i)
                ++t;
            else
                train.push_back(i);
        }
        plan.folds.emplace_back(std::move(train), std::move(test));
    }
    return plan;
}

}  // namespace ckrbf
