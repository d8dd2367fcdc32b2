#include "mrn/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mrn/rng.hpp"

namespace mrn {

Dataset make_synthetic(const SyntheticSpec& spec) {
    if (spec.n_samples < 1 || spec.n_features < 1 || spec.n_classes < 1)
        throw std::invalid_argument("make_synthetic: counts must be positive");
    const int m = spec.informative > 0 ? spec.informative : spec.n_features;
    if (m > spec.n_features)
        throw std::invalid_argument("make_synthetic: informative > n_features");
    if (m < 63 && (1LL << m) < spec.n_classes)
        throw std::invalid_argument("make_synthetic: too few informative dims for distinct class means");

    Prng g(spec.seed);

    // Distinct sign-pattern means of unit norm on the informative dims.
    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(spec.n_classes, spec.n_features);
    std::set<std::vector<int>> seen;
    for (int c = 0; c < spec.n_classes; ++c) {
        std::vector<int> pattern(static_cast<std::size_t>(m));
        do {
            for (int j = 0; j < m; ++j)
                pattern[static_cast<std::size_t>(j)] = g.next_unit() < 0.5 ? -1 : 1;
        } while (!seen.insert(pattern).second);
        for (int j = 0; j < m; ++j)
            means(c, j) = pattern[static_cast<std::size_t>(j)] / std::sqrt(double(m));
    }

    Dataset d;
    d.n_classes = spec.n_classes;
    d.features.resize(spec.n_samples, spec.n_features);
    d.labels.resize(static_cast<std::size_t>(spec.n_samples));
    for (int i = 0; i < spec.n_samples; ++i) {
        const int c = i % spec.n_classes;
        d.labels[static_cast<std::size_t>(i)] = c;
        for (int j = 0; j < spec.n_features; ++j) {
            const double noise =
                spec.cluster_spread > 0.0 ? g.next_gaussian(spec.cluster_spread) : 0.0;
            d.features(i, j) = means(c, j) + noise;
        }
    }

    // Seeded row shuffle (Fisher-Yates).
    for (int i = spec.n_samples - 1; i > 0; --i) {
        const auto j = static_cast<int>(g.next_u64() % static_cast<std::uint64_t>(i + 1));
        d.features.row(i).swap(d.features.row(j));
        std::swap(d.labels[static_cast<std::size_t>(i)], d.labels[static_cast<std::size_t>(j)]);
    }
    return d;
}

Dataset load_csv(const std::string& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (has_header && line_no == 1) continue;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            while (first < last && (*first == ' ' || *first == '\t')) ++first;
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(first, last, v);
            while (ptr < last && (*ptr == ' ' || *ptr == '\t' || *ptr == '\r')) ++ptr;
            if (ec != std::errc() || ptr != last)
                throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                                         ": malformed value '" + cell + "'");
            row.push_back(v);
        }
        if (row.size() < 2)
            throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                                     ": need at least one feature and a label");
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("load_csv: line " + std::to_string(line_no) +
                                     ": inconsistent column count");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("load_csv: no data rows in " + path);

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto f = static_cast<Eigen::Index>(rows.front().size() - 1);
    Dataset d;
    d.features.resize(n, f);
    d.labels.resize(static_cast<std::size_t>(n));
    int max_label = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < f; ++j) d.features(i, j) = row[static_cast<std::size_t>(j)];
        const double lv = row.back();
        const int label = static_cast<int>(lv);
        if (label < 0 || static_cast<double>(label) != lv)
            throw std::runtime_error("load_csv: line " + std::to_string(i + 1 + (has_header ? 1 : 0)) +
                                     ": label must be a non-negative integer");
        d.labels[static_cast<std::size_t>(i)] = label;
        max_label = std::max(max_label, label);
    }
    d.n_classes = max_label + 1;
    return d;
}

std::pair<Dataset, Dataset> split_eval(const Dataset& data, Eigen::Index eval_samples) {
    if (eval_samples < 0 || eval_samples >= data.n_samples())
        throw std::invalid_argument("split_eval: eval_samples out of range");
    const Eigen::Index n_train = data.n_samples() - eval_samples;
    Dataset train, eval;
    train.n_classes = eval.n_classes = data.n_classes;
    train.features = data.features.topRows(n_train);
    eval.features = data.features.bottomRows(eval_samples);
    train.labels.assign(data.labels.begin(), data.labels.begin() + n_train);
    eval.labels.assign(data.labels.begin() + n_train, data.labels.end());
    return {std::move(train), std::move(eval)};
}

Dataset subset(const Dataset& data, std::span<const int> indices) {
    Dataset out;
    out.n_classes = data.n_classes;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), data.n_features());
    out.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        out.features.row(static_cast<Eigen::Index>(i)) = data.features.row(indices[i]);
        out.labels[i] = data.labels[static_cast<std::size_t>(indices[i])];
    }
    return out;
}

}  // namespace mrn
