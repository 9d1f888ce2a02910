#include "uqt/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "uqt/error.hpp"
#include "uqt/random.hpp"

namespace uqt {

void PointRegressor::check_width(std::size_t cols) const {
    if (cols != n_features())
        throw ShapeError("expected " + std::to_string(n_features()) + " feature columns, got " + std::to_string(cols));
}

std::vector<double> PointRegressor::predict(const Matrix& X) const {
    check_width(X.cols());
    std::vector<double> out(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict_row(X.row(r));
    return out;
}

void TreeConfig::validate() const {
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
    if (max_depth && *max_depth < 0) throw ConfigError("max_depth must be >= 0");
    if (!(feature_fraction > 0.0 && feature_fraction <= 1.0)) throw ConfigError("feature_fraction must lie in (0, 1]");
}

namespace {

struct WorkItem {
    int node;
    std::size_t begin, end;
    int depth;
};

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = -1.0;
};

}  // namespace

RegressionTree RegressionTree::constant(double value, std::size_t n_features) {
    Node leaf;
    leaf.value = value;
    return RegressionTree({leaf}, n_features);
}

RegressionTree RegressionTree::fit(const Matrix& X, std::span<const double> y, std::span<const std::size_t> rows,
                                   const TreeConfig& config, std::uint64_t seed) {
    config.validate();
    if (rows.empty() || X.rows() == 0) throw FitError("cannot fit a tree on an empty sample");
    if (y.size() != X.rows()) throw ShapeError("X and y row counts differ");
    const std::size_t d = X.cols();
    const std::size_t min_leaf = static_cast<std::size_t>(config.min_samples_leaf);

    // Repeated rows (bootstrap draws) collapse into one weighted entry.
    std::vector<std::uint32_t> counts(X.rows(), 0);
    for (auto r : rows) {
        if (r >= X.rows()) throw ShapeError("training row index out of range");
        ++counts[r];
    }
    std::vector<std::size_t> unique_rows;
    for (std::size_t r = 0; r < X.rows(); ++r)
        if (counts[r] > 0) unique_rows.push_back(r);
    const std::size_t m = unique_rows.size();

    // Per-feature entry lists, each sorted by feature value and carrying the
    // target and multiplicity alongside. Every node owns the same [begin, end)
    // range in all lists.
    struct Entry {
        double x;
        double t;
        std::uint32_t p;
        std::uint32_t w;
    };
    std::vector<double> split_values(d * m);
    std::vector<Entry> sorted(d * m);
    for (std::size_t p = 0; p < m; ++p) {
        const auto r = unique_rows[p];
        for (std::size_t f = 0; f < d; ++f) {
            const double v = X(r, f);
            if (!std::isfinite(v)) throw FitError("non-finite feature value");
            split_values[f * m + p] = v;
            sorted[f * m + p] = {v, y[r], static_cast<std::uint32_t>(p), counts[r]};
        }
    }
    for (std::size_t f = 0; f < d; ++f) {
        auto first = sorted.begin() + static_cast<std::ptrdiff_t>(f * m);
        std::stable_sort(first, first + static_cast<std::ptrdiff_t>(m),
                         [](const Entry& a, const Entry& b) { return a.x < b.x; });
    }

    Rng rng(seed);
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), std::size_t{0});
    const std::size_t n_try =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(config.feature_fraction * static_cast<double>(d))));

    std::vector<Node> nodes(1);
    std::vector<WorkItem> stack{{0, 0, m, 0}};
    std::vector<char> goes_left(m);
    std::vector<Entry> buffer(m);
    std::vector<double> inv(rows.size() + 1, 0.0);
    for (std::size_t k = 1; k <= rows.size(); ++k) inv[k] = 1.0 / static_cast<double>(k);

    while (!stack.empty()) {
        const WorkItem item = stack.back();
        stack.pop_back();
        const Entry* list0 = sorted.data();  // any list covers the node set

        std::size_t n = 0;
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t k = item.begin; k < item.end; ++k) {
            const double t = list0[k].t;
            const double w = list0[k].w;
            n += list0[k].w;
            sum += w * t;
            sum_sq += w * t * t;
        }
        const double mean = sum / static_cast<double>(n);
        Node& node = nodes[static_cast<std::size_t>(item.node)];
        node.value = mean;
        node.n_samples = static_cast<int>(n);

        const double parent_score = sum * sum / static_cast<double>(n);
        const bool pure = sum_sq - parent_score <= 1e-12 * std::max(1.0, sum_sq);
        if (pure || n < 2 * min_leaf || (config.max_depth && item.depth >= *config.max_depth) || d == 0) continue;

        if (n_try < d) {
            for (std::size_t i = 0; i < n_try; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, d - 1);
                std::swap(features[i], features[pick(rng)]);
            }
        }
        std::vector<std::size_t> candidates(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(n_try));
        if (n_try < d) std::sort(candidates.begin(), candidates.end());

        Split best;
        for (auto f : candidates) {
            const Entry* list = sorted.data() + f * m;
            const double lo = list[item.begin].x;
            const double hi = list[item.end - 1].x;
            if (!(lo < hi)) continue;
            if (config.split_mode == SplitMode::best) {
                double left_sum = 0.0;
                std::size_t n_left = 0;
                for (std::size_t k = item.begin; k + 1 < item.end; ++k) {
                    left_sum += list[k].w * list[k].t;
                    n_left += list[k].w;
                    const std::size_t n_right = n - n_left;
                    if (n_left < min_leaf) continue;
                    if (n_right < min_leaf) break;
                    const double a = list[k].x;
                    const double b = list[k + 1].x;
                    if (!(a < b)) continue;
                    const double right_sum = sum - left_sum;
                    const double score = left_sum * left_sum * inv[n_left] + right_sum * right_sum * inv[n_right];
                    if (score > best.score) {
                        double thr = a + (b - a) / 2.0;
                        if (!(thr < b)) thr = a;
                        best = {static_cast<int>(f), thr, score};
                    }
                }
            } else {
                std::uniform_real_distribution<double> draw(lo, hi);
                const double thr = draw(rng);
                double left_sum = 0.0;
                std::size_t n_left = 0;
                for (std::size_t k = item.begin; k < item.end && list[k].x <= thr; ++k) {
                    left_sum += list[k].w * list[k].t;
                    n_left += list[k].w;
                }
                const std::size_t n_right = n - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;
                const double right_sum = sum - left_sum;
                const double score = left_sum * left_sum * inv[n_left] + right_sum * right_sum * inv[n_right];
                if (score > best.score) best = {static_cast<int>(f), thr, score};
            }
        }
        if (best.feature < 0 || !(best.score > parent_score + 1e-12 * std::abs(parent_score))) continue;

        // Partition every list stably around the chosen split.
        const double* split_col = split_values.data() + static_cast<std::size_t>(best.feature) * m;
        std::size_t n_left = 0;
        for (std::size_t k = item.begin; k < item.end; ++k) {
            const auto p = list0[k].p;
            goes_left[p] = split_col[p] <= best.threshold;
            n_left += goes_left[p] ? 1 : 0;
        }
        for (std::size_t f = 0; f < d; ++f) {
            Entry* list = sorted.data() + f * m;
            std::size_t li = item.begin, ri = 0;
            for (std::size_t k = item.begin; k < item.end; ++k) {
                if (goes_left[list[k].p]) list[li++] = list[k];
                else buffer[ri++] = list[k];
            }
            std::copy(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(ri), list + li);
        }

        const int left_id = static_cast<int>(nodes.size());
        const int right_id = left_id + 1;
        nodes.emplace_back();
        nodes.emplace_back();
        Node& parent = nodes[static_cast<std::size_t>(item.node)];
        parent.feature = best.feature;
        parent.threshold = best.threshold;
        parent.left = left_id;
        parent.right = right_id;
        stack.push_back({right_id, item.begin + n_left, item.end, item.depth + 1});
        stack.push_back({left_id, item.begin, item.begin + n_left, item.depth + 1});
    }
    return RegressionTree(std::move(nodes), d);
}

int RegressionTree::leaf_index(std::span<const double> x) const {
    int i = 0;
    while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
        const Node& nd = nodes_[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
    }
    return i;
}

std::size_t RegressionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

int RegressionTree::depth() const {
    if (nodes_.empty()) return 0;
    std::vector<int> depth(nodes_.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        if (n.is_leaf()) continue;
        depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
        depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
        best = std::max(best, depth[i] + 1);
    }
    return best;
}

RegressionTree fit_tree(const Matrix& X, std::span<const double> y, const TreeConfig& config, std::uint64_t seed) {
    if (X.rows() == 0) throw FitError("cannot fit a tree on an empty sample");
    std::vector<std::size_t> rows(X.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return RegressionTree::fit(X, y, rows, config, seed);
}

}  // namespace uqt
