#include "bxt/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bxt/errors.hpp"

namespace bxt {

namespace {

double gini(double w, double w_pos) {
    if (!(w > 0.0)) return 0.0;
    const double p = w_pos / w;
    return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

struct NodeTotals {
    double weight = 0.0;
    double weight_pos = 0.0;
};

NodeTotals node_totals(const Dataset& ds, std::span<const double> weights,
                       std::span<const std::uint32_t> idx) {
    NodeTotals t;
    for (std::uint32_t r : idx) {
        const double w = weights[r];
        t.weight += w;
        if (ds.labels[r] > 0) t.weight_pos += w;
    }
    return t;
}

void check_config(const TreeConfig& cfg, std::size_t d) {
    if (cfg.max_depth < 1) throw DataError("max_depth must be >= 1");
    if (cfg.min_samples_leaf < 1) {
        throw DataError("min_samples_leaf must be >= 1");
    }
    if (cfg.k_features > static_cast<int>(d)) {
        throw DataError("k_features exceeds the feature count");
    }
    if (!(cfg.min_weighted_fraction_split >= 0.0 &&
          cfg.min_weighted_fraction_split < 1.0)) {
        throw DataError("min_weighted_fraction_split must lie in [0,1)");
    }
}

int resolve_k(const TreeConfig& cfg, std::size_t d) {
    if (cfg.k_features > 0) return cfg.k_features;
    return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
}

} // namespace

double gini_gain(double w_left, double w_left_pos, double w_right,
                 double w_right_pos) {
    const double w = w_left + w_right;
    if (!(w > 0.0)) return 0.0;
    const double gain = gini(w, w_left_pos + w_right_pos) -
                        (w_left / w) * gini(w_left, w_left_pos) -
                        (w_right / w) * gini(w_right, w_right_pos);
    // mathematically >= 0; clear rounding dust
    return gain > 0.0 ? gain : 0.0;
}

std::optional<SplitCandidate> random_split(const Dataset& ds,
                                           std::span<const double> weights,
                                           std::span<const std::uint32_t> idx,
                                           int k, Rng& rng) {
    const std::size_t d = ds.n_cols;
    std::vector<double> fmin(d, std::numeric_limits<double>::infinity());
    std::vector<double> fmax(d, -std::numeric_limits<double>::infinity());
    for (std::uint32_t r : idx) {
        const double* row = ds.features.data() + static_cast<std::size_t>(r) * d;
        for (std::size_t c = 0; c < d; ++c) {
            fmin[c] = std::min(fmin[c], row[c]);
            fmax[c] = std::max(fmax[c], row[c]);
        }
    }
    std::vector<int> usable;
    for (std::size_t c = 0; c < d; ++c) {
        if (fmin[c] < fmax[c]) usable.push_back(static_cast<int>(c));
    }
    if (usable.empty()) return std::nullopt;

    const std::size_t kk = std::min<std::size_t>(
        usable.size(), static_cast<std::size_t>(std::max(k, 1)));
    for (std::size_t i = 0; i < kk; ++i) {
        const std::size_t j = i + rng.uniform_index(usable.size() - i);
        std::swap(usable[i], usable[j]);
    }
    std::vector<int> chosen(usable.begin(), usable.begin() + kk);
    std::sort(chosen.begin(), chosen.end());

    const NodeTotals parent = node_totals(ds, weights, idx);
    std::optional<SplitCandidate> best;
    for (int f : chosen) {
        const auto threshold = rng.uniform_open(fmin[f], fmax[f]);
        if (!threshold) continue;  // no representable interior point
        double w_left = 0.0, w_left_pos = 0.0;
        for (std::uint32_t r : idx) {
            if (ds.feature(r, static_cast<std::size_t>(f)) <= *threshold) {
                const double w = weights[r];
                w_left += w;
                if (ds.labels[r] > 0) w_left_pos += w;
            }
        }
        const double q = gini_gain(w_left, w_left_pos, parent.weight - w_left,
                                   parent.weight_pos - w_left_pos);
        if (!best || q > best->score) best = SplitCandidate{f, *threshold, q};
    }
    return best;
}

std::optional<SplitCandidate> best_split(const Dataset& ds,
                                         std::span<const double> weights,
                                         std::span<const std::uint32_t> idx) {
    const std::size_t n = idx.size();
    if (n < 2) return std::nullopt;
    const std::size_t d = ds.n_cols;
    const NodeTotals parent = node_totals(ds, weights, idx);

    struct Entry {
        double value;
        double weight;
        std::int8_t label;
    };
    thread_local std::vector<Entry> entries;
    entries.resize(n);

    std::optional<SplitCandidate> best;
    for (std::size_t f = 0; f < d; ++f) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t r = idx[i];
            entries[i] = {ds.feature(r, f), weights[r], ds.labels[r]};
        }
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.value < b.value; });
        if (!(entries.front().value < entries.back().value)) continue;

        double w_left = 0.0, w_left_pos = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            w_left += entries[i].weight;
            if (entries[i].label > 0) w_left_pos += entries[i].weight;
            const double lo = entries[i].value;
            const double hi = entries[i + 1].value;
            if (!(lo < hi)) continue;
            const double mid = lo + (hi - lo) / 2.0;
            if (!(mid > lo && mid < hi)) continue;  // adjacent doubles
            const double q =
                gini_gain(w_left, w_left_pos, parent.weight - w_left,
                          parent.weight_pos - w_left_pos);
            if (!best || q > best->score) {
                best = SplitCandidate{static_cast<int>(f), mid, q};
            }
        }
    }
    return best;
}

namespace {

struct TreeBuilder {
    const Dataset& ds;
    std::span<const double> weights;
    const TreeConfig& cfg;
    int k;
    double root_weight;
    Rng& rng;
    std::vector<TreeNode> nodes;

    std::int32_t build(std::span<std::uint32_t> idx, int depth) {
        const NodeTotals totals = node_totals(ds, weights, idx);
        const std::int32_t me = static_cast<std::int32_t>(nodes.size());
        nodes.emplace_back();

        bool leaf = depth >= cfg.max_depth || idx.size() < 2 ||
                    totals.weight_pos <= 0.0 ||
                    totals.weight_pos >= totals.weight;
        if (!leaf && cfg.min_weighted_fraction_split > 0.0 &&
            totals.weight / root_weight < cfg.min_weighted_fraction_split) {
            leaf = true;
        }

        std::optional<SplitCandidate> cand;
        if (!leaf) {
            cand = cfg.mode == SplitMode::random_split
                       ? random_split(ds, weights, idx, k, rng)
                       : best_split(ds, weights, idx);
            if (!cand) leaf = true;
        }

        std::size_t n_left = 0;
        if (!leaf) {
            const auto mid = std::partition(
                idx.begin(), idx.end(), [&](std::uint32_t r) {
                    return ds.feature(r, static_cast<std::size_t>(
                                             cand->feature)) <= cand->threshold;
                });
            n_left = static_cast<std::size_t>(mid - idx.begin());
            const auto min_leaf = static_cast<std::size_t>(cfg.min_samples_leaf);
            if (n_left < min_leaf || idx.size() - n_left < min_leaf) leaf = true;
        }

        if (leaf) {
            TreeNode& nd = nodes[me];
            nd.feature = -1;
            nd.signal_fraction =
                totals.weight > 0.0 ? totals.weight_pos / totals.weight : 0.0;
            nd.vote = nd.signal_fraction > 0.5 ? std::int8_t{1} : std::int8_t{-1};
            return me;
        }

        nodes[me].feature = cand->feature;
        nodes[me].threshold = cand->threshold;
        const std::int32_t left = build(idx.subspan(0, n_left), depth + 1);
        const std::int32_t right = build(idx.subspan(n_left), depth + 1);
        nodes[me].left = left;
        nodes[me].right = right;
        return me;
    }
};

} // namespace

Tree fit_tree(const Dataset& ds, std::span<const double> weights,
              std::span<std::uint32_t> idx, const TreeConfig& cfg, Rng& rng) {
    if (idx.empty()) throw DataError("fit_tree needs at least one sample");
    check_config(cfg, ds.n_cols);
    TreeBuilder builder{ds,  weights, cfg, resolve_k(cfg, ds.n_cols),
                        0.0, rng,     {}};
    builder.root_weight = node_totals(ds, weights, idx).weight;
    builder.build(idx, 0);
    Tree tree;
    tree.nodes = std::move(builder.nodes);
    tree.n_features = static_cast<std::int32_t>(ds.n_cols);
    return tree;
}

Tree fit_tree(const Dataset& ds, const TreeConfig& cfg) {
    std::vector<std::uint32_t> idx(ds.n_rows);
    std::iota(idx.begin(), idx.end(), 0u);
    Rng rng(cfg.seed);
    return fit_tree(ds, ds.boost_weights, idx, cfg, rng);
}

TreePrediction predict_tree(const Tree& tree, std::span<const double> x) {
    if (static_cast<std::int32_t>(x.size()) != tree.n_features) {
        throw DataError("feature vector has dimension " +
                        std::to_string(x.size()) + ", tree expects " +
                        std::to_string(tree.n_features));
    }
    std::int32_t node = 0;
    while (!tree.nodes[node].is_leaf()) {
        const TreeNode& nd = tree.nodes[node];
        node = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold
                   ? nd.left
                   : nd.right;
    }
    const TreeNode& leaf = tree.nodes[node];
    return {leaf.vote, leaf.signal_fraction};
}

} // namespace bxt
