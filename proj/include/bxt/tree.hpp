#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bxt/dataset.hpp"
#include "bxt/rng.hpp"

namespace bxt {

// ============================================================================
// Binary decision trees over weighted samples. Two split selectors:
//   random_split — K random features, one uniform threshold each, keep the
//                  best by weighted Gini gain (extremely randomized trees);
//   best_split   — exhaustive scan over every feature and every midpoint
//                  between consecutive distinct values (classical CART).
// ============================================================================

enum class SplitMode : std::uint8_t { random_split, best_split };

struct TreeConfig {
    SplitMode mode = SplitMode::random_split;
    int k_features = 0;  // candidate features per node; 0 -> ceil(sqrt(d))
    int max_depth = 8;
    int min_samples_leaf = 20;
    double min_weighted_fraction_split = 0.0;
    std::uint64_t seed = 0;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int8_t vote = -1;          // leaf payload
    double signal_fraction = 0.0;   // weighted share of +1 samples at the leaf

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // pre-order, root at 0
    std::int32_t n_features = 0;
};

struct SplitCandidate {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // weighted Gini gain Q
};

struct TreePrediction {
    std::int8_t vote = -1;
    double signal_fraction = 0.0;
};

// Weighted Gini gain of a (left, right) partition of a node:
// parent impurity minus weight-proportional child impurities, with
// impurity G(p) = 1 - p^2 - (1-p)^2 under class-weight proportions p.
// Proportion-based, so it is invariant to rescaling all weights.
double gini_gain(double w_left, double w_left_pos, double w_right,
                 double w_right_pos);

// One candidate per each of k random non-constant features (all of them if
// fewer exist), thresholds uniform on the open value range; returns the
// argmax by Q, ties broken by lowest feature index then lowest threshold.
// Draw order: features first, then thresholds in ascending feature order.
// nullopt when every feature is constant on the node.
std::optional<SplitCandidate> random_split(const Dataset& ds,
                                           std::span<const double> weights,
                                           std::span<const std::uint32_t> idx,
                                           int k, Rng& rng);

// Exhaustive best split; same tie rule and no-split signal as random_split.
std::optional<SplitCandidate> best_split(const Dataset& ds,
                                         std::span<const double> weights,
                                         std::span<const std::uint32_t> idx);

// Recursive construction over the index multiset `idx` (entries may repeat
// rows; each entry carries its row's weight). A node leafs when pure, at
// max_depth, below the weighted-fraction floor, when no valid split exists,
// or when the chosen split would leave a child below min_samples_leaf.
// Leaf vote is +1 only when the weighted signal fraction exceeds 1/2;
// an exact tie votes background.
Tree fit_tree(const Dataset& ds, std::span<const double> weights,
              std::span<std::uint32_t> idx, const TreeConfig& cfg, Rng& rng);

// Convenience: all rows, ds.boost_weights, rng seeded from cfg.seed.
Tree fit_tree(const Dataset& ds, const TreeConfig& cfg);

// Routes x from the root: x[feature] <= threshold goes left. Throws
// DataError on dimension mismatch.
TreePrediction predict_tree(const Tree& tree, std::span<const double> x);

} // namespace bxt
