#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bxt/dataset.hpp"
#include "bxt/rng.hpp"
#include "bxt/tree.hpp"

namespace bxt {

// ============================================================================
// Bagging: one boosting-stage base learner is a bag of B trees fit on
// bootstrap samples and aggregated by majority vote.
//
// Tree fits are independent given their per-tree substreams, so fit_forest
// runs them under OpenMP; fit_forest_serial is the plain-loop reference the
// tests compare against (outputs must be identical).
// ============================================================================

struct Forest {
    std::vector<Tree> trees;
    TreeConfig tree_config;

    int b() const { return static_cast<int>(trees.size()); }
};

struct ForestPrediction {
    std::int8_t vote = -1;   // majority of tree votes, ties -> background
    double score = 0.0;      // mean over trees of (2*signal_fraction - 1)
};

// N indices drawn uniformly with replacement.
std::vector<std::uint32_t> bootstrap_sample(std::size_t n, Rng& rng);

// Fits b trees; tree t draws its bootstrap and its splits from the
// substream derive_seed(seed, stream::tree_base + t), so the result does
// not depend on the thread count. `weights` are the current boosting
// weights, indexed by row.
Forest fit_forest(const Dataset& ds, std::span<const double> weights,
                  const TreeConfig& cfg, int b, std::uint64_t seed,
                  int threads);
Forest fit_forest_serial(const Dataset& ds, std::span<const double> weights,
                         const TreeConfig& cfg, int b, std::uint64_t seed);

ForestPrediction predict_forest(const Forest& forest,
                                std::span<const double> x);

// Hard votes of the forest on every row; the parallel kernel splits over
// events. Serial variant kept as the test reference.
std::vector<std::int8_t> forest_votes(const Forest& forest, const Dataset& ds,
                                      int threads);
std::vector<std::int8_t> forest_votes_serial(const Forest& forest,
                                             const Dataset& ds);

// ============================================================================
// Tree-correlation diagnostic: Pearson correlation of the trees' vote
// vectors over a random evaluation subset. Trees with constant votes on
// the subset get zeroed correlations and a flag, since Pearson is undefined
// at zero variance.
// ============================================================================

struct CorrelationResult {
    std::size_t n = 0;
    std::vector<double> matrix;              // row-major n x n
    std::vector<std::uint8_t> constant_vote; // per-tree flag

    double at(std::size_t i, std::size_t j) const { return matrix[i * n + j]; }
    double mean_abs_offdiagonal() const;
};

CorrelationResult tree_correlation(std::span<const Tree> trees,
                                   const Dataset& ds, std::size_t sample_size,
                                   Rng& rng);

// Square, headerless, row-major CSV for external plotting.
void write_correlation_csv(const CorrelationResult& corr,
                           const std::string& path);

} // namespace bxt
