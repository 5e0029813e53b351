#include "bxt/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "bxt/errors.hpp"
#include "bxt/parallel.hpp"

namespace bxt {

std::vector<std::uint32_t> bootstrap_sample(std::size_t n, Rng& rng) {
    if (n < 1) throw DataError("bootstrap needs at least one sample");
    std::vector<std::uint32_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) {
        idx[i] = static_cast<std::uint32_t>(rng.uniform_index(n));
    }
    return idx;
}

namespace {

// One tree of the bag: bootstrap draw and fit share the tree's substream,
// bootstrap first.
Tree fit_bagged_tree(const Dataset& ds, std::span<const double> weights,
                     const TreeConfig& cfg, std::uint64_t tree_seed) {
    Rng rng(tree_seed);
    std::vector<std::uint32_t> idx = bootstrap_sample(ds.n_rows, rng);
    return fit_tree(ds, weights, idx, cfg, rng);
}

} // namespace

Forest fit_forest_serial(const Dataset& ds, std::span<const double> weights,
                         const TreeConfig& cfg, int b, std::uint64_t seed) {
    if (b < 1) throw DataError("forest size must be >= 1");
    Forest forest;
    forest.tree_config = cfg;
    forest.trees.resize(b);
    for (int t = 0; t < b; ++t) {
        forest.trees[t] =
            fit_bagged_tree(ds, weights, cfg, derive_seed(seed, stream::tree_base + t));
    }
    return forest;
}

Forest fit_forest(const Dataset& ds, std::span<const double> weights,
                  const TreeConfig& cfg, int b, std::uint64_t seed,
                  int threads) {
    if (b < 1) throw DataError("forest size must be >= 1");
    Forest forest;
    forest.tree_config = cfg;
    forest.trees.resize(b);
    const int n_threads = resolve_threads(threads);
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
    for (int t = 0; t < b; ++t) {
        forest.trees[t] =
            fit_bagged_tree(ds, weights, cfg, derive_seed(seed, stream::tree_base + t));
    }
    return forest;
}

ForestPrediction predict_forest(const Forest& forest,
                                std::span<const double> x) {
    if (forest.trees.empty()) throw DataError("empty forest");
    long vote_sum = 0;
    double score_sum = 0.0;
    for (const Tree& tree : forest.trees) {
        const TreePrediction p = predict_tree(tree, x);
        vote_sum += p.vote;
        score_sum += 2.0 * p.signal_fraction - 1.0;
    }
    ForestPrediction out;
    out.vote = vote_sum > 0 ? std::int8_t{1} : std::int8_t{-1};
    out.score = score_sum / static_cast<double>(forest.trees.size());
    return out;
}

std::vector<std::int8_t> forest_votes_serial(const Forest& forest,
                                             const Dataset& ds) {
    std::vector<std::int8_t> votes(ds.n_rows);
    for (std::size_t i = 0; i < ds.n_rows; ++i) {
        votes[i] = predict_forest(forest, ds.row(i)).vote;
    }
    return votes;
}

std::vector<std::int8_t> forest_votes(const Forest& forest, const Dataset& ds,
                                      int threads) {
    std::vector<std::int8_t> votes(ds.n_rows);
    const int n_threads = resolve_threads(threads);
    const auto n = static_cast<std::int64_t>(ds.n_rows);
#pragma omp parallel for schedule(static) num_threads(n_threads)
    for (std::int64_t i = 0; i < n; ++i) {
        votes[i] = predict_forest(forest, ds.row(i)).vote;
    }
    return votes;
}

double CorrelationResult::mean_abs_offdiagonal() const {
    if (n < 2) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) sum += std::abs(matrix[i * n + j]);
        }
    }
    return sum / static_cast<double>(n * (n - 1));
}

CorrelationResult tree_correlation(std::span<const Tree> trees,
                                   const Dataset& ds, std::size_t sample_size,
                                   Rng& rng) {
    const std::size_t n_trees = trees.size();
    if (n_trees < 2) throw DataError("tree correlation needs >= 2 trees");
    if (sample_size < 1 || sample_size > ds.n_rows) {
        throw DataError("correlation sample_size must lie in [1, N]");
    }

    // evaluation subset drawn without replacement
    std::vector<std::uint32_t> rows(ds.n_rows);
    std::iota(rows.begin(), rows.end(), 0u);
    for (std::size_t i = 0; i < sample_size; ++i) {
        const std::size_t j = i + rng.uniform_index(rows.size() - i);
        std::swap(rows[i], rows[j]);
    }
    rows.resize(sample_size);

    // vote vectors as +-1 reals, centered
    std::vector<double> votes(n_trees * sample_size);
    std::vector<double> norms(n_trees);
    CorrelationResult out;
    out.n = n_trees;
    out.matrix.assign(n_trees * n_trees, 0.0);
    out.constant_vote.assign(n_trees, 0);
    for (std::size_t t = 0; t < n_trees; ++t) {
        double mean = 0.0;
        for (std::size_t i = 0; i < sample_size; ++i) {
            const double v = predict_tree(trees[t], ds.row(rows[i])).vote;
            votes[t * sample_size + i] = v;
            mean += v;
        }
        mean /= static_cast<double>(sample_size);
        double ss = 0.0;
        for (std::size_t i = 0; i < sample_size; ++i) {
            votes[t * sample_size + i] -= mean;
            ss += votes[t * sample_size + i] * votes[t * sample_size + i];
        }
        norms[t] = std::sqrt(ss);
        if (!(norms[t] > 0.0)) out.constant_vote[t] = 1;
    }

    for (std::size_t i = 0; i < n_trees; ++i) {
        out.matrix[i * n_trees + i] = 1.0;
        for (std::size_t j = i + 1; j < n_trees; ++j) {
            double r = 0.0;
            if (!out.constant_vote[i] && !out.constant_vote[j]) {
                double dot = 0.0;
                for (std::size_t k = 0; k < sample_size; ++k) {
                    dot += votes[i * sample_size + k] * votes[j * sample_size + k];
                }
                r = dot / (norms[i] * norms[j]);
            }
            out.matrix[i * n_trees + j] = r;
            out.matrix[j * n_trees + i] = r;
        }
    }
    return out;
}

void write_correlation_csv(const CorrelationResult& corr,
                           const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write correlation file: " + path);
    char buf[40];
    for (std::size_t i = 0; i < corr.n; ++i) {
        for (std::size_t j = 0; j < corr.n; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", corr.at(i, j));
            if (j) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

} // namespace bxt
