// Benchmark: OpenMP kernels against their serial reference implementations.
//
//   forest fit   — parallel over the B bagged trees
//   margins      — parallel over events
//
// The outputs of both paths are asserted identical before timing is
// reported, so the benchmark doubles as a smoke check.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "bxt/boosting.hpp"
#include "bxt/dataset.hpp"
#include "bxt/forest.hpp"
#include "bxt/parallel.hpp"

using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point start) {
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

bool trees_equal(const bxt::Tree& a, const bxt::Tree& b) {
    if (a.nodes.size() != b.nodes.size()) return false;
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        const auto& x = a.nodes[i];
        const auto& y = b.nodes[i];
        if (x.feature != y.feature || x.threshold != y.threshold ||
            x.left != y.left || x.right != y.right || x.vote != y.vote ||
            x.signal_fraction != y.signal_fraction) {
            return false;
        }
    }
    return true;
}

} // namespace

int main(int argc, char** argv) {
    std::size_t n = 20000;
    std::size_t d = 10;
    int b = 64;
    int threads = bxt::resolve_threads(0);
    if (argc > 1) n = std::strtoull(argv[1], nullptr, 10);
    if (argc > 2) d = std::strtoull(argv[2], nullptr, 10);
    if (argc > 3) b = std::atoi(argv[3]);
    if (argc > 4) threads = std::atoi(argv[4]);

    bxt::SyntheticSpec spec;
    spec.n_samples = n;
    spec.dimension = d;
    spec.overlap = 2.0;
    spec.imbalance = 0.3;
    spec.seed = 7;
    const bxt::Dataset ds = bxt::generate_synthetic(spec);

    bxt::TreeConfig cfg;
    cfg.mode = bxt::SplitMode::random_split;
    cfg.max_depth = 8;
    cfg.min_samples_leaf = 20;

    std::printf("n=%zu d=%zu trees=%d threads=%d\n", n, d, b, threads);

    auto t0 = clock_type::now();
    const bxt::Forest serial =
        bxt::fit_forest_serial(ds, ds.boost_weights, cfg, b, 11);
    const double fit_serial = seconds_since(t0);

    t0 = clock_type::now();
    const bxt::Forest parallel =
        bxt::fit_forest(ds, ds.boost_weights, cfg, b, 11, threads);
    const double fit_parallel = seconds_since(t0);

    for (int t = 0; t < b; ++t) {
        if (!trees_equal(serial.trees[t], parallel.trees[t])) {
            std::fprintf(stderr, "FATAL: tree %d differs between paths\n", t);
            return 1;
        }
    }

    bxt::BoostedModel model;
    model.n_features = static_cast<std::int32_t>(d);
    model.stages.push_back({1.0, parallel});

    t0 = clock_type::now();
    const auto margins_serial = bxt::boosted_margins_serial(model, ds);
    const double pred_serial = seconds_since(t0);

    t0 = clock_type::now();
    const auto margins_parallel = bxt::boosted_margins(model, ds, threads);
    const double pred_parallel = seconds_since(t0);

    for (std::size_t i = 0; i < n; ++i) {
        if (margins_serial[i] != margins_parallel[i]) {
            std::fprintf(stderr, "FATAL: margin %zu differs between paths\n", i);
            return 1;
        }
    }

    std::printf("%-22s %10s %10s %8s\n", "kernel", "serial(s)", "omp(s)",
                "speedup");
    std::printf("%-22s %10.3f %10.3f %7.2fx\n", "forest fit", fit_serial,
                fit_parallel, fit_serial / fit_parallel);
    std::printf("%-22s %10.3f %10.3f %7.2fx\n", "margins", pred_serial,
                pred_parallel, pred_serial / pred_parallel);
    std::printf("outputs identical across paths\n");
    return 0;
}
