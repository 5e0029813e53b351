#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bxt/dataset.hpp"
#include "bxt/forest.hpp"

namespace bxt {

// ============================================================================
// AdaBoost outer loop. Each stage fits a bagged forest under the current
// sample weights, earns a confidence alpha = ln((1-eps)/eps)/2 from its
// weighted error, and inflates the weights of the samples it got wrong.
// With tree mode best_split the same loop is the classical BDT baseline.
// ============================================================================

struct BoostConfig {
    int stages = 20;
    int trees_per_stage = 100;
    TreeConfig tree_config;
    double epsilon_floor = 1e-6;
    std::uint64_t seed = 0;
};

struct BoostStage {
    double alpha = 0.0;
    Forest forest;
};

struct BoostedModel {
    std::vector<BoostStage> stages;
    BoostConfig config;
    std::int32_t n_features = 0;
    std::string dataset_hash;  // hex FNV-1a of the training data

    int n_stages() const { return static_cast<int>(stages.size()); }
};

struct StageRecord {
    int stage = 0;
    double epsilon = 0.0;  // weighted error after flooring
    double alpha = 0.0;
    double weighted_accuracy = 0.0;
    double seconds = 0.0;
};

// Probability mass of misclassified samples. Throws std::invalid_argument
// on length mismatch or when the weights do not sum to 1 within 1e-9.
double weighted_error(std::span<const std::int8_t> predictions,
                      std::span<const std::int8_t> labels,
                      std::span<const double> weights);

// alpha = ln((1-eps)/eps)/2. Defined on (0,1); antisymmetric about 1/2.
double compute_alpha(double epsilon);

// Misclassified weights gain a factor e^alpha; the vector is then
// renormalized to sum 1.
std::vector<double> update_weights(std::span<const double> weights,
                                   double alpha,
                                   std::span<const std::uint8_t> misclassified);

// ============================================================================
// Generic boosting core, shared by fit_boosted and the test harness.
// fit_predict(stage, weights) returns the stage learner's hard predictions
// on every row; the core handles error/alpha/weight arithmetic, floors
// epsilon at epsilon_floor and stops early (without counting the stage)
// when epsilon reaches 1/2. `weights` evolves in place. The optional
// observer sees each accepted stage and the weights after its update.
// ============================================================================

struct CoreStageResult {
    double epsilon = 0.0;  // floored
    double alpha = 0.0;
};

using StageFitFn =
    std::function<std::vector<std::int8_t>(int stage,
                                           const std::vector<double>& weights)>;
using StageObserver = std::function<void(int stage, const CoreStageResult&,
                                         const std::vector<double>& weights)>;

std::vector<CoreStageResult> adaboost_loop(std::span<const std::int8_t> labels,
                                           std::vector<double>& weights,
                                           int max_stages, double epsilon_floor,
                                           const StageFitFn& fit_predict,
                                           const StageObserver& observer = {});

struct BoostFitResult {
    BoostedModel model;
    std::vector<StageRecord> records;
};

// Requires both classes present. Deterministic given cfg.seed for any
// thread count.
BoostFitResult fit_boosted(const Dataset& ds, const BoostConfig& cfg,
                           int threads);

struct BoostedPrediction {
    std::int8_t label = -1;  // sign of the alpha-weighted hard votes
    double margin = 0.0;     // alpha-weighted soft scores (the discriminant)
};

BoostedPrediction predict_boosted(const BoostedModel& model,
                                  std::span<const double> x);

// Margins for every row; parallel over events, fixed per-event stage order.
std::vector<double> boosted_margins(const BoostedModel& model,
                                    const Dataset& ds, int threads);
std::vector<double> boosted_margins_serial(const BoostedModel& model,
                                           const Dataset& ds);

// ============================================================================
// Persistence: versioned text format ("BXT1"), numbers at 17 significant
// digits so a round trip reproduces margins bit for bit, terminated by a
// whole-file checksum. Throws ModelVersionError / ModelCorruptError.
// ============================================================================

void save_model(const BoostedModel& model, const std::string& path);
BoostedModel load_model(const std::string& path);

} // namespace bxt
