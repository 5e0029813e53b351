#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bxt {

// ============================================================================
// Dataset: feature matrix, {-1,+1} labels, boosting sample weights and
// physics event weights. Immutable once built; safe to share across threads.
// ============================================================================

struct Dataset {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> features;       // row-major n_rows x n_cols
    std::vector<std::int8_t> labels;    // +1 signal, -1 background
    std::vector<double> boost_weights;  // > 0, sum to 1
    std::vector<double> event_weights;  // >= 0, used only by AMS
    std::vector<std::string> ids;
    std::vector<std::string> feature_names;

    // Full-sample per-class event-weight totals, carried through split() so
    // AMS evaluation can rescale a partition back to full-sample luminosity.
    // Equal to this dataset's own totals when it was never split.
    double lumi_signal_total = 0.0;
    double lumi_background_total = 0.0;

    // Tokens of an optional partition column (e.g. KaggleSet); empty if none.
    std::vector<std::string> split_tags;

    double feature(std::size_t row, std::size_t col) const {
        return features[row * n_cols + col];
    }
    std::span<const double> row(std::size_t r) const {
        return {features.data() + r * n_cols, n_cols};
    }
};

// Throws std::invalid_argument when a Dataset invariant is broken.
void validate_dataset(const Dataset& ds);

// FNV-1a 64 over features, labels and event weights; model metadata.
std::uint64_t dataset_hash(const Dataset& ds);

// ============================================================================
// CSV ingestion (Higgs open-data dialect: comma separated, header row,
// '.' decimals, no quoting). The -999.0 sentinel is kept verbatim.
// ============================================================================

// label_column must hold only the tokens "s" and "b" (s -> +1, b -> -1).
// weight_column fills event_weights when given, otherwise all weights are 1.
// A column named "EventId" becomes ids when present; split_column, when
// given, is captured row by row into split_tags. All remaining columns are
// parsed as numeric features. Errors name the offending file line.
Dataset load_higgs_csv(const std::string& path,
                       const std::optional<std::string>& weight_column,
                       const std::string& label_column,
                       const std::optional<std::string>& split_column = {});

// Writes id, features, Weight, Label columns; numbers carry 17 significant
// digits so a reload reproduces features and event_weights bit for bit.
void write_csv(const Dataset& ds, const std::string& path);

// ============================================================================
// Partitioning
// ============================================================================

struct SplitSpec {
    double train_fraction = 0.3125;
    double validation_fraction = 0.125;
    double test_fraction = 0.5625;
    std::uint64_t seed = 0;
    bool stratified = true;
};

// Disjoint (train, validation, test) partition covering every row once.
// Stratified mode keeps per-class proportions within one sample per class.
// boost_weights of each part are renormalized to sum 1; luminosity totals
// are inherited from the parent.
std::array<Dataset, 3> split(const Dataset& ds, const SplitSpec& spec);

// Partition by the captured split_tags column instead of random assignment.
// Rows whose tag matches none of the three are dropped.
std::array<Dataset, 3> split_on_column(const Dataset& ds,
                                       const std::string& train_tag,
                                       const std::string& validation_tag,
                                       const std::string& test_tag);

// ============================================================================
// Synthetic data: two unit-covariance Gaussian clusters whose means sit
// `overlap` standard deviations apart along the first axis. The minority
// class (+1) has prior `imbalance`.
// ============================================================================

struct SyntheticSpec {
    std::size_t n_samples = 0;
    std::size_t dimension = 0;
    double overlap = 0.0;
    double imbalance = 0.5;
    std::uint64_t seed = 0;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

} // namespace bxt
