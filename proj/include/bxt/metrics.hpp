#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bxt/boosting.hpp"
#include "bxt/dataset.hpp"

namespace bxt {

// ============================================================================
// Approximate Median Significance and the percentile-threshold protocol.
// ============================================================================

// sqrt(2*((s+b+b_reg)*ln(1+s/(b+b_reg)) - s)). With b_reg = 0 this is the
// plain physics formula. Throws DataError when s_hat > 0 with no background
// mass, std::invalid_argument on negative inputs.
double ams(double s_hat, double b_hat, double b_reg = 0.0);

struct Selection {
    std::vector<std::uint8_t> mask;  // margin strictly above the threshold
    double threshold = 0.0;          // nearest-rank empirical percentile
};

// Nearest-rank percentile of the margins; events tied exactly at the
// threshold are excluded from the selection.
Selection select_region(std::span<const double> margins, double percentile);

struct AmsReport {
    double threshold_percentile = 0.0;
    double threshold_value = 0.0;
    std::int64_t selection_count = 0;
    std::int64_t false_positives = 0;  // background events selected (count)
    double s_hat = 0.0;
    double b_hat = 0.0;
    double b_reg = 0.0;
    double ams = 0.0;
    bool weighted = true;
    std::string weight_convention;
};

// Margins for all events, percentile selection, then s_hat/b_hat as
// event-weight sums over selected true signal/background (or raw counts
// when weighted = false). Weighted sums are rescaled per class so the
// partition's totals match the full-sample totals the dataset carries
// (identity on a dataset that was never split).
AmsReport evaluate(const BoostedModel& model, const Dataset& ds,
                   double percentile, double b_reg, bool weighted,
                   int threads);

struct SweepPoint {
    double percentile = 0.0;
    double threshold = 0.0;
    double s_hat = 0.0;
    double b_hat = 0.0;
    double ams = 0.0;
};

using SweepCurve = std::vector<SweepPoint>;

// One evaluation per percentile; percentiles must be strictly increasing,
// each in (0,100). Margins are computed once and reused.
SweepCurve sweep(const BoostedModel& model, const Dataset& ds,
                 std::span<const double> percentiles, double b_reg,
                 bool weighted, int threads);

// CSV with header percentile,threshold,s_hat,b_hat,ams.
void write_sweep_csv(const SweepCurve& curve, const std::string& path);

// Single JSON object, stable field order.
std::string report_json(const AmsReport& report);

} // namespace bxt
