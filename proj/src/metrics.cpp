#include "bxt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "bxt/errors.hpp"

#include "json.hpp"

namespace bxt {

double ams(double s_hat, double b_hat, double b_reg) {
    if (s_hat < 0.0 || b_hat < 0.0 || b_reg < 0.0) {
        throw std::invalid_argument("ams: inputs must be non-negative");
    }
    const double b = b_hat + b_reg;
    if (s_hat == 0.0) return 0.0;
    if (!(b > 0.0)) {
        throw DataError("ams undefined: signal selected with zero background "
                        "mass (use --b-reg)");
    }
    const double radicand = 2.0 * ((s_hat + b) * std::log1p(s_hat / b) - s_hat);
    return std::sqrt(std::max(radicand, 0.0));
}

Selection select_region(std::span<const double> margins, double percentile) {
    if (margins.empty()) throw DataError("select_region: empty margins");
    if (!(percentile > 0.0 && percentile < 100.0)) {
        throw DataError("percentile must lie in (0,100)");
    }
    std::vector<double> sorted(margins.begin(), margins.end());
    std::sort(sorted.begin(), sorted.end());
    // nearest-rank: smallest rank r with r/n >= p/100
    const auto n = sorted.size();
    auto rank = static_cast<std::size_t>(
        std::ceil(percentile / 100.0 * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    Selection out;
    out.threshold = sorted[rank - 1];
    out.mask.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.mask[i] = margins[i] > out.threshold ? 1 : 0;
    }
    return out;
}

namespace {

AmsReport evaluate_margins(std::span<const double> margins, const Dataset& ds,
                           double percentile, double b_reg, bool weighted) {
    const Selection sel = select_region(margins, percentile);

    // Luminosity convention: rescale each class so the partition's totals
    // match the full-sample totals the dataset carries. Identity for a
    // dataset that was never split.
    double part_s = 0.0, part_b = 0.0;
    for (std::size_t i = 0; i < ds.n_rows; ++i) {
        (ds.labels[i] > 0 ? part_s : part_b) += ds.event_weights[i];
    }
    const double scale_s =
        (weighted && part_s > 0.0 && ds.lumi_signal_total > 0.0)
            ? ds.lumi_signal_total / part_s
            : 1.0;
    const double scale_b =
        (weighted && part_b > 0.0 && ds.lumi_background_total > 0.0)
            ? ds.lumi_background_total / part_b
            : 1.0;

    AmsReport report;
    report.threshold_percentile = percentile;
    report.threshold_value = sel.threshold;
    report.b_reg = b_reg;
    report.weighted = weighted;
    report.weight_convention =
        weighted ? "event-weight sums, class totals rescaled to the "
                   "full-sample totals carried by the dataset"
                 : "raw event counts";
    for (std::size_t i = 0; i < ds.n_rows; ++i) {
        if (!sel.mask[i]) continue;
        ++report.selection_count;
        if (ds.labels[i] > 0) {
            report.s_hat += weighted ? ds.event_weights[i] * scale_s : 1.0;
        } else {
            report.b_hat += weighted ? ds.event_weights[i] * scale_b : 1.0;
            ++report.false_positives;
        }
    }
    report.ams = ams(report.s_hat, report.b_hat, b_reg);
    return report;
}

} // namespace

AmsReport evaluate(const BoostedModel& model, const Dataset& ds,
                   double percentile, double b_reg, bool weighted,
                   int threads) {
    validate_dataset(ds);
    const std::vector<double> margins = boosted_margins(model, ds, threads);
    return evaluate_margins(margins, ds, percentile, b_reg, weighted);
}

SweepCurve sweep(const BoostedModel& model, const Dataset& ds,
                 std::span<const double> percentiles, double b_reg,
                 bool weighted, int threads) {
    if (percentiles.empty()) throw DataError("sweep needs >= 1 percentile");
    for (std::size_t i = 0; i < percentiles.size(); ++i) {
        if (!(percentiles[i] > 0.0 && percentiles[i] < 100.0)) {
            throw DataError("sweep percentiles must lie in (0,100)");
        }
        if (i > 0 && !(percentiles[i] > percentiles[i - 1])) {
            throw DataError("sweep percentiles must be strictly increasing");
        }
    }
    validate_dataset(ds);
    const std::vector<double> margins = boosted_margins(model, ds, threads);
    SweepCurve curve;
    curve.reserve(percentiles.size());
    for (double p : percentiles) {
        const AmsReport r = evaluate_margins(margins, ds, p, b_reg, weighted);
        curve.push_back({p, r.threshold_value, r.s_hat, r.b_hat, r.ams});
    }
    return curve;
}

void write_sweep_csv(const SweepCurve& curve, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write sweep file: " + path);
    out << "percentile,threshold,s_hat,b_hat,ams\n";
    char buf[40];
    for (const SweepPoint& p : curve) {
        const double vals[5] = {p.percentile, p.threshold, p.s_hat, p.b_hat,
                                p.ams};
        for (int k = 0; k < 5; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", vals[k]);
            if (k) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

std::string report_json(const AmsReport& report) {
    nlohmann::ordered_json j;
    j["threshold_percentile"] = report.threshold_percentile;
    j["threshold_value"] = report.threshold_value;
    j["selection_count"] = report.selection_count;
    j["false_positives"] = report.false_positives;
    j["s_hat"] = report.s_hat;
    j["b_hat"] = report.b_hat;
    j["b_reg"] = report.b_reg;
    j["ams"] = report.ams;
    j["weighted"] = report.weighted;
    j["weight_convention"] = report.weight_convention;
    return j.dump(2);
}

} // namespace bxt
