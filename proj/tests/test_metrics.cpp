#include "doctest.h"

#include <cmath>
#include <fstream>
#include <numeric>

#include "bxt/errors.hpp"
#include "bxt/metrics.hpp"
#include "test_util.hpp"

using namespace bxt;
using testutil::make_stump;
using testutil::TempDir;

namespace {

BoostedModel stump_model(int n_features, int feature, double threshold) {
    BoostedModel m;
    m.n_features = n_features;
    BoostStage stage;
    stage.alpha = 1.0;
    stage.forest.trees.push_back(
        make_stump(n_features, feature, threshold, -1, 0.0, 1, 1.0));
    m.stages.push_back(std::move(stage));
    return m;
}

} // namespace

TEST_CASE("ams spot values") {
    CHECK(ams(0.0, 1.0) == 0.0);
    CHECK(ams(0.0, 1e6) == 0.0);
    CHECK(std::abs(ams(100.0, 1000.0, 0.0) - 3.1116547960072133) < 1e-9);
    CHECK(std::abs(ams(100.0, 1000.0, 0.0) - 3.1117) < 1e-3);
    // small signal behaves like s / sqrt(b)
    CHECK(std::abs(ams(10.0, 10000.0) - 0.09998334027393764) < 1e-12);
    CHECK(ams(10.0, 10000.0) / 0.1 == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("ams domain handling") {
    CHECK_THROWS_AS(ams(-1.0, 10.0), std::invalid_argument);
    CHECK_THROWS_AS(ams(1.0, -2.0), std::invalid_argument);
    CHECK_THROWS_AS(ams(5.0, 0.0, 0.0), DataError);
    CHECK(ams(5.0, 0.0, 10.0) > 0.0);  // regularizer rescues zero background
}

TEST_CASE("ams is monotone in its arguments") {
    for (double b : {10.0, 100.0, 1000.0}) {
        double last = 0.0;
        for (double s : {1.0, 2.0, 5.0, 10.0, 50.0}) {
            const double v = ams(s, b);
            CHECK(v > last);
            last = v;
        }
    }
    for (double s : {5.0, 50.0}) {
        double last = std::numeric_limits<double>::infinity();
        for (double b : {10.0, 100.0, 1000.0, 10000.0}) {
            const double v = ams(s, b);
            CHECK(v < last);
            last = v;
        }
    }
}

TEST_CASE("small-signal regime agrees with s/sqrt(b) within 2 percent") {
    for (double b : {100.0, 1000.0, 10000.0, 100000.0}) {
        for (double frac : {0.001, 0.005, 0.01}) {
            const double s = b * frac;
            const double approx = s / std::sqrt(b);
            CHECK(std::abs(ams(s, b) - approx) / approx < 0.02);
        }
    }
}

TEST_CASE("select_region nearest-rank arithmetic") {
    std::vector<double> margins(100);
    std::iota(margins.begin(), margins.end(), 1.0);  // 1..100
    const Selection sel = select_region(margins, 85.0);
    CHECK(sel.threshold == 85.0);
    std::size_t count = 0;
    for (auto m : sel.mask) count += m;
    CHECK(count == 15);
}

TEST_CASE("equal margins select nothing under the strict rule") {
    const std::vector<double> margins(50, 3.25);
    const Selection sel = select_region(margins, 85.0);
    for (auto m : sel.mask) CHECK(m == 0);
}

TEST_CASE("selection counts partition the sample") {
    Rng rng(71);
    std::vector<double> margins(997);
    for (double& m : margins) m = rng.gaussian();
    margins[10] = margins[20] = margins[30];  // manufacture ties
    const Selection sel = select_region(margins, 70.0);
    std::size_t above = 0, at = 0, below = 0;
    for (std::size_t i = 0; i < margins.size(); ++i) {
        if (margins[i] > sel.threshold) {
            ++above;
            CHECK(sel.mask[i]);
        } else if (margins[i] == sel.threshold) {
            ++at;
            CHECK_FALSE(sel.mask[i]);
        } else {
            ++below;
            CHECK_FALSE(sel.mask[i]);
        }
    }
    CHECK(above + at + below == margins.size());
    CHECK(at >= 1);  // the threshold value itself is always excluded
}

TEST_CASE("85th percentile of 450000 distinct margins selects 67500") {
    std::vector<double> margins(450000);
    std::iota(margins.begin(), margins.end(), 0.0);
    const Selection sel = select_region(margins, 85.0);
    std::size_t count = 0;
    for (auto m : sel.mask) count += m;
    CHECK(count == 67500);
}

TEST_CASE("select_region input validation") {
    CHECK_THROWS_AS(select_region({}, 85.0), DataError);
    const std::vector<double> margins{1.0, 2.0};
    CHECK_THROWS_AS(select_region(margins, 0.0), DataError);
    CHECK_THROWS_AS(select_region(margins, 100.0), DataError);
}

TEST_CASE("perfect classifier hits the zero-background path") {
    // stump margins: signal rows land at +1, background at -1
    const Dataset ds = testutil::make_dataset(
        {{2.0}, {3.0}, {4.0}, {-1.0}, {-2.0}, {-3.0}, {-4.0}, {-5.0}, {-6.0},
         {-7.0}},
        {1, 1, 1, -1, -1, -1, -1, -1, -1, -1});
    const BoostedModel m = stump_model(1, 0, 0.0);
    // selection = exactly the three signal rows
    CHECK_THROWS_AS(evaluate(m, ds, 50.0, 0.0, false, 1), DataError);
    const AmsReport r = evaluate(m, ds, 50.0, 10.0, false, 1);
    CHECK(r.selection_count == 3);
    CHECK(r.false_positives == 0);
    CHECK(r.s_hat == 3.0);
    CHECK(r.b_hat == 0.0);
    CHECK(r.ams == doctest::Approx(ams(3.0, 0.0, 10.0)));
}

TEST_CASE("unit weights make weighted and counted evaluation identical") {
    const Dataset ds = generate_synthetic({.n_samples = 800,
                                           .dimension = 3,
                                           .overlap = 2.0,
                                           .imbalance = 0.3,
                                           .seed = 81});
    BoostConfig cfg;
    cfg.stages = 2;
    cfg.trees_per_stage = 5;
    cfg.tree_config.max_depth = 4;
    cfg.tree_config.min_samples_leaf = 5;
    cfg.seed = 5;
    const auto fit = fit_boosted(ds, cfg, 1);
    const AmsReport weighted = evaluate(fit.model, ds, 85.0, 0.0, true, 1);
    const AmsReport counted = evaluate(fit.model, ds, 85.0, 0.0, false, 1);
    CHECK(weighted.s_hat == counted.s_hat);
    CHECK(weighted.b_hat == counted.b_hat);
    CHECK(weighted.ams == counted.ams);
    CHECK(weighted.selection_count == counted.selection_count);
    CHECK(weighted.false_positives == counted.false_positives);
}

TEST_CASE("partitions are rescaled to full-sample luminosity") {
    // 6 rows, signal event-weight total 3.0, background total 30
    Dataset ds = testutil::make_dataset(
        {{5.0}, {6.0}, {7.0}, {-5.0}, {-6.0}, {-7.0}},
        {1, 1, 1, -1, -1, -1}, {},
        {1.0, 1.0, 1.0, 10.0, 10.0, 10.0});
    // a "part" holding two signal and one background row, carrying the
    // parent totals
    Dataset part = testutil::make_dataset({{5.0}, {6.0}, {-5.0}},
                                          {1, 1, -1}, {}, {1.0, 1.0, 10.0});
    part.lumi_signal_total = ds.lumi_signal_total;          // 3.0
    part.lumi_background_total = ds.lumi_background_total;  // 30.0

    const BoostedModel m = stump_model(1, 0, 0.0);
    // percentile 30 of margins (-1, 1, 1): rank ceil(0.9)=1 -> threshold -1,
    // selection = the two signal rows; b_reg keeps ams defined
    const AmsReport r = evaluate(m, part, 30.0, 10.0, true, 1);
    CHECK(r.selection_count == 2);
    // raw sum 2.0, rescaled by 3.0 / 2.0 to restore the full totals
    CHECK(r.s_hat == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.b_hat == 0.0);
}

TEST_CASE("sweep matches evaluate pointwise and is strictly ordered") {
    const Dataset ds = generate_synthetic({.n_samples = 600,
                                           .dimension = 3,
                                           .overlap = 2.0,
                                           .imbalance = 0.3,
                                           .seed = 82});
    BoostConfig cfg;
    cfg.stages = 2;
    cfg.trees_per_stage = 6;
    cfg.tree_config.max_depth = 4;
    cfg.tree_config.min_samples_leaf = 5;
    cfg.seed = 7;
    const auto fit = fit_boosted(ds, cfg, 1);

    const std::vector<double> one{85.0};
    const SweepCurve single = sweep(fit.model, ds, one, 0.0, true, 1);
    REQUIRE(single.size() == 1);
    const AmsReport direct = evaluate(fit.model, ds, 85.0, 0.0, true, 1);
    CHECK(single[0].ams == direct.ams);
    CHECK(single[0].threshold == direct.threshold_value);

    const std::vector<double> three{50.0, 85.0, 95.0};
    const SweepCurve curve = sweep(fit.model, ds, three, 0.0, true, 1);
    REQUIRE(curve.size() == 3);
    CHECK(curve[0].threshold < curve[1].threshold);
    CHECK(curve[1].threshold < curve[2].threshold);

    const std::vector<double> unordered{85.0, 50.0};
    CHECK_THROWS_AS(sweep(fit.model, ds, unordered, 0.0, true, 1), DataError);
    const std::vector<double> none{};
    CHECK_THROWS_AS(sweep(fit.model, ds, none, 0.0, true, 1), DataError);
}

TEST_CASE("sweep csv carries the documented header") {
    TempDir tmp;
    SweepCurve curve{{50.0, 0.1, 20.0, 30.0, 2.5}, {85.0, 0.9, 10.0, 5.0, 3.1}};
    const auto path = tmp.file("sweep.csv");
    write_sweep_csv(curve, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "percentile,threshold,s_hat,b_hat,ams");
    std::string row;
    int rows = 0;
    while (std::getline(in, row)) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("report json carries the table fields") {
    AmsReport r;
    r.threshold_percentile = 85.0;
    r.threshold_value = 0.25;
    r.selection_count = 66876;
    r.false_positives = 5413;
    r.s_hat = 610.0;
    r.b_hat = 25000.0;
    r.ams = 3.79;
    r.weighted = true;
    r.weight_convention = "test";
    const std::string json = report_json(r);
    CHECK(json.find("\"selection_count\": 66876") != std::string::npos);
    CHECK(json.find("\"false_positives\": 5413") != std::string::npos);
    CHECK(json.find("\"ams\": 3.79") != std::string::npos);
    CHECK(json.find("\"threshold_percentile\": 85.0") != std::string::npos);
}
