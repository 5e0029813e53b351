// bxt: train/evaluate/sweep/diagnose/synth for boosted tree ensembles.
//
// Exit codes: 0 success, 2 usage or data error, 3 internal invariant
// violation. All randomness flows from --seed through named substreams,
// so outputs are byte-identical for any --threads value.

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bxt/boosting.hpp"
#include "bxt/dataset.hpp"
#include "bxt/errors.hpp"
#include "bxt/forest.hpp"
#include "bxt/metrics.hpp"
#include "bxt/rng.hpp"

namespace fs = std::filesystem;

namespace {

enum class Part { train = 0, validation = 1, test = 2, all = 3 };

struct DataOpts {
    std::string data;
    std::string label_column = "Label";
    std::string weight_column = "Weight";
    std::string split_column;
    std::vector<std::string> split_tags{"t", "b", "v"};
    double train_frac = 0.3125;
    double valid_frac = 0.125;
    double test_frac = 0.5625;
    bool no_stratify = false;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--data", data, "Input CSV dataset")->required();
        cmd->add_option("--label-column", label_column,
                        "Label column holding s/b tokens")
            ->capture_default_str();
        cmd->add_option("--weight-column", weight_column,
                        "Event-weight column; empty string for unit weights")
            ->capture_default_str();
        cmd->add_option("--split-column", split_column,
                        "Honor this partition column instead of a random split");
        cmd->add_option("--split-tags", split_tags,
                        "train,validation,test tags for --split-column")
            ->delimiter(',')
            ->expected(3);
        cmd->add_option("--train-frac", train_frac, "Training fraction")
            ->capture_default_str();
        cmd->add_option("--valid-frac", valid_frac, "Validation fraction")
            ->capture_default_str();
        cmd->add_option("--test-frac", test_frac, "Test fraction")
            ->capture_default_str();
        cmd->add_flag("--no-stratify", no_stratify,
                      "Split without per-class stratification");
    }

    bxt::Dataset load() const {
        std::optional<std::string> weight_col;
        if (!weight_column.empty()) weight_col = weight_column;
        std::optional<std::string> split_col;
        if (!split_column.empty()) split_col = split_column;
        return bxt::load_higgs_csv(data, weight_col, label_column, split_col);
    }

    std::array<bxt::Dataset, 3> partition(const bxt::Dataset& ds,
                                          std::uint64_t seed) const {
        if (!split_column.empty()) {
            return bxt::split_on_column(ds, split_tags[0], split_tags[1],
                                        split_tags[2]);
        }
        bxt::SplitSpec spec;
        spec.train_fraction = train_frac;
        spec.validation_fraction = valid_frac;
        spec.test_fraction = test_frac;
        spec.seed = seed;
        spec.stratified = !no_stratify;
        return bxt::split(ds, spec);
    }

    // --part all evaluates the loaded dataset without splitting, so the
    // luminosity rescale is the identity.
    bxt::Dataset load_part(std::uint64_t seed, Part part) const {
        bxt::Dataset ds = load();
        if (part == Part::all) return ds;
        auto parts = partition(ds, seed);
        return std::move(parts[static_cast<int>(part)]);
    }
};

struct ModelOpts {
    bxt::BoostConfig cfg;

    void add_to(CLI::App* cmd) {
        static const std::map<std::string, bxt::SplitMode> modes{
            {"random_split", bxt::SplitMode::random_split},
            {"best_split", bxt::SplitMode::best_split}};
        cmd->add_option("--mode", cfg.tree_config.mode,
                        "Split selection: random_split (BXT) or best_split (BDT)")
            ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case))
            ->default_str("random_split");
        cmd->add_option("--stages", cfg.stages, "Boosting stages J")
            ->capture_default_str();
        cmd->add_option("--trees", cfg.trees_per_stage, "Trees per stage B")
            ->capture_default_str();
        cmd->add_option("--max-depth", cfg.tree_config.max_depth,
                        "Maximum tree depth")
            ->capture_default_str();
        cmd->add_option("--k-features", cfg.tree_config.k_features,
                        "Candidate features per node; 0 = ceil(sqrt(d))")
            ->capture_default_str();
        cmd->add_option("--min-samples-leaf", cfg.tree_config.min_samples_leaf,
                        "Minimum samples per leaf")
            ->capture_default_str();
        cmd->add_option("--min-weighted-fraction-split",
                        cfg.tree_config.min_weighted_fraction_split,
                        "Nodes below this weight fraction become leaves")
            ->capture_default_str();
        cmd->add_option("--epsilon-floor", cfg.epsilon_floor,
                        "Lower clamp for the stage error")
            ->capture_default_str();
    }
};

std::string out_path(const std::string& out_dir, const char* name) {
    fs::create_directories(out_dir);
    return (fs::path(out_dir) / name).string();
}

void write_stage_csv(const std::vector<bxt::StageRecord>& records,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw bxt::DataError("cannot write stage log: " + path);
    out << "stage,epsilon,alpha,weighted_accuracy,seconds\n";
    char buf[40];
    for (const bxt::StageRecord& r : records) {
        out << r.stage;
        const double vals[3] = {r.epsilon, r.alpha, r.weighted_accuracy};
        for (double v : vals) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        std::snprintf(buf, sizeof buf, "%.6f", r.seconds);
        out << ',' << buf << '\n';
    }
}

void add_config_file(CLI::App* cmd) {
    cmd->set_config("--config", "", "Flat key=value config file; "
                                    "command-line flags override");
}

int run(int argc, char** argv) {
    CLI::App app{"Boosted extremely randomized trees (BXT) and the boosted "
                 "decision tree baseline, with AMS evaluation"};
    app.require_subcommand(1);

    std::string out_dir = ".";
    std::string model_path;
    std::uint64_t seed = 42;
    int threads = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "Output directory")
            ->capture_default_str();
        cmd->add_option("--seed", seed, "Master random seed")
            ->capture_default_str();
        cmd->add_option("--threads", threads,
                        "Worker cap; 0 = machine parallelism")
            ->capture_default_str();
        add_config_file(cmd);
    };

    static const std::map<std::string, Part> parts{
        {"train", Part::train},
        {"validation", Part::validation},
        {"test", Part::test},
        {"all", Part::all}};

    // ---- train ----
    auto* train = app.add_subcommand(
        "train", "Fit a boosted model and write model + per-stage log");
    DataOpts train_data;
    ModelOpts model_opts;
    add_common(train);
    train_data.add_to(train);
    model_opts.add_to(train);
    train->add_option("--model", model_path,
                      "Model output path (default OUT/model.bxt)");
    train->callback([&] {
        const auto parts3 = train_data.partition(train_data.load(), seed);
        bxt::BoostConfig cfg = model_opts.cfg;
        cfg.seed = seed;
        const bxt::BoostFitResult fit =
            bxt::fit_boosted(parts3[0], cfg, threads);
        const std::string mpath =
            model_path.empty() ? out_path(out_dir, "model.bxt") : model_path;
        bxt::save_model(fit.model, mpath);
        write_stage_csv(fit.records, out_path(out_dir, "stages.csv"));
        double total = 0.0;
        for (const auto& r : fit.records) total += r.seconds;
        std::cout << "trained " << fit.model.n_stages() << " stages x "
                  << cfg.trees_per_stage << " trees on "
                  << parts3[0].n_rows << " rows in " << total << " s\n"
                  << "model: " << mpath << "\n";
    });

    // ---- evaluate ----
    auto* evaluate = app.add_subcommand(
        "evaluate", "Compute the AMS report for a trained model");
    DataOpts eval_data;
    Part part = Part::test;
    double percentile = 85.0;
    double b_reg = 0.0;
    bool weighted = true;
    add_common(evaluate);
    eval_data.add_to(evaluate);
    evaluate->add_option("--model", model_path, "Trained model file")
        ->required();
    evaluate->add_option("--part", part, "Partition to evaluate")
        ->transform(CLI::CheckedTransformer(parts, CLI::ignore_case))
        ->default_str("test");
    evaluate->add_option("--percentile", percentile,
                         "Selection-threshold percentile")
        ->capture_default_str();
    evaluate->add_option("--b-reg", b_reg, "Background regularizer")
        ->capture_default_str();
    evaluate->add_option("--weighted", weighted,
                         "true: event-weight sums; false: raw counts")
        ->capture_default_str();
    evaluate->callback([&] {
        const bxt::Dataset ds = eval_data.load_part(seed, part);
        const bxt::BoostedModel model = bxt::load_model(model_path);
        const bxt::AmsReport report =
            bxt::evaluate(model, ds, percentile, b_reg, weighted, threads);
        const std::string json = bxt::report_json(report);
        std::ofstream out(out_path(out_dir, "ams_report.json"),
                          std::ios::binary);
        out << json << '\n';
        std::cout << json << '\n';
    });

    // ---- sweep ----
    auto* sweep_cmd = app.add_subcommand(
        "sweep", "AMS as a function of the cut-off percentile");
    DataOpts sweep_data;
    std::vector<double> percentiles;
    add_common(sweep_cmd);
    sweep_data.add_to(sweep_cmd);
    sweep_cmd->add_option("--model", model_path, "Trained model file")
        ->required();
    sweep_cmd->add_option("--part", part, "Partition to evaluate")
        ->transform(CLI::CheckedTransformer(parts, CLI::ignore_case))
        ->default_str("test");
    sweep_cmd
        ->add_option("--percentiles", percentiles,
                     "Strictly increasing percentiles, e.g. 80,85,90")
        ->delimiter(',');
    sweep_cmd->add_option("--b-reg", b_reg, "Background regularizer")
        ->capture_default_str();
    sweep_cmd->add_option("--weighted", weighted,
                          "true: event-weight sums; false: raw counts")
        ->capture_default_str();
    sweep_cmd->callback([&] {
        if (percentiles.empty()) {
            for (int p = 50; p <= 95; p += 5) percentiles.push_back(p);
        }
        const bxt::Dataset ds = sweep_data.load_part(seed, part);
        const bxt::BoostedModel model = bxt::load_model(model_path);
        const bxt::SweepCurve curve =
            bxt::sweep(model, ds, percentiles, b_reg, weighted, threads);
        const std::string path = out_path(out_dir, "sweep.csv");
        bxt::write_sweep_csv(curve, path);
        std::cout << "sweep: " << path << " (" << curve.size() << " rows)\n";
    });

    // ---- diagnose ----
    auto* diagnose = app.add_subcommand(
        "diagnose", "Correlation matrix of primitive trees sampled from a model");
    DataOpts diag_data;
    int n_trees = 100;
    std::size_t sample_size = 1000;
    add_common(diagnose);
    diag_data.add_to(diagnose);
    diagnose->add_option("--model", model_path, "Trained model file")
        ->required();
    diagnose->add_option("--part", part, "Partition to evaluate on")
        ->transform(CLI::CheckedTransformer(parts, CLI::ignore_case))
        ->default_str("test");
    diagnose->add_option("--n-trees", n_trees, "Primitive trees to sample")
        ->capture_default_str();
    diagnose->add_option("--sample-size", sample_size,
                         "Evaluation rows for the vote vectors")
        ->capture_default_str();
    diagnose->callback([&] {
        const bxt::Dataset ds = diag_data.load_part(seed, part);
        const bxt::BoostedModel model = bxt::load_model(model_path);

        std::vector<const bxt::Tree*> all;
        for (const auto& stage : model.stages) {
            for (const auto& tree : stage.forest.trees) all.push_back(&tree);
        }
        if (all.size() < 2) {
            throw bxt::DataError("model holds fewer than 2 primitive trees");
        }
        bxt::Rng rng(bxt::derive_seed(seed, bxt::stream::diagnose));
        const std::size_t take =
            std::min<std::size_t>(static_cast<std::size_t>(n_trees), all.size());
        std::vector<std::uint32_t> order(all.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = static_cast<std::uint32_t>(i);
        }
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + rng.uniform_index(order.size() - i);
            std::swap(order[i], order[j]);
        }
        std::sort(order.begin(), order.begin() + take);
        std::vector<bxt::Tree> sampled;
        sampled.reserve(take);
        for (std::size_t i = 0; i < take; ++i) {
            sampled.push_back(*all[order[i]]);
        }

        const bxt::CorrelationResult corr = bxt::tree_correlation(
            sampled, ds, std::min(sample_size, ds.n_rows), rng);
        const std::string path = out_path(out_dir, "correlation.csv");
        bxt::write_correlation_csv(corr, path);
        std::size_t n_constant = 0;
        for (auto f : corr.constant_vote) n_constant += f;
        if (n_constant > 0) {
            std::cerr << "note: " << n_constant
                      << " trees vote constant on the subset; their "
                         "correlations are reported as 0\n";
        }
        std::cout << "correlation: " << path << " (" << corr.n << "x" << corr.n
                  << ", mean |offdiag| = " << corr.mean_abs_offdiagonal()
                  << ")\n";
    });

    // ---- synth ----
    auto* synth = app.add_subcommand(
        "synth", "Generate a two-Gaussian synthetic dataset CSV");
    bxt::SyntheticSpec synth_spec;
    synth_spec.n_samples = 1000;
    synth_spec.dimension = 5;
    synth_spec.overlap = 2.0;
    synth_spec.imbalance = 0.5;
    add_common(synth);
    synth->add_option("--n-samples", synth_spec.n_samples, "Rows to generate")
        ->capture_default_str();
    synth->add_option("--dimension", synth_spec.dimension, "Feature count")
        ->capture_default_str();
    synth->add_option("--overlap", synth_spec.overlap,
                      "Class-mean separation in shared standard deviations")
        ->capture_default_str();
    synth->add_option("--imbalance", synth_spec.imbalance,
                      "Minority-class (+1) prior in (0,1]")
        ->capture_default_str();
    synth->callback([&] {
        synth_spec.seed = seed;
        const bxt::Dataset ds = bxt::generate_synthetic(synth_spec);
        const std::string path = out_path(out_dir, "synthetic.csv");
        bxt::write_csv(ds, path);
        std::size_t n_pos = 0;
        for (auto y : ds.labels) n_pos += y > 0;
        std::cout << "synthetic: " << path << " (" << ds.n_rows << " rows, "
                  << n_pos << " signal)\n";
    });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const bxt::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return 3;
    } catch (const std::logic_error& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
}
