#include "bxt/boosting.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bxt/errors.hpp"
#include "bxt/parallel.hpp"

namespace bxt {

namespace {

constexpr double kWeightSumTol = 1e-9;

double checked_weight_sum(std::span<const double> weights) {
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(sum - 1.0) > kWeightSumTol) {
        throw std::invalid_argument("weights must sum to 1");
    }
    return sum;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

double weighted_error(std::span<const std::int8_t> predictions,
                      std::span<const std::int8_t> labels,
                      std::span<const double> weights) {
    if (predictions.size() != labels.size() ||
        labels.size() != weights.size()) {
        throw std::invalid_argument("weighted_error: length mismatch");
    }
    checked_weight_sum(weights);
    double err = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (predictions[i] != labels[i]) err += weights[i];
    }
    return err;
}

double compute_alpha(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw std::invalid_argument("compute_alpha: epsilon outside (0,1)");
    }
    return 0.5 * std::log((1.0 - epsilon) / epsilon);
}

std::vector<double> update_weights(std::span<const double> weights,
                                   double alpha,
                                   std::span<const std::uint8_t> misclassified) {
    if (weights.size() != misclassified.size()) {
        throw std::invalid_argument("update_weights: length mismatch");
    }
    if (!std::isfinite(alpha)) {
        throw std::invalid_argument("update_weights: alpha must be finite");
    }
    checked_weight_sum(weights);
    std::vector<double> out(weights.size());
    const double factor = std::exp(alpha);
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out[i] = misclassified[i] ? weights[i] * factor : weights[i];
        sum += out[i];
    }
    for (double& w : out) w /= sum;
    return out;
}

std::vector<CoreStageResult> adaboost_loop(std::span<const std::int8_t> labels,
                                           std::vector<double>& weights,
                                           int max_stages, double epsilon_floor,
                                           const StageFitFn& fit_predict,
                                           const StageObserver& observer) {
    if (labels.size() != weights.size()) {
        throw std::invalid_argument("adaboost_loop: length mismatch");
    }
    if (!(epsilon_floor > 0.0 && epsilon_floor < 0.5)) {
        throw std::invalid_argument("epsilon_floor must lie in (0, 0.5)");
    }
    if (max_stages < 1) {
        throw std::invalid_argument("stage count must be >= 1");
    }

    std::vector<CoreStageResult> out;
    for (int j = 0; j < max_stages; ++j) {
        const std::vector<std::int8_t> preds = fit_predict(j, weights);
        if (preds.size() != labels.size()) {
            throw std::logic_error("stage learner returned wrong-length predictions");
        }
        const double eps_raw = weighted_error(preds, labels, weights);
        if (eps_raw >= 0.5) break;  // no better than chance; stop without appending
        const double eps = std::max(eps_raw, epsilon_floor);
        const double alpha = compute_alpha(eps);
        std::vector<std::uint8_t> misclassified(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            misclassified[i] = preds[i] != labels[i];
        }
        weights = update_weights(weights, alpha, misclassified);
        out.push_back({eps, alpha});
        if (observer) observer(j, out.back(), weights);
    }
    return out;
}

BoostFitResult fit_boosted(const Dataset& ds, const BoostConfig& cfg,
                           int threads) {
    validate_dataset(ds);
    if (cfg.stages < 1) throw DataError("stages must be >= 1");
    if (cfg.trees_per_stage < 1) throw DataError("trees_per_stage must be >= 1");
    const bool has_pos = std::any_of(ds.labels.begin(), ds.labels.end(),
                                     [](std::int8_t y) { return y > 0; });
    const bool has_neg = std::any_of(ds.labels.begin(), ds.labels.end(),
                                     [](std::int8_t y) { return y < 0; });
    if (!has_pos || !has_neg) {
        throw DataError("boosting needs both classes present");
    }

    using clock = std::chrono::steady_clock;
    std::vector<double> weights = ds.boost_weights;
    std::vector<Forest> pending;
    std::vector<StageRecord> records;
    clock::time_point stage_start;

    const StageFitFn fit = [&](int j, const std::vector<double>& w) {
        stage_start = clock::now();
        Forest forest =
            fit_forest(ds, w, cfg.tree_config, cfg.trees_per_stage,
                       derive_seed(cfg.seed, stream::stage_base + j), threads);
        std::vector<std::int8_t> votes = forest_votes(forest, ds, threads);
        pending.push_back(std::move(forest));
        return votes;
    };
    const StageObserver observe = [&](int j, const CoreStageResult& r,
                                      const std::vector<double>&) {
        const double seconds =
            std::chrono::duration<double>(clock::now() - stage_start).count();
        records.push_back({j, r.epsilon, r.alpha, 1.0 - r.epsilon, seconds});
    };

    const std::vector<CoreStageResult> core = adaboost_loop(
        ds.labels, weights, cfg.stages, cfg.epsilon_floor, fit, observe);

    BoostFitResult result;
    result.model.config = cfg;
    result.model.n_features = static_cast<std::int32_t>(ds.n_cols);
    result.model.dataset_hash = hex64(dataset_hash(ds));
    result.model.stages.reserve(core.size());
    for (std::size_t j = 0; j < core.size(); ++j) {
        result.model.stages.push_back(
            {core[j].alpha, std::move(pending[j])});
    }
    result.records = std::move(records);
    return result;
}

BoostedPrediction predict_boosted(const BoostedModel& model,
                                  std::span<const double> x) {
    if (model.stages.empty()) throw DataError("model has no stages");
    if (static_cast<std::int32_t>(x.size()) != model.n_features) {
        throw DataError("feature vector has dimension " +
                        std::to_string(x.size()) + ", model expects " +
                        std::to_string(model.n_features));
    }
    double vote_sum = 0.0;
    double margin = 0.0;
    for (const BoostStage& stage : model.stages) {
        const ForestPrediction p = predict_forest(stage.forest, x);
        vote_sum += stage.alpha * p.vote;
        margin += stage.alpha * p.score;
    }
    BoostedPrediction out;
    out.label = vote_sum > 0.0 ? std::int8_t{1} : std::int8_t{-1};
    out.margin = margin;
    return out;
}

std::vector<double> boosted_margins_serial(const BoostedModel& model,
                                           const Dataset& ds) {
    std::vector<double> margins(ds.n_rows);
    for (std::size_t i = 0; i < ds.n_rows; ++i) {
        margins[i] = predict_boosted(model, ds.row(i)).margin;
    }
    return margins;
}

std::vector<double> boosted_margins(const BoostedModel& model,
                                    const Dataset& ds, int threads) {
    std::vector<double> margins(ds.n_rows);
    const int n_threads = resolve_threads(threads);
    const auto n = static_cast<std::int64_t>(ds.n_rows);
#pragma omp parallel for schedule(static) num_threads(n_threads)
    for (std::int64_t i = 0; i < n; ++i) {
        margins[i] = predict_boosted(model, ds.row(i)).margin;
    }
    return margins;
}

// ============================================================================
// Persistence
// ============================================================================

namespace {

constexpr const char* kMagic = "BXT1";
constexpr int kFormatVersion = 1;

std::uint64_t fnv1a(const char* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x100000001b3ULL;
    }
    return h;
}

const char* mode_name(SplitMode mode) {
    return mode == SplitMode::random_split ? "random_split" : "best_split";
}

SplitMode mode_from_name(const std::string& name) {
    if (name == "random_split") return SplitMode::random_split;
    if (name == "best_split") return SplitMode::best_split;
    throw ModelCorruptError("unknown split mode: " + name);
}

void append_g17(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

void append_tree(std::string& out, const Tree& tree, std::int32_t node) {
    const TreeNode& nd = tree.nodes[node];
    if (nd.is_leaf()) {
        out += "l ";
        out += nd.vote > 0 ? "1 " : "-1 ";
        append_g17(out, nd.signal_fraction);
        out += '\n';
        return;
    }
    out += "i ";
    out += std::to_string(nd.feature);
    out += ' ';
    append_g17(out, nd.threshold);
    out += '\n';
    append_tree(out, tree, nd.left);
    append_tree(out, tree, nd.right);
}

// Token reader over the model text; every read failure means truncation
// or corruption.
class TokenReader {
public:
    explicit TokenReader(std::string_view text) : text_(text) {}

    std::string word() {
        skip_space();
        if (pos_ >= text_.size()) {
            throw ModelCorruptError("model file truncated");
        }
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(
                   static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    void expect(const char* keyword) {
        const std::string got = word();
        if (got != keyword) {
            throw ModelCorruptError(std::string("expected '") + keyword +
                                    "', got '" + got + "'");
        }
    }

    long long integer() {
        const std::string tok = word();
        long long v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
            throw ModelCorruptError("bad integer token: " + tok);
        }
        return v;
    }

    double real() {
        const std::string tok = word();
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
            throw ModelCorruptError("bad number token: " + tok);
        }
        return v;
    }

private:
    void skip_space() {
        while (pos_ < text_.size() &&
               std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

std::int32_t read_tree_nodes(TokenReader& in, Tree& tree, long long& budget) {
    if (--budget < 0) throw ModelCorruptError("tree node count mismatch");
    const auto me = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const std::string kind = in.word();
    if (kind == "l") {
        const long long vote = in.integer();
        if (vote != 1 && vote != -1) {
            throw ModelCorruptError("leaf vote must be -1 or 1");
        }
        tree.nodes[me].feature = -1;
        tree.nodes[me].vote = static_cast<std::int8_t>(vote);
        tree.nodes[me].signal_fraction = in.real();
    } else if (kind == "i") {
        tree.nodes[me].feature = static_cast<std::int32_t>(in.integer());
        tree.nodes[me].threshold = in.real();
        const std::int32_t left = read_tree_nodes(in, tree, budget);
        const std::int32_t right = read_tree_nodes(in, tree, budget);
        tree.nodes[me].left = left;
        tree.nodes[me].right = right;
    } else {
        throw ModelCorruptError("unknown node kind: " + kind);
    }
    return me;
}

} // namespace

void save_model(const BoostedModel& model, const std::string& path) {
    std::string out;
    out.reserve(1 << 20);
    out += kMagic;
    out += "\nversion ";
    out += std::to_string(kFormatVersion);
    out += "\ndataset_hash ";
    out += model.dataset_hash.empty() ? "0" : model.dataset_hash;
    out += "\nn_features ";
    out += std::to_string(model.n_features);
    const BoostConfig& cfg = model.config;
    out += "\nstages ";
    out += std::to_string(cfg.stages);
    out += "\ntrees_per_stage ";
    out += std::to_string(cfg.trees_per_stage);
    out += "\nepsilon_floor ";
    append_g17(out, cfg.epsilon_floor);
    out += "\nseed ";
    out += std::to_string(cfg.seed);
    out += "\nmode ";
    out += mode_name(cfg.tree_config.mode);
    out += "\nk_features ";
    out += std::to_string(cfg.tree_config.k_features);
    out += "\nmax_depth ";
    out += std::to_string(cfg.tree_config.max_depth);
    out += "\nmin_samples_leaf ";
    out += std::to_string(cfg.tree_config.min_samples_leaf);
    out += "\nmin_weighted_fraction_split ";
    append_g17(out, cfg.tree_config.min_weighted_fraction_split);
    out += "\ntree_seed ";
    out += std::to_string(cfg.tree_config.seed);
    out += "\nn_stages ";
    out += std::to_string(model.stages.size());
    out += '\n';
    for (std::size_t j = 0; j < model.stages.size(); ++j) {
        const BoostStage& stage = model.stages[j];
        out += "stage ";
        out += std::to_string(j);
        out += "\nalpha ";
        append_g17(out, stage.alpha);
        out += "\nforest ";
        out += std::to_string(stage.forest.trees.size());
        out += '\n';
        for (const Tree& tree : stage.forest.trees) {
            out += "tree ";
            out += std::to_string(tree.nodes.size());
            out += '\n';
            append_tree(out, tree, 0);
        }
    }
    const std::uint64_t payload_hash = fnv1a(out.data(), out.size());
    out += "checksum ";
    out += hex64(payload_hash);
    out += '\n';

    std::ofstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot write model file: " + path);
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw DataError("write failed: " + path);
}

BoostedModel load_model(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot open model file: " + path);
    std::string text((std::istreambuf_iterator<char>(file)),
                     std::istreambuf_iterator<char>());

    if (text.rfind(kMagic, 0) != 0 || text.size() <= 4 || text[4] != '\n') {
        throw ModelVersionError("not a BXT1 model file: " + path);
    }

    // checksum line covers every byte before it
    const std::size_t tail = text.rfind("checksum ");
    if (tail == std::string::npos ||
        (tail > 0 && text[tail - 1] != '\n')) {
        throw ModelCorruptError("model file has no checksum: " + path);
    }
    std::istringstream tail_in(text.substr(tail));
    std::string keyword, stored;
    tail_in >> keyword >> stored;
    if (stored != hex64(fnv1a(text.data(), tail))) {
        throw ModelCorruptError("model checksum mismatch: " + path);
    }

    TokenReader in(std::string_view(text).substr(4, tail - 4));
    BoostedModel model;
    in.expect("version");
    const long long version = in.integer();
    if (version != kFormatVersion) {
        throw ModelVersionError("unsupported model format version " +
                                std::to_string(version));
    }
    in.expect("dataset_hash");
    model.dataset_hash = in.word();
    in.expect("n_features");
    model.n_features = static_cast<std::int32_t>(in.integer());
    BoostConfig& cfg = model.config;
    in.expect("stages");
    cfg.stages = static_cast<int>(in.integer());
    in.expect("trees_per_stage");
    cfg.trees_per_stage = static_cast<int>(in.integer());
    in.expect("epsilon_floor");
    cfg.epsilon_floor = in.real();
    in.expect("seed");
    cfg.seed = static_cast<std::uint64_t>(in.integer());
    in.expect("mode");
    cfg.tree_config.mode = mode_from_name(in.word());
    in.expect("k_features");
    cfg.tree_config.k_features = static_cast<int>(in.integer());
    in.expect("max_depth");
    cfg.tree_config.max_depth = static_cast<int>(in.integer());
    in.expect("min_samples_leaf");
    cfg.tree_config.min_samples_leaf = static_cast<int>(in.integer());
    in.expect("min_weighted_fraction_split");
    cfg.tree_config.min_weighted_fraction_split = in.real();
    in.expect("tree_seed");
    cfg.tree_config.seed = static_cast<std::uint64_t>(in.integer());
    in.expect("n_stages");
    const long long n_stages = in.integer();
    if (n_stages < 0) throw ModelCorruptError("negative stage count");

    model.stages.reserve(static_cast<std::size_t>(n_stages));
    for (long long j = 0; j < n_stages; ++j) {
        in.expect("stage");
        if (in.integer() != j) throw ModelCorruptError("stage index mismatch");
        in.expect("alpha");
        BoostStage stage;
        stage.alpha = in.real();
        in.expect("forest");
        const long long n_trees = in.integer();
        if (n_trees < 1) throw ModelCorruptError("empty forest in model");
        stage.forest.tree_config = cfg.tree_config;
        stage.forest.trees.reserve(static_cast<std::size_t>(n_trees));
        for (long long t = 0; t < n_trees; ++t) {
            in.expect("tree");
            long long node_count = in.integer();
            if (node_count < 1) throw ModelCorruptError("empty tree in model");
            Tree tree;
            tree.n_features = model.n_features;
            tree.nodes.reserve(static_cast<std::size_t>(node_count));
            read_tree_nodes(in, tree, node_count);
            if (node_count != 0) {
                throw ModelCorruptError("tree node count mismatch");
            }
            stage.forest.trees.push_back(std::move(tree));
        }
        model.stages.push_back(std::move(stage));
    }
    return model;
}

} // namespace bxt
