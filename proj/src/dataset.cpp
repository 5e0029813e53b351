#include "bxt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bxt/errors.hpp"
#include "bxt/rng.hpp"

namespace bxt {

namespace {

constexpr double kWeightSumTol = 1e-9;

void format_g17(char* buf, std::size_t size, double v) {
    std::snprintf(buf, size, "%.17g", v);
}

double parse_double(std::string_view field, std::size_t line,
                    const std::string& column) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw DataError("line " + std::to_string(line) +
                        ": non-numeric value '" + std::string(field) +
                        "' in column '" + column + "'");
    }
    return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

void set_own_lumi_totals(Dataset& ds) {
    double s = 0.0, b = 0.0;
    for (std::size_t i = 0; i < ds.n_rows; ++i) {
        (ds.labels[i] > 0 ? s : b) += ds.event_weights[i];
    }
    ds.lumi_signal_total = s;
    ds.lumi_background_total = b;
}

void normalize_boost_weights(Dataset& ds) {
    const double sum =
        std::accumulate(ds.boost_weights.begin(), ds.boost_weights.end(), 0.0);
    if (!(sum > 0.0)) {
        throw std::invalid_argument("boost weights must have positive sum");
    }
    for (double& w : ds.boost_weights) w /= sum;
}

// Largest-remainder allocation of n items across the three fractions.
std::array<std::size_t, 3> allocate_counts(std::size_t n,
                                           const std::array<double, 3>& fracs) {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (int p = 0; p < 3; ++p) {
        const double ideal = static_cast<double>(n) * fracs[p];
        counts[p] = static_cast<std::size_t>(std::floor(ideal));
        remainders[p] = ideal - std::floor(ideal);
        assigned += counts[p];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return remainders[a] > remainders[b];
    });
    for (std::size_t k = 0; assigned + k < n; ++k) counts[order[k % 3]] += 1;
    return counts;
}

Dataset take_rows(const Dataset& ds, const std::vector<std::uint32_t>& rows) {
    Dataset part;
    part.n_rows = rows.size();
    part.n_cols = ds.n_cols;
    part.feature_names = ds.feature_names;
    part.features.reserve(rows.size() * ds.n_cols);
    part.labels.reserve(rows.size());
    part.boost_weights.reserve(rows.size());
    part.event_weights.reserve(rows.size());
    part.ids.reserve(rows.size());
    const bool tagged = !ds.split_tags.empty();
    if (tagged) part.split_tags.reserve(rows.size());
    for (std::uint32_t r : rows) {
        const auto row = ds.row(r);
        part.features.insert(part.features.end(), row.begin(), row.end());
        part.labels.push_back(ds.labels[r]);
        part.boost_weights.push_back(ds.boost_weights[r]);
        part.event_weights.push_back(ds.event_weights[r]);
        part.ids.push_back(ds.ids[r]);
        if (tagged) part.split_tags.push_back(ds.split_tags[r]);
    }
    normalize_boost_weights(part);
    part.lumi_signal_total = ds.lumi_signal_total;
    part.lumi_background_total = ds.lumi_background_total;
    return part;
}

} // namespace

void validate_dataset(const Dataset& ds) {
    if (ds.n_rows < 1 || ds.n_cols < 1) {
        throw std::invalid_argument("dataset must have N >= 1 and d >= 1");
    }
    if (ds.features.size() != ds.n_rows * ds.n_cols ||
        ds.labels.size() != ds.n_rows ||
        ds.boost_weights.size() != ds.n_rows ||
        ds.event_weights.size() != ds.n_rows || ds.ids.size() != ds.n_rows) {
        throw std::invalid_argument("dataset field lengths disagree");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < ds.n_rows; ++i) {
        if (ds.labels[i] != 1 && ds.labels[i] != -1) {
            throw std::invalid_argument("labels must be -1 or +1");
        }
        if (!(ds.boost_weights[i] > 0.0)) {
            throw std::invalid_argument("boost weights must be positive");
        }
        if (ds.event_weights[i] < 0.0) {
            throw std::invalid_argument("event weights must be non-negative");
        }
        sum += ds.boost_weights[i];
    }
    if (std::abs(sum - 1.0) > kWeightSumTol) {
        throw std::invalid_argument("boost weights must sum to 1");
    }
}

std::uint64_t dataset_hash(const Dataset& ds) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_bytes = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    mix_bytes(ds.features.data(), ds.features.size() * sizeof(double));
    mix_bytes(ds.labels.data(), ds.labels.size() * sizeof(std::int8_t));
    mix_bytes(ds.event_weights.data(),
              ds.event_weights.size() * sizeof(double));
    return h;
}

Dataset load_higgs_csv(const std::string& path,
                       const std::optional<std::string>& weight_column,
                       const std::string& label_column,
                       const std::optional<std::string>& split_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open data file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    auto next_line = [&](std::string_view& out) -> bool {
        if (pos >= text.size()) return false;
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        out = std::string_view(text).substr(pos, end - pos);
        if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
        pos = end + 1;
        return true;
    };

    std::string_view header;
    if (!next_line(header) || header.empty()) {
        throw DataError("missing header row in " + path);
    }
    const auto columns = split_fields(header);
    const std::size_t n_columns = columns.size();

    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::size_t label_idx = kNone, weight_idx = kNone, id_idx = kNone,
                tag_idx = kNone;
    std::vector<std::size_t> feature_idx;
    Dataset ds;
    for (std::size_t c = 0; c < n_columns; ++c) {
        const std::string name(columns[c]);
        if (name == label_column) {
            label_idx = c;
        } else if (weight_column && name == *weight_column) {
            weight_idx = c;
        } else if (split_column && name == *split_column) {
            tag_idx = c;
        } else if (name == "EventId") {
            id_idx = c;
        } else {
            feature_idx.push_back(c);
            ds.feature_names.push_back(name);
        }
    }
    if (label_idx == kNone) {
        throw DataError("label column '" + label_column + "' not found in " +
                        path);
    }
    if (weight_column && weight_idx == kNone) {
        throw DataError("weight column '" + *weight_column + "' not found in " +
                        path);
    }
    if (split_column && tag_idx == kNone) {
        throw DataError("split column '" + *split_column + "' not found in " +
                        path);
    }
    if (feature_idx.empty()) {
        throw DataError("no feature columns in " + path);
    }

    ds.n_cols = feature_idx.size();
    std::string_view line;
    std::size_t line_no = 1;  // header was line 1
    while (next_line(line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != n_columns) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(n_columns) + " columns, got " +
                            std::to_string(fields.size()));
        }
        for (std::size_t k = 0; k < feature_idx.size(); ++k) {
            ds.features.push_back(parse_double(fields[feature_idx[k]], line_no,
                                               ds.feature_names[k]));
        }
        const std::string_view label = fields[label_idx];
        if (label == "s") {
            ds.labels.push_back(1);
        } else if (label == "b") {
            ds.labels.push_back(-1);
        } else {
            throw DataError("line " + std::to_string(line_no) +
                            ": unknown label token '" + std::string(label) +
                            "' (expected s or b)");
        }
        ds.event_weights.push_back(
            weight_idx == kNone
                ? 1.0
                : parse_double(fields[weight_idx], line_no, *weight_column));
        ds.ids.push_back(id_idx == kNone
                             ? std::to_string(ds.labels.size() - 1)
                             : std::string(fields[id_idx]));
        if (tag_idx != kNone) {
            ds.split_tags.push_back(std::string(fields[tag_idx]));
        }
        ++ds.n_rows;
    }
    if (ds.n_rows == 0) throw DataError("no data rows in " + path);

    ds.boost_weights.assign(ds.n_rows, 1.0 / static_cast<double>(ds.n_rows));
    set_own_lumi_totals(ds);
    validate_dataset(ds);
    return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write data file: " + path);
    out << "EventId";
    for (std::size_t c = 0; c < ds.n_cols; ++c) {
        out << ',';
        if (c < ds.feature_names.size()) {
            out << ds.feature_names[c];
        } else {
            out << 'f' << c;
        }
    }
    out << ",Weight,Label\n";
    char buf[40];
    for (std::size_t i = 0; i < ds.n_rows; ++i) {
        out << ds.ids[i];
        for (std::size_t c = 0; c < ds.n_cols; ++c) {
            format_g17(buf, sizeof buf, ds.feature(i, c));
            out << ',' << buf;
        }
        format_g17(buf, sizeof buf, ds.event_weights[i]);
        out << ',' << buf << ',' << (ds.labels[i] > 0 ? 's' : 'b') << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

std::array<Dataset, 3> split(const Dataset& ds, const SplitSpec& spec) {
    validate_dataset(ds);
    const std::array<double, 3> fracs{spec.train_fraction,
                                      spec.validation_fraction,
                                      spec.test_fraction};
    double frac_sum = 0.0;
    for (double f : fracs) {
        if (!(f > 0.0 && f < 1.0)) {
            throw DataError("split fractions must lie in (0,1)");
        }
        frac_sum += f;
    }
    if (std::abs(frac_sum - 1.0) > 1e-9) {
        throw DataError("split fractions must sum to 1");
    }

    // Group rows by class (or one group when unstratified), shuffle each
    // group with its own substream, then hand out counts by largest
    // remainder so per-class proportions stay within one sample.
    std::vector<std::vector<std::uint32_t>> groups;
    if (spec.stratified) {
        std::vector<std::uint32_t> pos, neg;
        for (std::size_t i = 0; i < ds.n_rows; ++i) {
            (ds.labels[i] > 0 ? pos : neg)
                .push_back(static_cast<std::uint32_t>(i));
        }
        if (pos.empty() || neg.empty()) {
            throw DataError("stratified split needs both classes present");
        }
        groups.push_back(std::move(neg));
        groups.push_back(std::move(pos));
    } else {
        std::vector<std::uint32_t> all(ds.n_rows);
        std::iota(all.begin(), all.end(), 0u);
        groups.push_back(std::move(all));
    }

    std::array<std::vector<std::uint32_t>, 3> part_rows;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto& rows = groups[g];
        Rng rng(derive_seed(derive_seed(spec.seed, stream::split), g));
        for (std::size_t i = rows.size(); i > 1; --i) {
            std::swap(rows[i - 1], rows[rng.uniform_index(i)]);
        }
        const auto counts = allocate_counts(rows.size(), fracs);
        std::size_t offset = 0;
        for (int p = 0; p < 3; ++p) {
            part_rows[p].insert(part_rows[p].end(), rows.begin() + offset,
                                rows.begin() + offset + counts[p]);
            offset += counts[p];
        }
    }

    std::array<Dataset, 3> parts;
    for (int p = 0; p < 3; ++p) {
        if (part_rows[p].empty()) {
            throw DataError("split fraction yields an empty part");
        }
        std::sort(part_rows[p].begin(), part_rows[p].end());
        parts[p] = take_rows(ds, part_rows[p]);
    }
    return parts;
}

std::array<Dataset, 3> split_on_column(const Dataset& ds,
                                       const std::string& train_tag,
                                       const std::string& validation_tag,
                                       const std::string& test_tag) {
    validate_dataset(ds);
    if (ds.split_tags.size() != ds.n_rows) {
        throw DataError("dataset carries no split column");
    }
    std::array<std::vector<std::uint32_t>, 3> part_rows;
    for (std::size_t i = 0; i < ds.n_rows; ++i) {
        const std::string& tag = ds.split_tags[i];
        if (tag == train_tag) {
            part_rows[0].push_back(static_cast<std::uint32_t>(i));
        } else if (tag == validation_tag) {
            part_rows[1].push_back(static_cast<std::uint32_t>(i));
        } else if (tag == test_tag) {
            part_rows[2].push_back(static_cast<std::uint32_t>(i));
        }
    }
    std::array<Dataset, 3> parts;
    for (int p = 0; p < 3; ++p) {
        if (part_rows[p].empty()) {
            throw DataError("split tag matches no rows");
        }
        parts[p] = take_rows(ds, part_rows[p]);
    }
    return parts;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_samples < 1) {
        throw DataError("synthetic n_samples must be positive");
    }
    if (spec.dimension < 1) {
        throw DataError("synthetic dimension must be positive");
    }
    if (!(spec.overlap >= 0.0)) {
        throw DataError("synthetic overlap must be >= 0");
    }
    if (!(spec.imbalance > 0.0 && spec.imbalance <= 1.0)) {
        throw DataError("synthetic imbalance must lie in (0,1]");
    }

    Dataset ds;
    ds.n_rows = spec.n_samples;
    ds.n_cols = spec.dimension;
    ds.features.reserve(ds.n_rows * ds.n_cols);
    ds.labels.reserve(ds.n_rows);
    ds.ids.reserve(ds.n_rows);
    for (std::size_t c = 0; c < ds.n_cols; ++c) {
        ds.feature_names.push_back("f" + std::to_string(c));
    }

    Rng rng(derive_seed(spec.seed, stream::synth));
    for (std::size_t i = 0; i < ds.n_rows; ++i) {
        const bool signal = rng.uniform01() < spec.imbalance;
        ds.labels.push_back(signal ? 1 : -1);
        for (std::size_t c = 0; c < ds.n_cols; ++c) {
            double v = rng.gaussian();
            if (signal && c == 0) v += spec.overlap;
            ds.features.push_back(v);
        }
        ds.ids.push_back(std::to_string(i));
    }
    ds.boost_weights.assign(ds.n_rows, 1.0 / static_cast<double>(ds.n_rows));
    ds.event_weights.assign(ds.n_rows, 1.0);
    set_own_lumi_totals(ds);
    validate_dataset(ds);
    return ds;
}

} // namespace bxt
