// End-to-end checks of the bxt binary: exit codes, file outputs,
// reproducibility. The binary path comes in through BXT_CLI_PATH.

#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "bxt/boosting.hpp"
#include "bxt/dataset.hpp"
#include "json.hpp"
#include "test_util.hpp"

using testutil::TempDir;

namespace {

int run_cli(const std::string& args, const std::string& stdout_path = "",
            const std::string& stderr_path = "") {
    std::string cmd = std::string(BXT_CLI_PATH) + " " + args;
    if (!stdout_path.empty()) cmd += " >" + stdout_path;
    if (!stderr_path.empty()) cmd += " 2>" + stderr_path;
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

// strips the wall-time column so reruns can be compared
std::string stage_csv_without_seconds(const std::string& text) {
    std::stringstream in(text), out;
    std::string line;
    while (std::getline(in, line)) {
        const auto cut = line.rfind(',');
        out << line.substr(0, cut) << '\n';
    }
    return out.str();
}

struct Workspace {
    TempDir tmp;
    std::string synth_csv;

    explicit Workspace(int n = 400, int d = 3) {
        const std::string dir = tmp.file("data");
        REQUIRE(run_cli("synth --n-samples " + std::to_string(n) +
                        " --dimension " + std::to_string(d) +
                        " --overlap 2.5 --imbalance 0.4 --seed 5 --out " + dir,
                        "/dev/null") == 0);
        synth_csv = dir + "/synthetic.csv";
    }
};

} // namespace

TEST_CASE("help exits zero and lists the common flags") {
    TempDir tmp;
    const auto out = tmp.file("help.txt");
    CHECK(run_cli("--help", out) == 0);
    for (const char* cmd :
         {"train", "evaluate", "sweep", "diagnose", "synth"}) {
        CHECK(slurp(out).find(cmd) != std::string::npos);
        const auto sub_out = tmp.file(std::string("help_") + cmd + ".txt");
        CHECK(run_cli(std::string(cmd) + " --help", sub_out) == 0);
        CHECK(slurp(sub_out).find("--seed") != std::string::npos);
    }
    CHECK(slurp(tmp.file("help_train.txt")).find("--stages") !=
          std::string::npos);
}

TEST_CASE("unknown flags are usage errors") {
    CHECK(run_cli("train --no-such-flag", "/dev/null", "/dev/null") == 2);
    CHECK(run_cli("frobnicate", "/dev/null", "/dev/null") == 2);
}

TEST_CASE("synth writes a loadable csv") {
    Workspace ws;
    const bxt::Dataset ds =
        bxt::load_higgs_csv(ws.synth_csv, std::string("Weight"), "Label");
    CHECK(ds.n_rows == 400);
    CHECK(ds.n_cols == 3);
}

TEST_CASE("train smoke run writes model and one-row stage log") {
    Workspace ws(200, 2);
    const std::string out = ws.tmp.file("run");
    const int rc = run_cli(
        "train --data " + ws.synth_csv +
            " --stages 1 --trees 3 --max-depth 3 --min-samples-leaf 2"
            " --train-frac 0.6 --valid-frac 0.2 --test-frac 0.2"
            " --seed 7 --out " + out,
        "/dev/null");
    REQUIRE(rc == 0);
    const bxt::BoostedModel model = bxt::load_model(out + "/model.bxt");
    CHECK(model.n_stages() == 1);
    const std::string log = slurp(out + "/stages.csv");
    CHECK(count_lines(log) == 2);  // header + one stage
    CHECK(log.rfind("stage,epsilon,alpha,weighted_accuracy,seconds", 0) == 0);
}

TEST_CASE("train on a missing file exits 2 and names the path") {
    TempDir tmp;
    const auto err = tmp.file("err.txt");
    const int rc = run_cli("train --data " + tmp.file("absent.csv") +
                               " --out " + tmp.file("o"),
                           "/dev/null", err);
    CHECK(rc == 2);
    CHECK(slurp(err).find("absent.csv") != std::string::npos);
}

TEST_CASE("training twice with one seed is byte-identical") {
    Workspace ws(300, 3);
    const std::string a = ws.tmp.file("a");
    const std::string b = ws.tmp.file("b");
    const std::string args =
        " --stages 3 --trees 4 --max-depth 4 --min-samples-leaf 3"
        " --train-frac 0.6 --valid-frac 0.2 --test-frac 0.2 --seed 11 --out ";
    REQUIRE(run_cli("train --data " + ws.synth_csv + args + a, "/dev/null") ==
            0);
    REQUIRE(run_cli("train --data " + ws.synth_csv + args + b, "/dev/null") ==
            0);
    CHECK(slurp(a + "/model.bxt") == slurp(b + "/model.bxt"));
    CHECK(stage_csv_without_seconds(slurp(a + "/stages.csv")) ==
          stage_csv_without_seconds(slurp(b + "/stages.csv")));
}

TEST_CASE("evaluate emits the report json and honors --weighted") {
    Workspace ws(500, 3);
    const std::string out = ws.tmp.file("run");
    REQUIRE(run_cli("train --data " + ws.synth_csv +
                        " --stages 2 --trees 4 --max-depth 4"
                        " --min-samples-leaf 3 --train-frac 0.6"
                        " --valid-frac 0.2 --test-frac 0.2 --seed 3 --out " +
                        out,
                    "/dev/null") == 0);
    const std::string model = out + "/model.bxt";

    const std::string wdir = ws.tmp.file("w");
    REQUIRE(run_cli("evaluate --data " + ws.synth_csv + " --model " + model +
                        " --part all --percentile 85 --weighted true"
                        " --seed 3 --out " + wdir,
                    "/dev/null") == 0);
    const std::string cdir = ws.tmp.file("c");
    REQUIRE(run_cli("evaluate --data " + ws.synth_csv + " --model " + model +
                        " --part all --percentile 85 --weighted false"
                        " --seed 3 --out " + cdir,
                    "/dev/null") == 0);

    const auto weighted =
        nlohmann::json::parse(slurp(wdir + "/ams_report.json"));
    const auto counted = nlohmann::json::parse(slurp(cdir + "/ams_report.json"));
    for (const char* key :
         {"selection_count", "false_positives", "s_hat", "b_hat", "ams",
          "threshold_value"}) {
        REQUIRE(weighted.contains(key));
        // unit event weights on an unsplit dataset: identical numbers
        CHECK(weighted[key] == counted[key]);
    }
}

TEST_CASE("evaluate with a dimension-mismatched model exits 2") {
    Workspace three(200, 3);
    Workspace five(200, 5);
    const std::string out = three.tmp.file("run");
    REQUIRE(run_cli("train --data " + three.synth_csv +
                        " --stages 1 --trees 2 --max-depth 2"
                        " --min-samples-leaf 2 --train-frac 0.6"
                        " --valid-frac 0.2 --test-frac 0.2 --seed 4 --out " +
                        out,
                    "/dev/null") == 0);
    CHECK(run_cli("evaluate --data " + five.synth_csv + " --model " + out +
                      "/model.bxt --part all --seed 4 --out " +
                      five.tmp.file("e"),
                  "/dev/null", "/dev/null") == 2);
}

TEST_CASE("sweep writes one row per percentile") {
    Workspace ws(400, 3);
    const std::string out = ws.tmp.file("run");
    REQUIRE(run_cli("train --data " + ws.synth_csv +
                        " --stages 2 --trees 4 --max-depth 4"
                        " --min-samples-leaf 3 --train-frac 0.6"
                        " --valid-frac 0.2 --test-frac 0.2 --seed 9 --out " +
                        out,
                    "/dev/null") == 0);
    REQUIRE(run_cli("sweep --data " + ws.synth_csv + " --model " + out +
                        "/model.bxt --part all --percentiles 50,70,90"
                        " --seed 9 --out " + out,
                    "/dev/null") == 0);
    const std::string csv = slurp(out + "/sweep.csv");
    CHECK(count_lines(csv) == 4);  // header + 3 rows
    CHECK(csv.rfind("percentile,threshold,s_hat,b_hat,ams", 0) == 0);
}

TEST_CASE("diagnose writes a square correlation matrix") {
    Workspace ws(300, 3);
    const std::string out = ws.tmp.file("run");
    REQUIRE(run_cli("train --data " + ws.synth_csv +
                        " --stages 2 --trees 5 --max-depth 4"
                        " --min-samples-leaf 3 --train-frac 0.6"
                        " --valid-frac 0.2 --test-frac 0.2 --seed 6 --out " +
                        out,
                    "/dev/null") == 0);
    REQUIRE(run_cli("diagnose --data " + ws.synth_csv + " --model " + out +
                        "/model.bxt --part all --n-trees 6 --sample-size 200"
                        " --seed 6 --out " + out,
                    "/dev/null", "/dev/null") == 0);
    const std::string csv = slurp(out + "/correlation.csv");
    REQUIRE(count_lines(csv) == 6);
    std::stringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        std::size_t commas = 0;
        for (char c : line) commas += c == ',';
        CHECK(commas == 5);
    }
}

TEST_CASE("config file values are read and flags override them") {
    Workspace ws(300, 3);
    const std::string cfg = ws.tmp.file("run.cfg");
    {
        std::ofstream out(cfg);
        out << "stages=2\ntrees=3\nmax-depth=3\nmin-samples-leaf=2\n"
            << "train-frac=0.6\nvalid-frac=0.2\ntest-frac=0.2\n";
    }
    const std::string out1 = ws.tmp.file("cfgrun");
    REQUIRE(run_cli("train --data " + ws.synth_csv + " --config " + cfg +
                        " --seed 13 --out " + out1,
                    "/dev/null") == 0);
    CHECK(bxt::load_model(out1 + "/model.bxt").n_stages() == 2);

    const std::string out2 = ws.tmp.file("cfgrun2");
    REQUIRE(run_cli("train --data " + ws.synth_csv + " --config " + cfg +
                        " --stages 1 --seed 13 --out " + out2,
                    "/dev/null") == 0);
    CHECK(bxt::load_model(out2 + "/model.bxt").n_stages() == 1);
}
