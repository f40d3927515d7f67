#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "json.hpp"

#include "entn/entn.hpp"

namespace fs = std::filesystem;

namespace {

// One directory per test process, since ctest runs each case separately and
// possibly in parallel.
const fs::path kWork = fs::path(ENTN_TEST_WORK_DIR) / ("cli_" + std::to_string(::getpid()));
const std::string kBin = ENTN_BIN;
const std::string kScenes = std::string(ENTN_SOURCE_DIR) + "/scenes/";

struct CliRun {
    int code;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

CliRun entn_run(const std::string& args) {
    static int counter = 0;
    const fs::path out = kWork / ("stdout_" + std::to_string(counter) + ".txt");
    const fs::path err = kWork / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = kBin + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {code, slurp(out), slurp(err)};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        rows.push_back(f);
    }
    return rows;
}

std::map<std::string, std::string> read_kv(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string k, v;
    while (in >> k >> v) kv[k] = v;
    return kv;
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
        const CliRun a = entn_run("-q gen --spec " + kScenes + "two_objects.cfg --out " + scene().string());
        ASSERT_EQ(a.code, 0) << a.err;
        const CliRun b = entn_run("-q gen --spec " + kScenes + "two_objects_noisy.cfg --out " + noisy().string());
        ASSERT_EQ(b.code, 0) << b.err;
    }
    static void TearDownTestSuite() {
        if (!::testing::UnitTest::GetInstance()->Failed()) fs::remove_all(kWork);
    }
    static fs::path scene() { return kWork / "scene.csv"; }
    static fs::path noisy() { return kWork / "noisy.csv"; }
    static std::string geom() { return " --rows 64 --cols 48 --frames 60 "; }
};

}  // namespace

TEST_F(Cli, GenDeterministic) {
    const fs::path a = kWork / "gen_a.csv", b = kWork / "gen_b.csv";
    ASSERT_EQ(entn_run("gen --spec " + kScenes + "two_objects.cfg --out " + a.string() + " --seed 7").code, 0);
    ASSERT_EQ(entn_run("gen --spec " + kScenes + "two_objects.cfg --out " + b.string() + " --seed 7").code, 0);
    EXPECT_EQ(slurp(a), slurp(b));
    // The scene file carries seed 7, so omitting --seed gives the same stream.
    EXPECT_EQ(slurp(a), slurp(scene()));
    EXPECT_TRUE(fs::exists(fs::path(a.string() + ".scene")));
}

TEST_F(Cli, GenMissingSpecNamesPath) {
    const CliRun r = entn_run("gen --spec /no/such/scene.cfg --out " + (kWork / "x.csv").string());
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("/no/such/scene.cfg"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(kWork / "x.csv"));
}

TEST_F(Cli, GenBadFieldNamed) {
    const fs::path spec = kWork / "bad.cfg";
    std::ofstream(spec) << "rows = 16\ncols = 16\n[object]\nfootprint = 1\nprobability = 2\n";
    const CliRun r = entn_run("gen --spec " + spec.string() + " --out " + (kWork / "bad.csv").string());
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("probability"), std::string::npos) << r.err;
}

TEST_F(Cli, GenOutOfBoundsWarnsAndClips) {
    const fs::path spec = kWork / "orbit.cfg";
    std::ofstream(spec) << "rows = 20\ncols = 20\nframes = 30\nduration_us = 30000\nseed = 2\n"
                        << "[object]\ntrajectory = circular\nstart_row = 10\nstart_col = 10\nradius = 14\n"
                        << "angular_speed = 0.3\nfootprint = 1\nprobability = 1\n";
    const fs::path out = kWork / "orbit.csv";
    const CliRun r = entn_run("gen --spec " + spec.string() + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("warning"), std::string::npos);
    std::ifstream in(out);
    const auto s = entn::parse_events(in, {20, 20});
    EXPECT_EQ(s.size(), 30u * 9u);
}

TEST_F(Cli, BinWritesDumpAndDensity) {
    const fs::path out = kWork / "scene.dump";
    const CliRun r = entn_run("bin --input " + scene().string() + geom() + "--out " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto kv = read_kv(r.out);
    const double d = std::stod(kv.at("density"));
    EXPECT_GE(d, 0.004);
    EXPECT_LE(d, 0.008);
    std::ifstream in(out);
    const auto e = entn::read_tensor_dump(in);
    EXPECT_EQ(e.ones(), std::stoul(kv.at("ones")));
}

TEST_F(Cli, DecomposeRankOneBlock) {
    // Pixels i in [2,6), j in [1,4) firing throughout: the binned tensor
    // is an all-frames indicator block, which is rank 1.
    const fs::path csv = kWork / "block.csv";
    {
        std::ofstream out(csv);
        out << "t,i,j\n";
        for (int t = 0; t < 12000; t += 100)
            for (int i = 2; i < 6; ++i)
                for (int j = 1; j < 4; ++j) out << t << ',' << i << ',' << j << '\n';
    }
    const fs::path dir = kWork / "block";
    const CliRun r = entn_run("decompose --input " + csv.string() +
                           " --rows 8 --cols 5 --frames 12 --f-max 1 --lambda1 0 --lambda2 1e-3 --out-dir " +
                           dir.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto trace = read_csv(dir / "trace.csv");
    ASSERT_GE(trace.size(), 2u);
    EXPECT_EQ(trace[0], (std::vector<std::string>{"s", "f", "objective", "rel_change"}));
    EXPECT_LT(std::stod(trace.back()[3]), 1e-3);
    EXPECT_LT(std::stod(trace.back()[2]), 1e-3);
    const auto info = nlohmann::json::parse(slurp(dir / "run_info.json"));
    EXPECT_EQ(info["model"], "FCTN-ablation");
    EXPECT_EQ(info["final_rank"], 1);
    const auto kv = read_kv(r.out);
    for (const char* key : {"final_rank", "iterations", "rel_change", "seconds"}) EXPECT_TRUE(kv.count(key)) << key;
    EXPECT_TRUE(fs::exists(dir / "factors.txt"));
    EXPECT_TRUE(fs::exists(dir / "run_config.ini"));
}

TEST_F(Cli, DecomposeSMaxAndLabels) {
    const fs::path dir = kWork / "smax";
    const CliRun r = entn_run("decompose --input " + scene().string() + geom() + "--s-max 3 --binary --out-dir " +
                           dir.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LE(read_csv(dir / "trace.csv").size() - 1, 3u);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "run_info.json"))["model"], "ENTN");
    std::ifstream in(dir / "factors.bin", std::ios::binary);
    EXPECT_EQ(entn::read_checkpoint(in).output_dims(), (entn::Dims{64, 48, 60}));
}

TEST_F(Cli, DecomposeBadInputFails) {
    const CliRun r = entn_run("decompose --input " + (kWork / "missing.csv").string() + geom() + "--out-dir " +
                           (kWork / "nothing").string());
    EXPECT_NE(r.code, 0);
    EXPECT_FALSE(fs::exists(kWork / "nothing" / "trace.csv"));
    const CliRun g = entn_run("decompose --input " + scene().string() + " --rows 10 --cols 48 --out-dir " +
                           (kWork / "nothing").string());
    EXPECT_NE(g.code, 0);
}

TEST_F(Cli, DecomposeDeterministicAndConfigRoundTrip) {
    const fs::path a = kWork / "det_a", b = kWork / "det_b", c = kWork / "det_c";
    const std::string args = "--seed 3 decompose --input " + scene().string() + geom() + "--s-max 40 --out-dir ";
    ASSERT_EQ(entn_run(args + a.string()).code, 0);
    ASSERT_EQ(entn_run(args + b.string()).code, 0);
    EXPECT_EQ(slurp(a / "factors.txt"), slurp(b / "factors.txt"));
    EXPECT_EQ(slurp(a / "trace.csv"), slurp(b / "trace.csv"));

    const std::string cfg = slurp(a / "run_config.ini");
    EXPECT_NE(cfg.find("seed=3"), std::string::npos) << cfg;
    const CliRun r = entn_run("--config " + (a / "run_config.ini").string() + " decompose --out-dir " + c.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(a / "factors.txt"), slurp(c / "factors.txt"));
    EXPECT_EQ(slurp(a / "trace.csv"), slurp(c / "trace.csv"));
}

TEST_F(Cli, ClassifyObjectsAucAndDeterminism) {
    const fs::path dec = kWork / "cls_dec";
    // first ENTN point of the sweep grid
    ASSERT_EQ(entn_run("decompose --input " + scene().string() + geom() + "--lambda1 0.2 --lambda2 0.2 --out-dir " +
                       dec.string())
                  .code,
              0);
    const fs::path a = kWork / "cls_a", b = kWork / "cls_b";
    const std::string args =
        "classify --input " + scene().string() + geom() + "--checkpoint " + (dec / "factors.txt").string() +
        " --task objects --out-dir ";
    const CliRun r = entn_run(args + a.string());
    ASSERT_EQ(r.code, 0) << r.err;
    ASSERT_EQ(entn_run(args + b.string()).code, 0);
    const auto report = nlohmann::json::parse(slurp(a / "auc_report.json"));
    EXPECT_GE(report["auc"].get<double>(), 0.85);
    EXPECT_EQ(slurp(a / "auc_report.json"), slurp(b / "auc_report.json"));
    EXPECT_EQ(slurp(a / "svm_model.txt"), slurp(b / "svm_model.txt"));
    EXPECT_EQ(slurp(a / "test_scores.csv"), slurp(b / "test_scores.csv"));
}

TEST_F(Cli, ClassifyWithoutLabelsIsProtocolError) {
    const fs::path unl = kWork / "unlabeled.csv";
    {
        std::ifstream in(scene());
        const auto s = entn::parse_events(in, {64, 48});
        entn::EventStream copy = s;
        for (auto& e : copy.events) e.label.reset();
        std::ofstream out(unl);
        entn::write_events(out, copy);
    }
    const fs::path dec = kWork / "unl_dec";
    ASSERT_EQ(entn_run("decompose --input " + unl.string() + geom() + "--s-max 5 --out-dir " + dec.string()).code, 0);
    const CliRun r = entn_run("classify --input " + unl.string() + geom() + "--checkpoint " +
                           (dec / "factors.txt").string() + " --out-dir " + (kWork / "unl_cls").string());
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("label"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(kWork / "unl_cls" / "auc_report.json"));
}

TEST_F(Cli, DenoiseNoisySceneDefaultQuantile) {
    const fs::path dec = kWork / "den_dec", out = kWork / "den";
    ASSERT_EQ(entn_run("decompose --input " + noisy().string() + geom() + "--out-dir " + dec.string()).code, 0);
    const CliRun r = entn_run("denoise --input " + noisy().string() + geom() + "--checkpoint " +
                           (dec / "factors.txt").string() + " --out-dir " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto kv = read_kv(slurp(out / "summary.txt"));
    EXPECT_GT(std::stod(kv.at("precision")), std::stod(kv.at("base_rate")));
    EXPECT_EQ(std::stoul(kv.at("kept")) + std::stoul(kv.at("removed")), std::stoul(kv.at("events")));
    std::ifstream in(out / "filtered.csv");
    EXPECT_EQ(entn::parse_events(in, {64, 48}).size(), std::stoul(kv.at("kept")));
    EXPECT_EQ(read_csv(out / "scores.csv").size(), std::stoul(kv.at("events")) + 1);

    const CliRun t = entn_run("denoise --input " + noisy().string() + geom() + "--checkpoint " +
                           (dec / "factors.txt").string() + " --tau 1e9 --out-dir " + (kWork / "den_all").string());
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_EQ(read_kv(slurp(kWork / "den_all" / "summary.txt")).at("empty_kept"), "1");
}

TEST_F(Cli, SweepSingleCell) {
    const fs::path dir = kWork / "sweep1";
    const CliRun r = entn_run("sweep --input " + scene().string() + geom() +
                           "--lambda1-grid 0.1 --lambda2-grid 0.1 --s-max 30 --out-dir " + dir.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(dir / "results.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"lambda1", "lambda2", "auc", "converged", "iters", "seconds"}));
    for (const auto& g : read_csv(dir / "gaps.csv"))
        if (g[0] != "axis") EXPECT_EQ(std::stod(g[4]), 0.0);
    EXPECT_NE(r.out.find("gap "), std::string::npos);
}

TEST_F(Cli, SweepFourByFourGrid) {
    const fs::path dir = kWork / "sweep16";
    const CliRun r = entn_run("--threads 2 sweep --input " + scene().string() + geom() +
                           "--lambda1-grid 0,0.2,0.4,0.6 --lambda2-grid 0,0.2,0.4,0.6 --s-max 40 --out-dir " +
                           dir.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = read_csv(dir / "results.csv");
    ASSERT_EQ(rows.size(), 17u);
    std::vector<double> ok;
    std::map<std::string, std::vector<double>> by_l2;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (rows[k][2] == "nan") {
            // only the unanchored lambda2 = 0, lambda1 > 0 cells may fail
            EXPECT_EQ(std::stod(rows[k][1]), 0.0);
            EXPECT_GT(std::stod(rows[k][0]), 0.0);
            continue;
        }
        const double a = std::stod(rows[k][2]);
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 1.0);
        ok.push_back(a);
        by_l2[rows[k][1]].push_back(a);
    }
    ASSERT_FALSE(ok.empty());
    const auto gaps = read_csv(dir / "gaps.csv");
    ASSERT_EQ(gaps.size(), 1u + 4u + 4u + 1u);
    const auto& all = gaps.back();
    EXPECT_EQ(all[0], "all");
    const double hi = *std::max_element(ok.begin(), ok.end()), lo = *std::min_element(ok.begin(), ok.end());
    EXPECT_NEAR(std::stod(all[4]), 100.0 * (hi - lo) / hi, 1e-9);
    for (std::size_t k = 1; k <= 4; ++k) {
        const auto& v = by_l2[gaps[k][1]];
        const double gh = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
        const double gl = v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
        EXPECT_NEAR(std::stod(gaps[k][4]), gh > 0 ? 100.0 * (gh - gl) / gh : 0.0, 1e-9);
        EXPECT_GE(std::stod(gaps[k][4]), 0.0);
        EXPECT_LE(std::stod(gaps[k][4]), 100.0);
    }
}

TEST_F(Cli, ThreadsDoNotChangeResults) {
    const std::string args = "sweep --input " + scene().string() + geom() +
                             "--lambda1-grid 0,0.3 --lambda2-grid 0.1,0.3 --s-max 20 --out-dir ";
    ASSERT_EQ(entn_run("--threads 1 " + args + (kWork / "t1").string()).code, 0);
    ASSERT_EQ(entn_run("--threads 3 " + args + (kWork / "t3").string()).code, 0);
    const auto a = read_csv(kWork / "t1" / "results.csv"), b = read_csv(kWork / "t3" / "results.csv");
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 1; k < a.size(); ++k)
        for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(a[k][c], b[k][c]);
}
