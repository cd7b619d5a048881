#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "tsentinel/cli.hpp"
#include "tsentinel/detector.hpp"
#include "tsentinel/eval.hpp"
#include "tsentinel/synth.hpp"

using namespace tsentinel;
namespace fs = std::filesystem;

namespace {

struct Result {
    int status;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "tsentinel");
    std::ostringstream out, err;
    const int status = cli::run(args, out, err);
    return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::ranges::count(s, '\n')); }

/// Scratch directory holding one synthesized trace of each scenario.
struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() / ("tsentinel_cli_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        REQUIRE(run({"synth", "baseline", "--seed", "0", "-o", path("base.csv")}).status == 0);
        REQUIRE(run({"synth", "attack", "--seed", "500", "-o", path("attack.csv")}).status == 0);
        REQUIRE(run({"synth", "mixed", "--seed", "100", "-o", path("mixed.csv")}).status == 0);
    }
    ~Workspace() { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

Workspace& ws() {
    static Workspace w;
    return w;
}

} // namespace

TEST_CASE("synth") {
    const auto r = run({"synth", "attack", "--seed", "1", "-o", ws().path("a1.csv")});
    CHECK(r.status == 0);
    CHECK(r.out.find("360 samples") != std::string::npos);
    CHECK(r.out.find("attack 356, no_attack 4") != std::string::npos);
    const auto trace = read_trace_file(ws().path("a1.csv"));
    CHECK(trace.size() == 360);
    CHECK(trace == synthesize(attack_scenario(), default_load_model(), 1));

    CHECK(read_trace_file(ws().path("mixed.csv")).size() == 1440);

    SUBCASE("deterministic") {
        REQUIRE(run({"synth", "attack", "--seed", "1", "-o", ws().path("a1b.csv")}).status == 0);
        CHECK(slurp(ws().path("a1.csv")) == slurp(ws().path("a1b.csv")));
    }
    SUBCASE("unknown scenario") {
        const auto bad = run({"synth", "flood", "-o", ws().path("x.csv")});
        CHECK(bad.status != 0);
        CHECK_FALSE(bad.err.empty());
        CHECK_FALSE(fs::exists(ws().path("x.csv")));
    }
    SUBCASE("scenario file round trip") {
        REQUIRE(run({"synth", "mixed", "--seed", "4", "--write-scenario", ws().path("m4.txt"), "-o",
                     ws().path("m4.csv")})
                    .status == 0);
        REQUIRE(run({"synth", "--scenario-file", ws().path("m4.txt"), "--seed", "4", "-o", ws().path("m4b.csv")})
                    .status == 0);
        CHECK(slurp(ws().path("m4.csv")) == slurp(ws().path("m4b.csv")));
    }
    SUBCASE("needs exactly one scenario source") {
        CHECK(run({"synth", "-o", ws().path("y.csv")}).status != 0);
    }
    SUBCASE("load model override from the environment") {
        auto model = default_load_model();
        model.baseline[0] = 42.0;
        for (auto& sd : model.noise_sd) sd = 0.0;
        std::ofstream(ws().path("lm.json")) << load_model_to_json(model);
        ::setenv(cli::kLoadModelEnv, ws().path("lm.json").c_str(), 1);
        const auto r2 = run({"synth", "baseline", "-o", ws().path("lm.csv")});
        ::unsetenv(cli::kLoadModelEnv);
        REQUIRE(r2.status == 0);
        CHECK(read_trace_file(ws().path("lm.csv"))[0][Metric::CpuUtil] == 42.0);
    }
    SUBCASE("unwritable output") {
        const auto bad = run({"synth", "baseline", "-o", ws().path("no/such/dir/x.csv")});
        CHECK(bad.status != 0);
        CHECK(bad.err.starts_with("error: "));
    }
}

TEST_CASE("features") {
    const auto r = run({"features", ws().path("base.csv"), ws().path("attack.csv"), "-o", ws().path("pca.json")});
    REQUIRE(r.status == 0);
    CHECK(r.out.find("explained variance ratio") != std::string::npos);
    const auto pos_pkts = r.out.find("net_pkts_in ");
    const auto pos_read = r.out.find("disk_read_reqs ");
    REQUIRE(pos_pkts != std::string::npos);
    REQUIRE(pos_read != std::string::npos);
    CHECK(pos_pkts < pos_read);
    CHECK(fs::exists(ws().path("pca.json")));

    SUBCASE("threshold 1 uses all components") {
        const auto all = run({"features", ws().path("base.csv"), "--variance-threshold", "1"});
        REQUIRE(all.status == 0);
        CHECK(all.out.find("components used at threshold 1: 8") != std::string::npos);
        CHECK(all.out.find("  8. ") != std::string::npos);
    }
    SUBCASE("constant trace") {
        std::ofstream(ws().path("const.csv"))
            << "t,cpu_util,mem_used,disk_read_reqs,disk_write_reqs,net_bytes_in,net_bytes_out,net_pkts_in,net_pkts_out\n"
               "0,1,0.5,1,1,1,1,1,1\n5,1,0.5,1,1,1,1,1,1\n10,1,0.5,1,1,1,1,1,1\n";
        const auto bad = run({"features", ws().path("const.csv")});
        CHECK(bad.status != 0);
        CHECK(bad.err.find("zero total variance") != std::string::npos);
    }
    SUBCASE("parse errors keep the row number") {
        std::ofstream(ws().path("gap.csv"))
            << "t,cpu_util,mem_used,disk_read_reqs,disk_write_reqs,net_bytes_in,net_bytes_out,net_pkts_in,net_pkts_out\n"
               "0,1,0.5,1,1,1,1,1,1\n5,1,0.5,1,1,1,1,1,1\n11,1,0.5,1,1,1,1,1,1\n";
        const auto bad = run({"features", ws().path("gap.csv")});
        CHECK(bad.status != 0);
        CHECK(bad.err.find("row 3") != std::string::npos);
    }
    SUBCASE("threshold out of range") {
        CHECK(run({"features", ws().path("base.csv"), "--variance-threshold", "1.5"}).status != 0);
    }
}

TEST_CASE("eval and detect") {
    const std::string six = "cpu_util,disk_write_reqs,net_bytes_in,net_bytes_out,net_pkts_in,net_pkts_out";
    const auto r = run({"eval", "--train", ws().path("base.csv"), "--train", ws().path("attack.csv"), "--test",
                        ws().path("mixed.csv"), "--features", six, "-o", ws().path("report.json"), "--save-model",
                        ws().path("knn.json")});
    REQUIRE(r.status == 0);
    CHECK(r.out.find("ML Algorithms") != std::string::npos);
    CHECK(r.out.find("kNN") != std::string::npos);
    CHECK(r.out.find("CART") != std::string::npos);

    const auto report = report_from_json(slurp(ws().path("report.json")));
    CHECK(join_metric_names(report.features) == six);
    CHECK(report.train_sources.size() == 2);
    const auto train = concatenate(read_trace_file(ws().path("base.csv")), read_trace_file(ws().path("attack.csv")));
    const auto direct = run_experiment(train, read_trace_file(ws().path("mixed.csv")),
                                       std::vector<Metric>(kDefaultFeatures.begin(), kDefaultFeatures.end()));
    CHECK(report.knn == direct.knn);
    CHECK(report.cart == direct.cart);

    SUBCASE("detect with window 1 matches eval") {
        const auto d = run({"detect", "--model", ws().path("knn.json"), ws().path("mixed.csv"), "--window", "1", "-o",
                            ws().path("det.json"), "--decisions", ws().path("dec.csv")});
        REQUIRE(d.status == 0);
        CHECK(d.out.find("events:") != std::string::npos);
        const auto det = detection_from_json(slurp(ws().path("det.json")));
        CHECK(*det.confusion == report.knn.confusion);
        CHECK(line_count(slurp(ws().path("dec.csv"))) == 1441);
    }
    SUBCASE("detect with the default window") {
        const auto d = run({"detect", "--model", ws().path("knn.json"), ws().path("mixed.csv")});
        REQUIRE(d.status == 0);
        CHECK(d.out.find("window 5") != std::string::npos);
        CHECK(d.out.find("missed") != std::string::npos);
        CHECK(d.out.find("  attack ") != std::string::npos);
    }
    SUBCASE("cart model") {
        REQUIRE(run({"eval", "--train", ws().path("base.csv"), "--train", ws().path("attack.csv"), "--test",
                     ws().path("mixed.csv"), "--features", six, "--classifier", "cart", "--save-model",
                     ws().path("cart.json")})
                    .status == 0);
        CHECK(run({"detect", "--model", ws().path("cart.json"), ws().path("mixed.csv")}).status == 0);
    }
    SUBCASE("even window") {
        const auto d = run({"detect", "--model", ws().path("knn.json"), ws().path("mixed.csv"), "--window", "4"});
        CHECK(d.status != 0);
        CHECK_FALSE(d.err.empty());
    }
    SUBCASE("even k") {
        CHECK(run({"eval", "--train", ws().path("base.csv"), "--test", ws().path("mixed.csv"), "--k", "4"}).status !=
              0);
    }
}

TEST_CASE("eval defaults to the PCA ranking") {
    const auto r = run({"eval", "--train", ws().path("base.csv"), "--train", ws().path("attack.csv"), "--test",
                        ws().path("mixed.csv"), "-o", ws().path("pca_report.json")});
    REQUIRE(r.status == 0);
    const auto report = report_from_json(slurp(ws().path("pca_report.json")));
    CHECK(report.feature_selection.find("pca-ranking threshold=0.95") == 0);
    CHECK_FALSE(report.features.empty());
}

TEST_CASE("eval rejects unlabeled test data") {
    auto trace = read_trace_file(ws().path("mixed.csv"));
    auto samples = trace.samples();
    for (auto& s : samples) s.label.reset();
    write_trace_file(ws().path("unlabeled.csv"), TelemetryTrace(trace.interval(), samples));
    const auto r = run({"eval", "--train", ws().path("base.csv"), "--test", ws().path("unlabeled.csv")});
    CHECK(r.status != 0);
    CHECK(r.err.find("evaluation requires labels") != std::string::npos);

    // Unlabeled traces are fine for detection.
    REQUIRE(run({"eval", "--train", ws().path("base.csv"), "--train", ws().path("attack.csv"), "--test",
                 ws().path("mixed.csv"), "--save-model", ws().path("m.json")})
                .status == 0);
    const auto d = run({"detect", "--model", ws().path("m.json"), ws().path("unlabeled.csv")});
    CHECK(d.status == 0);
    CHECK(d.out.find("missed") == std::string::npos);
}

TEST_CASE("plot-data") {
    const auto out = ws().path("plots");
    const auto r = run({"plot-data", ws().path("base.csv"), ws().path("attack.csv"), "-o", out});
    REQUIRE(r.status == 0);
    for (auto m : kAllMetrics) {
        const auto file = fs::path(out) / (std::string(metric_name(m)) + ".csv");
        REQUIRE(fs::exists(file));
        const auto text = slurp(file);
        CHECK(text.starts_with("t,scenario_a,scenario_b\n"));
        CHECK(line_count(text) == 361);
    }

    SUBCASE("same trace twice gives identical columns") {
        REQUIRE(run({"plot-data", ws().path("base.csv"), ws().path("base.csv"), "-o", ws().path("same")}).status == 0);
        std::istringstream in(slurp(fs::path(ws().path("same")) / "net_pkts_in.csv"));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            const auto a = line.find(','), b = line.rfind(',');
            REQUIRE(line.substr(a + 1, b - a - 1) == line.substr(b + 1));
        }
    }
    SUBCASE("different lengths truncate with a warning") {
        const auto t = run({"plot-data", ws().path("base.csv"), ws().path("mixed.csv"), "-o", ws().path("trunc")});
        REQUIRE(t.status == 0);
        CHECK(t.err.find("warning") != std::string::npos);
        CHECK(line_count(slurp(fs::path(ws().path("trunc")) / "cpu_util.csv")) == 361);
    }
    SUBCASE("interval mismatch") {
        std::ofstream(ws().path("fast.csv"))
            << "t,cpu_util,mem_used,disk_read_reqs,disk_write_reqs,net_bytes_in,net_bytes_out,net_pkts_in,net_pkts_out\n"
               "0,1,0.5,1,1,1,1,1,1\n1,1,0.5,1,1,1,1,1,1\n";
        const auto bad = run({"plot-data", ws().path("base.csv"), ws().path("fast.csv"), "-o", ws().path("bad")});
        CHECK(bad.status != 0);
        CHECK(bad.err.find("interval mismatch") != std::string::npos);
    }
}

TEST_CASE("usage") {
    CHECK(run({}).status != 0);
    CHECK(run({"frobnicate"}).status != 0);
    const auto help = run({"eval", "--help"});
    CHECK(help.status == 0);
    CHECK(help.out.find("--max-depth") != std::string::npos);
    CHECK(help.out.find("12") != std::string::npos);
}
