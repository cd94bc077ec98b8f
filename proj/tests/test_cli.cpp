#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <catch_amalgamated.hpp>

#include "volcluster/cli.hpp"

using namespace volcluster;
using namespace volcluster::cli;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("volcluster_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Every file under `a` except the timing sidecar has a byte-identical twin under `b`.
void require_same_data_files(const fs::path& a, const fs::path& b) {
    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file() || entry.path().filename() == "run_info.json") continue;
        const fs::path twin = b / fs::relative(entry.path(), a);
        INFO(twin.string());
        REQUIRE(fs::exists(twin));
        CHECK(read_text(entry.path()) == read_text(twin));
        ++compared;
    }
    CHECK(compared > 0);
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(VOLCLUSTER_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Captured {
    std::ostringstream out, err;
};

}  // namespace

TEST_CASE("simulate writes deterministic files", "[cli]") {
    const fs::path dir = scratch("simulate");
    Captured c1, c2;
    SimulateArgs args;
    args.config = "fig5";
    args.seed = 42;
    args.out = (dir / "a").string();
    const auto r1 = cmd_simulate(args, c1.out, c1.err);
    REQUIRE(r1.exit_code == 0);
    args.out = (dir / "b").string();
    const auto r2 = cmd_simulate(args, c2.out, c2.err);
    REQUIRE(r2.exit_code == 0);
    require_same_data_files(dir / "a", dir / "b");

    for (const char* f : {"config.json", "path.csv", "analysis.json", "analysis_acf.csv", "analysis_ccdf.csv",
                          "manifest.json", "run_info.json"})
        CHECK(fs::exists(dir / "a" / f));
    CHECK_THAT(r1.summary, ContainsSubstring("mean(r)="));
    CHECK_THAT(r1.summary, ContainsSubstring("std(r)="));
    CHECK_THAT(r1.summary, ContainsSubstring("alpha="));
    const RunConfig snap = load_config(dir / "a" / "config.json");
    CHECK(snap.seed == 42u);
    CHECK(snap.horizon == 10000);
    // config snapshot replays the run
    Captured c3;
    SimulateArgs replay;
    replay.config = (dir / "a" / "config.json").string();
    replay.out = (dir / "c").string();
    REQUIRE(cmd_simulate(replay, c3.out, c3.err).exit_code == 0);
    require_same_data_files(dir / "a", dir / "c");
}

TEST_CASE("simulate validates flags", "[cli]") {
    const fs::path dir = scratch("validate");
    Captured c;
    SimulateArgs args;
    args.model = "general";
    args.periods = 1;
    args.seed = 1;
    args.out = dir.string();
    const auto r = cmd_simulate(args, c.out, c.err);
    CHECK(r.exit_code == 1);
    CHECK_THAT(c.err.str(), ContainsSubstring("horizon must be >= 2"));

    SimulateArgs bad_model = args;
    bad_model.periods.reset();
    bad_model.model = "garch";
    CHECK(cmd_simulate(bad_model, c.out, c.err).exit_code == 1);
    SimulateArgs bad_config = args;
    bad_config.periods.reset();
    bad_config.config = "no-such-preset";
    CHECK(cmd_simulate(bad_config, c.out, c.err).exit_code == 1);
    SimulateArgs bad_units = args;
    bad_units.periods.reset();
    bad_units.units = "basis-points";
    CHECK(cmd_simulate(bad_units, c.out, c.err).exit_code == 1);
}

TEST_CASE("simulate flags nonstationary news-driven paths", "[cli]") {
    const fs::path dir = scratch("nonstat");
    Captured c;
    SimulateArgs args;
    args.config = "fig3";
    args.seed = 7;
    args.out = dir.string();
    const auto r = cmd_simulate(args, c.out, c.err);
    CHECK_THAT(r.summary, ContainsSubstring("nonstationary=yes"));
}

TEST_CASE("simulate reports price floor breaches with exit code 2", "[cli]") {
    const fs::path dir = scratch("breach");
    write_text(dir / "wild.json",
               R"({"preset": "fig3", "eps": {"kind": "gaussian", "mean": 0, "std": 200},
                   "m": {"kind": "exponential", "mean": 1}})");
    Captured c;
    SimulateArgs args;
    args.config = (dir / "wild.json").string();
    args.seed = 1;
    args.out = (dir / "out").string();
    const auto r = cmd_simulate(args, c.out, c.err);
    CHECK(r.exit_code == 2);
    CHECK_THAT(c.err.str(), ContainsSubstring("price floor"));
    CHECK_THAT(read_text(dir / "out" / "path.csv"), ContainsSubstring("# aborted:"));
}

TEST_CASE("layering: preset or file, then flags", "[cli]") {
    const fs::path dir = scratch("layers");
    write_text(dir / "cfg.json", R"({"preset": "fig5", "T": 500, "seed": 5, "units": "percent"})");
    Captured c;
    SimulateArgs args;
    args.config = (dir / "cfg.json").string();
    args.out = (dir / "file").string();
    REQUIRE(cmd_simulate(args, c.out, c.err).exit_code == 0);
    RunConfig snap = load_config(dir / "file" / "config.json");
    CHECK(snap.horizon == 500);
    CHECK(snap.seed == 5u);
    CHECK(snap.a == 0.99);

    args.periods = 300;
    args.seed = 6;
    args.model = "news";
    args.out = (dir / "flags").string();
    REQUIRE(cmd_simulate(args, c.out, c.err).exit_code == 0);
    snap = load_config(dir / "flags" / "config.json");
    CHECK(snap.horizon == 300);
    CHECK(snap.seed == 6u);
    CHECK(snap.model == ModelKind::news);
}

TEST_CASE("seed resolution: flag, environment, config, random", "[cli]") {
    RunConfig c = preset("fig5");
    std::ostringstream out;
    ::unsetenv("VOLCLUSTER_SEED");
    c.seed = 11;
    CHECK(cli::detail::resolve_seed(std::nullopt, c, out) == 11u);
    ::setenv("VOLCLUSTER_SEED", "22", 1);
    CHECK(cli::detail::resolve_seed(std::nullopt, c, out) == 22u);
    CHECK(cli::detail::resolve_seed(33u, c, out) == 33u);
    ::setenv("VOLCLUSTER_SEED", "not-a-number", 1);
    CHECK_THROWS_AS(cli::detail::resolve_seed(std::nullopt, c, out), ConfigError);
    ::unsetenv("VOLCLUSTER_SEED");
    c.seed.reset();
    CHECK(out.str().empty());
    const auto s = cli::detail::resolve_seed(std::nullopt, c, out);
    CHECK_THAT(out.str(), ContainsSubstring("--seed " + std::to_string(s)));
}

TEST_CASE("ensemble command", "[cli]") {
    const fs::path dir = scratch("ensemble");
    Captured c;
    EnsembleArgs args;
    args.config = "fig6";
    args.paths = 5;
    args.seed = 1;
    args.jobs = 1;
    args.out = (dir / "serial").string();
    const auto r = cmd_ensemble(args, c.out, c.err);
    REQUIRE(r.exit_code == 0);
    for (int i = 0; i < 5; ++i) CHECK(fs::exists(dir / "serial" / ("path_00" + std::to_string(i) + ".csv")));
    CHECK(fs::exists(dir / "serial" / "pooled_returns.csv"));
    CHECK(fs::exists(dir / "serial" / "pooled_analysis.json"));
    const auto summary = nlohmann::json::parse(read_text(dir / "serial" / "summary.json"));
    CHECK(summary["per_path"].size() == 5);
    CHECK(summary["average"]["std"].get<double>() > 0.0);
    CHECK_FALSE(summary["pooled"]["fit"].is_null());

    args.jobs = 4;
    args.out = (dir / "parallel").string();
    REQUIRE(cmd_ensemble(args, c.out, c.err).exit_code == 0);
    require_same_data_files(dir / "serial", dir / "parallel");

    args.paths = 0;
    CHECK(cmd_ensemble(args, c.out, c.err).exit_code == 1);
}

TEST_CASE("analyze command", "[cli]") {
    const fs::path dir = scratch("analyze");
    Captured c;

    SECTION("two prices give one percent return") {
        write_text(dir / "two.csv", "price\n100\n101\n");
        AnalyzeArgs args;
        args.prices = (dir / "two.csv").string();
        args.out = (dir / "two").string();
        const auto r = cmd_analyze(args, c.out, c.err);
        CHECK(r.exit_code == 0);
        CHECK(read_text(dir / "two" / "returns.csv") == "r\n1\n");
        const auto j = nlohmann::json::parse(read_text(dir / "two" / "analysis.json"));
        CHECK(j["fit"].is_null());
        CHECK(j["acf_returns"].is_null());
    }
    SECTION("analysis of a written path equals the in-process analysis") {
        SimulateArgs sim;
        sim.config = "fig5";
        sim.seed = 3;
        sim.out = (dir / "sim").string();
        REQUIRE(cmd_simulate(sim, c.out, c.err).exit_code == 0);
        AnalyzeArgs args;
        args.prices = (dir / "sim" / "path.csv").string();
        args.out = (dir / "re").string();
        REQUIRE(cmd_analyze(args, c.out, c.err).exit_code == 0);
        CHECK(read_text(dir / "sim" / "analysis.json") == read_text(dir / "re" / "analysis.json"));
        CHECK(read_text(dir / "sim" / "analysis_acf.csv") == read_text(dir / "re" / "analysis_acf.csv"));
        CHECK(read_text(dir / "sim" / "analysis_ccdf.csv") == read_text(dir / "re" / "analysis_ccdf.csv"));

        // and from the returns file written by the first pass
        AnalyzeArgs from_returns;
        from_returns.returns = (dir / "re" / "returns.csv").string();
        from_returns.out = (dir / "rr").string();
        REQUIRE(cmd_analyze(from_returns, c.out, c.err).exit_code == 0);
        CHECK(read_text(dir / "sim" / "analysis.json") == read_text(dir / "rr" / "analysis.json"));
    }
    SECTION("source and data errors") {
        AnalyzeArgs none;
        none.out = (dir / "x").string();
        CHECK(cmd_analyze(none, c.out, c.err).exit_code == 1);
        AnalyzeArgs both = none;
        both.prices = "a.csv";
        both.returns = "b.csv";
        CHECK(cmd_analyze(both, c.out, c.err).exit_code == 1);

        write_text(dir / "bad.csv", "price\n100\n101\nabc\n");
        AnalyzeArgs bad = none;
        bad.prices = (dir / "bad.csv").string();
        Captured e;
        CHECK(cmd_analyze(bad, e.out, e.err).exit_code == 2);
        CHECK_THAT(e.err.str(), ContainsSubstring("row 3"));

        AnalyzeArgs missing = none;
        missing.prices = (dir / "nope.csv").string();
        CHECK(cmd_analyze(missing, c.out, c.err).exit_code == 2);
        AnalyzeArgs bad_schema = none;
        bad_schema.prices = (dir / "bad.csv").string();
        bad_schema.schema = "colour=red";
        CHECK(cmd_analyze(bad_schema, c.out, c.err).exit_code == 1);
    }
}

TEST_CASE("kesten command", "[cli]") {
    Captured c;
    auto r = cmd_kesten({"kind=uniform,low=0,high=2"}, c.out, c.err);
    CHECK(r.exit_code == 0);
    CHECK_THAT(r.summary, ContainsSubstring("alpha = 1.000000"));
    CHECK_THAT(r.summary, ContainsSubstring("residual"));

    r = cmd_kesten({"kind=exponential,mean=0.5"}, c.out, c.err);
    CHECK(r.exit_code == 0);
    CHECK_THAT(r.summary, ContainsSubstring("alpha = 3.45"));

    Captured e;
    r = cmd_kesten({"kind=constant,value=0.5"}, e.out, e.err);
    CHECK(r.exit_code == 2);
    CHECK_THAT(e.err.str(), ContainsSubstring("degenerate distribution"));

    Captured f;
    CHECK(cmd_kesten({"kind=exponential,mean=2"}, f.out, f.err).exit_code == 2);
    CHECK_THAT(f.err.str(), ContainsSubstring("E[ln|c|]"));
    CHECK(cmd_kesten({"kind=exponential,mean=abc"}, c.out, c.err).exit_code == 1);
    CHECK(cmd_kesten({"kind=cauchy,scale=1"}, c.out, c.err).exit_code == 1);
    CHECK(cmd_kesten({"mean"}, c.out, c.err).exit_code == 1);
}

TEST_CASE("reproduce command", "[cli]") {
    const fs::path dir = scratch("reproduce");
    Captured c;

    SECTION("fig7 runs paired arms that differ only in value news") {
        ReproduceArgs args{"fig7", 9, (dir / "a").string(), 0};
        REQUIRE(cmd_reproduce(args, c.out, c.err).exit_code == 0);
        RunConfig left = load_config(dir / "a" / "left" / "config.json");
        RunConfig right = load_config(dir / "a" / "right" / "config.json");
        CHECK(left.news.prob_i == 0.3);
        CHECK(right.news.prob_i == 0.0);
        CHECK(left.seed == right.seed);
        right.news.prob_i = left.news.prob_i;
        CHECK(left == right);
        const auto manifest = nlohmann::json::parse(read_text(dir / "a" / "manifest.json"));
        CHECK(manifest["panels"].size() == 8);
        CHECK(manifest["seed"] == 9);

        args.out = (dir / "b").string();
        REQUIRE(cmd_reproduce(args, c.out, c.err).exit_code == 0);
        require_same_data_files(dir / "a", dir / "b");
    }
    SECTION("ensemble figures") {
        ReproduceArgs args{"fig6", 2, (dir / "f6").string(), 0};
        REQUIRE(cmd_reproduce(args, c.out, c.err).exit_code == 0);
        CHECK(fs::exists(dir / "f6" / "path_004.csv"));
        CHECK(fs::exists(dir / "f6" / "pooled_analysis_ccdf.csv"));
    }
    SECTION("single-path figure") {
        ReproduceArgs args{"fig5", 2, (dir / "f5").string(), 0};
        REQUIRE(cmd_reproduce(args, c.out, c.err).exit_code == 0);
        CHECK(fs::exists(dir / "f5" / "analysis_acf.csv"));
    }
    SECTION("empirical and unknown figures") {
        Captured e;
        CHECK(cmd_reproduce({"fig1", 1, (dir / "x").string(), 0}, e.out, e.err).exit_code == 1);
        CHECK_THAT(e.err.str(), ContainsSubstring("analyze"));
        CHECK(cmd_reproduce({"fig2", 1, (dir / "x").string(), 0}, e.out, e.err).exit_code == 1);
        CHECK(cmd_reproduce({"fig8", 1, (dir / "x").string(), 0}, e.out, e.err).exit_code == 1);
    }
}

TEST_CASE("executable exit codes and help", "[cli][binary]") {
    const fs::path dir = scratch("binary");
    CHECK(run_binary("--help") == 0);
    for (const char* sub : {"simulate", "ensemble", "analyze", "kesten", "reproduce"})
        CHECK(run_binary(std::string(sub) + " --help") == 0);
    CHECK(run_binary("") == 1);
    CHECK(run_binary("simulate --bogus") == 1);
    CHECK(run_binary("simulate --seed notanumber") == 1);
    CHECK(run_binary("kesten --dist kind=uniform,low=0,high=2") == 0);
    CHECK(run_binary("kesten --dist kind=constant,value=0.5") == 2);
    CHECK(run_binary("ensemble --paths 0 --seed 1 --out " + (dir / "e").string()) == 1);
    CHECK(run_binary("simulate --periods 1 --seed 1 --out " + (dir / "s").string()) == 1);
    CHECK(run_binary("simulate --periods 200 --seed 1 --out " + (dir / "ok").string()) == 0);
    CHECK(fs::exists(dir / "ok" / "path.csv"));
    CHECK(run_binary("reproduce --figure fig1") == 1);
}
