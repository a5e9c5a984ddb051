#include "fixtures.hpp"

#include "izsfd/cli.hpp"
#include "izsfd/report.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace izsfd {
namespace {

namespace fs = std::filesystem;
using fixture::TempDir;

struct Outcome {
    int code;
    std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
    args.insert(args.begin(), "izsfd");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

void write_tiny_config(const fs::path& path, const fs::path& output, const std::string& protocol = "category-increment") {
    std::ofstream(path) << "seed = 1\n"
                           "[data]\nsource = \"synthetic\"\n"
                           "[synthetic]\ncardinalities = [3, 3, 3, 3]\ncategories = 9\ndim = 8\nsigma = 0.5\n"
                           "direction_scale = 3.0\ntrain_per_category = 20\ntest_per_category = 10\nseed = 3\n"
                           "[plan]\nprotocol = \""
                        << protocol
                        << "\"\nstages = 2\nunseen = 3\n"
                           "[model]\nfe_hidden = 16\nfeature_dim = 6\nnoise_dim = 4\ngenerator_hidden = [16]\n"
                           "critic_hidden = [16]\n"
                           "[pretrain]\nepochs = 20\n[head]\nepochs = 2\n[gan]\nepochs = 2\n"
                           "[output]\ndir = \""
                        << output.string() << "\"\n";
}

TEST(Cli, UsageErrorsExitWithTwo) {
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    EXPECT_EQ(cli({"run"}).code, 2);
    EXPECT_EQ(cli({"run", "baseline", "cfg.toml"}).code, 2);
    EXPECT_EQ(cli({"run", "baseline", "--mode", "ewc", "cfg.toml"}).code, 2);
    EXPECT_EQ(cli({"gen-synthetic", "only-one-arg"}).code, 2);
    EXPECT_EQ(cli({"--seed", "abc", "pretrain", "cfg.toml"}).code, 2);
}

TEST(Cli, HelpExitsWithZero) { EXPECT_EQ(cli({"--help"}).code, 0); }

TEST(Cli, RuntimeErrorsExitWithOneAndExplain) {
    const Outcome o = cli({"pretrain", "/nonexistent/config.toml"});
    EXPECT_EQ(o.code, 1);
    EXPECT_NE(o.err.find("izsfd:"), std::string::npos);
    EXPECT_EQ(cli({"eval", "/nonexistent/ckpt", "/nonexistent/data"}).code, 1);
    EXPECT_EQ(cli({"report", "/nonexistent/runlog.json"}).code, 1);
    EXPECT_EQ(cli({"ingest-hydraulic", "/nonexistent", "/tmp/izsfd_never"}).code, 1);
}

TEST(Cli, GenerateAndIngest) {
    TempDir dir("cli_gen");
    const auto out = dir.path() / "ds";
    ASSERT_EQ(cli({"gen-synthetic", (fixture::source_dir() / "configs" / "synthetic-spec.toml").string(), out.string()})
                  .code,
              0);
    EXPECT_TRUE(fs::exists(out / "manifest.json"));
    const Dataset a = load_dataset(out);
    ASSERT_EQ(cli({"gen-synthetic", (fixture::source_dir() / "configs" / "synthetic-spec.toml").string(),
                   out.string(), "--seed", "99"})
                  .code,
              0);
    EXPECT_NE(load_dataset(out).x, a.x);

    std::ofstream(dir.path() / "a.csv") << "1,1,0\n2,0,1\n";
    {
        std::ofstream d(dir.path() / "d.csv");
        for (int f : {1, 2})
            for (const char* split : {"train", "test"}) {
                d << f << ',' << split;
                for (int j = 0; j < 52; ++j) d << ',' << f * j;
                d << '\n';
            }
    }
    EXPECT_EQ(cli({"ingest-tep", (dir.path() / "d.csv").string(), (dir.path() / "a.csv").string(),
                   (dir.path() / "tep").string()})
                  .code,
              0);
    EXPECT_EQ(load_dataset(dir.path() / "tep").size(), 4u);
}

TEST(Cli, RunEvalReportAndSeedOverride) {
    TempDir dir("cli_run");
    const auto cfg = dir.path() / "tiny.toml";
    write_tiny_config(cfg, dir.path() / "out");

    Outcome o = cli({"run", "category-increment", cfg.string(), "--seed", "5"});
    ASSERT_EQ(o.code, 0) << o.err;
    const RunLog log = read_runlog(dir.path() / "out");
    EXPECT_EQ(log.seed, 5u);
    EXPECT_EQ(log.method, "bdmaff");
    EXPECT_EQ(log.stages.size(), 2u);
    EXPECT_EQ(read_metrics_csv(dir.path() / "out" / "metrics.csv").size(), 4u);

    EXPECT_EQ(cli({"--seed", "6", "run", "baseline", "--mode", "jl", cfg.string()}).code, 0);
    EXPECT_EQ(read_runlog(dir.path() / "out").seed, 6u);
    EXPECT_EQ(read_runlog(dir.path() / "out").method, "jl");

    EXPECT_EQ(cli({"run", "attribute-increment", cfg.string()}).code, 0);
    EXPECT_EQ(read_runlog(dir.path() / "out").protocol, "attribute-increment");

    o = cli({"run", "baseline", "--mode", "sft", cfg.string()});
    EXPECT_EQ(o.code, 0) << o.err;

    ASSERT_EQ(cli({"pretrain", cfg.string()}).code, 0);
    ASSERT_TRUE(fs::exists(dir.path() / "out" / "pretrain.izsfd"));

    const auto data = dir.path() / "ds";
    std::ofstream(dir.path() / "spec.toml") << "cardinalities = [3, 3, 3, 3]\ncategories = 9\ndim = 8\nsigma = 0.5\n"
                                               "direction_scale = 3.0\ntrain_per_category = 20\n"
                                               "test_per_category = 10\nseed = 3\n";
    ASSERT_EQ(cli({"gen-synthetic", (dir.path() / "spec.toml").string(), data.string()}).code, 0);
    o = cli({"run", "category-increment", cfg.string()});
    ASSERT_EQ(o.code, 0) << o.err;
    o = cli({"eval", (dir.path() / "out" / "checkpoints" / "stage_2.izsfd").string(), data.string()});
    EXPECT_EQ(o.code, 0) << o.err;
    EXPECT_NE(o.out.find("GZSFD"), std::string::npos) << o.out;

    fs::remove(dir.path() / "out" / "metrics.csv");
    EXPECT_EQ(cli({"report", (dir.path() / "out").string()}).code, 0);
    EXPECT_TRUE(fs::exists(dir.path() / "out" / "metrics.csv"));
}

TEST(Cli, ProcessExitStatus) {
    TempDir dir("cli_process");
    auto status = [&](const std::string& args) {
        const std::string cmd = std::string(IZSFD_CLI) + " " + args + " >/dev/null 2>" + (dir.path() / "err").string();
        const int raw = std::system(cmd.c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    EXPECT_EQ(status(""), 2);
    EXPECT_EQ(status("pretrain /nonexistent.toml"), 1);
    std::ifstream err(dir.path() / "err");
    std::string text((std::istreambuf_iterator<char>(err)), {});
    EXPECT_FALSE(text.empty());
    EXPECT_EQ(status("gen-synthetic " + (fixture::source_dir() / "configs" / "synthetic-spec.toml").string() + " " +
                     (dir.path() / "ds").string()),
              0);
}

}  // namespace
}  // namespace izsfd
