#include "cli.hpp"
#include "clsna/network_io.hpp"

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace clsna;

namespace {

struct Scratch {
    fs::path root;
    Scratch() {
        root = fs::temp_directory_path() / ("clsna-cli-test-" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Scratch() { fs::remove_all(root); }
    std::string operator/(const std::string& name) const { return (root / name).string(); }
};

struct Outcome {
    int code = -1;
    std::string output;
};

Outcome run(const Scratch& s, const std::string& args) {
    const std::string log = s / "last.log";
    const std::string command = std::string(CLSNA_BINARY) + " " + args + " > " + log + " 2>&1";
    const int status = std::system(command.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    o.output = ss.str();
    return o;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool contains(const std::string& text, const std::string& piece) { return text.find(piece) != std::string::npos; }

}  // namespace

TEST_CASE("simulate and replay") {
    Scratch s;
    const Outcome sim = run(s, "simulate --preset polarization --seed 7 --out " + (s / "sim"));
    REQUIRE(sim.code == 0);
    for (const char* f : {"manifest.json", "networks.adj", "latent.csv", "density.csv", "latent_distance.csv"})
        CHECK(fs::exists(s / ("sim/" + std::string(f))));
    const AdjacencyFile adj = read_adjacency_file(s / "sim/networks.adj");
    CHECK(adj.networks.node_count() == 10);
    CHECK(adj.networks.horizon() == 50);
    const std::string manifest = slurp(s / "sim/manifest.json");
    CHECK(contains(manifest, "\"seed\": 7"));
    CHECK(contains(manifest, "\"subcommand\": \"simulate\""));

    const Outcome rep = run(s, "replay --run " + (s / "sim") + " --out " + (s / "again"));
    CHECK(rep.code == 0);
    CHECK(contains(rep.output, "identical: 4 of 4 outputs match"));
    CHECK(slurp(s / "sim/networks.adj") == slurp(s / "again/networks.adj"));

    // A different seed changes the networks.
    REQUIRE(run(s, "simulate --preset polarization --seed 8 --out " + (s / "other")).code == 0);
    CHECK(slurp(s / "sim/networks.adj") != slurp(s / "other/networks.adj"));

    // Tampering with an output is detected.
    std::ofstream(s / "sim/density.csv", std::ios::app) << "junk\n";
    const Outcome broken = run(s, "replay --run " + (s / "sim") + " --out " + (s / "third"));
    CHECK(broken.code != 0);
    CHECK(contains(broken.output, "identical: 3 of 4 outputs match"));
}

TEST_CASE("presets") {
    const cli::SimulateOptions flock = cli::preset("recovery-flocking");
    CHECK(flock.nodes == 100);
    CHECK(flock.horizon == 10);
    CHECK(flock.dimension == 2);
    CHECK(flock.params.gammab == 0.5);
    const cli::SimulateOptions change = cli::preset("changepoint");
    CHECK(change.schedule.size() == 2);
    CHECK_THROWS_AS(cli::preset("nope"), InvalidInput);

    Scratch s;
    REQUIRE(run(s, "simulate --preset recovery-flocking --seed 3 --out " + (s / "big")).code == 0);
    const AdjacencyFile adj = read_adjacency_file(s / "big/networks.adj");
    CHECK(adj.networks.node_count() == 100);
    CHECK(adj.networks.horizon() == 10);
    CHECK(adj.registry.labels.count(1) == 50);
}

TEST_CASE("argument handling") {
    CHECK(cli::parse_range("4..9") == std::pair<std::size_t, std::size_t>{4, 9});
    CHECK(cli::parse_range("5..5") == std::pair<std::size_t, std::size_t>{5, 5});
    CHECK_THROWS_AS(cli::parse_range("5..4"), InvalidInput);
    CHECK_THROWS_AS(cli::parse_range("5-9"), InvalidInput);
    CHECK(cli::parse_times("3,7") == std::vector<std::size_t>{3, 7});

    Scratch s;
    CHECK(run(s, "").code != 0);
    CHECK(run(s, "fit").code != 0);
    CHECK(run(s, "simulate --preset unknown").code != 0);
    const Outcome missing = run(s, "fit --input " + (s / "absent.adj") + " --out " + (s / "f"));
    CHECK(missing.code == 2);

    // Output directories are created as needed, unwritable ones are refused.
    REQUIRE(run(s, "simulate --preset flocking --out " + (s / "deep/nested/dir")).code == 0);
    CHECK(fs::exists(s / "deep/nested/dir/networks.adj"));
    std::ofstream(s / "plainfile") << "x";
    const Outcome blocked = run(s, "simulate --preset flocking --out " + (s / "plainfile/sub"));
    CHECK(blocked.code != 0);
    CHECK_FALSE(blocked.output.empty());
}

TEST_CASE("fit outputs and change-point selection") {
    Scratch s;
    REQUIRE(run(s, "simulate --preset polarization --seed 2 --out " + (s / "sim")).code == 0);
    const std::string input = s / "sim/networks.adj";
    const std::string small = " --iterations 120 --burn-in 40 --dim 1 --seed 4";

    REQUIRE(run(s, "fit --input " + input + small + " --out " + (s / "fit")).code == 0);
    for (const char* f : {"summary.csv", "trace.csv", "acceptance.csv", "latent_mean.csv", "dic.csv", "auc.csv",
                          "checkpoint.json", "manifest.json"})
        CHECK(fs::exists(s / ("fit/" + std::string(f))));
    const std::string summary = slurp(s / "fit/summary.csv");
    CHECK(contains(summary, "quantity,mean,sd,q2.5,q97.5,prob_positive\n"));
    for (const char* q : {"\nalpha,", "\ndelta,", "\ngamma1w,", "\ngamma2w,", "\ngammab,", "\ntau,",
                          "\ngamma1w-gamma2w,", "\n|gammab|-|gamma2w|,"})
        CHECK(contains(summary, q));
    const std::string trace = slurp(s / "fit/trace.csv");
    CHECK(trace.rfind("iteration,alpha,delta,gamma1w,gamma2w,gammab,tau2,deviance\n", 0) == 0);
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 81);

    const Outcome rep = run(s, "replay --run " + (s / "fit") + " --out " + (s / "fit2"));
    CHECK(rep.code == 0);
    CHECK(slurp(s / "fit/trace.csv") == slurp(s / "fit2/trace.csv"));

    REQUIRE(run(s, "fit --input " + input + " --iterations 60 --burn-in 20 --dim 1 --select-changepoint 4..9 --out " +
                       (s / "sel"))
                .code == 0);
    const std::string table = slurp(s / "sel/dic_table.csv");
    CHECK(table.rfind("change_times,dic\n", 0) == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 7);
    for (int r = 4; r <= 9; ++r) CHECK(contains(table, "\n" + std::to_string(r) + ","));
    CHECK(fs::exists(s / "sel/period-1/summary.csv"));
    CHECK(fs::exists(s / "sel/period-2/summary.csv"));

    const Outcome empty = run(s, "fit --input " + input + " --select-changepoint 5..4 --out " + (s / "bad"));
    CHECK(empty.code != 0);
    CHECK(contains(empty.output, "5..4"));
}

TEST_CASE("construct") {
    Scratch s;
    {
        std::ofstream out(s / "counts.txt");
        out << "clsna-counts v1 N=4 T=2\nnode 0 a 1\nnode 1 b 1\nnode 2 c 2\nnode 3 d 2\n"
            << "count 1 0 1 12\ncount 1 0 2 3\ncount 1 2 3 11\n"
            << "count 2 0 1 1\ncount 2 1 3 2\n";
    }
    REQUIRE(run(s, "construct --input " + (s / "counts.txt") + " --out " + (s / "dyn")).code == 0);
    const std::string adj = slurp(s / "dyn/networks.adj");
    CHECK(contains(adj, "# policy dynamic-mean"));
    CHECK(contains(adj, "# threshold t=1 value=4.333333333333333"));
    CHECK(contains(adj, "# threshold t=2 value=0.5"));
    const AdjacencyFile a = read_adjacency_file(s / "dyn/networks.adj");
    CHECK(a.networks[0](0, 1) == 1);
    CHECK(a.networks[0](0, 2) == 0);
    CHECK(a.networks[0](2, 3) == 1);
    CHECK(a.networks[1](0, 1) == 1);
    CHECK(a.networks[1](1, 3) == 1);
    CHECK(contains(slurp(s / "dyn/manifest.json"), "thresholds"));

    REQUIRE(run(s, "construct --input " + (s / "counts.txt") + " --policy static --theta 10 --out " + (s / "st")).code == 0);
    const AdjacencyFile b = read_adjacency_file(s / "st/networks.adj");
    CHECK(b.networks[0].cast<int>().sum() == 4);
    CHECK(b.networks[1].cast<int>().sum() == 0);
    CHECK(contains(slurp(s / "st/networks.adj"), "value=10"));

    const Outcome rep = run(s, "replay --run " + (s / "dyn") + " --out " + (s / "dyn2"));
    CHECK(rep.code == 0);

    {
        std::ofstream out(s / "broken.txt");
        out << "clsna-counts v1 N=4 T=2\nnode 0 a 1\nnode 1 b 1\nnode 2 c 2\nnode 3 d 2\ncount 1 0 1\n";
    }
    const Outcome bad = run(s, "construct --input " + (s / "broken.txt") + " --out " + (s / "x"));
    CHECK(bad.code == 1);
    CHECK(contains(bad.output, "line 6"));
}
