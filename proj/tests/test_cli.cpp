#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "../tools/commands.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = mpdiag::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("mpdiag_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json report(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "report.json")); }

std::vector<std::string> sample_args(const fs::path& dir, const std::string& seed = "1") {
    return {"sample", "--seed", seed, "-o", dir.string(), "-s", "sbm.n=400", "-s", "sbm.k=2",
            "-s",     "sbm.d=8", "-s", "sbm.h=0.7", "-s", "features.d=3"};
}

}  // namespace

TEST_CASE("sample is deterministic given the seed") {
    const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b"), c = fresh_dir("det_c");
    REQUIRE(run(sample_args(a)).code == 0);
    REQUIRE(run(sample_args(b)).code == 0);
    REQUIRE(run(sample_args(c, "2")).code == 0);
    for (const char* f : {"edges.txt", "labels.txt", "features.csv"}) CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / "edges.txt") != slurp(c / "edges.txt"));

    auto ra = report(a), rb = report(b);
    ra.erase("timing");
    rb.erase("timing");
    ra["config"].erase("out");
    rb["config"].erase("out");
    CHECK(ra == rb);
    CHECK(ra["schema_version"] == 1);
    CHECK(ra["seeds"]["master"] == 1);
}

TEST_CASE("sample then analyze round-trip") {
    const fs::path s = fresh_dir("rt_sample"), a = fresh_dir("rt_analyze");
    REQUIRE(run(sample_args(s)).code == 0);
    const auto r = run({"analyze", "--seed", "0", "-o", a.string(), "-s", "edges=" + (s / "edges.txt").string(), "-s",
                        "labels=" + (s / "labels.txt").string(), "-s", "orders=1,2"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto rep = report(a);
    CHECK(rep["graph"]["edges"] == report(s)["graph"]["edges"]);
    CHECK(rep["graph"]["edge_homophily"].get<double>() ==
          doctest::Approx(report(s)["graph"]["edge_homophily"].get<double>()));
    CHECK(rep["metrics"].size() == 2);
    CHECK(fs::exists(a / "metrics.csv"));
    CHECK(fs::exists(a / "bottleneck_r1.csv"));
    CHECK(fs::exists(a / "bottleneck_r2.csv"));
    CHECK_FALSE(rep.contains("ensemble"));
}

TEST_CASE("malformed edge file reports the line and exits with 3") {
    const fs::path d = fresh_dir("bad_edges");
    fs::create_directories(d);
    {
        std::ofstream(d / "edges.txt") << "0 1\n1 2\n2 x\n";
        std::ofstream(d / "labels.txt") << "0\n0\n1\n";
    }
    const fs::path o = d / "out";
    const auto r = run({"analyze", "--seed", "0", "-o", o.string(), "-s", "edges=" + (d / "edges.txt").string(), "-s",
                        "labels=" + (d / "labels.txt").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("edges.txt:3:") != std::string::npos);
    CHECK_FALSE(fs::exists(o / "report.json"));
}

TEST_CASE("configuration errors exit with 2 and write nothing") {
    const fs::path o = fresh_dir("cfg");
    CHECK(run({"sample", "-o", o.string(), "-s", "sbm.n=10"}).code == 2);                          // no seed
    CHECK(run({"sample", "--seed", "1", "-s", "sbm.n=10"}).code == 2);                             // no out
    CHECK(run({"sample", "--seed", "1", "-o", o.string(), "-s", "sbm.n=10", "-s", "bogus=1"}).code == 2);
    CHECK(run({"sample", "--seed", "1", "-o", o.string(), "-s", "sbm.h=1.5"}).code == 2);
    CHECK(run({"analyze", "--seed", "1", "-o", o.string(), "-s", "operator=nope", "-s", "sbm.n=10"}).code == 2);
    CHECK(run({"snr", "--seed", "1", "-o", o.string(), "-s", "sbm.n=10"}).code == 2);  // no features
    CHECK(run({"frobnicate"}).code == 2);
    CHECK_FALSE(fs::exists(o));
}

TEST_CASE("diverging training exits with 4") {
    const fs::path o = fresh_dir("diverge");
    const auto r = run({"snr", "--seed", "1", "-o", o.string(), "-s", "sbm.n=200", "-s", "sbm.d=6", "-s",
                        "features.d=3", "-s", "features.sigma2=1", "-s", "features.phi2=1", "-s", "features.psi2=1",
                        "-s", "model.lr=1e12", "-s", "model.momentum=0"});
    CHECK(r.code == 4);
    CHECK_FALSE(fs::exists(o / "report.json"));
}

TEST_CASE("bridge with zero iterations returns the input graph") {
    const fs::path s = fresh_dir("br_sample"), b = fresh_dir("br_out");
    REQUIRE(run(sample_args(s)).code == 0);
    const auto r = run({"bridge", "--seed", "3", "-o", b.string(), "-s", "edges=" + (s / "edges.txt").string(), "-s",
                        "labels=" + (s / "labels.txt").string(), "-s", "features=" + (s / "features.csv").string(),
                        "-s", "bridge.iterations=0", "-s", "model.epochs=50"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(slurp(b / "rewired_edges.txt") == slurp(s / "edges.txt"));
    CHECK(slurp(b / "rewired_labels.txt") == slurp(s / "labels.txt"));
    const auto rep = report(b);
    CHECK(rep["bridge"]["iterations"] == 0);
    CHECK(rep["bridge"]["best_iteration"] == 0);
}

TEST_CASE("snr on a feature-only model matches the input SNR") {
    const fs::path o = fresh_dir("snr_linear");
    const auto r = run({"snr", "--seed", "5", "-o", o.string(), "-s", "sbm.n=300", "-s", "sbm.d=6", "-s",
                        "features.d=4", "-s", "features.sigma2=2e-5", "-s", "features.phi2=1e-4", "-s",
                        "features.psi2=3e-4", "-s", "model.arch=linear", "-s", "model.epochs=30"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto s = report(o)["snr"];
    CHECK(s["input_snr"].get<double>() == doctest::Approx(2e-5 / 4e-4));
    CHECK(s["mean_predicted_snr"].get<double>() == doctest::Approx(2e-5 / 4e-4).epsilon(1e-9));
    CHECK(fs::exists(o / "snr_nodes.csv"));
}

TEST_CASE("planted-partition edge count") {
    const fs::path o = fresh_dir("edges");
    REQUIRE(run({"sample", "--seed", "11", "-o", o.string(), "-s", "sbm.n=3000", "-s", "sbm.d=10", "-s",
                 "sbm.h=0.5"})
                .code == 0);
    const double m = report(o)["graph"]["edges"].get<double>();
    // Sum of independent Bernoullis: variance just under the mean.
    CHECK(std::abs(m - 15000.0) < 3.0 * std::sqrt(15000.0));
}

TEST_CASE("benchmark writes the sweep") {
    const fs::path o = fresh_dir("bench");
    const auto r = run({"benchmark", "--seed", "2", "-o", o.string(), "-s", "benchmark.n=300", "-s",
                        "benchmark.d=10", "-s", "benchmark.samples=2", "-s", "benchmark.h_grid=0,1", "-s", "orders=1"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto rows = report(o)["benchmark"]["rows"];
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows)
        CHECK(std::abs(row["empirical"].get<double>() - row["predicted"].get<double>()) < 0.1);
    CHECK(rows[1]["predicted"].get<double>() == doctest::Approx(1.0));
    CHECK(fs::exists(o / "benchmark.svg"));
}
