#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "assgd/cli.hpp"
#include "assgd/metrics.hpp"

using namespace assgd;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "assgd");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("assgd_cli_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string without_time(const std::string& csv) {
    std::istringstream in(csv);
    auto rows = read_metrics_csv(in);
    for (auto& r : rows) r.wall_time_ms = 0.0;
    std::ostringstream out;
    write_metrics_csv(out, rows);
    return out.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("train writes metrics and a checkpoint") {
    TempDir dir;
    std::ofstream(dir / "cfg.txt") << "synth_n = 200\nsynth_dim = 4\niterations = 100\nbatch_size = 8\n"
                                      "eval_every = 20\neta = 0.5\n";
    const auto a = run({"train", "--config", dir / "cfg.txt", "--algorithm", "assgd", "--output", dir / "a.csv",
                        "--checkpoint", dir / "a.ckpt"});
    CHECK(a.code == 0);
    const auto csv = slurp(dir / "a.csv");
    CHECK(csv.rfind("iteration,wall_time_ms,train_loss,test_error,variance_estimate,algorithm,seed\n", 0) == 0);
    CHECK(slurp(dir / "a.ckpt").rfind("assgd-checkpoint 1\n", 0) == 0);

    const auto b = run({"train", "-c", dir / "cfg.txt", "--algorithm", "assgd", "--output", dir / "b.csv",
                        "--checkpoint", dir / "b.ckpt"});
    CHECK(b.code == 0);
    CHECK(without_time(csv) == without_time(slurp(dir / "b.csv")));
    CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));
}

TEST_CASE("usage errors exit with 2") {
    TempDir dir;
    CHECK(run({"train", "--momentum", "0.9"}).code == 2);
    std::ofstream(dir / "bad.txt") << "momentum = 0.9\n";
    const auto r = run({"train", "-c", dir / "bad.txt"});
    CHECK(r.code == 2);
    CHECK(r.err.find("eta") != std::string::npos);
    CHECK(run({"gen", "--easy", "1.5", "--out", dir / "x.libsvm"}).code == 2);
    CHECK(run({"bench", "--algorithms", "assgd", "--synth-n", "50", "--output", dir / "m.csv", "--summary",
               dir / "s.csv"})
              .code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"check", "everything"}).code == 2);
}

TEST_CASE("numeric failure exits with 1") {
    TempDir dir;
    const auto r = run({"train", "--synth-n", "50", "--loss", "squared", "--eta", "1e8", "--eval-every", "1",
                        "--output", dir / "m.csv", "--checkpoint", dir / "m.ckpt"});
    CHECK(r.code == 1);
    CHECK(r.err.find("iteration") != std::string::npos);
}

TEST_CASE("bench summary rows") {
    TempDir dir;
    const auto r = run({"bench", "--synth-n", "200", "--synth-dim", "4", "--iterations", "60", "--batch-size", "8",
                        "--eval-every", "10", "--algorithms", "mbsgd,assgd", "--num-seeds", "10", "--output",
                        dir / "m.csv", "--summary", dir / "s.csv"});
    REQUIRE(r.code == 0);
    const auto summary = slurp(dir / "s.csv");
    std::istringstream in(summary);
    std::string line;
    std::getline(in, line);
    CHECK(line == "algorithm,seed,iterations_to_target,mean_iteration_ms,variance_ratio,target_loss");
    int rows = 0, medians = 0;
    while (std::getline(in, line)) {
        ++rows;
        if (line.find(",median,") != std::string::npos) ++medians;
        if (line.rfind("mbsgd,", 0) == 0) CHECK(line.find(",1,") != std::string::npos);
    }
    CHECK(rows == 22);
    CHECK(medians == 2);
}

TEST_CASE("gen is byte-identical for the same spec") {
    TempDir dir;
    const std::vector<std::string> spec{"--n", "1000", "--dim", "20", "--easy", "0.9", "--seed", "4"};
    auto args = spec;
    args.insert(args.begin(), "gen");
    auto a = args, b = args;
    a.insert(a.end(), {"--out", dir / "a.libsvm"});
    b.insert(b.end(), {"--out", dir / "b.libsvm"});
    CHECK(run(a).code == 0);
    CHECK(run(b).code == 0);
    const auto text = slurp(dir / "a.libsvm");
    CHECK(text == slurp(dir / "b.libsvm"));
    CHECK(std::count(text.begin(), text.end(), '\n') == 1000);
    const auto manifest = slurp(dir / "a.libsvm.manifest");
    CHECK(manifest.find("synth_n = 1000") != std::string::npos);
    CHECK(manifest.find("synth_easy = 0.9") != std::string::npos);
    CHECK(manifest.find("synth_seed = 4") != std::string::npos);
}

TEST_CASE("generated files train through the config") {
    TempDir dir;
    REQUIRE(run({"gen", "--n", "120", "--dim", "5", "--out", dir / "d.libsvm"}).code == 0);
    const auto r = run({"train", "--train-data", dir / "d.libsvm", "--test-fraction", "0.25", "--iterations", "40",
                        "--batch-size", "4", "--eval-every", "20", "--output", dir / "m.csv", "--checkpoint",
                        dir / "m.ckpt"});
    CHECK(r.code == 0);
}

TEST_CASE("check subcommand") {
    const auto r = run({"check", "sampler", "--seed", "3"});
    CHECK(r.code == 0);
    CHECK(r.out.find("all checks passed") != std::string::npos);
}

}  // TEST_SUITE
