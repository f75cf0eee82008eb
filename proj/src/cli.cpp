#include "assgd/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>

#include "assgd/bench.hpp"
#include "assgd/checkpoint.hpp"
#include "assgd/checks.hpp"
#include "assgd/config.hpp"
#include "assgd/engine.hpp"

namespace assgd {

namespace {

constexpr int kUsage = 2;
constexpr int kFailure = 1;

// Registers `--key` (and `--key-with-dashes`) for every config key.
void add_overrides(CLI::App& cmd, std::map<std::string, std::string>& overrides) {
    for (const auto& key : config_keys()) {
        std::string names = "--" + key;
        std::string dashed = key;
        std::replace(dashed.begin(), dashed.end(), '_', '-');
        if (dashed != key) names += ",--" + dashed;
        cmd.add_option(names, overrides[key], "override config key '" + key + "'");
    }
}

KeyValues merged_config(const std::string& path, const std::map<std::string, std::string>& overrides) {
    KeyValues kv = path.empty() ? KeyValues{} : load_key_values(path);
    for (const auto& [k, v] : overrides)
        if (!v.empty()) kv[k] = v;
    return kv;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    return f;
}

int cmd_train(const std::string& config_path, const std::map<std::string, std::string>& overrides,
              std::ostream& out) {
    const auto rc = resolve_config(merged_config(config_path, overrides));
    auto [train_set, test_set] = load_data(rc.data);
    TrainOptions opts;
    if (test_set) opts.test = &*test_set;
    const auto result = train(train_set, rc.train, opts);
    {
        auto f = open_out(rc.output);
        write_metrics_csv(f, result.metrics);
    }
    save_checkpoint(rc.checkpoint, result.params);
    const auto& last = result.metrics.back();
    out << to_string(rc.train.algorithm) << ": " << last.iteration << " iterations, train_loss "
        << format_double(last.train_loss) << ", test_error " << format_double(last.test_error) << ", "
        << format_double(last.wall_time_ms) << " ms\n"
        << "metrics: " << rc.output << "\ncheckpoint: " << rc.checkpoint << '\n';
    return 0;
}

int cmd_bench(const std::string& config_path, const std::map<std::string, std::string>& overrides,
              std::ostream& out) {
    auto rc = resolve_config(merged_config(config_path, overrides));
    if (rc.seeds.empty()) rc.seeds.push_back(rc.train.seed);
    auto [train_set, test_set] = load_data(rc.data);
    const auto result = run_bench(rc, train_set, test_set ? &*test_set : nullptr);
    {
        auto f = open_out(rc.output);
        write_metrics_header(f);
        for (const auto& r : result.runs)
            for (const auto& m : r.result.metrics) write_metrics_row(f, m);
    }
    {
        auto f = open_out(rc.summary);
        write_summary_csv(f, result.summary);
    }
    write_summary_csv(out, result.summary);
    return 0;
}

int cmd_check(const std::string& suite, std::uint64_t seed, std::ostream& out) {
    std::vector<CheckResult> results;
    if (suite == "grad" || suite == "all") {
        auto r = check_gradients(seed);
        results.insert(results.end(), r.begin(), r.end());
    }
    if (suite == "variance" || suite == "all") {
        auto r = check_variance(seed, 20, 1000);
        results.insert(results.end(), r.begin(), r.end());
    }
    if (suite == "sampler" || suite == "all") {
        auto r = check_sampler(seed);
        results.insert(results.end(), r.begin(), r.end());
    }
    const bool ok = report(out, results);
    out << (ok ? "all checks passed" : "some checks FAILED") << '\n';
    return ok ? 0 : kFailure;
}

int cmd_gen(const SynthSpec& spec, const std::string& path, std::ostream& out) {
    const auto data = synth_biased(spec);
    save_libsvm(path, data);
    auto manifest = open_out(path + ".manifest");
    manifest << "generator = synth_biased\n"
             << "synth_n = " << spec.n << '\n'
             << "synth_dim = " << spec.dim << '\n'
             << "synth_easy = " << format_double(spec.easy_fraction) << '\n'
             << "synth_margin = " << format_double(spec.margin) << '\n'
             << "synth_seed = " << spec.seed << '\n'
             << "file = " << path << '\n';
    if (!manifest) throw Error("cannot write manifest for " + path);
    out << "wrote " << data.size() << " instances to " << path << '\n';
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Active Sampler SGD: importance-sampled mini-batch training and diagnostics", "assgd"};
    app.require_subcommand(1);

    std::string config_path;
    std::map<std::string, std::string> overrides;
    auto* train_cmd = app.add_subcommand("train", "train one model and write metrics + checkpoint");
    train_cmd->add_option("--config,-c", config_path, "key = value config file");
    add_overrides(*train_cmd, overrides);

    auto* bench_cmd = app.add_subcommand("bench", "paired comparison of algorithms over seeds");
    bench_cmd->add_option("--config,-c", config_path, "key = value config file");
    add_overrides(*bench_cmd, overrides);

    std::string suite;
    std::uint64_t check_seed = 1;
    auto* check_cmd = app.add_subcommand("check", "run an invariant suite on built-in fixtures");
    check_cmd->add_option("suite", suite, "grad, variance, sampler or all")
        ->required()
        ->check(CLI::IsMember({"grad", "variance", "sampler", "all"}));
    check_cmd->add_option("--seed", check_seed, "fixture seed");

    SynthSpec spec;
    std::string gen_out;
    auto* gen_cmd = app.add_subcommand("gen", "write a synthetic easy/hard dataset in LIBSVM format");
    gen_cmd->add_option("--n", spec.n, "instance count")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
    gen_cmd->add_option("--dim", spec.dim, "feature dimension")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 32));
    gen_cmd->add_option("--easy", spec.easy_fraction, "fraction of easy instances")->check(CLI::Range(0.0, 1.0));
    gen_cmd->add_option("--margin", spec.margin, "hard-instance band half-width")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", spec.seed, "generator seed");
    gen_cmd->add_option("--out,-o", gen_out, "output LIBSVM path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (*train_cmd) return cmd_train(config_path, overrides, out);
        if (*bench_cmd) return cmd_bench(config_path, overrides, out);
        if (*check_cmd) return cmd_check(suite, check_seed, out);
        if (*gen_cmd) return cmd_gen(spec, gen_out, out);
    } catch (const ConfigError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

}  // namespace assgd
